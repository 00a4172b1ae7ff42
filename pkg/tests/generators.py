# Random inputs for the property tests. Every generator takes a
# random.Random so that a failing seed can be replayed.
from reactor.parser import Clause
from reactor.terms import Var, Const, Str, Num, TimePoint, Struct, PList

ATOMS = ("a", "b", "c", "foo", "x1", "Hello World")
STRINGS = ("hello", "two words", 'say "hi"', "")
FUNCTORS = ("f", "g", "h", "status")

PREDICATES = ("p0", "p1", "p2", "p3", "p4")
CONSTANTS = ("a", "b")


def random_term(rng, depth=3, variables=False):
    roll = rng.random()
    if depth == 0 or roll < 0.45:
        return _random_leaf(rng, variables)
    if roll < 0.75:
        arity = rng.randint(1, 3)
        args = [random_term(rng, depth - 1, variables) for _ in range(arity)]
        return Struct(rng.choice(FUNCTORS), args)
    items = [random_term(rng, depth - 1, variables) for _ in range(rng.randint(0, 3))]
    return PList(items)


def _random_leaf(rng, variables):
    roll = rng.randrange(6 if variables else 5)
    if roll == 0:
        return Const(rng.choice(ATOMS))
    if roll == 1:
        return Num(rng.randint(-50, 50))
    if roll == 2:
        return Num(rng.choice((0.5, 2.25, -3.75)))
    if roll == 3:
        return Str(rng.choice(STRINGS))
    if roll == 4:
        return TimePoint.from_fields(2005, 1, rng.randint(1, 28), rng.randint(0, 23), 0, rng.randint(0, 59))
    return Var(rng.choice(("X", "Y", "Z")))


# ---------------------------
# Stratified programs
# ---------------------------
def _atom(predicate, argument):
    return Struct(predicate, (argument,))


def random_clause(rng):
    """
    p_i(..) :- literals over p_j with j < i.
    Clauses with a variable bind it in the first body literal so
    negative literals are always called ground.
    """
    i = rng.randrange(len(PREDICATES))
    head_predicate = PREDICATES[i]
    if i == 0:
        return Clause(_atom(head_predicate, Const(rng.choice(CONSTANTS))))

    with_variable = rng.random() < 0.5
    body = []
    if with_variable:
        x = Var("X")
        body.append(_atom(PREDICATES[rng.randrange(i)], x))
        head = _atom(head_predicate, x)
    else:
        head = _atom(head_predicate, Const(rng.choice(CONSTANTS)))

    for _ in range(rng.randint(0 if body else 1, 2)):
        argument = Const(rng.choice(CONSTANTS))
        if with_variable and rng.random() < 0.5:
            argument = Var("X")
        literal = _atom(PREDICATES[rng.randrange(i)], argument)
        if rng.random() < 0.35:
            literal = Struct("not", (literal,))
        body.append(literal)
    return Clause(head, body)


def random_program(rng, max_clauses=12):
    return [random_clause(rng) for _ in range(rng.randint(1, max_clauses))]


def ground_atoms():
    return [_atom(p, Const(c)) for p in PREDICATES for c in CONSTANTS]
