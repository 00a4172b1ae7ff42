# Brute-force evaluators the engine is checked against.
# They share no code with reactor/ beyond the term types.
import itertools
from reactor.terms import Var, Const, Struct, PList

# *********************************************
# Stratified programs, bottom-up
# *********************************************


def _ground(term, value):
    if isinstance(term, Var):
        return value
    if isinstance(term, Struct):
        return Struct(term.functor, tuple(_ground(a, value) for a in term.args))
    return term


def _instances(clause, constants):
    has_variable = any(
        isinstance(arg, Var)
        for goal in (clause.head,) + tuple(clause.body)
        for arg in _atom_of(goal).args
    )
    values = constants if has_variable else constants[:1]
    for value in values:
        head = _ground(clause.head, Const(value))
        body = [_ground(goal, Const(value)) for goal in clause.body]
        yield head, body


def _atom_of(goal):
    if goal.functor == "not":
        return goal.args[0]
    return goal


def least_model(clauses, predicates, constants):
    """
    Predicates are strata in the given order: a clause for predicates[i]
    only mentions predicates[j], j < i, so one pass per stratum is enough.
    """
    model = set()
    for predicate in predicates:
        ground = [
            (head, body)
            for clause in clauses
            if clause.head.functor == predicate
            for head, body in _instances(clause, constants)
        ]
        for head, body in ground:
            holds = all(
                (goal.args[0] not in model) if goal.functor == "not" else (goal in model)
                for goal in body
            )
            if holds:
                model.add(head)
    return model


# *********************************************
# Event algebra over (type, time) occurrences
# *********************************************
# An occurrence list is [(type, t), ...] with distinct integer times.
# Every detection is a (start, end) pair.


def _leaf_types(expr):
    if isinstance(expr, Const):
        return {expr.symbol}
    if expr.functor == "any":
        return _leaf_types(expr.args[1])
    if expr.functor in ("neg", "aperiodic"):
        return set().union(*(_leaf_types(e) for e in expr.args[1].items))
    return set().union(*(_leaf_types(e) for e in expr.args))


def _inside(t, end, start):
    return end < t < start


def _leq(i1, i2):
    return i1[0] <= i2[0] and i1[1] <= i2[1]


def _chains(operands, scope, occs):
    chains = [(i,) for i in operands[0]]
    for detections in operands[1:]:
        extended = []
        for chain in chains:
            so_far = (chain[0][0], chain[-1][1])
            for i in detections:
                if not _leq(so_far, i):
                    continue
                if any(typ in scope and _inside(t, so_far[1], i[0]) for typ, t in occs):
                    continue
                extended.append(chain + (i,))
        chains = extended
    return chains


def _windows(pair, occs):
    first, last = (detections(e, occs) for e in pair.items)
    return [(i1, i2) for i1 in first for i2 in last if _leq(i1, i2)]


def detections(expr, occs):
    if isinstance(expr, Const):
        return {(t, t) for typ, t in occs if typ == expr.symbol}

    functor, args = expr.functor, expr.args
    if functor == "sequence":
        operands = [detections(a, occs) for a in args]
        scope = _leaf_types(expr)
        return {(c[0][0], c[-1][1]) for c in _chains(operands, scope, occs)}
    if functor == "or":
        return set().union(*(detections(a, occs) for a in args))
    if functor == "xor":
        found = [detections(a, occs) for a in args]
        nonempty = [f for f in found if f]
        return nonempty[0] if len(nonempty) == 1 else set()
    if functor in ("and", "concurrent"):
        # operands of distinct leaf types never share an occurrence
        result = set()
        for combination in itertools.product(*(detections(a, occs) for a in args)):
            if functor == "concurrent" and len(set(combination)) != 1:
                continue
            result.add((min(i[0] for i in combination), max(i[1] for i in combination)))
        return result
    if functor == "any":
        n = args[0].value
        found = sorted(detections(args[1], occs))
        return {
            (min(i[0] for i in c), max(i[1] for i in c))
            for c in itertools.combinations(found, n)
        }
    if functor == "neg":
        excluded = {e.symbol for e in args[0].items}
        return {
            (i1[0], i2[1])
            for i1, i2 in _windows(args[1], occs)
            if not any(typ in excluded and _inside(t, i1[1], i2[0]) for typ, t in occs)
        }
    if functor == "aperiodic":
        return {
            i
            for i1, i2 in _windows(args[1], occs)
            for i in detections(args[0], occs)
            if _inside(i[0], i1[1], i2[0]) and _inside(i[1], i1[1], i2[0])
        }
    raise ValueError(f"no oracle for {functor}")


def snoop_detection_times(expr, occs):
    """
    Detection times in a purely point-based algebra where a sequence
    only compares the termination time of each operand.
    """
    if isinstance(expr, Const):
        return {t for typ, t in occs if typ == expr.symbol}
    if expr.functor != "sequence":
        raise ValueError(f"no point-based oracle for {expr.functor}")
    times = snoop_detection_times(expr.args[0], occs)
    for operand in expr.args[1:]:
        later = snoop_detection_times(operand, occs)
        times = {t2 for t2 in later if any(t1 < t2 for t1 in times)}
    return times


def all_eis(types=("a", "b", "c"), max_length=4):
    # every sequence of types, stamped 1..n
    for length in range(1, max_length + 1):
        for typed in itertools.product(types, repeat=length):
            yield [(typ, t + 1) for t, typ in enumerate(typed)]
