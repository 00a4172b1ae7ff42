# This module contains the grammar of the rule scripting language
# (a pragmatic ISO-Prolog subset, see README.md for the EBNF),
# the Clause / SourceModule types it produces,
# and format_term which turns terms back into parseable text
import itertools
import re
import attr
import pyparsing as pp
from reactor.errors import ReactorSyntaxError
from reactor.terms import (
    Var,
    Const,
    Str,
    Num,
    TimePoint,
    Struct,
    PList,
    make_struct,
    make_list,
    rename,
    fresh_index,
)

pp.ParserElement.enable_packrat()

_anonymous = itertools.count(1)

ATOM_RE = re.compile(r"[a-z][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*")
INFIX_OPERATORS = {
    "*", "/", "mod",
    "+", "-",
    "=", "\\=", "==", "\\==", "is", "<", ">", "=<", ">=", "<=", "=:=", "=\\=",
    ",", ";",
}  # fmt: skip


# *********************************************
# Clauses
# *********************************************
def _callable_head(instance, attribute, value):
    if not isinstance(value, (Const, Struct)):
        raise ValueError(f"clause head must be an atom or compound term, got {value!r}")


@attr.s(frozen=True, slots=True)
class BodyLiteral:
    # positive | naf | neg | cut
    polarity = attr.ib()
    goal = attr.ib()

    @classmethod
    def of(cls, goal):
        if goal == Const("!"):
            return cls("cut", goal)
        if isinstance(goal, Struct) and goal.key == ("not", 1):
            return cls("naf", goal.args[0])
        if isinstance(goal, Struct) and goal.key == ("neg", 1):
            return cls("neg", goal.args[0])
        return cls("positive", goal)


@attr.s(frozen=True, slots=True)
class Clause:
    head = attr.ib(validator=_callable_head)
    body = attr.ib(converter=tuple, default=())

    @property
    def key(self):
        if isinstance(self.head, Struct):
            return self.head.key
        return self.head.symbol, 0

    def is_fact(self):
        return not self.body

    def literals(self):
        return [BodyLiteral.of(goal) for goal in self.body]

    def __str__(self):
        return format_clause(self)


@attr.s(frozen=True, slots=True)
class SourceModule:
    oid = attr.ib()
    clauses = attr.ib(converter=tuple)
    # goals of ':- Goal.' lines, run when the module is loaded
    directives = attr.ib(converter=tuple, default=())


# *********************************************
# Grammar
# *********************************************
def _number(toks):
    text = toks[0]
    if "." in text or "e" in text or "E" in text:
        return Num(float(text))
    return Num(int(text))


def _variable(toks):
    name = toks[0]
    if name == "_":
        return Var(f"_G{next(_anonymous)}")
    return Var(name)


def _as_datetime(functor, args):
    if functor != "datetime" or len(args) not in (6, 7):
        return None
    if not all(isinstance(a, Num) and isinstance(a.value, int) for a in args):
        return None
    try:
        return TimePoint.from_fields(*[a.value for a in args])
    except ValueError:
        return None


def _compound(toks):
    functor = toks[0]
    args = list(toks[1])
    if len(toks) > 2:
        # f(A,B|C) spreads the rest into argument positions
        args.append(toks[2])
    timepoint = _as_datetime(functor, args)
    if timepoint is not None:
        return timepoint
    return make_struct(functor, args)


def _list(s, loc, toks):
    items = list(toks[0])
    tail = toks[1] if len(toks) > 1 else None
    if tail is not None and not isinstance(tail, (Var, PList)):
        raise pp.ParseFatalException(s, loc, "a variable or list after '|'")
    return make_list(items, tail)


def _fold_infix(toks):
    tokens = toks[0]
    term = tokens[0]
    for i in range(1, len(tokens), 2):
        term = Struct(tokens[i], (term, tokens[i + 1]))
    return term


def _fold_right(functor):
    def action(toks):
        goals = list(toks)
        term = goals[-1]
        for goal in reversed(goals[:-1]):
            term = Struct(functor, (goal, term))
        return term

    return action


def _nested_negation(goal):
    if isinstance(goal, Struct) and goal.key in (("not", 1), ("neg", 1)):
        inner = goal.args[0]
        if isinstance(inner, Struct) and inner.key in (("not", 1), ("neg", 1)):
            return True
    return False


def _clause(s, loc, toks):
    head = toks[0]
    if not isinstance(head, (Const, Struct)):
        raise pp.ParseFatalException(s, loc, "an atom or compound clause head")
    body = conjuncts(toks[1]) if len(toks) > 1 else []
    for goal in body:
        if _nested_negation(goal):
            raise pp.ParseFatalException(s, loc, "not/neg without direct nesting")
    return ("clause", Clause(head, body))


def _directive(toks):
    return ("directive", toks[0])


def _build_grammar():
    LPAR, RPAR = pp.Suppress("("), pp.Suppress(")")
    LBRACK, RBRACK = pp.Suppress("["), pp.Suppress("]")
    COMMA, BAR = pp.Suppress(","), pp.Suppress("|")
    NECK = pp.Suppress(":-")
    PERIOD = pp.Suppress(".")

    number = pp.Regex(r"-?\d+\.\d+(?:[eE][-+]?\d+)?|-?\d+").set_parse_action(_number)
    string = pp.QuotedString('"', esc_char="\\", multiline=True).set_parse_action(
        lambda toks: Str(toks[0])
    )
    quoted_atom = pp.QuotedString("'", esc_char="\\")
    name = pp.Regex(ATOM_RE.pattern) | quoted_atom
    variable = pp.Regex(r"[A-Z_][A-Za-z0-9_]*").set_parse_action(_variable)

    term = pp.Forward().set_name("term")
    goals = pp.Forward().set_name("goal")

    arguments = pp.Group(pp.Optional(term + pp.ZeroOrMore(COMMA + term)))
    compound = (
        name + LPAR + arguments + pp.Optional(BAR + term) + RPAR
    ).set_parse_action(_compound)
    atom = (name | pp.Literal("!")).set_parse_action(lambda toks: Const(toks[0]))
    lst = (
        LBRACK + arguments + pp.Optional(BAR + term) + RBRACK
    ).set_parse_action(_list)
    parenthesized = LPAR + goals + RPAR

    primary = number | string | compound | atom | variable | lst | parenthesized

    multiplicative = pp.one_of("* /") | pp.Keyword("mod")
    additive = pp.one_of("+ -")
    comparison = pp.one_of("=:= =\\= \\== == \\= =< >= <= < > =") | pp.Keyword("is")
    term <<= pp.infix_notation(
        primary,
        [
            (multiplicative, 2, pp.OpAssoc.LEFT, _fold_infix),
            (additive, 2, pp.OpAssoc.LEFT, _fold_infix),
            (comparison, 2, pp.OpAssoc.LEFT, _fold_infix),
        ],
    )

    conjunction = (term + pp.ZeroOrMore(COMMA + term)).set_parse_action(_fold_right(","))
    goals <<= (conjunction + pp.ZeroOrMore(pp.Suppress(";") + conjunction)).set_parse_action(
        _fold_right(";")
    )

    clause = (term - pp.Optional(NECK - goals) - PERIOD).set_parse_action(_clause)
    directive = (NECK - goals - PERIOD).set_parse_action(_directive)
    program = pp.ZeroOrMore(directive | clause) + pp.StringEnd()
    query = goals - pp.Suppress(pp.one_of("? .")) - pp.StringEnd()
    single_term = term + pp.StringEnd()

    line_comment = pp.Regex(r"%.*")
    for element in (program, query, single_term):
        element.ignore(line_comment)
        element.ignore(pp.c_style_comment)

    return program, query, single_term


PROGRAM, QUERY, TERM = _build_grammar()


def _parse(grammar, text):
    try:
        return grammar.parse_string(text, parse_all=True)
    except pp.ParseBaseException as err:
        expected = str(err.msg)
        if expected.startswith("Expected "):
            expected = expected[len("Expected "):]
        raise ReactorSyntaxError(err.lineno, err.col, expected, err.line) from None


# *********************************************
# Entry points
# *********************************************
def conjuncts(goal):
    result = []
    while isinstance(goal, Struct) and goal.key == (",", 2):
        result.append(goal.args[0])
        goal = goal.args[1]
    result.append(goal)
    return result


def parse_program(text, default_oid=Const("main")):
    clauses, directives = [], []
    for kind, item in _parse(PROGRAM, text):
        if kind == "clause":
            clauses.append(item)
        else:
            directives.append(item)
    return SourceModule(default_oid, clauses, directives)


def parse_query(text):
    goal = _parse(QUERY, text)[0]
    mapping = {}
    goal = rename(goal, mapping, fresh_index())
    return conjuncts(goal)


def parse_term(text):
    return _parse(TERM, text)[0]


# *********************************************
# Formatting
# *********************************************
def _format_atom(symbol):
    if ATOM_RE.fullmatch(symbol) or symbol == "!":
        return symbol
    escaped = symbol.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def _format_string(value):
    escaped = (
        value.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\t", "\\t")
    )
    return f'"{escaped}"'


def _format_number(value):
    if isinstance(value, int):
        return str(value)
    text = repr(float(value))
    mantissa, _, exponent = text.partition("e")
    if "." not in mantissa:
        mantissa += ".0"
    return f"{mantissa}e{exponent}" if exponent else mantissa


def format_term(term):
    if isinstance(term, Var):
        return term.name if term.index == 0 else f"{term.name}_{term.index}"
    if isinstance(term, Const):
        return _format_atom(term.symbol)
    if isinstance(term, Str):
        return _format_string(term.value)
    if isinstance(term, Num):
        return _format_number(term.value)
    if isinstance(term, TimePoint):
        fields, millis = term.fields()
        if millis:
            fields = fields + (millis,)
        return "datetime(" + ",".join(str(f) for f in fields) + ")"
    if isinstance(term, Struct):
        if term.functor in INFIX_OPERATORS and len(term.args) == 2:
            left, right = (format_term(a) for a in term.args)
            separator = ", " if term.functor == "," else f" {term.functor} "
            return f"({left}{separator}{right})"
        args = ",".join(format_term(a) for a in term.args)
        return f"{_format_atom(term.functor)}({args})"
    if isinstance(term, PList):
        items = ",".join(format_term(i) for i in term.items)
        if term.tail is not None:
            return f"[{items}|{format_term(term.tail)}]"
        return f"[{items}]"
    raise TypeError(f"not a term: {term!r}")


def format_clause(clause):
    head = format_term(clause.head)
    if not clause.body:
        return f"{head}."
    body = ", ".join(format_term(goal) for goal in clause.body)
    return f"{head} :- {body}."


def format_module(clauses):
    return "\n".join(format_clause(c) for c in clauses)
