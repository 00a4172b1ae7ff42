# The builtin table: functor/arity -> handler(solver, goal, bindings, frame).
# A handler returns the list (or a lazy iterator) of binding sets it
# succeeds with. Library builtins are only consulted when the knowledge
# base has no clause for the same functor/arity.
import re
import attr
from reactor import event_calculus as ec
from reactor.errors import BuiltinTypeError
from reactor.kb import is_locator, resolve_import
from reactor.parser import format_term
from reactor.solver.helpers import INSTANTIATION_ALERT_MSG
from reactor.terms import (
    Var,
    Const,
    Str,
    Num,
    TimePoint,
    Struct,
    PList,
    TimeInterval,
    unify,
    apply,
    walk,
    flatten_list,
    make_list,
    is_ground,
    is_time,
    time_value,
    numbers_equal,
    interval_leq,
    fresh_index,
)


@attr.s(frozen=True, slots=True)
class Builtin:
    name = attr.ib()
    arity = attr.ib()
    handler = attr.ib()
    library = attr.ib(default=False)


BUILTINS = {}


def builtin(name, *arities, library=False):
    def register(handler):
        for arity in arities:
            BUILTINS[(name, arity)] = Builtin(name, arity, handler, library)
        return handler

    return register


def _unified(a, b_term, bindings):
    b2 = unify(a, b_term, bindings)
    return [] if b2 is None else [b2]


def _bound(term, bindings, expected):
    term = walk(term, bindings)
    if isinstance(term, Var):
        raise BuiltinTypeError(expected, "an unbound variable", INSTANTIATION_ALERT_MSG)
    return term


def _text(term, bindings, expected="a string or atom"):
    term = _bound(term, bindings, expected)
    if isinstance(term, Str):
        return term.value
    if isinstance(term, Const):
        return term.symbol
    raise BuiltinTypeError(expected, format_term(term))


def _proper_list(term, bindings, expected="a proper list"):
    term = _bound(term, bindings, expected)
    if isinstance(term, PList):
        items, tail = flatten_list(term, bindings)
        if tail is None:
            return [apply(bindings, item) for item in items]
    raise BuiltinTypeError(expected, format_term(apply(bindings, term)))


# *********************************************
# Arithmetic
# *********************************************
DURATION_RE = re.compile(r"(\d+)(MS|S|M|H|D)")
UNIT_MILLIS = {"MS": 1, "S": 1000, "M": 60_000, "H": 3_600_000, "D": 86_400_000}
SPAN_UNITS = (86_400_000, 3_600_000, 60_000, 1000)


def duration_millis(term, bindings):
    """
    '1S', '500MS', '2M', '1H', '1D', timespan(D,H,M,S) or a plain
    number of milliseconds.
    """
    term = _bound(term, bindings, "a duration")
    if isinstance(term, Num):
        return term.value
    if isinstance(term, Const):
        match = DURATION_RE.fullmatch(term.symbol)
        if match:
            return int(match.group(1)) * UNIT_MILLIS[match.group(2)]
    if isinstance(term, Struct) and term.key == ("timespan", 4):
        parts = [evaluate(arg, bindings) for arg in term.args]
        return sum(part * unit for part, unit in zip(parts, SPAN_UNITS))
    raise BuiltinTypeError("a duration", format_term(term))


def _divide(x, y):
    if y == 0:
        raise BuiltinTypeError("a non-zero divisor", "0")
    if isinstance(x, int) and isinstance(y, int) and x % y == 0:
        return x // y
    return x / y


def _add(x, y):
    if isinstance(x, TimePoint) and isinstance(y, TimePoint):
        raise BuiltinTypeError("a time point plus a duration", "two time points")
    if isinstance(x, TimePoint):
        return x.shifted(round(y))
    if isinstance(y, TimePoint):
        return y.shifted(round(x))
    return x + y


def _subtract(x, y):
    if isinstance(x, TimePoint) and isinstance(y, TimePoint):
        return x.millis - y.millis
    if isinstance(x, TimePoint):
        return x.shifted(-round(y))
    if isinstance(y, TimePoint):
        raise BuiltinTypeError("a number minus a number", "a number minus a time point")
    return x - y


def _numeric(operation):
    def apply_numbers(x, y):
        if isinstance(x, TimePoint) or isinstance(y, TimePoint):
            raise BuiltinTypeError("numbers", "a time point")
        return operation(x, y)

    return apply_numbers


ARITHMETIC = {
    "+": _add,
    "-": _subtract,
    "*": _numeric(lambda x, y: x * y),
    "/": _numeric(_divide),
    "mod": _numeric(lambda x, y: x % y),
}


def evaluate(term, bindings):
    # an int, a float or a TimePoint
    term = _bound(term, bindings, "an evaluable expression")
    if isinstance(term, Num):
        return term.value
    if isinstance(term, TimePoint):
        return term
    if isinstance(term, Struct) and term.functor in ARITHMETIC and term.arity == 2:
        x, y = (evaluate(arg, bindings) for arg in term.args)
        return ARITHMETIC[term.functor](x, y)
    if isinstance(term, (Const, Struct)):
        return duration_millis(term, bindings)
    raise BuiltinTypeError("an evaluable expression", format_term(apply(bindings, term)))


def as_term(value):
    if isinstance(value, TimePoint):
        return value
    return Num(value)


def _comparable(value):
    return value.millis if isinstance(value, TimePoint) else value


def _intervals(x, y, bindings):
    x, y = walk(x, bindings), walk(y, bindings)
    if not (isinstance(x, PList) and isinstance(y, PList)):
        return None
    i1 = TimeInterval.from_term(apply(bindings, x))
    i2 = TimeInterval.from_term(apply(bindings, y))
    if i1 is None or i2 is None:
        raise BuiltinTypeError("two [Start,End] intervals", format_term(apply(bindings, x)))
    return i1, i2


COMPARISONS = {
    "<": lambda x, y: x < y,
    ">": lambda x, y: x > y,
    "=<": lambda x, y: x <= y,
    "<=": lambda x, y: x <= y,
    ">=": lambda x, y: x >= y,
    "=:=": numbers_equal,
    "=\\=": lambda x, y: not numbers_equal(x, y),
}

INTERVAL_COMPARISONS = {
    "<=": interval_leq,
    "=<": interval_leq,
    ">=": lambda i1, i2: interval_leq(i2, i1),
    "<": lambda i1, i2: interval_leq(i1, i2) and i1.bounds != i2.bounds,
    ">": lambda i1, i2: interval_leq(i2, i1) and i1.bounds != i2.bounds,
}


def _compare(solver, goal, bindings, frame):
    x, y = goal.args
    intervals = _intervals(x, y, bindings)
    if intervals is not None:
        test = INTERVAL_COMPARISONS.get(goal.functor)
        if test is None:
            raise BuiltinTypeError("numbers", "intervals", goal.functor)
        return [bindings] if test(*intervals) else []
    left = _comparable(evaluate(x, bindings))
    right = _comparable(evaluate(y, bindings))
    return [bindings] if COMPARISONS[goal.functor](left, right) else []


for _operator in COMPARISONS:
    builtin(_operator, 2)(_compare)


@builtin("is", 2)
def _is(solver, goal, bindings, frame):
    result, expr = goal.args
    return _unified(result, as_term(evaluate(expr, bindings)), bindings)


# *********************************************
# Terms
# *********************************************
@builtin("true", 0)
def _true(solver, goal, bindings, frame):
    return [bindings]


@builtin("fail", 0)
@builtin("false", 0)
def _fail(solver, goal, bindings, frame):
    return []


@builtin("=", 2)
def _equals(solver, goal, bindings, frame):
    return _unified(goal.args[0], goal.args[1], bindings)


@builtin("\\=", 2)
def _not_unifiable(solver, goal, bindings, frame):
    return [] if unify(goal.args[0], goal.args[1], bindings) else [bindings]


@builtin("==", 2)
def _identical(solver, goal, bindings, frame):
    x, y = (apply(bindings, arg) for arg in goal.args)
    return [bindings] if x == y else []


@builtin("\\==", 2)
def _not_identical(solver, goal, bindings, frame):
    x, y = (apply(bindings, arg) for arg in goal.args)
    return [] if x == y else [bindings]


@builtin("var", 1)
def _var(solver, goal, bindings, frame):
    return [bindings] if isinstance(walk(goal.args[0], bindings), Var) else []


@builtin("nonvar", 1)
def _nonvar(solver, goal, bindings, frame):
    return [] if isinstance(walk(goal.args[0], bindings), Var) else [bindings]


@builtin("ground", 1)
def _ground(solver, goal, bindings, frame):
    return [bindings] if is_ground(goal.args[0], bindings) else []


# *********************************************
# Lists
# *********************************************
@builtin("member", 2, library=True)
def _member(solver, goal, bindings, frame):
    element, lst = goal.args
    lst = _bound(lst, bindings, "a list")
    if not isinstance(lst, PList):
        raise BuiltinTypeError("a list", format_term(lst))
    items, _ = flatten_list(lst, bindings)
    for item in items:
        b2 = unify(element, item, bindings)
        if b2 is not None:
            yield b2


@builtin("append", 3, library=True)
def _append(solver, goal, bindings, frame):
    xs, ys, zs = goal.args
    front = walk(xs, bindings)
    if isinstance(front, PList):
        items, tail = flatten_list(front, bindings)
        rest = walk(ys, bindings)
        if tail is None and isinstance(rest, (Var, PList)):
            return _unified(zs, make_list(items, rest), bindings)
    whole = _proper_list(zs, bindings, "a proper list to split")

    def splits():
        for i in range(len(whole) + 1):
            b2 = unify(xs, PList(whole[:i]), bindings)
            if b2 is not None:
                b2 = unify(ys, PList(whole[i:]), b2)
            if b2 is not None:
                yield b2

    return splits()


@builtin("length", 2, library=True)
def _length(solver, goal, bindings, frame):
    lst, n = goal.args
    walked = walk(lst, bindings)
    if isinstance(walked, PList):
        items, tail = flatten_list(walked, bindings)
        if tail is None:
            return _unified(n, Num(len(items)), bindings)
    size = _bound(n, bindings, "a list length")
    if not isinstance(size, Num) or not isinstance(size.value, int) or size.value < 0:
        raise BuiltinTypeError("a non-negative integer", format_term(size))
    index = fresh_index()
    fresh = PList(tuple(Var(f"_L{i}", index) for i in range(size.value)))
    return _unified(lst, fresh, bindings)


# *********************************************
# Time and output
# *********************************************
@builtin("sysTime", 1)
@builtin("time", 1)
def _sys_time(solver, goal, bindings, frame):
    return _unified(goal.args[0], solver.clock.now(), bindings)


@builtin("interval", 2)
def _interval(solver, goal, bindings, frame):
    """
    Succeeds when at least the span passed since this call site last
    succeeded. The first call at a site succeeds.
    """
    span = duration_millis(goal.args[0], bindings)
    now = _bound(goal.args[1], bindings, "a time point")
    if not is_time(now):
        raise BuiltinTypeError("a time point", format_term(now))
    now = time_value(now)
    last = solver.interval_state.get(frame.site)
    if last is not None and now - last < span:
        return []
    solver.interval_state[frame.site] = now
    return [bindings]


def _printable(term):
    if isinstance(term, Str):
        return term.value
    return format_term(term)


@builtin("println", 1)
def _println(solver, goal, bindings, frame):
    value = apply(bindings, goal.args[0])
    if isinstance(value, PList) and value.tail is None:
        line = "".join(_printable(item) for item in value.items)
    else:
        line = _printable(value)
    solver.printed.append(line)
    solver.output(line)
    return [bindings]


# *********************************************
# Knowledge base updates
# *********************************************
def _oid(term, bindings):
    oid = apply(bindings, _bound(term, bindings, "a module oid"))
    if not is_ground(oid):
        raise BuiltinTypeError("a ground module oid", format_term(oid))
    return oid


def _policy(solver, oid):
    # last writer wins between solutions of the same query
    if oid in solver.kb and solver.retained(oid):
        return "replace"
    return None


@builtin("add", 1)
def _add_source(solver, goal, bindings, frame):
    text = _text(goal.args[0], bindings)
    kb = solver.kb
    solver.note_update(kb.checkpoint())
    if is_locator(text):
        oid = Const(text)
        kb.add_module(oid, resolve_import(text, kb.base_dir), policy=_policy(solver, oid))
    else:
        kb.add_anonymous(text)
    return [bindings]


@builtin("add", 2, 3)
def _add(solver, goal, bindings, frame):
    oid = _oid(goal.args[0], bindings)
    text = _text(goal.args[1], bindings)
    args = _proper_list(goal.args[2], bindings) if goal.arity == 3 else ()
    solver.note_update(solver.kb.checkpoint())
    solver.kb.add_module(oid, text, args, policy=_policy(solver, oid))
    return [bindings]


@builtin("remove", 1)
def _remove(solver, goal, bindings, frame):
    oid = _oid(goal.args[0], bindings)
    solver.note_update(solver.kb.checkpoint())
    solver.kb.remove_module(oid)
    return [bindings]


@builtin("update", 2, 3)
def _update(solver, goal, bindings, frame):
    oid = _oid(goal.args[0], bindings)
    text = _text(goal.args[1], bindings)
    args = _proper_list(goal.args[2], bindings) if goal.arity == 3 else ()
    kb = solver.kb
    solver.note_update(kb.checkpoint())
    if oid in kb:
        kb.remove_module(oid)
    kb.add_module(oid, text, args)
    return [bindings]


# *********************************************
# Events
# *********************************************
@builtin("consume", 1, 2)
def _consume(solver, goal, bindings, frame):
    target = apply(bindings, _bound(goal.args[0], bindings, "an eis key or event"))
    policy = _text(goal.args[1], bindings) if goal.arity == 2 else "all"
    solver.note_update(solver.kb.checkpoint())
    if isinstance(target, Struct) and target.key == ("eis", 1):
        ec.consume(solver.kb, target, policy)
    else:
        ec.consume_event(solver.kb, target)
    return [bindings]


def _detections(solver, goal, bindings, frame):
    expr, t = goal.args
    for detection in ec.detect(solver, expr, bindings):
        b2 = unify(t, detection.interval.to_term(), detection.bindings)
        if b2 is not None:
            yield b2


builtin("event", 2)(_detections)
builtin("detect", 2, library=True)(_detections)


@builtin("holdsAt", 2, library=True)
def _holds_at(solver, goal, bindings, frame):
    fluent, t = goal.args
    return ec.holds_at(solver, fluent, t, bindings)


@builtin("holdsInterval", 2, 3, library=True)
def _holds_interval(solver, goal, bindings, frame):
    pair, t = goal.args[0], goal.args[1]
    scope = goal.args[2] if goal.arity == 3 else None
    for interval, b2 in ec.holds_interval(solver, pair, scope, bindings):
        b3 = unify(t, interval.to_term(), b2)
        if b3 is not None:
            yield b3


@builtin("broken", 3, library=True)
def _broken(solver, goal, bindings, frame):
    end = _bound(goal.args[0], bindings, "a time point")
    start = _bound(goal.args[2], bindings, "a time point")
    if not (is_time(end) and is_time(start)):
        raise BuiltinTypeError("two time points", f"{format_term(end)}, {format_term(start)}")
    broken = ec.is_broken(solver, end, goal.args[1], start, bindings)
    return [bindings] if broken else []


# *********************************************
# External data
# *********************************************
@builtin("dbopen", 2)
def _dbopen(solver, goal, bindings, frame):
    handle = solver.tables.open(_text(goal.args[0], bindings))
    return _unified(goal.args[1], handle, bindings)


def _conditions(where, bindings):
    # [where, col = Value, col2 = Value2, ...]
    items = _proper_list(where, bindings, "a [where, Column = Value, ...] list")
    if items and items[0] == Const("where"):
        items = items[1:]
    conditions = []
    for item in items:
        if not (isinstance(item, Struct) and item.key == ("=", 2)):
            raise BuiltinTypeError("Column = Value", format_term(item))
        conditions.append((_text(item.args[0], bindings), item.args[1]))
    return conditions


@builtin("sql_select", 3, 4)
def _sql_select(solver, goal, bindings, frame):
    _bound(goal.args[0], bindings, "a database handle")
    table = _text(goal.args[1], bindings)
    columns = walk(goal.args[2], bindings)
    if not isinstance(columns, PList):
        raise BuiltinTypeError("a [column, Var, ...] list", format_term(columns))
    items, _ = flatten_list(columns, bindings)
    if len(items) % 2:
        raise BuiltinTypeError("column / variable pairs", format_term(apply(bindings, columns)))
    wanted = [(_text(items[i], bindings), items[i + 1]) for i in range(0, len(items), 2)]
    conditions = _conditions(goal.args[3], bindings) if goal.arity == 4 else []

    results = []
    for row in solver.tables.rows(table):
        b2 = bindings
        for column, value in conditions + wanted:
            if column not in row:
                raise BuiltinTypeError(f"a column of {table}", column)
            b2 = unify(value, row[column], b2)
            if b2 is None:
                break
        if b2 is not None:
            results.append(b2)
    return results


# *********************************************
# Messaging
# *********************************************
@builtin("iam", 1)
def _iam(solver, goal, bindings, frame):
    return _unified(goal.args[0], Const(solver.agent_name), bindings)


@builtin("partition_id", 1)
def _partition_id(solver, goal, bindings, frame):
    engine = solver.messaging_engine()
    return _unified(goal.args[0], engine.partitions.fresh(), bindings)


def _conversation(solver, xid, bindings):
    walked = walk(xid, bindings)
    if isinstance(walked, Var):
        fresh = solver.messaging_engine().fresh_xid()
        return fresh, unify(walked, fresh, bindings)
    return apply(bindings, walked), bindings


@builtin("sendMsg", 5, 6, 7, 8)
def _send_msg(solver, goal, bindings, frame):
    engine = solver.messaging_engine()
    xid, bindings = _conversation(solver, goal.args[0], bindings)
    protocol = _text(goal.args[1], bindings, "a protocol name")
    agent, performative, payload = (apply(bindings, a) for a in goal.args[2:5])
    context = tuple(apply(bindings, a) for a in goal.args[5:])
    engine.send(xid, protocol, agent, performative, payload, context)
    return [bindings]


@builtin("init_join", 3)
def _init_join(solver, goal, bindings, frame):
    engine = solver.messaging_engine()
    xid, bindings = _conversation(solver, goal.args[0], bindings)
    name = _bound(goal.args[1], bindings, "a join name")
    expected = _proper_list(goal.args[2], bindings, "a list of expected patterns")
    engine.init_join(xid, name, expected)
    return [bindings]
