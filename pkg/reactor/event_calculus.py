# This module contains the interval-based event calculus:
# recording and consuming occurrences in event instance sequences,
# the holdsInterval / broken / holdsAt axioms and the event algebra.
#
# Every occurrence lives over an interval, atomic ones over [t,t]:
#
#      a          b     c
#   ---+----------+-----+-----> time
#      [1,1]      [4,4] [6,6]
#      [------ sequence(a,b) ------]  = [1,4]
#
import itertools
import logging
import attr
from reactor.errors import NonGroundEvent, MalformedExpr, BuiltinTypeError
from reactor.parser import Clause, format_term
from reactor.terms import (
    Var,
    Const,
    Num,
    Struct,
    PList,
    EMPTY_BINDINGS,
    TimeInterval,
    unify,
    apply,
    walk,
    is_ground,
    is_time,
    time_value,
    term_key,
    interval_leq,
    envelope,
)

logger = logging.getLogger("reactor.ec")

NARY_OPERATORS = ("sequence", "or", "xor", "and", "concurrent")
WINDOW_OPERATORS = ("neg", "aperiodic")
POLICIES = ("all", "first", "last")


@attr.s(frozen=True, slots=True)
class Occurrence:
    event = attr.ib()
    interval = attr.ib()
    # position in the order the knowledge base listed it
    seq = attr.ib(default=0)

    @property
    def event_type(self):
        return event_type(self.event)


@attr.s(frozen=True, slots=True)
class Detection:
    interval = attr.ib()
    bindings = attr.ib()
    occurrences = attr.ib(converter=tuple)


def event_type(term):
    key = term_key(term)
    return None if key is None else key[0]


def eis_key(event):
    return Struct("eis", (Const(event_type(event)),))


def time_term(t):
    if isinstance(t, TimeInterval):
        return t.to_term()
    return t


def _interval_of(term):
    interval = TimeInterval.from_term(term)
    if interval is None:
        raise BuiltinTypeError("a time point or [Start,End] interval", format_term(term))
    return interval


# *********************************************
# Occurrences
# *********************************************
def record_occurrence(kb, event, t):
    """
    Adds occurs(event, t) to the eis module of the event type.
    t is a time point, a TimeInterval or an [Start,End] list.
    """
    if not is_ground(event) or not isinstance(event, (Const, Struct)):
        raise NonGroundEvent(event)
    if isinstance(t, int):
        t = Num(t)
    interval = t if isinstance(t, TimeInterval) else _interval_of(t)
    stamp = interval.start if interval.is_atomic() else interval.to_term()
    fact = Clause(Struct("occurs", (event, stamp)))
    return kb.add_module(eis_key(event), [fact])


def occurrences(solver, bindings=EMPTY_BINDINGS, functors=("occurs",)):
    """
    Ground occurrences derivable from occurs/2 (and happens/2 when asked),
    ordered by start, end, then knowledge base order.
    """
    found = []
    for functor in functors:
        goal = Struct(functor, (Var("E"), Var("T")))
        for b, _ in solver.subsolve([goal], bindings):
            event, t = apply(b, goal.args[0]), apply(b, goal.args[1])
            if not is_ground(event) or not is_ground(t):
                continue
            interval = TimeInterval.from_term(t)
            if interval is None:
                logger.info("skipping %s: not a time", format_term(t))
                continue
            found.append(Occurrence(event, interval, len(found)))
    found.sort(key=lambda o: (*o.interval.bounds, o.seq))
    return found


def _strictly_inside(interval, end, start):
    s, e = interval.bounds
    return end < s and e < start


# *********************************************
# Consumption
# *********************************************
def consume(kb, key, policy="all"):
    """
    Removes occurrences of an eis module. Unknown keys are a no-op.
      all   -> the whole module
      first -> the earliest occurrence
      last  -> the latest occurrence
    """
    if policy not in POLICIES:
        raise BuiltinTypeError(f"a consumption policy {POLICIES}", policy)
    if key not in kb:
        return None
    if policy == "all":
        return kb.remove_module(key)

    stamped = []
    for i, clause in enumerate(kb.module(key)):
        if clause.key == ("occurs", 2) and clause.is_fact():
            interval = TimeInterval.from_term(clause.head.args[1])
            if interval is not None:
                stamped.append((interval.bounds, i))
    if not stamped:
        return None
    chosen = min(stamped) if policy == "first" else max(stamped)
    return kb.remove_clauses(key, [chosen[1]])


def consume_event(kb, event):
    # occurs facts whose event unifies with the pattern, in any module
    records = []
    for oid, clauses in kb.snapshot():
        positions = [
            i
            for i, clause in enumerate(clauses)
            if clause.key == ("occurs", 2)
            and clause.is_fact()
            and unify(event, clause.head.args[0]) is not None
        ]
        if positions:
            records.append(kb.remove_clauses(oid, positions))
    return records


# *********************************************
# Event algebra
# *********************************************
def validate(expr):
    if isinstance(expr, Var):
        raise MalformedExpr(expr, "unbound event type")
    if isinstance(expr, (PList, Num)):
        raise MalformedExpr(expr, "not an event type")
    if not isinstance(expr, Struct):
        return
    functor, args = expr.functor, expr.args
    if functor in NARY_OPERATORS:
        if len(args) < 2:
            raise MalformedExpr(expr, f"{functor} needs at least two operands")
        for arg in args:
            validate(arg)
    elif functor == "any":
        n = args[0] if len(args) == 2 else None
        if not isinstance(n, Num) or not isinstance(n.value, int) or n.value < 1:
            raise MalformedExpr(expr, "any(N,E) needs an integer N >= 1")
        validate(args[1])
    elif functor in WINDOW_OPERATORS:
        if len(args) != 2 or not _is_pair(args[1]):
            raise MalformedExpr(expr, f"{functor} needs a [Start,End] window of two events")
        if functor == "neg" and not isinstance(args[0], PList):
            raise MalformedExpr(expr, "neg needs a list of event types")
        for arg in _window(args[1]):
            validate(arg)
    elif functor == "periodic":
        raise MalformedExpr(expr, "periodic is exchangeable but not executable")


def _is_pair(term):
    return isinstance(term, PList) and term.tail is None and len(term.items) == 2


def _window(term):
    return term.items


def leaf_types(expr):
    if isinstance(expr, Struct):
        if expr.functor in NARY_OPERATORS:
            return set().union(*(leaf_types(a) for a in expr.args))
        if expr.functor == "any":
            return leaf_types(expr.args[1])
        if expr.functor in WINDOW_OPERATORS:
            return set().union(*(leaf_types(a) for a in expr.args[1].items))
    return {event_type(expr)}


def detect(solver, expr, bindings=EMPTY_BINDINGS, occs=None):
    """
    Detections of an event expression over the current occurrences,
    earliest combinations first. Read-only: nothing is consumed.
    """
    expr = apply(bindings, expr)
    if isinstance(expr, PList) and len(expr.items) == 1 and expr.tail is None:
        expr = expr.items[0]
    validate(expr)
    if occs is None:
        occs = occurrences(solver, bindings)
    seen = set()
    for d in _detect(expr, bindings, occs):
        key = (d.interval.bounds, tuple(o.seq for o in d.occurrences), d.bindings)
        if key not in seen:
            seen.add(key)
            yield d


def _detect(expr, b, occs):
    functor = expr.functor if isinstance(expr, Struct) else None
    if functor == "sequence":
        yield from _sequence(expr.args, b, occs, leaf_types(expr))
    elif functor == "or":
        for arg in expr.args:
            yield from _detect(arg, b, occs)
    elif functor == "xor":
        yield from _xor(expr.args, b, occs)
    elif functor == "and":
        for chosen in _combine(expr.args, b, occs):
            yield _joined(chosen)
    elif functor == "concurrent":
        for chosen in _combine(expr.args, b, occs):
            if len({d.interval.bounds for d in chosen}) == 1:
                yield _joined(chosen)
    elif functor == "any":
        yield from _any(expr.args[0].value, expr.args[1], b, occs)
    elif functor == "neg":
        yield from _neg(expr.args[0].items, expr.args[1].items, b, occs)
    elif functor == "aperiodic":
        yield from _aperiodic(expr.args[0], expr.args[1].items, b, occs)
    else:
        for occ in occs:
            b2 = unify(expr, occ.event, b)
            if b2 is not None:
                yield Detection(occ.interval, b2, (occ,))


def _joined(chosen):
    occs = [o for d in chosen for o in d.occurrences]
    return Detection(envelope(d.interval for d in chosen), chosen[-1].bindings, occs)


def _disjoint(chosen, d):
    used = {o.seq for c in chosen for o in c.occurrences}
    return not any(o.seq in used for o in d.occurrences)


def _combine(exprs, b, occs, chosen=()):
    # one detection per operand, pairwise disjoint, bindings threaded left to right
    if not exprs:
        yield list(chosen)
        return
    for d in _detect(exprs[0], b, occs):
        if _disjoint(chosen, d):
            yield from _combine(exprs[1:], d.bindings, occs, chosen + (d,))


def broken_by_scope(end, start, scope, occs):
    return any(
        o.event_type in scope and _strictly_inside(o.interval, end, start) for o in occs
    )


def _sequence(exprs, b, occs, scope, previous=None):
    """
    Consecutive pairs ordered pointwise and not broken by an event of
    the scope, the leaf types of the whole expression. terminates/3
    clauses are not consulted here, they only break holdsInterval.
    """
    if not exprs:
        return
    for d in _detect(exprs[0], b, occs):
        if previous is not None:
            if not interval_leq(previous.interval, d.interval):
                continue
            end, start = time_value(previous.interval.end), time_value(d.interval.start)
            if broken_by_scope(end, start, scope, occs):
                continue
            d = Detection(
                TimeInterval(previous.interval.start, d.interval.end),
                d.bindings,
                previous.occurrences + d.occurrences,
            )
        if len(exprs) == 1:
            yield d
        else:
            yield from _sequence(exprs[1:], d.bindings, occs, scope, d)


def _xor(exprs, b, occs):
    detected = [list(_detect(arg, b, occs)) for arg in exprs]
    for i, found in enumerate(detected):
        if all(not other for j, other in enumerate(detected) if j != i):
            yield from found


def _merge(b1, b2):
    for var, term in b2.items():
        b1 = unify(var, term, b1)
        if b1 is None:
            return None
    return b1


def _any(n, expr, b, occs):
    found = list(_detect(expr, b, occs))
    for combination in itertools.combinations(found, n):
        chosen, merged = [], b
        for d in combination:
            merged = _merge(merged, d.bindings) if merged is not None else None
            if merged is None or not _disjoint(chosen, d):
                break
            chosen.append(d)
        else:
            occs_used = [o for d in chosen for o in d.occurrences]
            yield Detection(envelope(d.interval for d in chosen), merged, occs_used)


def _windows(pair, b, occs):
    first, last = pair
    for d1 in _detect(first, b, occs):
        for d2 in _detect(last, d1.bindings, occs):
            if interval_leq(d1.interval, d2.interval):
                yield d1, d2


def _neg(excluded, pair, b, occs):
    for d1, d2 in _windows(pair, b, occs):
        end, start = time_value(d1.interval.end), time_value(d2.interval.start)
        blocked = any(
            unify(pattern, o.event, d2.bindings) is not None
            and _strictly_inside(o.interval, end, start)
            for pattern in excluded
            for o in occs
        )
        if not blocked:
            yield Detection(
                TimeInterval(d1.interval.start, d2.interval.end),
                d2.bindings,
                d1.occurrences + d2.occurrences,
            )


def _aperiodic(expr, pair, b, occs):
    for d1, d2 in _windows(pair, b, occs):
        end, start = time_value(d1.interval.end), time_value(d2.interval.start)
        for d in _detect(expr, d2.bindings, occs):
            if _strictly_inside(d.interval, end, start):
                yield d


# *********************************************
# Axioms
# *********************************************
def is_broken(solver, end, pair, start, bindings=EMPTY_BINDINGS, occs=None):
    """
    True when a declared terminator of the event pair occurs strictly
    between end and start:  terminates(Terminator, [E1,E2], [end,start])
    """
    if occs is None:
        occs = occurrences(solver, bindings)
    end_value, start_value = time_value(end), time_value(start)
    terminator = Var("Terminator")
    goal = Struct("terminates", (terminator, apply(bindings, pair), PList((end, start))))
    for b, _ in solver.subsolve([goal], bindings):
        pattern = apply(b, terminator)
        for occ in occs:
            if _strictly_inside(occ.interval, end_value, start_value):
                if unify(pattern, occ.event, b) is not None:
                    return True
    return False


def holds_interval(solver, pair, scope=None, bindings=EMPTY_BINDINGS):
    """
    Yields (TimeInterval, bindings) for [E1,E2] spanning an interval
    unbroken by a declared terminator, or by any event of the scope types.
    """
    pair = walk(pair, bindings)
    if not _is_pair(pair):
        raise BuiltinTypeError("an [E1,E2] event pair", format_term(apply(bindings, pair)))
    scope_types = None
    if scope is not None:
        scope = walk(scope, bindings)
        if not isinstance(scope, PList):
            raise BuiltinTypeError("a list of event types", format_term(scope))
        scope_types = {event_type(apply(bindings, t)) for t in scope.items}

    occs = occurrences(solver, bindings)
    first, last = pair.items
    for d1 in detect(solver, first, bindings, occs):
        for d2 in detect(solver, last, d1.bindings, occs):
            if not interval_leq(d1.interval, d2.interval):
                continue
            end, start = d1.interval.end, d2.interval.start
            if scope_types is not None and broken_by_scope(
                time_value(end), time_value(start), scope_types, occs
            ):
                continue
            if is_broken(solver, end, pair, start, d2.bindings, occs):
                continue
            yield TimeInterval(d1.interval.start, d2.interval.end), d2.bindings


def holds_at(solver, fluent, t, bindings=EMPTY_BINDINGS):
    """
    Clipped persistence over occurs/2 and happens/2: the fluent holds at t
    if an event at t1 <= t initiated it (or it holds initially) and no
    event at t1 < t2 <= t terminated it. One answer per fluent instance.
    """
    t = walk(t, bindings)
    if not is_time(t):
        raise BuiltinTypeError("a bound time point", format_term(apply(bindings, t)))
    now = time_value(t)
    events = [
        o
        for o in occurrences(solver, bindings, ("occurs", "happens"))
        if time_value(o.interval.end) <= now
    ]

    def clipped(instance, since):
        for o in events:
            stamp = o.interval.end
            if since < time_value(stamp):
                goal = Struct("terminates", (o.event, instance, stamp))
                if next(solver.subsolve([goal], bindings), None) is not None:
                    return True
        return False

    candidates = []
    for b, _ in solver.subsolve([Struct("initially", (fluent,))], bindings):
        candidates.append((apply(b, fluent), float("-inf")))
    for o in events:
        stamp = o.interval.end
        goal = Struct("initiates", (o.event, fluent, stamp))
        for b, _ in solver.subsolve([goal], bindings):
            candidates.append((apply(b, fluent), time_value(stamp)))

    answered = set()
    for instance, since in candidates:
        if instance in answered or not is_ground(instance):
            continue
        if not clipped(instance, since):
            answered.add(instance)
            b2 = unify(fluent, instance, bindings)
            if b2 is not None:
                yield b2
