# This module contains the term universe of the rule language,
# binding sets, unification and the time ordering used for events
import calendar
import itertools
from datetime import datetime, timezone
import attr
import numpy as np
from settings import OCCURS_CHECK

NUMBER_TOLERANCE = 1e-9

_fresh_indices = itertools.count(1)


def fresh_index():
    return next(_fresh_indices)


# *********************************************
# Terms
# *********************************************
@attr.s(frozen=True, slots=True, repr=False)
class Var:
    name = attr.ib()
    index = attr.ib(default=0)

    def __repr__(self):
        return f"Var({self.name!r}, {self.index})"

    def __str__(self):
        return _format(self)


@attr.s(frozen=True, slots=True, repr=False)
class Const:
    symbol = attr.ib()

    def __repr__(self):
        return f"Const({self.symbol!r})"

    def __str__(self):
        return _format(self)


@attr.s(frozen=True, slots=True, repr=False)
class Str:
    value = attr.ib()

    def __repr__(self):
        return f"Str({self.value!r})"

    def __str__(self):
        return _format(self)


@attr.s(frozen=True, slots=True, repr=False)
class Num:
    value = attr.ib()

    def __repr__(self):
        return f"Num({self.value!r})"

    def __str__(self):
        return _format(self)


@attr.s(frozen=True, slots=True, repr=False)
class TimePoint:
    millis = attr.ib(converter=int)

    @classmethod
    def from_fields(cls, year, month, day, hour=0, minute=0, second=0, millis=0):
        # validates the calendar date
        datetime(year, month, day, hour, minute, second)
        seconds = calendar.timegm((year, month, day, hour, minute, second, 0, 0, 0))
        return cls(seconds * 1000 + millis)

    @classmethod
    def from_datetime(cls, moment):
        if moment.tzinfo is None:
            moment = moment.replace(tzinfo=timezone.utc)
        return cls(round(moment.timestamp() * 1000))

    def fields(self):
        seconds, millis = divmod(self.millis, 1000)
        moment = datetime.fromtimestamp(seconds, tz=timezone.utc)
        return (
            moment.year,
            moment.month,
            moment.day,
            moment.hour,
            moment.minute,
            moment.second,
        ), millis

    def to_datetime(self):
        return datetime.fromtimestamp(self.millis / 1000, tz=timezone.utc)

    def shifted(self, millis):
        return TimePoint(self.millis + millis)

    def __repr__(self):
        return f"TimePoint({self.millis})"

    def __str__(self):
        return _format(self)


def _check_args(instance, attribute, value):
    if len(value) < 1:
        raise ValueError("compound terms need at least one argument, use Const")


@attr.s(frozen=True, slots=True, repr=False)
class Struct:
    functor = attr.ib()
    args = attr.ib(converter=tuple, validator=_check_args)

    @property
    def arity(self):
        return len(self.args)

    @property
    def key(self):
        return self.functor, len(self.args)

    def __repr__(self):
        return f"Struct({self.functor!r}, {self.args!r})"

    def __str__(self):
        return _format(self)


@attr.s(frozen=True, slots=True, repr=False)
class PList:
    items = attr.ib(converter=tuple, default=())
    # None for a closed list, otherwise the unbound rest of the list
    tail = attr.ib(default=None)

    def __repr__(self):
        return f"PList({self.items!r}, {self.tail!r})"

    def __str__(self):
        return _format(self)


TERM_TYPES = (Var, Const, Str, Num, TimePoint, Struct, PList)
EMPTY_LIST = PList(())
TRUE = Const("true")


def make_struct(functor, args):
    args = tuple(args)
    if not args:
        return Const(functor)
    return Struct(functor, args)


def make_list(items, tail=None):
    if isinstance(tail, PList):
        return PList(tuple(items) + tail.items, tail.tail)
    return PList(tuple(items), tail)


def term_key(term):
    # functor/arity of a callable term
    if isinstance(term, Struct):
        return term.functor, len(term.args)
    if isinstance(term, Const):
        return term.symbol, 0
    return None


def _format(term):
    from reactor.parser import format_term

    return format_term(term)


# *********************************************
# Numbers
# *********************************************
def numbers_equal(a, b):
    if isinstance(a, int) and isinstance(b, int):
        return a == b
    return bool(np.isclose(a, b, rtol=0, atol=NUMBER_TOLERANCE))


# *********************************************
# Binding sets
# *********************************************
class Bindings:
    # Immutable: bind() returns a new set, so a Bindings value
    # can be shared by any number of suspended derivations
    __slots__ = ("_map",)

    def __init__(self, mapping=None):
        self._map = mapping if mapping is not None else {}

    def lookup(self, var):
        return self._map.get(var)

    def bind(self, var, term):
        extended = dict(self._map)
        extended[var] = term
        return Bindings(extended)

    def variables(self):
        return list(self._map)

    def items(self):
        return self._map.items()

    def restrict(self, variables):
        return Bindings({v: apply(self, v) for v in variables if v in self._map})

    def __contains__(self, var):
        return var in self._map

    def __len__(self):
        return len(self._map)

    def __iter__(self):
        return iter(self._map)

    def __eq__(self, other):
        return isinstance(other, Bindings) and self._map == other._map

    def __hash__(self):
        return hash(frozenset(self._map.items()))

    def __repr__(self):
        pairs = ", ".join(f"{_format(k)}={_format(v)}" for k, v in self._map.items())
        return f"Bindings({pairs})"


EMPTY_BINDINGS = Bindings()


def walk(term, bindings):
    while isinstance(term, Var):
        bound = bindings.lookup(term)
        if bound is None:
            return term
        term = bound
    return term


def flatten_list(lst, bindings):
    # Follows bound tails so [1|T] with T=[2] reads as ([1,2], None)
    items = list(lst.items)
    tail = lst.tail
    while tail is not None:
        tail = walk(tail, bindings)
        if isinstance(tail, PList):
            items.extend(tail.items)
            tail = tail.tail
        else:
            break
    return items, tail


def occurs_in(var, term, bindings):
    stack = [term]
    while stack:
        t = walk(stack.pop(), bindings)
        if isinstance(t, Var):
            if t == var:
                return True
        elif isinstance(t, Struct):
            stack.extend(t.args)
        elif isinstance(t, PList):
            stack.extend(t.items)
            if t.tail is not None:
                stack.append(t.tail)
    return False


def _timepoint_struct(tp, arity=6):
    # datetime/6 matches at second granularity, datetime/7 adds the millis
    (year, month, day, hour, minute, second), millis = tp.fields()
    args = [Num(year), Num(month), Num(day), Num(hour), Num(minute), Num(second)]
    if arity == 7:
        args.append(Num(millis))
    return Struct("datetime", args)


def unify(t1, t2, bindings=EMPTY_BINDINGS, occurs_check=OCCURS_CHECK):
    """
    Most general unifier of t1 and t2 extending bindings,
    or None when the terms do not unify.
    """
    b = bindings
    stack = [(t1, t2)]
    while stack:
        a, c = stack.pop()
        a = walk(a, b)
        c = walk(c, b)
        if a is c:
            continue

        if isinstance(a, Var):
            if isinstance(c, Var) and a == c:
                continue
            if occurs_check and occurs_in(a, c, b):
                return None
            b = b.bind(a, c)
            continue

        if isinstance(c, Var):
            if occurs_check and occurs_in(c, a, b):
                return None
            b = b.bind(c, a)
            continue

        if isinstance(a, Num) and isinstance(c, Num):
            if not numbers_equal(a.value, c.value):
                return None
            continue

        if isinstance(a, Struct) and isinstance(c, Struct):
            if a.functor != c.functor or len(a.args) != len(c.args):
                return None
            stack.extend(zip(a.args, c.args))
            continue

        if isinstance(a, PList) and isinstance(c, PList):
            items_a, tail_a = flatten_list(a, b)
            items_c, tail_c = flatten_list(c, b)
            n = min(len(items_a), len(items_c))
            stack.extend(zip(items_a[:n], items_c[:n]))
            rest_a, rest_c = items_a[n:], items_c[n:]
            if rest_a:
                if tail_c is None:
                    return None
                stack.append((tail_c, PList(rest_a, tail_a)))
            elif rest_c:
                if tail_a is None:
                    return None
                stack.append((tail_a, PList(rest_c, tail_c)))
            elif tail_a is None and tail_c is None:
                continue
            else:
                stack.append(
                    (
                        EMPTY_LIST if tail_a is None else tail_a,
                        EMPTY_LIST if tail_c is None else tail_c,
                    )
                )
            continue

        # datetime(Y,M,D,H,Mi,S) patterns against stored time points
        if isinstance(a, TimePoint) and isinstance(c, Struct) and c.functor == "datetime":
            stack.append((_timepoint_struct(a, len(c.args)), c))
            continue
        if isinstance(c, TimePoint) and isinstance(a, Struct) and a.functor == "datetime":
            stack.append((a, _timepoint_struct(c, len(a.args))))
            continue

        if a != c:
            return None
    return b


def apply(bindings, term):
    term = walk(term, bindings)
    if isinstance(term, Struct):
        return Struct(term.functor, tuple(apply(bindings, arg) for arg in term.args))
    if isinstance(term, PList):
        items, tail = flatten_list(term, bindings)
        items = tuple(apply(bindings, item) for item in items)
        if tail is not None:
            tail = apply(bindings, tail)
            if isinstance(tail, PList):
                return PList(items + tail.items, tail.tail)
        return PList(items, tail)
    return term


def variables_of(term, bindings=EMPTY_BINDINGS):
    found = []
    stack = [term]
    while stack:
        t = walk(stack.pop(), bindings)
        if isinstance(t, Var):
            if t not in found:
                found.append(t)
        elif isinstance(t, Struct):
            stack.extend(reversed(t.args))
        elif isinstance(t, PList):
            if t.tail is not None:
                stack.append(t.tail)
            stack.extend(reversed(t.items))
    return found


def is_ground(term, bindings=EMPTY_BINDINGS):
    return not variables_of(term, bindings)


def rename(term, mapping, index):
    # mapping is shared across one clause so its variables stay linked
    if isinstance(term, Var):
        renamed = mapping.get(term)
        if renamed is None:
            name = term.name if term.index == 0 else f"{term.name}_{term.index}"
            renamed = Var(name, index)
            mapping[term] = renamed
        return renamed
    if isinstance(term, Struct):
        return Struct(term.functor, tuple(rename(a, mapping, index) for a in term.args))
    if isinstance(term, PList):
        tail = None if term.tail is None else rename(term.tail, mapping, index)
        return PList(tuple(rename(i, mapping, index) for i in term.items), tail)
    return term


# *********************************************
# Time
# *********************************************
def time_value(term):
    if isinstance(term, TimePoint):
        return term.millis
    if isinstance(term, Num):
        return term.value
    raise TypeError(f"not a time point: {term!r}")


def is_time(term):
    return isinstance(term, (TimePoint, Num))


def _ordered(instance, attribute, value):
    if time_value(instance.start) > time_value(value):
        raise ValueError(f"interval ends before it starts: [{instance.start}, {value}]")


@attr.s(frozen=True, slots=True)
class TimeInterval:
    start = attr.ib()
    end = attr.ib(validator=_ordered)

    @classmethod
    def at(cls, point):
        return cls(point, point)

    @classmethod
    def from_term(cls, term):
        # a time point is the atomic interval [t,t]
        if is_time(term):
            return cls(term, term)
        if isinstance(term, PList) and term.tail is None and len(term.items) == 2:
            start, end = term.items
            if is_time(start) and is_time(end):
                return cls(start, end)
        return None

    def to_term(self):
        return PList((self.start, self.end))

    @property
    def bounds(self):
        return time_value(self.start), time_value(self.end)

    def is_atomic(self):
        return time_value(self.start) == time_value(self.end)


def interval_leq(i1, i2):
    # pointwise: [T11,T12] <= [T21,T22] iff T11 <= T21 and T12 <= T22
    s1, e1 = i1.bounds
    s2, e2 = i2.bounds
    return s1 <= s2 and e1 <= e2


def envelope(intervals):
    intervals = list(intervals)
    start = min(intervals, key=lambda i: time_value(i.start)).start
    end = max(intervals, key=lambda i: time_value(i.end)).end
    return TimeInterval(start, end)
