import random
from datetime import datetime, timezone
import pytest
from reactor.parser import parse_term
from reactor.terms import (
    Var,
    Const,
    Num,
    TimePoint,
    Struct,
    PList,
    Bindings,
    EMPTY_BINDINGS,
    TimeInterval,
    unify,
    apply,
    is_ground,
    variables_of,
    interval_leq,
    envelope,
    numbers_equal,
)
from tests.generators import random_term
from tests.helpers import assert_terms_equal

X, Y = Var("X"), Var("Y")


def test_unify_most_general():
    b = unify(parse_term("f(X,b)"), parse_term("f(a,Y)"))
    assert b is not None
    assert apply(b, X) == Const("a")
    assert apply(b, Y) == Const("b")


def test_unify_identity_and_occurs_check():
    assert len(unify(X, X)) == 0
    assert unify(X, Struct("f", (X,))) is None
    assert unify(X, Struct("f", (X,)), occurs_check=False) is not None


def test_unify_lists_with_tails():
    b = unify(parse_term("[H|T]"), parse_term("[1,2,3]"))
    assert apply(b, Var("H")) == Num(1)
    assert apply(b, Var("T")) == PList((Num(2), Num(3)))
    assert unify(parse_term("[a,b]"), parse_term("[a]")) is None


def test_unify_time_point_with_datetime_pattern():
    stored = TimePoint.from_fields(2005, 1, 1, 0, 0, 1)
    pattern = Struct("datetime", [Num(2005), Num(1), Num(1), Var("H"), Num(0), Var("S")])
    b = unify(stored, pattern)
    assert apply(b, Var("S")) == Num(1)
    assert apply(b, Var("H")) == Num(0)


def test_datetime_pattern_ignores_millis():
    stored = TimePoint(1704103200250)
    pattern = parse_term("datetime(Y,M,D,H,Mi,S)")
    b = unify(pattern, stored)
    assert b is not None
    fields = [apply(b, Var(name)) for name in ("Y", "M", "D", "H", "Mi", "S")]
    assert fields == [Num(2024), Num(1), Num(1), Num(10), Num(0), Num(0)]

    with_millis = Struct("datetime", [Var("Y"), Num(1), Num(1), Num(10), Num(0), Num(0), Var("Ms")])
    b = unify(stored, with_millis)
    assert apply(b, Var("Ms")) == Num(250)
    assert unify(TimePoint(1704103200000), with_millis) is not None


def test_numbers_equal_tolerance():
    assert numbers_equal(0.1 + 0.2, 0.3)
    assert not numbers_equal(1, 2)
    assert unify(Num(0.1 + 0.2), Num(0.3)) is not None


def test_apply():
    b = EMPTY_BINDINGS.bind(X, Const("a"))
    assert_terms_equal(apply(b, parse_term("g(X,Y)")), parse_term("g(a,Y)"), "apply one")
    assert apply(EMPTY_BINDINGS, parse_term("g(X,Y)")) == parse_term("g(X,Y)")

    chained = Bindings({X: Struct("f", (Y,)), Y: Const("b")})
    assert_terms_equal(apply(chained, X), parse_term("f(b)"), "apply transitively")
    assert apply(chained, apply(chained, X)) == apply(chained, X)


def test_variables_and_ground():
    term = parse_term("f(X, g(Y, X), [Z])")
    assert [v.name for v in variables_of(term)] == ["X", "Y", "Z"]
    assert not is_ground(term)
    assert is_ground(parse_term("f(a, [1, \"s\"])"))


def test_unify_properties_on_random_terms():
    rng = random.Random(7)
    for _ in range(500):
        t1 = random_term(rng, variables=True)
        t2 = random_term(rng, variables=True)
        forward = unify(t1, t2)
        backward = unify(t2, t1)
        assert (forward is None) == (backward is None), (t1, t2)
        if forward is not None:
            assert apply(forward, t1) == apply(forward, t2)


# *********************************************
# Time
# *********************************************
def test_time_point_fields_round_trip():
    rng = random.Random(11)
    for _ in range(300):
        fields = (
            rng.randint(1971, 2037),
            rng.randint(1, 12),
            rng.randint(1, 28),
            rng.randint(0, 23),
            rng.randint(0, 59),
            rng.randint(0, 59),
        )
        point = TimePoint.from_fields(*fields)
        assert point.fields() == (fields, 0)
        assert TimePoint.from_datetime(point.to_datetime()) == point


def test_time_point_rejects_bad_dates():
    with pytest.raises(ValueError):
        TimePoint.from_fields(2005, 2, 30)


def test_time_point_from_naive_datetime_is_utc():
    naive = datetime(2005, 1, 1, 0, 0, 1)
    aware = datetime(2005, 1, 1, 0, 0, 1, tzinfo=timezone.utc)
    assert TimePoint.from_datetime(naive) == TimePoint.from_datetime(aware)


def test_interval_leq():
    def interval(s, e):
        return TimeInterval(Num(s), Num(e))

    assert interval_leq(interval(1, 1), interval(10, 10))
    assert interval_leq(interval(3, 3), interval(3, 3))
    assert not interval_leq(interval(1, 5), interval(3, 4))
    with pytest.raises(ValueError):
        interval(5, 1)


def test_interval_leq_is_reflexive_and_transitive():
    rng = random.Random(3)

    def random_interval():
        s = rng.randint(0, 20)
        return TimeInterval(Num(s), Num(s + rng.randint(0, 10)))

    intervals = [random_interval() for _ in range(40)]
    for i in intervals:
        assert interval_leq(i, i)
    for i1 in intervals:
        for i2 in intervals:
            for i3 in intervals:
                if interval_leq(i1, i2) and interval_leq(i2, i3):
                    assert interval_leq(i1, i3)


def test_interval_from_term_and_envelope():
    t1 = TimePoint.from_fields(2005, 1, 1, 0, 0, 1)
    t10 = TimePoint.from_fields(2005, 1, 1, 0, 0, 10)
    assert TimeInterval.from_term(t1).is_atomic()
    assert TimeInterval.from_term(PList((t1, t10))) == TimeInterval(t1, t10)
    assert TimeInterval.from_term(Const("a")) is None
    assert envelope([TimeInterval.at(t10), TimeInterval.at(t1)]) == TimeInterval(t1, t10)
