import pytest
from reactor import event_calculus as ec
from reactor.errors import NonGroundEvent, MalformedExpr, BuiltinTypeError
from reactor.kb import KnowledgeBase
from reactor.parser import Clause, parse_program, parse_query, parse_term
from reactor.solver.solver import Solver
from reactor.terms import Const, Num, Struct, PList, TimeInterval
from tests.ec_cases import case1, case2, case3, case4
from tests.helpers import assert_solutions_equal, assert_intervals_equal
from tests.oracles import detections, snoop_detection_times, all_eis

EXPRESSIONS = [
    "sequence(a,b)",
    "sequence(a,b,c)",
    "sequence(b,sequence(a,c))",
    "or(a,b)",
    "xor(a,b)",
    "and(a,b)",
    "and(a,b,c)",
    "concurrent(a,b)",
    "any(2,a)",
    "neg([c],[a,b])",
    "aperiodic(c,[a,b])",
]


def solver_for(text):
    kb = KnowledgeBase()
    kb.add_module(Const("main"), parse_program(text))
    return Solver(kb)


def solver_over(occs):
    # occs: [(type, t), ...]
    kb = KnowledgeBase()
    facts = [Clause(Struct("occurs", (Const(typ), Num(t)))) for typ, t in occs]
    kb.add_module(Const("main"), facts)
    return Solver(kb)


def detected(solver, expr):
    return {d.interval.bounds for d in ec.detect(solver, parse_term(expr))}


def test_sample_event_calculus_queries():
    for case in [case1, case2, case3, case4]:
        solver = solver_for(case.given_program)
        for query, correct in zip(case.given_queries, case.correct_solutions):
            found = solver.solve_all(parse_query(query))
            assert_solutions_equal(found, correct, f"{case.description}: {query}")


def test_holds_at_needs_a_bound_time():
    solver = solver_for(case4.given_program)
    with pytest.raises(BuiltinTypeError):
        solver.solve_all(parse_query("holdsAt(status(s1,unloaded), T)?"))


# *********************************************
# Occurrences and consumption
# *********************************************
def test_record_occurrence():
    kb = KnowledgeBase()
    ec.record_occurrence(kb, Const("a"), 1)
    ec.record_occurrence(kb, parse_term("a"), TimeInterval(Num(2), Num(4)))
    key = parse_term("eis(a)")
    assert kb.module(key) == parse_program("occurs(a, 1). occurs(a, [2,4]).").clauses

    occs = ec.occurrences(Solver(kb))
    assert [o.interval.bounds for o in occs] == [(1, 1), (2, 4)]
    with pytest.raises(NonGroundEvent):
        ec.record_occurrence(kb, parse_term("a(X)"), 5)


@pytest.mark.parametrize(
    "policy, remaining",
    [("all", None), ("first", "occurs(a, 2). occurs(a, 3)."), ("last", "occurs(a, 1). occurs(a, 2).")],
)
def test_consume_policies(policy, remaining):
    kb = KnowledgeBase()
    key = parse_term("eis(a)")
    for t in (2, 1, 3):
        ec.record_occurrence(kb, Const("a"), t)
    ec.consume(kb, key, policy)
    if remaining is None:
        assert key not in kb
    else:
        assert sorted(kb.module(key), key=str) == sorted(parse_program(remaining).clauses, key=str)


def test_consume_unknown_key_and_bad_policy():
    kb = KnowledgeBase()
    ec.record_occurrence(kb, Const("a"), 1)
    before = kb.snapshot()
    assert ec.consume(kb, parse_term("eis(zz)")) is None
    assert kb.snapshot() == before
    with pytest.raises(BuiltinTypeError):
        ec.consume(kb, parse_term("eis(a)"), "middle")


def test_consume_event_in_any_module():
    kb = KnowledgeBase()
    kb.add_module(Const("main"), "occurs(a(1), 1). occurs(b(1), 2). other(1).")
    ec.consume_event(kb, parse_term("a(X)"))
    assert kb.module(Const("main")) == parse_program("occurs(b(1), 2). other(1).").clauses


# *********************************************
# Event algebra
# *********************************************
def test_interval_semantics_differs_from_point_semantics():
    expr = "sequence(b,sequence(a,c))"
    b_first = [("b", 1), ("a", 2), ("c", 3)]
    a_first = [("a", 1), ("b", 2), ("c", 3)]

    assert detected(solver_over(b_first), expr) == {(1, 3)}
    assert detected(solver_over(a_first), expr) == set()
    # a purely point-based algebra cannot tell them apart
    assert snoop_detection_times(parse_term(expr), b_first) == {3}
    assert snoop_detection_times(parse_term(expr), a_first) == {3}


def test_detection_agrees_with_oracle():
    for occs in all_eis():
        solver = solver_over(occs)
        for expr in EXPRESSIONS:
            expected = detections(parse_term(expr), occs)
            assert_intervals_equal(detected(solver, expr), expected, f"{expr} over {occs}")


def test_detection_binds_event_arguments():
    solver = solver_for(
        """
        occurs(request(alice), 1).
        occurs(confirm(alice), 3).
        occurs(confirm(bob), 4).
        """
    )
    found = solver.solve_all(parse_query("event(sequence(request(U), confirm(U)), T)?"))
    assert_solutions_equal(found, [{"U": "alice", "T": "[1,3]"}], "bound sequence")


def test_any_and_or_queries():
    solver = solver_for("occurs(a, 1). occurs(b, 2). occurs(a, 5).")
    found = solver.solve_all(parse_query("event(any(2, a), T)?"))
    assert_solutions_equal(found, [{"T": "[1,5]"}], "any")
    found = solver.solve_all(parse_query("event(or(a, b), T)?"))
    assert [s["T"] for s in found] == [
        PList((Num(1), Num(1))),
        PList((Num(5), Num(5))),
        PList((Num(2), Num(2))),
    ]


def test_complex_event_feeds_back_into_the_kb():
    kb = KnowledgeBase()
    kb.add_module(
        Const("main"),
        'detect(e,T) :- event(sequence(a,b),T), add(eis(e),"occurs(e,_0).",[T]), '
        "consume(eis(a)), consume(eis(b)).",
    )
    ec.record_occurrence(kb, Const("a"), 1)
    ec.record_occurrence(kb, Const("b"), 2)
    solver = Solver(kb)

    assert_solutions_equal(solver.solve_all(parse_query("detect(e,T)?")), [{"T": "[1,2]"}], "detect")
    assert parse_term("eis(a)") not in kb
    assert parse_term("eis(b)") not in kb
    assert_solutions_equal(solver.solve_all(parse_query("event(e,I)?")), [{"I": "[1,2]"}], "re-entry")
    # the constituents were consumed
    assert solver.solve_all(parse_query("detect(e,T)?")) == []


@pytest.mark.parametrize(
    "expr",
    ["periodic(a, '1S', b)", "sequence(a)", "neg(c, [a,b])", "any(0, a)", "aperiodic(c, [a])"],
)
def test_malformed_expressions(expr):
    solver = solver_over([("a", 1)])
    with pytest.raises(MalformedExpr):
        list(ec.detect(solver, parse_term(expr)))
