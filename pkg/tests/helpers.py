from reactor.parser import format_term, format_clause


def assert_terms_equal(found, expected, description):
    msg = f"Unequal Terms\nexpected: {format_term(expected)}\n....found: {format_term(found)}\n(case: {description})"
    assert found == expected, msg


def assert_solutions_equal(solutions, expected, description):
    # expected: one {name: formatted term} dict per solution, in order
    found = [
        {name: format_term(term) for name, term in solution.by_name().items()}
        for solution in solutions
    ]
    msg = f"Unequal Solutions\nexpected: {expected}\n....found: {found}\n(case: {description})"
    assert found == expected, msg


def assert_statuses(outcomes, expected, description):
    found = [outcome.status for outcome in outcomes]
    errors = [str(outcome.error) for outcome in outcomes if outcome.error is not None]
    msg = f"Unequal Statuses\nexpected: {expected}\n....found: {found}\n(errors: {errors})\n(case: {description})"
    assert found == expected, msg


def _formatted(snapshot):
    return [(format_term(oid), [format_clause(c) for c in clauses]) for oid, clauses in snapshot]


def assert_kb_equal(snapshot_a, snapshot_b, description):
    msg = f"Unequal Knowledge Bases\n1: {_formatted(snapshot_a)}\n2: {_formatted(snapshot_b)}\n(case: {description})"
    assert snapshot_a == snapshot_b, msg


def assert_intervals_equal(found, expected, description):
    # sets of (start, end) bounds
    msg = f"Unequal Intervals\nexpected: {sorted(expected)}\n....found: {sorted(found)}\n(case: {description})"
    assert set(found) == set(expected), msg
