from settings import PRINT_DERIVATION
from reactor.parser import format_term
from reactor.terms import apply

INSTANTIATION_ALERT_MSG = "Arguments are not sufficiently instantiated"


def might_print_goal(frame, goal, bindings):
    if not PRINT_DERIVATION:
        return

    indent = "  " * min(frame.depth, 40)
    print(f"{indent}call {frame.depth}: {format_term(apply(bindings, goal))}")


def might_print_solution(solution):
    if not PRINT_DERIVATION:
        return

    print("█████████████████████████████")
    print("█ SOLUTION                  █")
    print("█████████████████████████████")
    for name, term in solution.by_name().items():
        print(f"...{name} = {format_term(term)}")
    if solution.suspended:
        print("...(suspended on receive)")
    for record in solution.side_effect_log:
        print(f"...transition #{record.seq} {record.polarity} {format_term(record.oid)}")
