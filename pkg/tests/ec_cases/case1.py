description = "Event Calculus #1: interval between two occurrences"

# ********************************
# Program
# ********************************

given_program = """
occurs(a, datetime(2005,1,1,0,0,1)).
occurs(b, datetime(2005,1,1,0,0,10)).
"""

# ********************************
# Queries and Correct Answers
# ********************************

given_queries = [
    "holdsInterval([a,b], Interval)?",
    "holdsInterval([a,a], Interval)?",
    "holdsInterval([b,a], Interval)?",
]

correct_solutions = [
    [{"Interval": "[datetime(2005,1,1,0,0,1),datetime(2005,1,1,0,0,10)]"}],
    [{"Interval": "[datetime(2005,1,1,0,0,1),datetime(2005,1,1,0,0,1)]"}],
    [],
]
