description = "Messaging #1: fork into two branches, join on c and b"

# ********************************
# Program
# ********************************

given_program = """
process_join() :-
    iam(Me),
    init_join(XID, join_1, [c(_), b(_)]),
    fork_a_b(Me, XID).

fork_a_b(Me, XID) :-
    rcvMsg(XID, self, Me, reply, a(1)),
    fork_c_d(Me, XID).
fork_a_b(Me, XID) :-
    rcvMsg(XID, self, Me, reply, b(1)),
    join(Me, XID, join_1, b(1)).

fork_c_d(Me, XID) :-
    rcvMsg(XID, self, Me, reply, c(1)),
    join(Me, XID, join_1, c(1)).

join_1(Me, XID, Inputs) :-
    println(["Joined for XID=", XID, " with inputs: ", Inputs]).
"""

given_goal = "process_join()?"
given_xid = "reactor_x1"

# ********************************
# Reply Orders and Correct Output
# ********************************

given_orders = [
    ["a(1)", "b(1)", "c(1)"],
    ["b(1)", "a(1)", "c(1)"],
    ["a(1)", "c(1)", "b(1)"],
    ["b(1)"],
    ["a(1)", "c(1)"],
]

joined = ["Joined for XID=reactor_x1 with inputs: [c(1),b(1)]"]
correct_printed = [joined, joined, joined, [], []]
