description = "Messaging #2: a then (b, or c unless e) then d, with detection partitions"

# ********************************
# Program
# ********************************

given_program = """
rcvMsg(XID, Protocol, Sender, inform, a) :-
    partition_id(ID1), partition_id(ID2),
    detect_bc(XID, ID1, ID2),
    rcvMsg(XID, Protocol, Sender, inform, d),
    println(["detected ", XID]).

detect_bc(XID, ID1, ID2) :-
    rcvMsgP([ID1], [ID1], rcvMsg(XID, Protocol, Sender, inform, b)).
detect_bc(XID, ID1, ID2) :-
    rcvMsgP([ID1, ID2], [ID1], rcvMsg(XID, Protocol, Sender, inform, c)).
detect_bc(XID, ID1, ID2) :-
    rcvMsgP([ID1], [ID2], rcvMsg(XID, Protocol, Sender, inform, e)), fail().
"""

given_xid = "c1"
given_sender = "sensor"

# ********************************
# Event Sequences and Correct Output
# ********************************

given_sequences = ["aebd", "acd", "aec", "aecd", "abcd", "bd"]

correct_printed = [["detected c1"], ["detected c1"], [], [], ["detected c1"], []]

# payloads still awaited after each message of the first sequence
correct_waiting = [["b", "c", "e"], ["b"], ["d"], []]
