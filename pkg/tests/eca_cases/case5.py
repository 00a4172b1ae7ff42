from tests.eca_cases.service_program import program

description = "ECA #5: no server accepts the service, the customer is told"
given_program = program
given_start = (2005, 1, 1, 0, 0, 5)

# ********************************
# Environment
# ********************************

given_stubs = {"ops.services.WebService.load": "fail"}
given_tables = {}

# ********************************
# Ticks
# ********************************

given_advances = [0]

correct_statuses = ["else_fired"]
correct_bindings = {"Customer": "alice", "Service": "mail"}
correct_calls = {
    "ops.services.WebService.load": [("s1", "mail"), ("s2", "mail")],
    "sendMessage": [("alice", '"Service request temporarily rejected"')],
}
correct_printed = []
