from reactor.ruleml import InterfaceDecl

description = "RuleML #2: interface of add/3 with modes add(-,+,+)"

# ********************************
# Declaration
# ********************************

given_interface = InterfaceDecl(
    "add",
    [
        ("Result", "java:java.lang.Integer", "-"),
        ("Arg1", "java:java.lang.Integer", "+"),
        ("Arg2", "java:java.lang.Integer", "+"),
    ],
    "Adds two integer values and returns the integer result",
)

# ********************************
# Expected markup
# ********************************

correct_relation = "interface"
correct_function = "add"
correct_variables = [
    ("Result", {"type": "java:java.lang.Integer", "mode": "-"}),
    ("Arg1", {"type": "java:java.lang.Integer", "mode": "+"}),
    ("Arg2", {"type": "java:java.lang.Integer", "mode": "+"}),
]
correct_description = "Adds two integer values and returns the integer result"

# ********************************
# Untyped arguments default to mode ?
# ********************************

given_term = "interface(lookup(annotated(Key, [mode = \"+\"]), Value), 'Finds a value')"

correct_interface = InterfaceDecl(
    "lookup", [("Key", None, "+"), ("Value", None, "?")], "Finds a value"
)
