import os

# ***************************
# Settings
# ***************************

# ---------------------------
# Inference
# ---------------------------
# Unification refuses to bind X to a term containing X.
# Turning it off is faster but cyclic terms can no longer be formatted
OCCURS_CHECK = True

# Resolution depth at which a derivation is assumed not to terminate
MAX_DEPTH = 10_000

# Functors routed to the stub table instead of the knowledge base.
# Any functor containing a dot (ops.services.WebService.load) is a stub too
STUB_FUNCTORS = ("sendMessage", "fopen", "copy")

# Behaviour of a stub that the harness table does not mention
# one of "succeed", "fail"
STUB_DEFAULT = "succeed"

# ---------------------------
# Knowledge base
# ---------------------------
# What add/2 does when the oid is already live
# "error"   -> DuplicateOid
# "replace" -> remove the old module, then add
# "append"  -> add the clauses at the end of the live module
DUPLICATE_OID_POLICY = "error"

# Modules with these functors always append (event instance sequences)
APPEND_OID_FUNCTORS = ("eis",)

# Seconds before an http import gives up
IMPORT_TIMEOUT = 10

# ---------------------------
# ECA daemon
# ---------------------------
TICK_MILLIS = 100
# "sequential" or "parallel"
DAEMON_MODE = "sequential"
PARALLELISM = os.cpu_count() or 1

# ---------------------------
# Messaging
# ---------------------------
DEFAULT_AGENT_NAME = "reactor"
DEFAULT_PORT = 7050

# Protocol names from other buses that we carry over tcp
PROTOCOL_ALIASES = {
    "jms": "tcp",
    "http": "tcp",
    "soap": "tcp",
    "esb": "tcp",
    "jade": "tcp",
}

TCP_CONNECT_RETRIES = 3
TCP_RETRY_WAIT_MILLIS = 200
TCP_TIMEOUT = 5
# largest frame body a listener accepts, in bytes
TCP_MAX_FRAME = 1 << 20

# ---------------------------
# Diagnostics
# ---------------------------
# error | info | debug
LOG_LEVEL = os.environ.get("REACTOR_LOG", "error")

DEBUG_MODE = False
ASSERTION_ENABLED = False

PRINT_DERIVATION = False
PRINT_TRANSITIONS = False
PRINT_ECA_OUTCOMES = False
PRINT_MESSAGES = False
