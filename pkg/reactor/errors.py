# Every error the engine raises derives from ReactorError.
# Logical failure is never an exception, only an empty stream.


class ReactorError(Exception):
    pass


# ---------------------------
# Parsing
# ---------------------------
class ReactorSyntaxError(ReactorError):
    def __init__(self, line, col, expected, text=""):
        self.line = line
        self.col = col
        self.expected = expected
        super().__init__(syntax_alert_msg(line, col, expected, text))


def syntax_alert_msg(line, col, expected, text=""):
    msg = f"Syntax error at line {line}, column {col}: expected {expected}"
    if text:
        msg += f"\n  {text}\n  {' ' * (col - 1)}^"
    return msg


# ---------------------------
# Inference
# ---------------------------
class DepthExceeded(ReactorError):
    def __init__(self, max_depth):
        self.max_depth = max_depth
        super().__init__(
            f"Derivation deeper than {max_depth} goals.\nProbably a non-terminating rule."
        )


class FlounderingNaf(ReactorError):
    def __init__(self, goal):
        self.goal = goal
        super().__init__(f"not/1 called on a non-ground goal: {goal}")


class UnknownBuiltin(ReactorError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"No builtin registered for {key[0]}/{key[1]}")


class BuiltinTypeError(ReactorError):
    def __init__(self, expected, got, where=""):
        self.expected = expected
        self.got = got
        msg = f"Expected {expected}, got {got}"
        if where:
            msg = f"{where}: {msg}"
        super().__init__(msg)


class StubRaised(ReactorError):
    def __init__(self, functor, exception=None):
        self.functor = functor
        self.exception = exception
        super().__init__(f"External call {functor} raised {exception or 'an exception'}")


# ---------------------------
# Knowledge base
# ---------------------------
class DuplicateOid(ReactorError):
    def __init__(self, oid):
        self.oid = oid
        super().__init__(f"Module {oid} is already live")


class UnknownOid(ReactorError):
    def __init__(self, oid):
        self.oid = oid
        super().__init__(f"No live module {oid}")


class StaleMarker(ReactorError):
    def __init__(self, marker, reason):
        self.marker = marker
        super().__init__(f"Cannot roll back to {marker}: {reason}")


class NotFound(ReactorError):
    def __init__(self, locator):
        self.locator = locator
        super().__init__(f"Module source not found: {locator}")


class FetchError(ReactorError):
    def __init__(self, locator, detail):
        self.locator = locator
        self.detail = detail
        super().__init__(f"Could not fetch {locator}: {detail}")


# ---------------------------
# Events and rules
# ---------------------------
class NonGroundEvent(ReactorError):
    def __init__(self, event):
        self.event = event
        super().__init__(f"Event occurrences must be ground: {event}")


class MalformedExpr(ReactorError):
    def __init__(self, expr, problem):
        self.expr = expr
        super().__init__(f"Malformed event expression {expr}: {problem}")


class MalformedEca(ReactorError):
    def __init__(self, arity):
        self.arity = arity
        super().__init__(f"eca/{arity} is not a reaction rule (use arity 2, 3, 4 or 6)")


# ---------------------------
# Messaging
# ---------------------------
class UnknownProtocol(ReactorError):
    def __init__(self, protocol):
        self.protocol = protocol
        super().__init__(f"No transport registered for protocol {protocol}")


class UnresolvableAgent(ReactorError):
    def __init__(self, agent, protocol):
        self.agent = agent
        super().__init__(f"Cannot resolve agent {agent} over {protocol}")


class TransportError(ReactorError):
    def __init__(self, detail):
        self.detail = detail
        super().__init__(f"Transport failure: {detail}")


class UnknownPartition(ReactorError):
    def __init__(self, partition):
        self.partition = partition
        super().__init__(f"Unknown partition {partition}")


class UnknownBarrier(ReactorError):
    def __init__(self, xid, name):
        super().__init__(f"No join barrier {name} for conversation {xid}")


class DuplicateArrival(ReactorError):
    def __init__(self, pattern):
        self.pattern = pattern
        super().__init__(f"Join slot {pattern} already filled")


# ---------------------------
# Interchange
# ---------------------------
class Unserializable(ReactorError):
    def __init__(self, term):
        self.term = term
        super().__init__(f"Cannot serialize {term}: host attachments have no markup")


class MalformedXml(ReactorError):
    def __init__(self, position, detail=""):
        self.position = position
        super().__init__(f"Malformed XML at {position} {detail}".strip())


class RuleMLImportError(ReactorError):
    def __init__(self, elements):
        self.elements = sorted(set(elements))
        super().__init__(f"Unsupported elements: {', '.join(self.elements)}")


# ---------------------------
# Configuration
# ---------------------------
class ConfigError(ReactorError):
    def __init__(self, source, detail):
        self.source = source
        super().__init__(f"Bad configuration in {source}: {detail}")
