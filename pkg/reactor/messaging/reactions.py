# Messages, the temporal reaction rules that suspended derivations
# leave behind, detection partitions and join barriers.
import itertools
import attr
from reactor.errors import UnknownPartition, UnknownBarrier, DuplicateArrival
from reactor.terms import Const, Struct, PList, unify, walk, is_ground, make_list

ACTIVE = "active"
INACTIVE = "inactive"


@attr.s(frozen=True, slots=True)
class Message:
    xid = attr.ib()
    protocol = attr.ib()
    sender = attr.ib()
    receiver = attr.ib()
    performative = attr.ib()
    payload = attr.ib()
    # the |Context tail, carried opaquely
    context = attr.ib(converter=tuple, default=())
    # inbound | outbound
    mode = attr.ib(default="inbound")

    def as_term(self, univ=False):
        """
        rcvMsg(XID, Protocol, From, Performative, Payload | Context)
        With univ=True a compound payload f(a,b) reads as [f,a,b].
        """
        payload = payload_univ(self.payload) if univ else self.payload
        args = (self.xid, Const(self.protocol), self.sender, self.performative, payload)
        return Struct("rcvMsg", args + self.context)


def payload_univ(payload):
    if isinstance(payload, Struct):
        return PList((Const(payload.functor),) + payload.args)
    if isinstance(payload, Const):
        return PList((payload,))
    return payload


def wants_univ(pattern, bindings):
    # an [Predicate|Args] payload pattern
    walked = walk(pattern, bindings)
    if isinstance(walked, Struct) and len(walked.args) >= 5:
        return isinstance(walk(walked.args[4], bindings), PList)
    return False


# *********************************************
# Temporal reaction rules
# *********************************************
@attr.s(frozen=True, slots=True)
class TemporalReaction:
    seq = attr.ib()
    pattern = attr.ib()
    # linked remaining goals of the suspended derivation
    continuation = attr.ib()
    bindings = attr.ib()
    one_shot = attr.ib(default=True)
    inbound = attr.ib(converter=tuple, default=())
    outbound = attr.ib(converter=tuple, default=())

    @property
    def xid(self):
        # the conversation this reaction waits in, None when any will do
        xid = walk(self.pattern.args[0], self.bindings)
        return xid if is_ground(xid, self.bindings) else None

    def live(self, partitions):
        return all(partitions.is_active(pid) for pid in self.inbound)

    def match(self, message):
        term = message.as_term(univ=wants_univ(self.pattern, self.bindings))
        return unify(self.pattern, term, self.bindings)


# *********************************************
# Partitions
# *********************************************
class PartitionRegistry:
    """
    active -> inactive, never back.
    """

    def __init__(self):
        self._states = {}
        self._ids = itertools.count(1)

    def fresh(self):
        pid = Struct("partition", (Const(f"p{next(self._ids)}"),))
        self._states[pid] = ACTIVE
        return pid

    def _check(self, pid):
        if pid not in self._states:
            raise UnknownPartition(pid)

    def check_all(self, pids):
        for pid in pids:
            self._check(pid)

    def is_active(self, pid):
        self._check(pid)
        return self._states[pid] == ACTIVE

    def deactivate(self, pid):
        self._check(pid)
        self._states[pid] = INACTIVE


# *********************************************
# Join barriers
# *********************************************
class JoinBarrier:
    def __init__(self, xid, name, expected):
        self.xid = xid
        self.name = name
        self.expected = list(expected)
        self.arrived = {}

    def arrive(self, value):
        """
        Fills the first open slot whose pattern matches value.
        Returns True when every slot is filled.
        """
        for i, pattern in enumerate(self.expected):
            if i not in self.arrived and unify(pattern, value) is not None:
                self.arrived[i] = value
                return self.complete
        for i, pattern in enumerate(self.expected):
            if unify(pattern, value) is not None:
                raise DuplicateArrival(pattern)
        return False

    @property
    def complete(self):
        return len(self.arrived) == len(self.expected)

    def inputs(self):
        return make_list([self.arrived[i] for i in range(len(self.expected))])


class JoinRegistry:
    def __init__(self):
        self._barriers = {}

    def init(self, xid, name, expected):
        self._barriers[(xid, name)] = JoinBarrier(xid, name, expected)

    def join(self, xid, name, value):
        # the inputs list once the barrier completes, else None
        barrier = self._barriers.get((xid, name))
        if barrier is None:
            raise UnknownBarrier(xid, name)
        if not barrier.arrive(value):
            return None
        del self._barriers[(xid, name)]
        return barrier.inputs()

    def __len__(self):
        return len(self._barriers)
