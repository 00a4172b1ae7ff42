# One engine per agent. Transports feed the inbound queue from any
# thread; a single dispatch loop drains it.
#
#   transports --> [ inbound queue ] --> dispatch(message)
#                                          |- temporal reactions (by seq)
#                                          '- global rcvMsg/5+ clauses
#
# Suspended receives are TemporalReactions indexed by conversation id,
# so a message only looks at the reactions waiting in its own
# conversation plus the ones waiting on any conversation.
import heapq
import itertools
import logging
import queue
import threading
from collections import defaultdict
import attr
from more_itertools import ilen
from settings import DEFAULT_AGENT_NAME
from reactor.errors import ReactorError
from reactor.clock import SystemClock
from reactor.terms import Const, PList, EMPTY_BINDINGS, apply
from reactor.solver.solver import Solver, SolverConfig
from reactor.solver.stubs import StubTable, TableRegistry
from reactor.messaging.reactions import (
    Message,
    TemporalReaction,
    PartitionRegistry,
    JoinRegistry,
)
from reactor.messaging.transports import TransportRegistry, might_print_message

logger = logging.getLogger("reactor.messaging")

POLL_SECONDS = 0.05


@attr.s(frozen=True, slots=True)
class DispatchError:
    message = attr.ib()
    # seq of the temporal reaction, or the rcvMsg clause that failed
    source = attr.ib()
    error = attr.ib()


class MessagingEngine:
    def __init__(
        self,
        kb,
        name=DEFAULT_AGENT_NAME,
        clock=None,
        stubs=None,
        tables=None,
        peers=None,
        solver_config=None,
        output=print,
    ):
        self.kb = kb
        self.name = name
        self.clock = clock or SystemClock()
        self.stubs = stubs or StubTable()
        self.tables = tables or TableRegistry()
        self.solver_config = solver_config or SolverConfig()
        self.output = output
        self.transports = TransportRegistry(self, peers)
        self.partitions = PartitionRegistry()
        self.joins = JoinRegistry()
        self.inbound = queue.Queue()
        self.sent = []
        self.errors = []
        self.printed = []
        self._seqs = itertools.count(1)
        self._xids = itertools.count(1)
        self._by_xid = defaultdict(dict)
        self._any_xid = {}
        self._partitioned = {}
        self._registry_lock = threading.RLock()
        self._stopping = threading.Event()
        self._thread = None

    def new_solver(self):
        solver = Solver(
            self.kb,
            self.solver_config,
            clock=self.clock,
            stubs=self.stubs,
            tables=self.tables,
            engine=self,
            output=self.output,
        )
        solver.printed = self.printed
        return solver

    def fresh_xid(self):
        return Const(f"{self.name}_x{next(self._xids)}")

    # ---------------------------
    # Temporal reactions
    # ---------------------------
    def suspend(self, pattern, continuation, bindings, multi=False, inbound=(), outbound=()):
        self.partitions.check_all(inbound)
        self.partitions.check_all(outbound)
        reaction = TemporalReaction(
            next(self._seqs),
            pattern,
            continuation,
            bindings,
            one_shot=not multi,
            inbound=inbound,
            outbound=outbound,
        )
        with self._registry_lock:
            self._bucket(reaction)[reaction.seq] = reaction
            if reaction.inbound:
                self._partitioned[reaction.seq] = reaction
        logger.debug("reaction %s waits for %s", reaction.seq, apply(bindings, pattern))
        return reaction

    def _bucket(self, reaction):
        xid = reaction.xid
        if xid is None:
            return self._any_xid
        return self._by_xid[apply(reaction.bindings, xid)]

    def _drop(self, reaction):
        with self._registry_lock:
            bucket = self._bucket(reaction)
            bucket.pop(reaction.seq, None)
            self._partitioned.pop(reaction.seq, None)
            if not bucket and bucket is not self._any_xid:
                del self._by_xid[apply(reaction.bindings, reaction.xid)]

    def _registered(self, reaction):
        return reaction.seq in self._bucket(reaction)

    def _prune(self):
        # a reaction behind an inactive inbound partition can never fire again
        for reaction in list(self._partitioned.values()):
            if not reaction.live(self.partitions):
                logger.debug("reaction %s removed, partition inactive", reaction.seq)
                self._drop(reaction)

    def _candidates(self, message):
        with self._registry_lock:
            own = list(self._by_xid.get(message.xid, {}).values())
            shared = list(self._any_xid.values())
        return list(heapq.merge(own, shared, key=lambda r: r.seq))

    def reactions(self):
        with self._registry_lock:
            waiting = list(self._any_xid.values())
            for bucket in self._by_xid.values():
                waiting.extend(bucket.values())
        return sorted(waiting, key=lambda r: r.seq)

    # ---------------------------
    # Partitions and joins
    # ---------------------------
    def init_join(self, xid, name, expected):
        self.joins.init(xid, name, expected)

    def join(self, me, xid, name, value):
        logger.debug("%s joins %s at %s", me, value, name)
        return self.joins.join(xid, name, value)

    # ---------------------------
    # Sending
    # ---------------------------
    def send(self, xid, protocol, agent, performative, payload, context=()):
        message = Message(
            xid,
            protocol,
            Const(self.name),
            agent,
            performative,
            payload,
            context,
            mode="outbound",
        )
        self.sent.append(message)
        return self.transports.deliver(message)

    def post(self, message):
        self.inbound.put(attr.evolve(message, mode="inbound"))

    # ---------------------------
    # Dispatch
    # ---------------------------
    def dispatch(self, message):
        """
        Returns how many reactions and global rules fired.
        Errors inside a continuation are logged and kept in self.errors.
        """
        might_print_message("received", message)
        fired = 0
        with self.kb.exclusive():
            for reaction in self._candidates(message):
                if not self._registered(reaction):
                    continue
                if not reaction.live(self.partitions):
                    self._drop(reaction)
                    continue
                bindings = reaction.match(message)
                if bindings is None:
                    continue
                if reaction.one_shot:
                    self._drop(reaction)
                for pid in reaction.outbound:
                    self.partitions.deactivate(pid)
                self._prune()
                fired += 1
                self._run(message, reaction.seq, lambda s: s.resume(reaction.continuation, bindings))
            fired += self._global_rules(message)
        logger.info("message %s fired %s reactions", message.xid, fired)
        return fired

    def _global_rules(self, message):
        fired = 0
        key = ("rcvMsg", 5 + len(message.context))
        for clause in self.kb.clauses_for(key):
            univ = isinstance(clause.head.args[4], PList)
            goal = message.as_term(univ=univ)
            if self._run(message, clause, lambda s: s.resolve_with(goal, [clause])):
                fired += 1
        return fired

    def _run(self, message, source, derive):
        try:
            return ilen(derive(self.new_solver()))
        except ReactorError as err:
            logger.error("reaction to %s failed: %s", message.xid, err)
            self.errors.append(DispatchError(message, source, err))
            return 0

    def run_until_idle(self, limit=None):
        dispatched = 0
        while limit is None or dispatched < limit:
            try:
                message = self.inbound.get_nowait()
            except queue.Empty:
                break
            self.dispatch(message)
            dispatched += 1
        return dispatched

    def run_goal(self, goals, bindings=EMPTY_BINDINGS):
        # solutions of goals run as one derivation of this engine
        with self.kb.exclusive():
            return list(self.new_solver().solve(goals, bindings))

    # ---------------------------
    # Dispatch loop
    # ---------------------------
    def _loop(self):
        while not self._stopping.is_set():
            try:
                message = self.inbound.get(timeout=POLL_SECONDS)
            except queue.Empty:
                continue
            self.dispatch(message)

    def start(self):
        self._stopping.clear()
        self._thread = threading.Thread(target=self._loop, name=f"{self.name}-dispatch", daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._stopping.set()
        if self._thread is not None:
            self._thread.join()
            self._thread = None
