import logging
from pathlib import Path
from more_itertools import first
from reactor.clock import SystemClock
from reactor.config import NodeConfig
from reactor.eca import EcaDaemon, DaemonConfig
from reactor.kb import KnowledgeBase
from reactor.messaging.engine import MessagingEngine
from reactor.messaging.transports import TcpListener
from reactor.parser import parse_program, parse_query
from reactor.solver.solver import Solver
from reactor.terms import Const

logger = logging.getLogger("reactor.app")


class ReactorApp:
    """
    One node: a knowledge base, the messaging engine that owns the
    inbound queue, the ECA daemon, and optionally a tcp listener.
    Every solver the node builds shares the clock, stub table,
    SQL tables and engine.
    """

    def __init__(self, config=None, clock=None, daemon_config=None, observer=None, output=print):
        self.config = config or NodeConfig()
        self.clock = clock or SystemClock()
        self.output = output
        self.kb = KnowledgeBase()
        self.stubs = self.config.stub_table()
        self.tables = self.config.table_registry()
        self.engine = MessagingEngine(
            self.kb,
            self.config.name,
            clock=self.clock,
            stubs=self.stubs,
            tables=self.tables,
            peers=self.config.peers,
            output=output,
        )
        self.kb.solver_factory = self.new_solver
        self.daemon = EcaDaemon(
            self.kb,
            daemon_config or DaemonConfig(),
            clock=self.clock,
            observer=observer,
            solver_factory=self.new_solver,
        )
        self.listener = None

    @property
    def printed(self):
        return self.engine.printed

    def new_solver(self, kb=None, interval_state=None):
        solver = Solver(
            kb or self.kb,
            self.engine.solver_config,
            clock=self.clock,
            stubs=self.stubs,
            tables=self.tables,
            engine=self.engine,
            interval_state=interval_state,
            output=self.output,
        )
        solver.printed = self.engine.printed
        return solver

    # ---------------------------
    # Loading
    # ---------------------------
    def load_text(self, text, oid):
        oid = Const(oid) if isinstance(oid, str) else oid
        return self.kb.add_module(oid, parse_program(text, oid))

    def load(self, paths):
        for path in paths:
            path = Path(path)
            if self.kb.base_dir is None:
                self.kb.base_dir = path.parent
            self.load_text(path.read_text(encoding="utf-8"), str(path))
            logger.info("loaded %s", path)

    # ---------------------------
    # Running
    # ---------------------------
    def query(self, text, all_solutions=False):
        goals = parse_query(text)
        with self.kb.exclusive():
            solutions = self.new_solver().solve(goals)
            if all_solutions:
                return list(solutions)
            found = first(solutions, None)
            return [] if found is None else [found]

    def settle(self):
        # dispatch whatever the last derivations sent to ourselves
        return self.engine.run_until_idle()

    def step(self, ticks=1):
        outcomes = []
        for _ in range(ticks):
            outcomes.extend(self.daemon.step())
            self.settle()
        return outcomes

    def listen(self, port=None, host="127.0.0.1"):
        port = self.config.port if port is None else port
        self.listener = TcpListener(self.engine, host, port).start()
        return self.listener.address

    def start(self):
        self.engine.start()
        self.daemon.start()
        return self

    def stop(self):
        self.daemon.stop()
        self.engine.stop()
        if self.listener is not None:
            self.listener.stop()
            self.listener = None
