# The ECA daemon. Every tick it asks the knowledge base for
# eca(T,E,C,A,P,EL) and runs each answer as the query
#
#   T, E, ((C, A, P) ; EL)
#
# left to right. C, A and P share bindings and backtrack together,
# EL only runs when C, A, P has no solution at all.
#
#   eca/2  ->  (          C, A       )
#   eca/3  ->  (       E, C, A       )
#   eca/4  ->  (       E, C, A, P    )
#   eca/6  ->  (    T, E, C, A, P, EL)
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
import attr
from settings import TICK_MILLIS, DAEMON_MODE, PARALLELISM, PRINT_ECA_OUTCOMES
from reactor.errors import ReactorError, MalformedEca
from reactor.parser import format_term
from reactor.terms import Var, Struct, PList, TRUE, apply, fresh_index
from reactor.solver.solver import Solver, Mark

logger = logging.getLogger("reactor.eca")

SLOTS = {
    2: ("condition", "action"),
    3: ("event", "condition", "action"),
    4: ("event", "condition", "action", "post"),
    6: ("time", "event", "condition", "action", "post", "else_"),
}

FIRED = "fired"
ELSE_FIRED = "else_fired"
TIME_SKIP = "time_skip"
EVENT_SKIP = "event_skip"
FAILED = "failed"


@attr.s(frozen=True, slots=True)
class EcaRule:
    time = attr.ib(default=TRUE)
    event = attr.ib(default=TRUE)
    condition = attr.ib(default=TRUE)
    action = attr.ib(default=TRUE)
    post = attr.ib(default=TRUE)
    else_ = attr.ib(default=TRUE)
    source_oid = attr.ib(default=None)
    rule_id = attr.ib(default=None)
    # (module oid, clause index in the module, solution index)
    site = attr.ib(default=None, eq=False)

    @property
    def has_else(self):
        return self.else_ != TRUE

    def parts(self):
        return (self.time, self.event, self.condition, self.action, self.post, self.else_)


@attr.s(frozen=True, slots=True)
class EcaOutcome:
    rule_id = attr.ib()
    status = attr.ib()
    # one name -> term dict per solution
    bindings = attr.ib(converter=tuple, default=())
    transitions = attr.ib(converter=tuple, default=())
    error = attr.ib(default=None)


def _positive(instance, attribute, value):
    if value <= 0:
        raise ValueError(f"{attribute.name} must be positive, got {value}")


@attr.s(frozen=True, slots=True)
class DaemonConfig:
    tick_millis = attr.ib(default=TICK_MILLIS, validator=_positive)
    parallelism = attr.ib(default=PARALLELISM, validator=_positive)
    mode = attr.ib(default=DAEMON_MODE, validator=attr.validators.in_(("sequential", "parallel")))


# *********************************************
# Collection
# *********************************************
def _canonical(parts):
    # stable variable names so that collecting twice gives equal rules
    mapping, used = {}, set()

    def rename(term):
        if isinstance(term, Var):
            if term not in mapping:
                name = term.name
                while name in used:
                    name = f"{term.name}_{len(used)}"
                used.add(name)
                mapping[term] = Var(name)
            return mapping[term]
        if isinstance(term, Struct):
            return Struct(term.functor, tuple(rename(a) for a in term.args))
        if isinstance(term, PList):
            tail = None if term.tail is None else rename(term.tail)
            return PList(tuple(rename(i) for i in term.items), tail)
        return term

    return [TRUE if isinstance(part, Var) else rename(part) for part in parts]


def normalize_eca(args, source_oid=None, rule_id=None, site=None):
    slots = SLOTS.get(len(args))
    if slots is None:
        raise MalformedEca(len(args))
    return EcaRule(**dict(zip(slots, _canonical(args))), source_oid=source_oid, rule_id=rule_id, site=site)


def collect_eca_rules(kb, solver=None):
    """
    Every answer to the universal eca query, in knowledge base clause
    order. A clause with a body contributes one rule per solution.
    """
    solver = solver or kb.new_solver()
    rules = []
    for oid, clauses in kb.snapshot():
        for position, clause in enumerate(clauses):
            functor, arity = clause.key
            if functor != "eca":
                continue
            if arity not in SLOTS:
                raise MalformedEca(arity)
            index = fresh_index()
            query = Struct("eca", tuple(Var(f"Part{i}", index) for i in range(arity)))
            for k, solution in enumerate(solver.resolve_with(query, [clause])):
                rule_id = f"eca/{arity}#{len(rules) + 1}"
                args = [apply(solution.bindings, a) for a in query.args]
                rules.append(normalize_eca(args, oid, rule_id, (oid, position, k)))
    return rules


# *********************************************
# Evaluation
# *********************************************
def _goals(rule):
    # no implicit cut: the action runs once for every condition solution
    goals = [rule.time, Mark("time"), rule.event, Mark("event")]
    main = Struct(",", (rule.condition, Struct(",", (rule.action, rule.post))))
    if rule.has_else:
        # '$else' marks "fired" itself when main succeeds
        goals.append(Struct("$else", (main, rule.else_)))
    else:
        goals.extend([rule.condition, rule.action, rule.post, Mark(FIRED)])
    return goals


def evaluate_eca(rule, kb, solver=None):
    solver = solver or kb.new_solver()
    solver.marks = set()
    marker = kb.checkpoint()
    try:
        solutions = list(solver.solve(_goals(rule)))
    except ReactorError as err:
        kb.rollback_to(marker, strict=False)
        logger.error("%s raised %s", rule.rule_id, err)
        return EcaOutcome(rule.rule_id, FAILED, error=err)

    if solutions:
        status = FIRED if FIRED in solver.marks else ELSE_FIRED
        transitions = kb.transition_log[marker.position:]
        return EcaOutcome(rule.rule_id, status, [s.by_name() for s in solutions], transitions)

    kb.rollback_to(marker, strict=False)
    if "event" in solver.marks:
        status = FAILED
    elif "time" in solver.marks:
        status = EVENT_SKIP
    else:
        status = TIME_SKIP
    return EcaOutcome(rule.rule_id, status)


# *********************************************
# Daemon
# *********************************************
class EcaDaemon:
    """
    step() runs one tick synchronously: collect, then evaluate every
    rule in clause order (sequential) or on a thread pool over forks
    of the knowledge base whose transitions are merged back in rule
    order (parallel). start() does the same every tick_millis.
    """

    def __init__(self, kb, config=None, clock=None, observer=None, solver_factory=None):
        self.kb = kb
        self.config = config or DaemonConfig()
        self.clock = clock
        self.observer = observer
        # (kb, interval_state) -> Solver
        self.solver_factory = solver_factory or self._default_solver
        self.ticks = 0
        self._interval_states = {}
        self._stopping = threading.Event()
        self._thread = None

    def _default_solver(self, kb, interval_state):
        return Solver(kb, clock=self.clock, interval_state=interval_state)

    def _state_for(self, rule):
        # keyed by where the rule is written, not by its rank in the tick
        return self._interval_states.setdefault(rule.site or rule.rule_id, {})

    def step(self):
        self.ticks += 1
        if self.config.mode == "parallel":
            outcomes = self._parallel_tick()
        else:
            outcomes = self._sequential_tick()
        for outcome in outcomes:
            might_print_outcome(outcome)
            if self.observer is not None:
                self.observer(outcome)
        return outcomes

    def _collect(self):
        try:
            return collect_eca_rules(self.kb, self.solver_factory(self.kb, {}))
        except ReactorError as err:
            logger.error("tick %s could not collect eca rules: %s", self.ticks, err)
            return []

    def _sequential_tick(self):
        outcomes = []
        with self.kb.exclusive():
            for rule in self._collect():
                solver = self.solver_factory(self.kb, self._state_for(rule))
                outcomes.append(evaluate_eca(rule, self.kb, solver))
        return outcomes

    def _evaluate_forked(self, rule, forked):
        solver = self.solver_factory(forked, self._state_for(rule))
        return evaluate_eca(rule, forked, solver)

    def _parallel_tick(self):
        with self.kb.exclusive():
            rules = self._collect()
            forks = [self.kb.fork() for _ in rules]
        with ThreadPoolExecutor(max_workers=self.config.parallelism) as pool:
            outcomes = list(pool.map(self._evaluate_forked, rules, forks))
        merged = []
        with self.kb.exclusive():
            for outcome in outcomes:
                if outcome.transitions:
                    try:
                        transitions = self.kb.merge(outcome.transitions)
                    except ReactorError as err:
                        logger.error("%s could not be merged: %s", outcome.rule_id, err)
                        outcome = EcaOutcome(outcome.rule_id, FAILED, error=err)
                    else:
                        outcome = attr.evolve(outcome, transitions=transitions)
                merged.append(outcome)
        return merged

    # ---------------------------
    # Background loop
    # ---------------------------
    def _loop(self):
        while not self._stopping.wait(self.config.tick_millis / 1000):
            self.step()

    def start(self):
        self._stopping.clear()
        self._thread = threading.Thread(target=self._loop, name="eca-daemon", daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._stopping.set()
        if self._thread is not None:
            self._thread.join()
            self._thread = None

    @property
    def running(self):
        return self._thread is not None


def format_outcome(outcome):
    line = f"{outcome.rule_id} {outcome.status}"
    for bindings in outcome.bindings:
        pairs = ", ".join(f"{name}={format_term(term)}" for name, term in bindings.items())
        if pairs:
            line += f" [{pairs}]"
    if outcome.error is not None:
        line += f" error: {outcome.error}"
    return line


def might_print_outcome(outcome):
    if not PRINT_ECA_OUTCOMES:
        return

    print("*****************************")
    print(format_outcome(outcome))
    for record in outcome.transitions:
        print(f"...{record.polarity} {format_term(record.oid)}")
    print("*****************************")
