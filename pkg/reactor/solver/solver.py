# SLDNF resolution as an explicit machine.
#
# A state is (goals, bindings). goals is a linked list of Frames,
# (frame, rest) ... None, so a captured continuation is just a pointer.
# Choice points live on a stack; backtracking pops until one of them
# produces a new state.
#
#   stack:  [Alternatives(p/1 clauses)] [Undo(marker)] [Alternatives(q/2)]
#                ^ barrier of p's body     ^ survives cuts
#
# A cut drops every choice point above the barrier of its clause
# except Undo points, which still have KB transitions to invert.
import logging
import attr
from settings import MAX_DEPTH, OCCURS_CHECK, DEFAULT_AGENT_NAME
from reactor.errors import (
    DepthExceeded,
    FlounderingNaf,
    UnknownBuiltin,
    BuiltinTypeError,
    StubRaised,
    TransportError,
)
from reactor.parser import format_term
from reactor.terms import (
    Var,
    Const,
    Struct,
    PList,
    EMPTY_BINDINGS,
    unify,
    apply,
    walk,
    rename,
    fresh_index,
    variables_of,
    is_ground,
    make_struct,
    term_key,
    flatten_list,
)
from reactor.clock import SystemClock
from reactor.solver.builtins import BUILTINS
from reactor.solver.stubs import StubTable, TableRegistry, is_stub_functor
from reactor.solver.helpers import might_print_goal, might_print_solution

logger = logging.getLogger("reactor.solver")


def _positive(instance, attribute, value):
    if value <= 0:
        raise ValueError(f"{attribute.name} must be positive, got {value}")


@attr.s(frozen=True, slots=True)
class SolverConfig:
    max_depth = attr.ib(default=MAX_DEPTH, validator=_positive)
    occurs_check = attr.ib(default=OCCURS_CHECK)
    builtin_table = attr.ib(factory=lambda: dict(BUILTINS))


@attr.s(frozen=True, slots=True)
class Solution:
    bindings = attr.ib()
    # KB transitions performed on the path to this solution
    side_effect_log = attr.ib(converter=tuple, default=())
    # the branch parked itself on a receive instead of finishing
    suspended = attr.ib(default=False)

    def by_name(self):
        return {var.name: term for var, term in self.bindings.items()}

    def __getitem__(self, name):
        return self.by_name()[name]


@attr.s(frozen=True, slots=True)
class Frame:
    goal = attr.ib()
    barrier = attr.ib(default=0)
    depth = attr.ib(default=0)
    # (clause identity, literal position) for per call-site builtin state
    site = attr.ib(default=None)


class Resolution:
    # resolves goal against the given clauses only
    def __init__(self, goal, clauses):
        self.goal = goal
        self.clauses = clauses


class Hook:
    # A Python callable running as a goal. Always succeeds.
    def __call__(self, solver, bindings):
        raise NotImplementedError


class Mark(Hook):
    def __init__(self, name):
        self.name = name

    def __call__(self, solver, bindings):
        solver.marks.add(self.name)


class _ElseFound(Hook):
    def __init__(self, choice):
        self.choice = choice

    def __call__(self, solver, bindings):
        self.choice.found = True
        solver.marks.add("fired")


SUSPENDED = object()


# *********************************************
# Choice points
# *********************************************
class Alternatives:
    __slots__ = ("states",)

    def __init__(self, states):
        self.states = states

    def retry(self, solver):
        return next(self.states, None)


class Undo:
    __slots__ = ("marker", "yielded")

    def __init__(self, marker, yielded):
        self.marker = marker
        self.yielded = yielded

    def retry(self, solver):
        # a path that produced an answer keeps its transitions
        if solver.yielded == self.yielded:
            solver.kb.rollback_to(self.marker, strict=False)
        return None


class Otherwise:
    __slots__ = ("state", "found")

    def __init__(self, state):
        self.state = state
        self.found = False

    def retry(self, solver):
        if self.found:
            return None
        self.found = True
        return self.state


def cut_to(stack, barrier):
    kept = [choice for choice in stack[barrier:] if isinstance(choice, Undo)]
    del stack[barrier:]
    stack.extend(kept)


def link(goals, rest=None, barrier=0, depth=0, site=None):
    linked = rest
    for i in range(len(goals) - 1, -1, -1):
        linked = (Frame(goals[i], barrier, depth, (site, i)), linked)
    return linked


def rebase(goals):
    # a continuation resumed on a fresh stack: cuts inside it are local
    frames = []
    while goals is not None:
        frame, goals = goals
        frames.append(attr.evolve(frame, barrier=0))
    linked = None
    for frame in reversed(frames):
        linked = (frame, linked)
    return linked


def goals_of(linked):
    result = []
    while linked is not None:
        frame, linked = linked
        result.append(frame.goal)
    return result


# *********************************************
# Solver
# *********************************************
class Solver:
    def __init__(
        self,
        kb,
        config=None,
        clock=None,
        stubs=None,
        tables=None,
        engine=None,
        interval_state=None,
        output=print,
    ):
        self.kb = kb
        self.config = config or SolverConfig()
        self.builtins = self.config.builtin_table
        self.clock = clock or SystemClock()
        self.stubs = stubs or StubTable()
        self.tables = tables or TableRegistry()
        self.engine = engine
        self.interval_state = interval_state if interval_state is not None else {}
        self.output = output
        self.printed = []
        self.marks = set()
        self.exception_handlers = []
        self.yielded = 0
        self._pending_undo = []
        self._transactions = []
        self._query_marker = None
        self._retained_oids = set()

    @property
    def agent_name(self):
        if self.engine is not None:
            return self.engine.name
        return DEFAULT_AGENT_NAME

    # ---------------------------
    # Entry points
    # ---------------------------
    def solve(self, goals, bindings=EMPTY_BINDINGS, site="query"):
        """
        Lazy stream of Solutions in depth-first, clause order,
        left-to-right order.
        """
        goals = list(goals)
        query_vars = []
        for goal in goals:
            if isinstance(goal, Hook):
                continue
            for var in variables_of(goal, bindings):
                if var not in query_vars:
                    query_vars.append(var)
        return self._top(link(goals, site=site), bindings, query_vars)

    def resume(self, continuation, bindings, query_vars=()):
        return self._top(rebase(continuation), bindings, list(query_vars))

    def resolve_with(self, goal, clauses, bindings=EMPTY_BINDINGS):
        # goal against an explicit clause list, bypassing builtins
        linked = (Frame(Resolution(goal, clauses), site=("resolve",)), None)
        return self._top(linked, bindings, variables_of(goal, bindings))

    def first(self, goals, bindings=EMPTY_BINDINGS):
        return next(iter(self.solve(goals, bindings)), None)

    def solve_all(self, goals, bindings=EMPTY_BINDINGS):
        return list(self.solve(goals, bindings))

    def call_builtin(self, goal, bindings=EMPTY_BINDINGS):
        goal = walk(goal, bindings)
        key = term_key(goal)
        builtin = self.builtins.get(key)
        if builtin is not None:
            return list(builtin.handler(self, goal, bindings, Frame(goal, site=("call",))))
        if key in CONTROL:
            return [b for b, _ in self.subsolve([goal], bindings)]
        raise UnknownBuiltin(key)

    def subsolve(self, goals, bindings, depth=0, site=None):
        # (bindings, suspended) pairs of a nested derivation with its own stack
        return self._run(link(list(goals), depth=depth, site=site), bindings)

    def note_update(self, marker):
        # called by update builtins before they touch the KB
        self._pending_undo.append(marker)

    def retained(self, oid):
        return oid in self._retained_oids

    def _top(self, linked, bindings, query_vars):
        start = self.kb.checkpoint()
        self._query_marker = start
        try:
            for b, suspended in self._run(linked, bindings):
                self.yielded += 1
                log = self.kb.transition_log[start.position:]
                self._retained_oids.update(r.oid for r in log)
                solution = Solution(b.restrict(query_vars), log, suspended)
                might_print_solution(solution)
                yield solution
        except RecursionError:
            raise DepthExceeded(self.config.max_depth) from None

    # ---------------------------
    # Machine
    # ---------------------------
    def _run(self, goals, bindings):
        stack = []
        state = (goals, bindings)
        while True:
            if state is None:
                state = self._backtrack(stack)
                if state is None:
                    return
            goals, b = state
            if goals is None:
                yield b, False
                state = None
                continue
            if goals is SUSPENDED:
                yield b, True
                state = None
                continue
            frame, rest = goals
            state = self._step(frame, rest, b, stack)

    def _backtrack(self, stack):
        while stack:
            state = stack[-1].retry(self)
            if state is not None:
                return state
            stack.pop()
        return None

    def _alternatives(self, states, stack):
        if isinstance(states, list):
            if not states:
                return None
            if len(states) == 1:
                return states[0]
            states = iter(states)
        state = next(states, None)
        if state is None:
            return None
        stack.append(Alternatives(states))
        return state

    def _step(self, frame, rest, b, stack):
        goal = frame.goal
        if isinstance(goal, Resolution):
            return self._resolve(goal.goal, goal.clauses, frame, rest, b, stack)
        if isinstance(goal, Hook):
            goal(self, b)
            return rest, b

        goal = walk(goal, b)
        if isinstance(goal, Var):
            raise BuiltinTypeError("a callable goal", "an unbound variable")
        key = term_key(goal)
        if key is None:
            raise BuiltinTypeError("a callable goal", format_term(goal))
        if frame.depth > self.config.max_depth:
            raise DepthExceeded(self.config.max_depth)
        might_print_goal(frame, goal, b)

        control = CONTROL.get(key)
        if control is not None:
            return control(self, goal, frame, rest, b, stack)

        builtin = self.builtins.get(key)
        if builtin is not None and not builtin.library:
            return self._call_builtin(builtin, goal, frame, rest, b, stack)

        clauses = self.kb.clauses_for(key)
        if clauses:
            return self._resolve(goal, clauses, frame, rest, b, stack)

        if builtin is not None:
            return self._call_builtin(builtin, goal, frame, rest, b, stack)

        if is_stub_functor(key[0]):
            return self._call_stub(goal, rest, b, stack)

        return None

    def _resolve(self, goal, clauses, frame, rest, b, stack):
        barrier = len(stack)
        depth = frame.depth + 1
        occurs_check = self.config.occurs_check

        def states():
            for clause in clauses:
                mapping = {}
                index = fresh_index()
                b2 = unify(goal, rename(clause.head, mapping, index), b, occurs_check)
                if b2 is None:
                    continue
                goals = rest
                for i in range(len(clause.body) - 1, -1, -1):
                    body_goal = rename(clause.body[i], mapping, index)
                    goals = (Frame(body_goal, barrier, depth, (id(clause), i)), goals)
                yield goals, b2

        return self._alternatives(states(), stack)

    def _call_builtin(self, builtin, goal, frame, rest, b, stack):
        outer, self._pending_undo = self._pending_undo, []
        try:
            results = builtin.handler(self, goal, b, frame)
            for marker in self._pending_undo:
                stack.append(Undo(marker, self.yielded))
        except StubRaised as err:
            return self._on_stub_exception(err, b)
        finally:
            self._pending_undo = outer

        if isinstance(results, list):
            return self._alternatives([(rest, b2) for b2 in results], stack)
        return self._alternatives(((rest, b2) for b2 in results), stack)

    def _call_stub(self, goal, rest, b, stack):
        args = [apply(b, a) for a in getattr(goal, "args", ())]
        try:
            succeeded = self.stubs.call(key_functor(goal), args)
        except StubRaised as err:
            return self._on_stub_exception(err, b)
        return (rest, b) if succeeded else None

    def _on_stub_exception(self, err, b):
        for exception_type, handler in self.exception_handlers:
            exception_type = walk(exception_type, b)
            if isinstance(exception_type, Var) or exception_type == Const(err.exception):
                logger.info("%s raised %s, running handler", err.functor, err.exception)
                next(self.subsolve([handler], b), None)
                return None
        raise err

    # ---------------------------
    # Control constructs
    # ---------------------------
    def _conjunction(self, goal, frame, rest, b, stack):
        left, right = goal.args
        rest = (attr.evolve(frame, goal=right), rest)
        return (attr.evolve(frame, goal=left), rest), b

    def _disjunction(self, goal, frame, rest, b, stack):
        left, right = goal.args
        states = [
            ((attr.evolve(frame, goal=left), rest), b),
            ((attr.evolve(frame, goal=right), rest), b),
        ]
        return self._alternatives(states, stack)

    def _cut(self, goal, frame, rest, b, stack):
        cut_to(stack, frame.barrier)
        return rest, b

    def _call(self, goal, frame, rest, b, stack):
        target = walk(goal.args[0], b)
        extra = goal.args[1:]
        if extra:
            if isinstance(target, Const):
                target = Struct(target.symbol, extra)
            elif isinstance(target, Struct):
                target = Struct(target.functor, target.args + tuple(extra))
        return (Frame(target, len(stack), frame.depth + 1, frame.site), rest), b

    def _not(self, goal, frame, rest, b, stack):
        inner = apply(b, goal.args[0])
        if not is_ground(inner):
            raise FlounderingNaf(inner)
        marker = self.kb.checkpoint()
        found = next(self.subsolve([inner], b, frame.depth + 1, frame.site), None)
        self.kb.rollback_to(marker, strict=False)
        if found is not None:
            return None
        return rest, b

    def _first(self, goal, frame, rest, b, stack):
        marker = self.kb.checkpoint()
        found = next(self.subsolve([goal.args[0]], b, frame.depth + 1, frame.site), None)
        if found is None:
            self.kb.rollback_to(marker, strict=False)
            return None
        stack.append(Undo(marker, self.yielded))
        return rest, found[0]

    def _findall(self, goal, frame, rest, b, stack):
        template, inner, result = goal.args
        marker = self.kb.checkpoint()
        items = [
            apply(b2, template)
            for b2, _ in self.subsolve([inner], b, frame.depth + 1, frame.site)
        ]
        self.kb.rollback_to(marker, strict=False)
        b2 = unify(result, PList(items), b, self.config.occurs_check)
        return None if b2 is None else (rest, b2)

    def _transaction(self, goal, frame, rest, b, stack):
        marker = self.kb.checkpoint()
        self._transactions.append(marker)
        try:
            found = next(
                self.subsolve([goal.args[0]], b, frame.depth + 1, frame.site), None
            )
            violated = True
            if found is not None:
                violated, reason = self.kb.violated_constraint()
                if violated:
                    logger.info("transaction rolled back: %s", reason)
        finally:
            self._transactions.pop()
        if violated:
            self.kb.rollback_to(marker, strict=False)
            return None
        stack.append(Undo(marker, self.yielded))
        return rest, found[0]

    def _commit(self, goal, frame, rest, b, stack):
        self.kb.commit()
        return rest, b

    def _rollback(self, goal, frame, rest, b, stack):
        marker = self._transactions[-1] if self._transactions else self._query_marker
        if marker is not None:
            self.kb.rollback_to(marker, strict=False)
        return None

    def _derive(self, goal, frame, rest, b, stack):
        target = walk(goal.args[0], b)
        if isinstance(target, PList):
            items, tail = flatten_list(target, b)
            predicate = walk(items[0], b) if items else None
            if tail is not None or not isinstance(predicate, Const):
                raise BuiltinTypeError("[Predicate|Args] list", format_term(apply(b, target)))
            target = make_struct(predicate.symbol, items[1:])
        return (Frame(target, len(stack), frame.depth + 1, frame.site), rest), b

    def _else(self, goal, frame, rest, b, stack):
        main, alternative = goal.args
        choice = Otherwise(((attr.evolve(frame, goal=alternative), rest), b))
        stack.append(choice)
        found = attr.evolve(frame, goal=_ElseFound(choice))
        return (attr.evolve(frame, goal=main), (found, rest)), b

    def _on_exception(self, goal, frame, rest, b, stack):
        self.exception_handlers.append((goal.args[0], goal.args[1]))
        return rest, b

    # ---------------------------
    # Messaging
    # ---------------------------
    def messaging_engine(self):
        if self.engine is None:
            raise TransportError("no messaging engine attached to this solver")
        return self.engine

    def _receive(self, goal, frame, rest, b, stack):
        engine = self.messaging_engine()
        # rcvMult waits for the same rcvMsg term, just more than once
        pattern = Struct("rcvMsg", goal.args)
        engine.suspend(pattern, rest, b, multi=goal.functor == "rcvMult")
        return SUSPENDED, b

    def _receive_partitioned(self, goal, frame, rest, b, stack):
        engine = self.messaging_engine()
        inbound, outbound, pattern = goal.args
        inbound = _list_items(inbound, b)
        outbound = _list_items(outbound, b)
        pattern = walk(pattern, b)
        engine.suspend(pattern, rest, b, inbound=inbound, outbound=outbound)
        return SUSPENDED, b

    def _join(self, goal, frame, rest, b, stack):
        engine = self.messaging_engine()
        me, xid, name, value = (apply(b, arg) for arg in goal.args)
        inputs = engine.join(me, xid, name, value)
        if inputs is None:
            return rest, b
        handler = make_struct(name.symbol, (me, xid, inputs))
        return (Frame(handler, len(stack), frame.depth + 1, frame.site), rest), b


def key_functor(goal):
    return term_key(goal)[0]


def _list_items(term, b):
    term = walk(term, b)
    if not isinstance(term, PList):
        raise BuiltinTypeError("a list", format_term(apply(b, term)))
    items, _ = flatten_list(term, b)
    return [apply(b, item) for item in items]


CONTROL = {
    (",", 2): Solver._conjunction,
    (";", 2): Solver._disjunction,
    ("!", 0): Solver._cut,
    ("call", 1): Solver._call,
    ("call", 2): Solver._call,
    ("call", 3): Solver._call,
    ("not", 1): Solver._not,
    ("first", 1): Solver._first,
    ("once", 1): Solver._first,
    ("findall", 3): Solver._findall,
    ("transaction", 1): Solver._transaction,
    ("commit", 0): Solver._commit,
    ("rollback", 0): Solver._rollback,
    ("derive", 1): Solver._derive,
    ("on_exception", 2): Solver._on_exception,
    ("$else", 2): Solver._else,
    ("rcvMsgP", 3): Solver._receive_partitioned,
    ("join", 4): Solver._join,
}
for _arity in range(5, 8):
    CONTROL[("rcvMsg", _arity)] = Solver._receive
    CONTROL[("rcvMult", _arity)] = Solver._receive
