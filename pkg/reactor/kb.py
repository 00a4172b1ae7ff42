# This module contains the knowledge base:
# an ordered map of modules (oid -> clauses), the transition log
# recording every positive / negative update, checkpoints and
# rollback by inversion, transactions and external module imports.
#
#   KB_0 --add(a)--> KB_1 --add(b)--> KB_2 --remove(a)--> KB_3
#                                       ^
#                  checkpoint() = 2 ----+   rollback_to(2) inverts remove(a)
#
import itertools
import logging
import re
import threading
import urllib.error
import urllib.request
from pathlib import Path
import attr
from settings import (
    DUPLICATE_OID_POLICY,
    APPEND_OID_FUNCTORS,
    IMPORT_TIMEOUT,
    PRINT_TRANSITIONS,
    ASSERTION_ENABLED,
)
from reactor.errors import (
    ReactorError,
    DuplicateOid,
    UnknownOid,
    StaleMarker,
    NotFound,
    FetchError,
)
from reactor.parser import SourceModule, parse_program, format_term, format_clause
from reactor.terms import Const, Str, Num, Struct

logger = logging.getLogger("reactor.kb")

POSITIVE = "positive"
NEGATIVE = "negative"
MUST_HOLD = "must_hold"
MUST_FAIL = "must_fail"

PLACEHOLDER_RE = re.compile(r"(?<![A-Za-z0-9_])_(\d+)(?![A-Za-z0-9_])")
LOCATOR_PREFIXES = ("http://", "https://", "./", "../", "/")
LOCATOR_SUFFIXES = (".rr",)

_lineages = itertools.count(1)


@attr.s(frozen=True, slots=True)
class TransitionRecord:
    seq = attr.ib()
    oid = attr.ib()
    polarity = attr.ib()
    # clauses added, or the snapshot of the clauses removed
    payload = attr.ib(converter=tuple)
    # index of the module in the ordered map when the record was made
    position = attr.ib(default=0)
    # None when the whole module is concerned, else clause indexes in it
    clause_positions = attr.ib(default=None)

    @property
    def whole_module(self):
        return self.clause_positions is None


@attr.s(frozen=True, slots=True)
class Marker:
    lineage = attr.ib()
    position = attr.ib()


def _check_mode(instance, attribute, value):
    if value not in (MUST_HOLD, MUST_FAIL):
        raise ValueError(f"integrity mode must be {MUST_HOLD} or {MUST_FAIL}, got {value}")


@attr.s(frozen=True, slots=True)
class IntegrityConstraint:
    goal = attr.ib()
    mode = attr.ib(default=MUST_HOLD, validator=_check_mode)


@attr.s(frozen=True, slots=True)
class Update:
    kind = attr.ib()
    oid = attr.ib()
    clauses = attr.ib(default=None)
    args = attr.ib(default=())

    @classmethod
    def add(cls, oid, clauses, args=()):
        return cls("add", oid, clauses, tuple(args))

    @classmethod
    def remove(cls, oid):
        return cls("remove", oid)


@attr.s(frozen=True, slots=True)
class TransactionReport:
    # committed | rolled_back
    outcome = attr.ib()
    reason = attr.ib(default=None)
    transitions = attr.ib(converter=tuple, default=())

    @property
    def committed(self):
        return self.outcome == "committed"


# *********************************************
# Helpers
# *********************************************
def normalize_oid(oid):
    # "./lib.rr" and './lib.rr' name the same module
    if isinstance(oid, Str):
        return Const(oid.value)
    if isinstance(oid, str):
        return Const(oid)
    return oid


def is_locator(text):
    return text.startswith(LOCATOR_PREFIXES) or text.endswith(LOCATOR_SUFFIXES)


def substitute_placeholders(text, args):
    args = list(args or ())

    def replace(match):
        i = int(match.group(1))
        if i < len(args):
            return format_term(args[i])
        return match.group(0)

    return PLACEHOLDER_RE.sub(replace, text)


def resolve_import(locator, base_dir=None):
    if locator.startswith(("http://", "https://")):
        try:
            with urllib.request.urlopen(locator, timeout=IMPORT_TIMEOUT) as response:
                return response.read().decode("utf-8")
        except urllib.error.HTTPError as err:
            if err.code == 404:
                raise NotFound(locator) from err
            raise FetchError(locator, f"HTTP {err.code}") from err
        except urllib.error.URLError as err:
            raise FetchError(locator, str(err.reason)) from err
        except OSError as err:
            raise FetchError(locator, str(err)) from err

    path = Path(locator)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    if not path.is_file():
        raise NotFound(locator)
    return path.read_text(encoding="utf-8")


# *********************************************
# Knowledge base
# *********************************************
class KnowledgeBase:
    def __init__(self, base_dir=None):
        self.modules = {}
        self.transition_log = []
        self.state_counter = 0
        self.lineage = next(_lineages)
        self.base_dir = base_dir
        # builds the solver that runs ':- Goal.' directives and integrity checks
        self.solver_factory = None
        self._sealed = 0
        self._seq = itertools.count(1)
        self._auto = itertools.count(1)
        self._index = {}
        self._lock = threading.RLock()

    # ---------------------------
    # Reading
    # ---------------------------
    def clauses_for(self, key):
        # A list built once per state: a derivation iterating over it
        # keeps seeing the clauses that existed when the goal was called
        with self._lock:
            clauses = self._index.get(key)
            if clauses is None:
                clauses = [
                    clause
                    for module in self.modules.values()
                    for clause in module
                    if clause.key == key
                ]
                self._index[key] = clauses
            return clauses

    def defines(self, key):
        return bool(self.clauses_for(key))

    def exclusive(self):
        # held by the daemon tick and the dispatch loop while they derive
        return self._lock

    def all_clauses(self):
        with self._lock:
            return [clause for module in self.modules.values() for clause in module]

    def module(self, oid):
        oid = normalize_oid(oid)
        with self._lock:
            if oid not in self.modules:
                raise UnknownOid(oid)
            return tuple(self.modules[oid])

    def oids(self):
        with self._lock:
            return list(self.modules)

    def __contains__(self, oid):
        return normalize_oid(oid) in self.modules

    def snapshot(self):
        with self._lock:
            return [(oid, tuple(clauses)) for oid, clauses in self.modules.items()]

    def formatted(self):
        lines = []
        for oid, clauses in self.snapshot():
            lines.append(f"% module {format_term(oid)}")
            lines.extend(format_clause(c) for c in clauses)
        return "\n".join(lines)

    # ---------------------------
    # Updates
    # ---------------------------
    def add_module(self, oid, clauses, args=None, policy=None):
        """
        Positive update: the clauses (a Clause list, a SourceModule
        or rule text with _0.._n placeholders) become module oid.
        """
        oid = normalize_oid(oid)
        with self._lock:
            module = self._materialize(oid, clauses, args)
            policy = self._policy_for(oid, policy)
            if oid in self.modules:
                if policy == "error":
                    raise DuplicateOid(oid)
                if policy == "replace":
                    self.remove_module(oid)
            record = self._add(oid, module.clauses)
            for goal in module.directives:
                self._run_directive(goal)
            return record

    def add_anonymous(self, clauses, args=None):
        with self._lock:
            oid = Struct("auto", (Num(next(self._auto)),))
            while oid in self.modules:
                oid = Struct("auto", (Num(next(self._auto)),))
            return self.add_module(oid, clauses, args)

    def import_module(self, locator):
        text = resolve_import(locator, self.base_dir)
        return self.add_module(Const(locator), text)

    def remove_module(self, oid):
        oid = normalize_oid(oid)
        with self._lock:
            if oid not in self.modules:
                raise UnknownOid(oid)
            position = list(self.modules).index(oid)
            payload = self.modules.pop(oid)
            return self._record(NEGATIVE, oid, payload, position=position)

    def remove_clauses(self, oid, positions):
        # Negative update of part of a module. Emptying it removes the module.
        oid = normalize_oid(oid)
        with self._lock:
            if oid not in self.modules:
                raise UnknownOid(oid)
            module = self.modules[oid]
            positions = tuple(sorted(set(positions)))
            if len(positions) == len(module):
                return self.remove_module(oid)
            payload = [module[i] for i in positions]
            for i in reversed(positions):
                del module[i]
            position = list(self.modules).index(oid)
            return self._record(
                NEGATIVE, oid, payload, position=position, clause_positions=positions
            )

    def _materialize(self, oid, clauses, args):
        if isinstance(clauses, SourceModule):
            return clauses
        if isinstance(clauses, Str):
            clauses = clauses.value
        if isinstance(clauses, str):
            return parse_program(substitute_placeholders(clauses, args), oid)
        return SourceModule(oid, list(clauses))

    def _policy_for(self, oid, policy):
        if isinstance(oid, Struct) and oid.functor in APPEND_OID_FUNCTORS:
            return "append"
        return policy or DUPLICATE_OID_POLICY

    def _add(self, oid, clauses):
        if oid in self.modules:
            module = self.modules[oid]
            start = len(module)
            module.extend(clauses)
            positions = tuple(range(start, len(module)))
        else:
            self.modules[oid] = list(clauses)
            positions = None
        position = list(self.modules).index(oid)
        return self._record(POSITIVE, oid, clauses, position, positions)

    def _record(self, polarity, oid, payload, position=0, clause_positions=None):
        record = TransitionRecord(
            next(self._seq), oid, polarity, payload, position, clause_positions
        )
        self.transition_log.append(record)
        self._changed()
        logger.debug("transition %s %s %s", record.seq, polarity, format_term(oid))
        might_print_transition(record)
        return record

    def _changed(self):
        self.state_counter += 1
        self._index = {}

    def _run_directive(self, goal):
        solver = self.new_solver()
        if solver.first([goal]) is None:
            logger.warning("directive failed: %s", format_term(goal))

    def new_solver(self):
        if self.solver_factory is not None:
            return self.solver_factory(self)
        from reactor.solver.solver import Solver

        return Solver(self)

    # ---------------------------
    # Checkpoints
    # ---------------------------
    def checkpoint(self):
        with self._lock:
            return Marker(self.lineage, len(self.transition_log))

    def rollback_to(self, marker, strict=True):
        """
        Inverts every transition after marker, newest first.
        With strict=False a committed prefix or an already unwound
        marker is silently respected instead of raising StaleMarker.
        """
        with self._lock:
            if marker.lineage != self.lineage:
                raise StaleMarker(marker, "it belongs to another knowledge base")
            target = marker.position
            if target < self._sealed:
                if strict:
                    raise StaleMarker(marker, "its transitions were committed")
                target = self._sealed
            if target > len(self.transition_log):
                if strict:
                    raise StaleMarker(marker, "the log was already unwound past it")
                return []
            undone = []
            while len(self.transition_log) > target:
                record = self.transition_log.pop()
                self._invert(record)
                undone.append(record)
            might_sanity_rollback_check(self, target)
            if undone:
                self._changed()
            return undone

    def commit(self):
        with self._lock:
            self._sealed = len(self.transition_log)

    @property
    def sealed_position(self):
        return self._sealed

    def _invert(self, record):
        logger.debug("invert %s %s", record.seq, format_term(record.oid))
        if record.polarity == POSITIVE:
            if record.whole_module:
                del self.modules[record.oid]
            elif record.clause_positions:
                del self.modules[record.oid][record.clause_positions[0]:]
            return

        if record.whole_module:
            items = list(self.modules.items())
            items.insert(record.position, (record.oid, list(record.payload)))
            self.modules = dict(items)
        else:
            module = self.modules[record.oid]
            for i, clause in zip(record.clause_positions, record.payload):
                module.insert(i, clause)

    # ---------------------------
    # Replay and forks
    # ---------------------------
    def apply_record(self, record):
        """
        Re-applies a record made elsewhere (a fork or another log).
        Partial removals match clauses by value, not by position.
        """
        with self._lock:
            if record.polarity == POSITIVE:
                # a record that created its module cannot land on a live one
                if record.whole_module and record.oid in self.modules:
                    if self._policy_for(record.oid, None) == "error":
                        raise DuplicateOid(record.oid)
                return self._add(record.oid, record.payload)
            if record.whole_module:
                return self.remove_module(record.oid)
            if record.oid not in self.modules:
                raise UnknownOid(record.oid)
            module = self.modules[record.oid]
            positions, taken = [], set()
            for clause in record.payload:
                for i, candidate in enumerate(module):
                    if i not in taken and candidate == clause:
                        taken.add(i)
                        positions.append(i)
                        break
            return self.remove_clauses(record.oid, positions)

    @classmethod
    def replayed(cls, records):
        kb = cls()
        for record in records:
            kb.apply_record(record)
        return kb

    def fork(self):
        # an isolated copy for one parallel rule evaluation
        with self._lock:
            forked = KnowledgeBase(self.base_dir)
            forked.modules = {oid: list(clauses) for oid, clauses in self.modules.items()}
            forked.solver_factory = self.solver_factory
            return forked

    def merge(self, records):
        """
        Applies the records of one fork all or nothing. On a conflict
        the records already applied are rolled back and the error is
        raised to the caller.
        """
        with self._lock:
            marker = self.checkpoint()
            merged = []
            try:
                for record in records:
                    merged.append(self.apply_record(record))
            except ReactorError as err:
                logger.warning("rejected fork at transition %s: %s", record.seq, err)
                self.rollback_to(marker, strict=False)
                raise
            return merged

    # ---------------------------
    # Integrity and transactions
    # ---------------------------
    def integrity_constraints(self):
        constraints = []
        for clause in self.clauses_for(("integrity", 2)):
            mode, goal = clause.head.args
            if clause.is_fact() and isinstance(mode, Const):
                constraints.append(IntegrityConstraint(goal, mode.symbol))
        return constraints

    def violated_constraint(self, extra=()):
        """
        Returns (True, message) for the first violated constraint,
        (False, None) when all of them hold.
        """
        solver = self.new_solver()
        for ic in list(extra) + self.integrity_constraints():
            holds = solver.first([ic.goal]) is not None
            if ic.mode == MUST_HOLD and not holds:
                return True, f"{ic.mode} {format_term(ic.goal)} violated"
            if ic.mode == MUST_FAIL and holds:
                return True, f"{ic.mode} {format_term(ic.goal)} violated"
        return False, None

    def run_transaction(self, updates, ics=()):
        with self._lock:
            marker = self.checkpoint()
            try:
                for update in updates:
                    self._apply_update(update)
                violated, reason = self.violated_constraint(ics)
            except ReactorError as err:
                violated, reason = True, f"{type(err).__name__}: {err}"

            if violated:
                self.rollback_to(marker)
                logger.info("transaction rolled back: %s", reason)
                return TransactionReport("rolled_back", reason)

            return TransactionReport(
                "committed", transitions=self.transition_log[marker.position:]
            )

    def _apply_update(self, update):
        if update.kind == "add":
            if update.oid is None:
                return self.add_anonymous(update.clauses, update.args)
            return self.add_module(update.oid, update.clauses, update.args)
        if update.kind == "remove":
            return self.remove_module(update.oid)
        raise ValueError(f"unknown update kind {update.kind}")


def might_sanity_rollback_check(kb, target):
    if not ASSERTION_ENABLED:
        return

    assert len(kb.transition_log) == target, f"log at {len(kb.transition_log)}, expected {target}"
    assert kb.sealed_position <= target, f"unwound into the committed prefix at {target}"


def might_print_transition(record):
    if not PRINT_TRANSITIONS:
        return

    print("-----------------------------")
    print(f"transition #{record.seq} {record.polarity} {format_term(record.oid)}")
    if record.clause_positions is not None:
        print(f"...clauses at {list(record.clause_positions)}")
    for clause in record.payload:
        print(f"...{format_clause(clause)}")
    print("-----------------------------")
