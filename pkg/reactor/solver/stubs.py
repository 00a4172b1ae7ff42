# External calls (dotted functors like flight.BookingSystem.book, plus
# sendMessage / fopen / copy) have no host bridge. They are answered by a
# behaviour table, and dbopen / sql_select read an in-memory table registry.
import logging
import re
from settings import STUB_DEFAULT, STUB_FUNCTORS
from reactor.errors import StubRaised
from reactor.terms import Const, Str, Num, TERM_TYPES

logger = logging.getLogger("reactor.stubs")

BEHAVIOURS = ("succeed", "fail", "raise")
ATOM_LIKE = re.compile(r"[a-z][A-Za-z0-9_]*")


def is_stub_functor(functor):
    return "." in functor or functor in STUB_FUNCTORS


def _check_behaviour(behaviour):
    kind = behaviour.split(":", 1)[0]
    if kind not in BEHAVIOURS:
        raise ValueError(f"stub behaviour must be one of {BEHAVIOURS}, got {behaviour}")
    return behaviour


class StubTable:
    """
    functor -> "succeed" | "fail" | "raise[:ExceptionName]"
    or a list of those consumed one per call (the last one then repeats).
    """

    def __init__(self, behaviours=None, default=STUB_DEFAULT):
        self.behaviours = {}
        for functor, behaviour in (behaviours or {}).items():
            self.set(functor, behaviour)
        self.default = _check_behaviour(default)
        self.calls = []

    def set(self, functor, behaviour):
        if isinstance(behaviour, str):
            behaviour = [behaviour]
        self.behaviours[functor] = [_check_behaviour(b) for b in behaviour]

    def _next_behaviour(self, functor):
        queue = self.behaviours.get(functor)
        if not queue:
            return self.default
        if len(queue) > 1:
            return queue.pop(0)
        return queue[0]

    def call(self, functor, args):
        self.calls.append((functor, tuple(args)))
        behaviour = self._next_behaviour(functor)
        logger.debug("stub %s/%s -> %s", functor, len(args), behaviour)
        if behaviour == "succeed":
            return True
        if behaviour == "fail":
            return False
        _, _, exception = behaviour.partition(":")
        raise StubRaised(functor, exception or None)

    def calls_to(self, functor):
        return [args for name, args in self.calls if name == functor]

    def count(self, functor):
        return len(self.calls_to(functor))


# *********************************************
# In-memory SQL tables
# *********************************************
def python_to_term(value):
    if isinstance(value, TERM_TYPES):
        return value
    if isinstance(value, bool):
        return Const("true" if value else "false")
    if isinstance(value, (int, float)):
        return Num(value)
    if isinstance(value, str) and ATOM_LIKE.fullmatch(value):
        return Const(value)
    return Str(str(value))


class TableRegistry:
    def __init__(self, tables=None):
        # name -> list of rows, each row a column -> term dict
        self.tables = {}
        for name, rows in (tables or {}).items():
            self.add_table(name, rows)

    def add_table(self, name, rows):
        self.tables[name] = [
            {column: python_to_term(value) for column, value in row.items()} for row in rows
        ]

    def open(self, name):
        if name not in self.tables:
            raise StubRaised("dbopen", "java.sql.SQLException")
        return Const(name)

    def rows(self, name):
        if name not in self.tables:
            raise StubRaised("sql_select", "java.sql.SQLException")
        return self.tables[name]
