import threading
import time
from reactor.terms import TimePoint


class SystemClock:
    def now(self):
        return TimePoint(int(time.time() * 1000))


class ManualClock:
    """
    A clock that only moves when told to.
    Scenario tests and the step command drive the daemon with it.
    """

    def __init__(self, start=None):
        if start is None:
            start = TimePoint.from_fields(2005, 1, 1)
        self._now = start
        self._lock = threading.Lock()

    def now(self):
        with self._lock:
            return self._now

    def advance(self, millis):
        with self._lock:
            self._now = self._now.shifted(millis)
            return self._now

    def set(self, point):
        with self._lock:
            self._now = point
