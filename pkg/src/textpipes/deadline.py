"""Cooperative time budgets checked between bounded units of work."""

import time

from .errors import EvaluationTimeout


class Deadline:
    """Wall-clock budget; ``seconds=None`` never expires."""

    def __init__(self, seconds=None):
        self.seconds = seconds
        self._end = None if seconds is None else time.monotonic() + seconds

    def expired(self):
        return self._end is not None and time.monotonic() >= self._end

    def check(self):
        if self.expired():
            raise EvaluationTimeout(f"evaluation exceeded {self.seconds}s budget")


NO_DEADLINE = Deadline(None)


def as_deadline(deadline):
    return NO_DEADLINE if deadline is None else deadline
