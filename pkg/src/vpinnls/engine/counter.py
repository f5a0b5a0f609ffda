"""Deterministic arithmetic-operation counting.

Every numeric kernel in the engine reports how many scalar operations it
performed.  Counts go to every active :class:`OpCounter` on the calling
thread, so nested scopes compose additively: an outer scope includes the
operations of the scopes it encloses.
"""

from __future__ import annotations

import threading
from collections import Counter
from contextlib import contextmanager

KINDS = ("add", "mul", "div", "sqrt", "tanh", "trig", "comparison")

_local = threading.local()


def _stack() -> list:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = _local.stack = []
    return stack


class ScopeError(RuntimeError):
    """Raised when counting scopes are exited out of order."""


class OpCounter:
    """Per-kind operation totals.

    Counts only ever grow while the counter is active; :meth:`reset` zeroes
    them between scopes.
    """

    def __init__(self):
        self.counts = Counter()

    def record(self, kind: str, n: int) -> None:
        if n < 0:
            raise ValueError("operation counts are non-negative")
        if n:
            self.counts[kind] += int(n)

    def reset(self) -> None:
        self.counts.clear()

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def snapshot(self) -> dict:
        return {k: v for k, v in sorted(self.counts.items()) if v}

    def merge(self, other: "OpCounter") -> "OpCounter":
        """Add another counter's totals into this one (e.g. per-thread merge)."""
        self.counts.update(other.counts)
        return self

    def __getitem__(self, kind):
        return self.counts.get(kind, 0)

    def __eq__(self, other):
        if isinstance(other, OpCounter):
            return self.snapshot() == other.snapshot()
        if isinstance(other, dict):
            return self.snapshot() == {k: v for k, v in other.items() if v}
        return NotImplemented

    def __repr__(self):
        return f"OpCounter({self.snapshot()})"

    # context-manager protocol: ``with OpCounter() as c: ...``
    def __enter__(self):
        self.reset()
        _stack().append(self)
        return self

    def __exit__(self, *exc):
        stack = _stack()
        if not stack or stack[-1] is not self:
            raise ScopeError("counting scope exited out of order")
        stack.pop()
        return False


def record(kind: str, n: int) -> None:
    """Attribute ``n`` operations of ``kind`` to every active scope."""
    stack = _stack()
    if stack and n:
        for counter in stack:
            counter.record(kind, n)


def counting_active() -> bool:
    return bool(_stack())


@contextmanager
def counting():
    """Open a fresh counting scope; yields its :class:`OpCounter`."""
    with OpCounter() as counter:
        yield counter


def count_scope(computation, *args, **kwargs) -> OpCounter:
    """Run ``computation(*args, **kwargs)`` and return the operations it used."""
    with OpCounter() as counter:
        computation(*args, **kwargs)
    return counter
