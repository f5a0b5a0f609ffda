"""Forward-mode dual numbers with multi-directional tangents."""

from __future__ import annotations

import numpy as np

from . import ops


class Dual:
    """``value + sum_i tangent[i] * eps_i`` with one infinitesimal per seed.

    ``tangent`` has shape ``(d,) + shape(value)``: one derivative lane per
    seed direction.  Payloads are float arrays or tape variables; the latter
    puts the tangent computation itself on a tape, which is how
    reverse-over-forward mixed derivatives are obtained.
    """

    __slots__ = ("value", "tangent")
    __array_priority__ = 1001

    def __init__(self, value, tangent):
        self.value = value
        self.tangent = tangent

    @property
    def width(self) -> int:
        return ops.shape(self.tangent)[0]

    @property
    def shape(self):
        return ops.shape(self.value)

    @property
    def ndim(self):
        return len(self.shape)

    def __repr__(self):
        return f"Dual(shape={self.shape}, width={self.width})"

    def __add__(self, other):
        return ops.add(self, other)

    def __radd__(self, other):
        return ops.add(other, self)

    def __sub__(self, other):
        return ops.sub(self, other)

    def __rsub__(self, other):
        return ops.sub(other, self)

    def __mul__(self, other):
        return ops.mul(self, other)

    def __rmul__(self, other):
        return ops.mul(other, self)

    def __truediv__(self, other):
        return ops.div(self, other)

    def __rtruediv__(self, other):
        return ops.div(other, self)

    def __neg__(self):
        return ops.neg(self)

    def __matmul__(self, other):
        return ops.matmul(self, other)

    def __rmatmul__(self, other):
        return ops.matmul(other, self)


def seed(x, width=None) -> Dual:
    """Dual over ``x`` of shape ``(..., d)`` seeded with the unit directions."""
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[-1] if x.ndim else 1
    if width is not None and width != d:
        raise ValueError(f"input has {d} coordinates, expected {width}")
    tangent = np.zeros((d,) + x.shape)
    for i in range(d):
        tangent[i, ..., i] = 1.0
    return Dual(x, tangent)
