"""Counted float64 array kernels.

Each array element is an independent scalar lane; a kernel producing ``n``
output elements from an elementwise rule records ``n`` operations.  Shape
bookkeeping (reshape, transpose) is free.
"""

import numpy as np

from .counter import record


def asarray(x):
    return np.asarray(x, dtype=np.float64)


def _size(a):
    return int(np.size(a))


def add(a, b):
    out = np.add(a, b)
    record("add", _size(out))
    return out


def sub(a, b):
    out = np.subtract(a, b)
    record("add", _size(out))
    return out


def mul(a, b):
    out = np.multiply(a, b)
    record("mul", _size(out))
    return out


def div(a, b):
    out = np.divide(a, b)
    record("div", _size(out))
    return out


def neg(a):
    out = np.negative(a)
    record("add", _size(out))
    return out


def sqrt(a):
    out = np.sqrt(a)
    record("sqrt", _size(out))
    return out


def tanh(a):
    # np.tanh saturates to +-1 for large |a|; no overflow path.
    out = np.tanh(a)
    record("tanh", _size(out))
    return out


def sin(a):
    out = np.sin(a)
    record("trig", _size(out))
    return out


def cos(a):
    out = np.cos(a)
    record("trig", _size(out))
    return out


def matmul(a, b):
    out = np.matmul(a, b)
    inner = np.shape(a)[-1] if np.ndim(a) else 1
    n = _size(out)
    record("mul", n * inner)
    record("add", n * (inner - 1))
    return out


def sum(a, axis=None, keepdims=False):  # noqa: A001 - mirrors numpy
    a = np.asarray(a)
    out = np.sum(a, axis=axis, keepdims=keepdims)
    reduced = a.size // max(_size(out), 1)
    record("add", _size(out) * max(reduced - 1, 0))
    return out

