"""Array-lane automatic differentiation with operation counting.

Forward mode (:class:`Dual`), reverse mode (:class:`Tape` / :class:`Var`)
and their nesting, over float64 arrays whose elements are independent
scalar lanes.
"""

import numpy as np

from . import ops
from .counter import KINDS, OpCounter, ScopeError, count_scope, counting, record
from .dual import Dual, seed
from .tape import Tape, TapeError, Var, backward, grad

__all__ = [
    "KINDS",
    "Dual",
    "OpCounter",
    "ScopeError",
    "Tape",
    "TapeError",
    "Var",
    "backward",
    "backward_gradient",
    "backward_jacobian",
    "count_scope",
    "counting",
    "forward_jacobian",
    "grad",
    "ops",
    "record",
    "seed",
]


def _check_arity(x, input_dim):
    if input_dim is not None and x.shape[-1] != input_dim:
        raise ValueError(f"point has {x.shape[-1]} coordinates, function expects {input_dim}")


def forward_jacobian(f, x, input_dim=None):
    """Jacobian of ``f`` at ``x`` by seeding one tangent per input coordinate.

    ``x`` has shape ``(d,)`` or ``(K, d)`` (a batch of points); the result
    has shape ``(n, d)`` or ``(K, n, d)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    _check_arity(x, input_dim)
    out = f(seed(x))
    if not isinstance(out, Dual):
        return np.zeros(np.shape(out) + (x.shape[-1],))
    return np.moveaxis(np.asarray(ops.value(out.tangent)), 0, -1)


def backward_gradient(root, leaves):
    """Derivatives of a scalar ``root`` with respect to each leaf."""
    return backward(root, leaves)


def backward_jacobian(f, x, input_dim=None):
    """Jacobian of ``f`` at ``x`` with one reverse sweep per output component."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    _check_arity(x, input_dim)
    tape = Tape()
    xv = tape.variable(x)
    out = f(xv)
    if not isinstance(out, Var):
        return np.zeros(np.shape(out) + (x.shape[-1],))
    batch = x.shape[:-1]
    n = out.shape[len(batch):]
    rows = []
    for j in np.ndindex(*n):
        seed_ = np.zeros(out.shape)
        seed_[(Ellipsis,) + j] = 1.0
        rows.append(backward(out, [xv], seed=seed_)[xv])
    jac = np.stack(rows, axis=-2)
    return jac.reshape(batch + n + (x.shape[-1],))
