"""Trial network: tanh hidden stack, boundary cut-off, linear output combination.

``u_alpha(x) = xi(x) * x_L(x)`` is the vector of ``N`` spanning functions and
``u(x) = omega . u_alpha(x)`` the scalar trial function.  Points are batched
as arrays of shape ``(K, d)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import engine
from .engine import Dual, Tape, Var, kernels as K, ops

DOMAIN_LENGTH = np.pi


@dataclass(frozen=True)
class Architecture:
    input_dim: int
    widths: tuple
    activation: str = "tanh"
    cutoff: str = "box"

    def __post_init__(self):
        if self.input_dim < 1 or not self.widths or min(self.widths) < 1:
            raise ValueError("invalid architecture")
        if self.activation != "tanh":
            raise ValueError("only tanh activations are supported")
        if self.cutoff not in ("box", "none"):
            raise ValueError(f"unknown cut-off {self.cutoff!r}")
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))

    @classmethod
    def uniform(cls, input_dim, width, depth=3, **kw):
        return cls(input_dim, (width,) * depth, **kw)

    @property
    def output_dim(self) -> int:
        return self.widths[-1]

    @property
    def depth(self) -> int:
        return len(self.widths)


@dataclass
class MLPParameters:
    """Hidden-layer ``(W, b)`` pairs (``alpha``) and output coefficients ``omega``.

    Weights act on row vectors: ``x_l = tanh(x_{l-1} @ W_l + b_l)``.
    """

    alpha: list
    omega: object
    cutoff: str = field(default="box")

    @property
    def input_dim(self) -> int:
        return ops.shape(self.alpha[0][0])[0]

    @property
    def width(self) -> int:
        return ops.shape(self.alpha[-1][0])[1]

    def arrays(self, omega=True) -> list:
        flat = [a for layer in self.alpha for a in layer]
        return flat + [self.omega] if omega else flat

    @classmethod
    def from_arrays(cls, arrays, omega=None, cutoff="box"):
        arrays = list(arrays)
        if omega is None:
            omega = arrays.pop()
        alpha = [(arrays[i], arrays[i + 1]) for i in range(0, len(arrays), 2)]
        return cls(alpha, omega, cutoff)

    def copy(self) -> "MLPParameters":
        return MLPParameters(
            [(np.array(W), np.array(b)) for W, b in self.alpha], np.array(self.omega), self.cutoff
        )

    def watch(self, tape: Tape, alpha=True, omega=True) -> "MLPParameters":
        """Same parameters with the selected groups registered as tape leaves."""
        def wrap(a, on):
            return tape.variable(a) if on else a

        return MLPParameters(
            [(wrap(W, alpha), wrap(b, alpha)) for W, b in self.alpha],
            wrap(self.omega, omega),
            self.cutoff,
        )

    def allclose(self, other, **kw) -> bool:
        return all(
            np.shape(a) == np.shape(b) and np.allclose(a, b, **kw)
            for a, b in zip(self.arrays(), other.arrays())
        )

    def __eq__(self, other):
        if not isinstance(other, MLPParameters):
            return NotImplemented
        mine, theirs = self.arrays(), other.arrays()
        return (
            self.cutoff == other.cutoff
            and len(mine) == len(theirs)
            and all(np.shape(a) == np.shape(b) and np.array_equal(a, b) for a, b in zip(mine, theirs))
        )

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "cutoff": self.cutoff,
            "layers": [
                {
                    "weight_shape": list(np.shape(W)),
                    "weight": np.asarray(W, dtype=float).ravel().tolist(),
                    "bias": np.asarray(b, dtype=float).tolist(),
                }
                for W, b in self.alpha
            ],
            "omega": np.asarray(self.omega, dtype=float).tolist(),
        }

    @classmethod
    def from_dict(cls, doc) -> "MLPParameters":
        alpha = []
        for layer in doc["layers"]:
            W = np.asarray(layer["weight"], dtype=np.float64).reshape(layer["weight_shape"])
            alpha.append((W, np.asarray(layer["bias"], dtype=np.float64)))
        params = cls(alpha, np.asarray(doc["omega"], dtype=np.float64), doc.get("cutoff", "box"))
        _check_shapes(params)
        return params

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "MLPParameters":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _check_shapes(params):
    fan_in = params.input_dim
    for W, b in params.alpha:
        if np.shape(W)[0] != fan_in or np.shape(b) != (np.shape(W)[1],):
            raise ValueError("inconsistent layer shapes")
        fan_in = np.shape(W)[1]
    if np.shape(params.omega) != (fan_in,):
        raise ValueError("omega length must equal the last hidden width")


def glorot_uniform(rng, fan_in, fan_out, shape=None):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


def init_parameters(arch: Architecture, seed) -> MLPParameters:
    """Glorot-uniform weights, zero biases, Glorot-uniform ``omega``."""
    rng = np.random.default_rng(seed)
    alpha = []
    fan_in = arch.input_dim
    for width in arch.widths:
        alpha.append((glorot_uniform(rng, fan_in, width), np.zeros(width)))
        fan_in = width
    omega = glorot_uniform(rng, fan_in, 1, shape=(fan_in,))
    return MLPParameters(alpha, omega, arch.cutoff)


# -- cut-off -----------------------------------------------------------------


def _box_factors(x):
    """Per-axis ``t (t - pi)`` and its derivative ``2t - pi``."""
    p = K.mul(x, K.sub(x, DOMAIN_LENGTH))
    dp = K.sub(K.mul(2.0, x), DOMAIN_LENGTH)
    return p, dp


def cutoff_value(x):
    """``xi(x) = prod_i x_i (x_i - pi)``, zero exactly on the boundary of (0, pi)^d."""
    x = np.asarray(x, dtype=np.float64)
    p, _ = _box_factors(x)
    out = p[..., 0]
    for i in range(1, x.shape[-1]):
        out = K.mul(out, p[..., i])
    return out


def cutoff_gradient(x):
    """Closed-form gradient of :func:`cutoff_value`, shape ``(..., d)``."""
    x = np.asarray(x, dtype=np.float64)
    p, dp = _box_factors(x)
    d = x.shape[-1]
    cols = []
    for i in range(d):
        col = dp[..., i]
        for j in range(d):
            if j != i:
                col = K.mul(col, p[..., j])
        cols.append(col)
    return np.stack(cols, axis=-1)


def _cutoff_factor(X):
    """The cut-off as a dual/tape/array factor of shape ``(..., 1)``."""
    if isinstance(X, Dual):
        x = ops.value(X.value)
        grad = cutoff_gradient(x)
        return Dual(cutoff_value(x)[..., None], np.moveaxis(grad, -1, 0)[..., None])
    if isinstance(X, Var):
        x = X.value
        grad = cutoff_gradient(x)
        return ops.record_custom(
            cutoff_value(x)[..., None],
            (X,),
            lambda g, out, args, needs: (ops.mul(g, grad),),
        )
    return cutoff_value(X)[..., None]


def check_domain(X):
    x = ops.value(X)
    if np.any(x < 0.0) or np.any(x > DOMAIN_LENGTH):
        raise ValueError("point outside the closed domain [0, pi]^d")


# -- evaluation ----------------------------------------------------------------


def hidden_forward(alpha, X):
    """``x_L(x)``: the activated hidden stack without the cut-off."""
    h = X
    for W, b in alpha:
        h = ops.tanh(ops.add(ops.matmul(h, W), b))
    return h


def eval_components(params: MLPParameters, X):
    """``u_alpha(X)``, shape ``(..., N)``; ``X`` may be an array, Dual or Var."""
    if params.cutoff == "none":
        return hidden_forward(params.alpha, X)
    check_domain(X)
    return ops.mul(_cutoff_factor(X), hidden_forward(params.alpha, X))


def eval_scalar(params: MLPParameters, X):
    """``u(X) = u_alpha(X) @ omega``."""
    return ops.matmul(eval_components(params, X), params.omega)


def _as_points(X, d):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1 and d == 1 and X.shape != (1,):
        X = X[:, None]
    return np.atleast_2d(X)


def _tape_of(params):
    for a in params.arrays():
        if isinstance(a, Var):
            return a.tape
    return None


def spatial_gradient(params: MLPParameters, X, mode="forward", components=False):
    """Values and spatial gradients of the trial function on a batch.

    Returns ``(u, grad)`` with ``grad`` laid out as ``(d, K)`` for the scalar
    trial function or ``(d, K, N)`` for the spanning functions.  Forward mode
    seeds ``d`` tangents; backward mode runs one reverse sweep for the scalar
    output and ``N`` sweeps for the components.  When ``params`` hold tape
    variables the result stays on that tape, so it can be differentiated
    with respect to the parameters.
    """
    X = _as_points(X, params.input_dim)
    fn = eval_components if components else eval_scalar
    if mode == "forward":
        out = fn(params, engine.seed(X))
        return out.value, out.tangent
    if mode != "backward":
        raise ValueError(f"unknown AD mode {mode!r}")

    tape = _tape_of(params)
    nested = tape is not None
    if not nested:
        tape = Tape()
    Xv = tape.variable(X)
    out = fn(params, Xv)
    if not components:
        g = engine.grad(out, Xv, seed=np.ones(out.shape), create_graph=nested)
        return (out if nested else out.value), ops.transpose(g, (1, 0))
    if nested:
        raise NotImplementedError("component gradients by reverse sweeps need untaped parameters")
    n = out.shape[-1]
    grads = []
    for j in range(n):
        seed = np.zeros(out.shape)
        seed[:, j] = 1.0
        grads.append(engine.grad(out, Xv, seed=seed))
    return out.value, np.stack(grads, axis=-1).transpose(1, 0, 2)
