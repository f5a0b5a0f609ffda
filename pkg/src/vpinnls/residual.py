"""Residual systems, matrix-free losses and error measures.

With orthonormal test functions the discrete loss is

    L = sum_m ( b(u, v_m) - l(v_m) )^2,

where ``b(u, v) = (grad u, grad v)`` in the weak form and ``(u, -laplace v)``
in the ultraweak form, and ``l(v) = (f, v)``.  All integrals use one shared
quadrature batch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import network
from .basis import Projection
from .engine import ops

VALIDATION_CHUNK = 1 << 15


class Formulation(str, enum.Enum):
    WEAK = "weak"
    ULTRAWEAK = "ultraweak"

    @classmethod
    def parse(cls, value) -> "Formulation":
        try:
            return cls(value)
        except ValueError:
            raise ValueError(f"unknown formulation {value!r}") from None


@dataclass
class AssembledSystem:
    """``B`` (M x N) and ``l`` (M,) for one batch: ``r(omega) = B @ omega - l``."""

    B: object
    l: np.ndarray
    batch_id: object = None

    def residual(self, omega):
        return ops.sub(ops.matmul(self.B, omega), self.l)

    def loss(self, omega):
        r = self.residual(omega)
        return ops.sum(ops.mul(r, r))


class FunctionTrial:
    """A hand-coded trial function ``u`` with gradient, treated as a single spanning function."""

    def __init__(self, u, grad):
        self.u, self.grad = u, grad
        self.omega = np.ones(1)

    def values(self, X):
        return np.asarray(self.u(X), dtype=np.float64)

    def gradients(self, X):
        return np.moveaxis(np.asarray(self.grad(X), dtype=np.float64), -1, 0)


def _trial_field(trial, X, formulation, ad_mode, components):
    """The trial quantity paired with the test functions.

    Weak: spatial gradient laid out ``(d, K[, N])``.  Ultraweak: values
    ``(K[, N])``.
    """
    if isinstance(trial, FunctionTrial):
        if formulation is Formulation.WEAK:
            g = trial.gradients(X)
            return g[..., None] if components else g
        u = trial.values(X)
        return u[:, None] if components else u
    if formulation is Formulation.WEAK:
        return network.spatial_gradient(trial, X, mode=ad_mode, components=components)[1]
    fn = network.eval_components if components else network.eval_scalar
    return fn(trial, X)


class Residual:
    """Test basis, quadrature batch and source bundled for one iteration.

    ``l`` is computed once at construction; every call below reuses the same
    points and weights.
    """

    def __init__(self, basis, batch, source, batch_id=None):
        self.basis = basis
        self.batch = batch
        self.batch_id = batch_id
        self.projection = Projection(basis, batch)
        self.l = self.projection.values(np.asarray(source(batch.points), dtype=np.float64))

    def _pair(self, field, formulation):
        if formulation is Formulation.WEAK:
            return self.projection.gradients(field)
        return ops.neg(self.projection.laplacians(field))

    def assemble(self, params, formulation="weak", ad_mode="forward") -> AssembledSystem:
        """Full ``B`` with one column per spanning function."""
        formulation = Formulation.parse(formulation)
        field = _trial_field(params, self.batch.points, formulation, ad_mode, components=True)
        return AssembledSystem(self._pair(field, formulation), self.l, self.batch_id)

    def residual(self, params, formulation="weak", ad_mode="forward"):
        """``b(u, v_m) - l(v_m)`` for every mode, without forming ``B``."""
        formulation = Formulation.parse(formulation)
        field = _trial_field(params, self.batch.points, formulation, ad_mode, components=False)
        return ops.sub(self._pair(field, formulation), self.l)

    def loss(self, params, formulation="weak", ad_mode="forward"):
        r = self.residual(params, formulation, ad_mode)
        return ops.sum(ops.mul(r, r))


def assemble(params, basis, batch, source, formulation="weak", ad_mode="forward") -> AssembledSystem:
    return Residual(basis, batch, source).assemble(params, formulation, ad_mode)


def loss_via_action(params, basis, batch, source, formulation="weak", ad_mode="forward"):
    return Residual(basis, batch, source).loss(params, formulation, ad_mode)


# -- validation quantities -----------------------------------------------------


def chunked_residual(params, basis, batch, source, formulation="weak", ad_mode="forward",
                     chunk=VALIDATION_CHUNK) -> np.ndarray:
    """Residual coefficients on a large batch, accumulated over sub-batches."""
    total = None
    for part in batch.split(chunk):
        res = Residual(basis, part, source)
        r = np.asarray(ops.value(res.residual(params, formulation, ad_mode)))
        total = r if total is None else total + r
    return total


@dataclass
class SpectralReport:
    """Per-mode residual coefficients on an extended basis.

    ``modes`` holds the (flattened) mode indices, ``training`` marks the
    modes inside the training cut-off.  In 1D those are the first ``M``
    entries so ``cumulative[M - 1]`` is the training-form loss.
    """

    modes: np.ndarray
    coefficients: np.ndarray
    training: np.ndarray

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.coefficients**2)

    @property
    def training_loss(self) -> float:
        return float(np.sum(self.coefficients[self.training] ** 2))

    @property
    def tail(self) -> float:
        return float(np.sum(self.coefficients[~self.training] ** 2))

    @property
    def total(self) -> float:
        return float(self.cumulative[-1])

    def rows(self):
        cum = self.cumulative
        for i in range(self.coefficients.size):
            label = "x".join(str(int(v)) for v in np.atleast_1d(self.modes[i]))
            yield label, float(self.coefficients[i]), float(cum[i]), bool(self.training[i])


def spectral_report(params, basis, val_batch, source, factor=4, formulation="weak",
                    ad_mode="forward") -> SpectralReport:
    """Residual coefficients on a basis ``factor`` times larger than ``basis``."""
    ext = basis.extended(factor)
    coeffs = chunked_residual(params, ext, val_batch, source, formulation, ad_mode)
    modes = ext.mode_indices()
    inside = np.all(modes <= np.asarray(basis.shape)[None, :], axis=1)
    return SpectralReport(modes if modes.shape[1] > 1 else modes[:, 0], coeffs, inside)


def error_norms(params, problem, val_batch, ad_mode="forward", chunk=VALIDATION_CHUNK):
    """``(||grad(u - u*)||^2, ||grad(u - u*)|| / ||grad u*||)`` on the validation batch."""
    err = 0.0
    for part in val_batch.split(chunk):
        X = part.points
        if isinstance(params, FunctionTrial):
            g = params.gradients(X)
        else:
            g = np.asarray(ops.value(network.spatial_gradient(params, X, mode=ad_mode)[1]))
        diff = g - np.moveaxis(problem.grad(X), -1, 0)
        err += float(np.sum(part.weights * np.sum(diff * diff, axis=0)))
    return err, float(np.sqrt(err) / problem.norm)


__all__ = [
    "AssembledSystem",
    "Formulation",
    "FunctionTrial",
    "Residual",
    "SpectralReport",
    "assemble",
    "chunked_residual",
    "error_norms",
    "loss_via_action",
    "spectral_report",
]
