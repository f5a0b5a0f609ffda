"""Adam and the hybrid least-squares / Adam optimizer.

The hybrid step solves the regularized linear least-squares problem for the
output coefficients ``omega`` exactly, then takes an Adam step on the hidden
parameters ``alpha`` using the loss re-evaluated with that ``omega`` held
fixed.  Because ``omega`` minimizes the loss for the current ``alpha``, the
partial derivative in ``alpha`` is also the total derivative of
``alpha -> min_omega L(alpha, omega)``; nothing is differentiated through
the solve.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_triangular

from . import quadrature as Q
from .basis import make_basis
from .config import RunConfig
from .engine import Tape, backward, counting, kernels as K, ops, record
from .network import Architecture, MLPParameters, init_parameters
from .problems import get_problem
from .residual import Formulation, Residual, chunked_residual, error_norms

log = logging.getLogger(__name__)

BETA1, BETA2, EPSILON, LEARNING_RATE = 0.9, 0.999, 1e-7, 1e-3


class SingularSystemError(np.linalg.LinAlgError):
    """The unregularized least-squares matrix is rank deficient."""


class TrainingDiverged(RuntimeError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history


# -- Adam ----------------------------------------------------------------------


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0
    lr: float = LEARNING_RATE
    beta1: float = BETA1
    beta2: float = BETA2
    eps: float = EPSILON

    @classmethod
    def zeros_like(cls, arrays, **kw) -> "AdamState":
        return cls([np.zeros(np.shape(a)) for a in arrays], [np.zeros(np.shape(a)) for a in arrays], **kw)


def adam_step(state: AdamState, params: list, grads: list) -> list:
    """Bias-corrected Adam update; returns new arrays and advances ``state`` in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("parameter, gradient and moment lists differ in length")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        if np.shape(p) != np.shape(g):
            raise ValueError("gradient shape does not match its parameter")
        state.m[i] = K.add(K.mul(b1, state.m[i]), K.mul(1.0 - b1, g))
        state.v[i] = K.add(K.mul(b2, state.v[i]), K.mul(1.0 - b2, K.mul(g, g)))
        m_hat = K.div(state.m[i], c1)
        v_hat = K.div(state.v[i], c2)
        step = K.div(K.mul(state.lr, m_hat), K.add(K.sqrt(v_hat), state.eps))
        out.append(K.sub(p, step))
    return out


# -- least squares -------------------------------------------------------------


LAMBDA_SCALE = 1e-12


def default_lambda(B, scale=None) -> float:
    """``scale * ||B||_F^2 / N``: small relative to the mean squared column norm."""
    B = np.asarray(B)
    scale = LAMBDA_SCALE if scale is None else scale
    return scale * float(np.sum(B * B)) / B.shape[1]


def _record_qr_cost(m, n):
    # Householder QR of an m x n matrix, Q^T b and back substitution
    flops = 2 * m * n * n - (2 * n**3) // 3 + 4 * m * n + n * n
    record("mul", flops // 2)
    record("add", flops - flops // 2)
    record("div", n)


def ls_solve(system, lam=None, rcond=None) -> np.ndarray:
    """``argmin ||B w - l||^2 + lam ||w||^2`` via QR of the stacked matrix ``[B; sqrt(lam) I]``.

    ``lam=None`` uses :func:`default_lambda`.  With ``lam == 0`` a
    numerically rank-deficient ``B`` raises :class:`SingularSystemError`.
    """
    B = np.asarray(ops.value(system.B), dtype=np.float64)
    l = np.asarray(ops.value(system.l), dtype=np.float64)
    if B.ndim != 2 or l.shape != (B.shape[0],):
        raise ValueError("B must be M x N and l of length M")
    m, n = B.shape
    lam = default_lambda(B) if lam is None else float(lam)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if lam > 0:
        A = np.vstack([B, math.sqrt(lam) * np.eye(n)])
        rhs = np.concatenate([l, np.zeros(n)])
    else:
        A, rhs = B, l
    if A.shape[0] < n:
        raise SingularSystemError("fewer equations than unknowns and no regularization")
    q, r = np.linalg.qr(A, mode="reduced")
    _record_qr_cost(*A.shape)
    diag = np.abs(np.diag(r))
    tol = (rcond if rcond is not None else max(A.shape) * np.finfo(float).eps) * max(diag.max(), 1e-300)
    record("comparison", n)
    if lam == 0 and (diag.min() <= tol or not np.all(np.isfinite(diag))):
        raise SingularSystemError("least-squares matrix is rank deficient; use lambda > 0")
    return solve_triangular(r, q.T @ rhs, lower=False)


def ls_solve_with_fallback(system, lam, fallback=None) -> np.ndarray:
    try:
        return ls_solve(system, lam)
    except SingularSystemError:
        log.warning("singular least-squares system at lambda=0; using the default regularization")
        return ls_solve(system, fallback)


# -- history -------------------------------------------------------------------

HISTORY_COLUMNS = ("iteration", "train_loss", "val_loss", "error_sq", "relative_error", "ops")


@dataclass
class TrainingHistory:
    records: list = field(default_factory=list)
    wall: list = field(default_factory=list)

    def append(self, iteration, train_loss, val_loss, error_sq, relative_error, ops_count, wall=0.0):
        if self.records and iteration <= self.records[-1]["iteration"]:
            raise ValueError("iterations must increase strictly")
        self.records.append(
            dict(
                iteration=int(iteration),
                train_loss=train_loss,
                val_loss=val_loss,
                error_sq=error_sq,
                relative_error=relative_error,
                ops=int(ops_count),
            )
        )
        self.wall.append(float(wall))

    def __len__(self):
        return len(self.records)

    def column(self, name) -> np.ndarray:
        return np.array([np.nan if r[name] is None else r[name] for r in self.records], dtype=float)

    @property
    def final(self) -> dict:
        return self.records[-1]

    def last_evaluated(self) -> dict:
        for rec in reversed(self.records):
            if rec["relative_error"] is not None:
                return rec
        return self.records[-1]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HISTORY_COLUMNS)
            for rec in self.records:
                w.writerow([_fmt(rec[c]) for c in HISTORY_COLUMNS])

    def write_timing(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("iteration", "wall_seconds"))
            for rec, t in zip(self.records, self.wall):
                w.writerow((rec["iteration"], f"{t:.6f}"))

    @classmethod
    def read_csv(cls, path) -> "TrainingHistory":
        hist = cls()
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                vals = {k: (None if row[k] == "" else float(row[k])) for k in HISTORY_COLUMNS[1:5]}
                hist.append(int(row["iteration"]), *vals.values(), int(row["ops"]))
        return hist


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


# -- training ------------------------------------------------------------------


@dataclass
class TrainingSetup:
    """Everything a run needs besides the optimizer: problem, basis, partitions, batches."""

    config: RunConfig
    problem: object
    arch: Architecture
    basis: object
    partitions: tuple
    val_batch: object
    init_seed: np.random.SeedSequence
    batch_seed: np.random.SeedSequence

    @classmethod
    def build(cls, config: RunConfig) -> "TrainingSetup":
        cfg = config.resolved()
        prob = get_problem(cfg.problem)
        arch = Architecture.uniform(prob.dim, cfg.width, cfg.depth)
        basis = make_basis(cfg.modes)
        init_ss, batch_ss, val_ss = np.random.SeedSequence(cfg.seed).spawn(3)
        pts = cfg.points if prob.dim > 1 else (cfg.points,)
        partitions = tuple(Q.make_partition(prob.partition, Q.cells_for(k)) for k in pts)
        val_pts = cfg.val_points if prob.dim > 1 else (cfg.val_points,)
        val_rng = np.random.default_rng(val_ss)
        val_parts = [Q.make_partition(prob.partition, Q.cells_for(k)) for k in val_pts]
        val_batch = _draw(val_parts, val_rng)
        return cls(cfg, prob, arch, basis, partitions, val_batch, init_ss, batch_ss)

    def initial_parameters(self) -> MLPParameters:
        return init_parameters(self.arch, np.random.default_rng(self.init_seed))

    def batch_stream(self):
        rng = np.random.default_rng(self.batch_seed)
        while True:
            yield _draw(self.partitions, rng)

    def residual(self, batch, batch_id=None) -> Residual:
        return Residual(self.basis, batch, self.problem.f, batch_id)

    def validate(self, params):
        """``(val_loss, error_sq, relative_error)`` on the fixed validation batch."""
        cfg = self.config
        r = chunked_residual(params, self.basis, self.val_batch, self.problem.f, cfg.formulation, cfg.ad_mode)
        err_sq, rel = error_norms(params, self.problem, self.val_batch)
        return float(np.sum(r * r)), err_sq, rel


def _draw(partitions, rng):
    if len(partitions) == 1:
        return Q.sample_composite(partitions[0], rng)
    return Q.sample_composite_2d(partitions[0], partitions[1], rng)


def gd_step(params: MLPParameters, residual: Residual, state: AdamState, formulation, ad_mode):
    """One Adam step on all of ``(alpha, omega)``.

    Returns ``(new_params, loss, evaluated)``; ``evaluated`` is the parameter
    set the loss was computed at.
    """
    tape = Tape()
    watched = params.watch(tape)
    loss = residual.loss(watched, formulation, ad_mode)
    leaves = watched.arrays()
    grads = backward(loss, leaves)
    new = adam_step(state, params.arrays(), [grads[v] for v in leaves])
    return MLPParameters.from_arrays(new, cutoff=params.cutoff), float(loss.value), params


def lsgd_step(params: MLPParameters, residual: Residual, state: AdamState, formulation, ad_mode, lam=None):
    """Least squares for ``omega`` then one Adam step on ``alpha`` with ``omega`` frozen.

    Returns ``(new_params, loss, evaluated)`` where ``evaluated`` pairs the
    pre-step ``alpha`` with the freshly solved ``omega``: the state the loss
    was computed at.  ``new_params`` carries that ``omega`` only as a
    placeholder, the next step solves for its own.
    """
    system = residual.assemble(params, formulation, ad_mode)
    omega = ls_solve_with_fallback(system, lam)
    tape = Tape()
    watched = MLPParameters(params.watch(tape, omega=False).alpha, omega, params.cutoff)
    loss = residual.loss(watched, formulation, ad_mode)
    leaves = watched.arrays(omega=False)
    grads = backward(loss, leaves)
    new_alpha = adam_step(state, params.arrays(omega=False), [grads[v] for v in leaves])
    evaluated = MLPParameters(params.alpha, omega, params.cutoff)
    new = MLPParameters.from_arrays(new_alpha, omega=omega, cutoff=params.cutoff)
    return new, float(loss.value), evaluated


def train(config: RunConfig, params: MLPParameters = None, setup: TrainingSetup = None, callback=None):
    """Run the configured optimizer; returns ``(params, history, setup)``.

    Record 0 is the initial state.  Its training loss is measured on the
    first batch, the same batch step 1 then uses.  Record ``t`` describes the
    parameters step ``t`` computed its loss at, and the returned ``params``
    are those of the last step, so they reproduce the final record.
    """
    setup = setup or TrainingSetup.build(config)
    cfg = setup.config
    form = Formulation.parse(cfg.formulation)
    params = (params or setup.initial_parameters()).copy()
    evaluated = params
    hybrid = cfg.optimizer == "ls-adam"
    state = AdamState.zeros_like(params.arrays(omega=not hybrid), lr=cfg.lr)
    history = TrainingHistory()
    batches = setup.batch_stream()
    total_ops = 0
    t0 = time.perf_counter()

    residual = setup.residual(next(batches), batch_id=1)
    init_loss = float(ops.value(residual.loss(params, form, cfg.ad_mode)))
    history.append(0, init_loss, *setup.validate(params), 0, time.perf_counter() - t0)

    for it in range(1, cfg.iters + 1):
        if it > 1:
            residual = setup.residual(next(batches), batch_id=it)
        with counting() as counter:
            if hybrid:
                params, loss, evaluated = lsgd_step(params, residual, state, form, cfg.ad_mode, cfg.lam)
            else:
                params, loss, evaluated = gd_step(params, residual, state, form, cfg.ad_mode)
        total_ops += counter.total
        evaluate = it % cfg.eval_every == 0 or it == cfg.iters
        metrics = setup.validate(evaluated) if evaluate else (None, None, None)
        history.append(it, loss, *metrics, total_ops, time.perf_counter() - t0)
        bad = not np.isfinite(loss) or (evaluate and not np.isfinite(metrics[0]))
        if bad or not all(np.all(np.isfinite(a)) for a in params.arrays()):
            raise TrainingDiverged(f"non-finite loss at iteration {it}", history)
        if callback is not None:
            callback(it, evaluated, history)
    return evaluated, history, setup


def train_gd(config: RunConfig, **kw):
    return train(_with_optimizer(config, "adam"), **kw)


def train_lsgd(config: RunConfig, **kw):
    return train(_with_optimizer(config, "ls-adam"), **kw)


def _with_optimizer(config, name):
    return replace(config, optimizer=name)
