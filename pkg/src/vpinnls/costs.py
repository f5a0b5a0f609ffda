"""Operation-count benchmarks for spatial AD modes and single optimizer iterations.

Counts come from the engine's kernel-level counter, so the ratios are exact
and reproducible rather than timed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import network
from .basis import SineBasis1D
from .engine import count_scope
from .network import Architecture, init_parameters
from .optim import AdamState, gd_step, lsgd_step
from .quadrature import sample_composite, uniform_partition
from .residual import Residual

IMPLEMENTATIONS = {
    # name: (optimizer, formulation, spatial AD mode)
    "gd-weak-backward": ("adam", "weak", "backward"),
    "lsgd-ultraweak": ("ls-adam", "ultraweak", "backward"),
    "lsgd-weak-forward": ("ls-adam", "weak", "forward"),
    "lsgd-weak-backward": ("ls-adam", "weak", "backward"),
}
BASELINE = "gd-weak-backward"


@dataclass
class BenchConfig:
    """Sweep settings.

    The network is ``depth`` hidden tanh layers of ``width`` followed by an
    activated layer of width ``N`` (the spanning functions).  The optimizer
    sweep links ``M = modes_per_n * N`` and ``K = points_per_n * N``.
    """

    dims: tuple = (1, 2)
    widths_n: tuple = (1, 4, 16, 64)
    sweep_n: tuple = (2, 4, 8, 16, 32, 64, 128, 256)
    width: int = 1024
    depth: int = 5
    modes_per_n: int = 5
    points_per_n: int = 10
    seed: int = 0
    include_512: bool = False

    def __post_init__(self):
        if self.modes_per_n <= 1 or self.points_per_n < self.modes_per_n:
            raise ValueError("the sweep needs N < M <= K")
        if self.include_512 and 512 not in self.sweep_n:
            self.sweep_n = tuple(self.sweep_n) + (512,)

    def architecture(self, d, n, cutoff="none") -> Architecture:
        return Architecture(d, (self.width,) * self.depth + (n,), cutoff=cutoff)


@dataclass
class RatioRow:
    implementation: str
    N: int
    numerator: int
    denominator: int
    d: int = 1
    extra: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.numerator / self.denominator


@dataclass
class RatioTable:
    rows: list = field(default_factory=list)

    def add(self, row: RatioRow):
        self.rows.append(row)

    def select(self, implementation, d=None) -> list:
        return [r for r in self.rows if r.implementation == implementation and (d is None or r.d == d)]

    def ratios(self, implementation, d=None) -> dict:
        return {r.N: r.ratio for r in self.select(implementation, d)}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("implementation", "d", "N", "numerator_ops", "denominator_ops", "ratio"))
            for r in self.rows:
                w.writerow((r.implementation, r.d, r.N, r.numerator, r.denominator, format(r.ratio, ".6g")))

    def format(self) -> str:
        names = list(dict.fromkeys(r.implementation for r in self.rows))
        ns = sorted({r.N for r in self.rows})
        lines = ["implementation".ljust(22) + "".join(f"{n:>10}" for n in ns)]
        for name in names:
            for d in sorted({r.d for r in self.select(name)}):
                vals = self.ratios(name, d)
                label = name if len({r.d for r in self.rows}) == 1 else f"{name} d={d}"
                lines.append(label.ljust(22) + "".join(f"{vals[n]:>10.4f}" if n in vals else " " * 10 for n in ns))
        return "\n".join(lines)


# -- spatial AD cost -----------------------------------------------------------


def _reverse_component_jacobian(params, X):
    network.spatial_gradient(params, X, mode="backward", components=True)


def ad_ratio_sweep(config: BenchConfig = None) -> RatioTable:
    """``ops(grad u_alpha) / ops(u_alpha)`` at one point, per AD mode and (d, N)."""
    config = config or BenchConfig()
    table = RatioTable()
    for d in config.dims:
        X = np.full((1, d), 0.5)
        for n in config.widths_n:
            params = init_parameters(config.architecture(d, n), config.seed)
            base = count_scope(network.eval_components, params, X).total
            fwd = count_scope(network.spatial_gradient, params, X, mode="forward", components=True).total
            bwd = count_scope(_reverse_component_jacobian, params, X).total
            table.add(RatioRow("forward", n, fwd, base, d))
            table.add(RatioRow("backward", n, bwd, base, d))
    return table


# -- single-iteration optimizer cost -------------------------------------------


def _one_iteration(name, params, batch, basis, source, lam):
    optimizer, formulation, ad_mode = IMPLEMENTATIONS[name]

    def run():
        residual = Residual(basis, batch, source)
        if optimizer == "adam":
            state = AdamState.zeros_like(params.arrays())
            gd_step(params, residual, state, formulation, ad_mode)
        else:
            state = AdamState.zeros_like(params.arrays(omega=False))
            lsgd_step(params, residual, state, formulation, ad_mode, lam)

    return count_scope(run).total


def optimizer_cost_sweep(config: BenchConfig = None, implementations=None, progress=None) -> RatioTable:
    """Single-iteration op counts of each implementation against the weak GD baseline.

    All implementations at one ``N`` share the network, batch and basis.
    Rows carry ``net`` (ops of one batch evaluation of the spanning
    functions) and ``per_point`` (total / (K * C_net)) in ``extra``.
    """
    config = config or BenchConfig()
    names = list(implementations or IMPLEMENTATIONS)
    table = RatioTable()
    rng = np.random.default_rng(config.seed)

    def source(p):
        return np.sin(p[:, 0])

    for n in config.sweep_n:
        m, k = config.modes_per_n * n, config.points_per_n * n
        params = init_parameters(config.architecture(1, n, cutoff="box"), config.seed)
        batch = sample_composite(uniform_partition(k // 2), rng)
        basis = SineBasis1D(m)
        net = count_scope(network.eval_components, params, batch.points).total
        denom = _one_iteration(BASELINE, params, batch, basis, source, None)
        for name in names:
            num = denom if name == BASELINE else _one_iteration(name, params, batch, basis, source, None)
            table.add(RatioRow(name, n, num, denom, 1, {"net": net, "per_point": num / net}))
            if progress:
                progress(name, n, num / denom)
    return table


def loglog_fit(ns, values):
    """Slope and R^2 of a least-squares line through ``(log N, log value)``."""
    x, y = np.log(np.asarray(ns, float)), np.log(np.asarray(values, float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    r2 = 1.0 - np.sum(resid**2) / np.sum((y - y.mean()) ** 2)
    return float(slope), float(r2)
