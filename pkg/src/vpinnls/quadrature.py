"""Stochastic two-point composite quadrature on (0, pi) and (0, pi)^2.

Each partition cell ``(a_p, a_{p+1})`` receives two points mirrored through
the cell midpoint, ``mid -+ h X_p`` with ``X_p ~ U(-1, 1)`` and ``h`` the
half-length, each weighted by ``h``.  The rule integrates every piecewise
linear function exactly and is an unbiased estimator of the integral for
any integrand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LENGTH = np.pi


@dataclass(frozen=True)
class Partition:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.float64)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a partition needs at least one cell")
        if nodes[0] != 0.0 or nodes[-1] != LENGTH:
            raise ValueError("partition must start at 0 and end at pi")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("partition nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)

    @property
    def cells(self) -> int:
        return self.nodes.size - 1

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.nodes)


@dataclass(frozen=True)
class QuadratureBatch:
    """Points ``(K, d)`` and positive weights ``(K,)``.

    Tensor-product batches also keep their per-axis factors in ``axes``
    (a tuple of ``(points, weights)`` pairs); points are then ordered with the
    last axis fastest, ``k = i * K_y + j``.
    """

    points: np.ndarray
    weights: np.ndarray
    axes: tuple = None

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def integrate(self, values) -> float:
        return float(np.sum(self.weights * np.asarray(values)))

    def __call__(self, func) -> float:
        """``Q(func)`` for a vectorised integrand taking ``(K, d)`` points."""
        return self.integrate(func(self.points))

    def split(self, max_points: int) -> list:
        """Consecutive sub-batches of at most ``max_points`` points (whole x-rows in 2D)."""
        if self.size <= max_points:
            return [self]
        if self.axes is not None and len(self.axes) == 2:
            (x, wx), (y, wy) = self.axes
            rows = max(1, max_points // y.size)
            return [
                product_batch(_line(x[i:i + rows], wx[i:i + rows]), _line(y, wy))
                for i in range(0, x.size, rows)
            ]
        out = []
        for i in range(0, self.size, max_points):
            sl = slice(i, i + max_points)
            pts, w = self.points[sl], self.weights[sl]
            axes = ((pts[:, 0], w),) if self.dim == 1 else None
            out.append(QuadratureBatch(pts, w, axes))
        return out


def _line(x, w) -> QuadratureBatch:
    return QuadratureBatch(x[:, None], w, ((x, w),))


def uniform_partition(cells: int) -> Partition:
    if cells < 1:
        raise ValueError("need at least one cell")
    nodes = LENGTH * np.arange(cells + 1) / cells
    nodes[-1] = LENGTH
    return Partition(nodes)


def graded_partition(cells: int, split: float = 1.0, max_depth: float = 48.0) -> Partition:
    """Half the cells graded geometrically towards 0 on (0, split), half uniform on (split, pi).

    The graded nodes are ``split * r**(j - P')`` for ``j = 1..P'`` with
    ``r = 2`` when ``P' <= max_depth``; longer gradings shrink the ratio so
    the smallest non-zero node stays at ``split * 2**-max_depth``.
    """
    if cells < 2:
        raise ValueError("graded partition needs at least two cells")
    if not 0.0 < split < LENGTH:
        raise ValueError("split must lie inside (0, pi)")
    left = cells // 2
    right = cells - left
    step = min(1.0, max_depth / left)
    j = np.arange(1, left + 1)
    graded = split * np.exp2((j - left) * step)
    graded[-1] = split
    uniform = split + (LENGTH - split) * np.arange(1, right + 1) / right
    uniform[-1] = LENGTH
    return Partition(np.concatenate([[0.0], graded, uniform]))


def sample_composite(partition: Partition, rng) -> QuadratureBatch:
    """Draw one realisation of the composite rule; ``K = 2P`` points."""
    a, b = partition.nodes[:-1], partition.nodes[1:]
    half = (b - a) / 2.0
    mid = (b + a) / 2.0
    X = rng.uniform(-1.0, 1.0, size=a.size)
    points = np.empty(2 * a.size)
    points[0::2] = mid - half * X
    points[1::2] = mid + half * X
    weights = np.repeat(half, 2)
    return QuadratureBatch(points[:, None], weights, ((points, weights),))


def product_batch(bx: QuadratureBatch, by: QuadratureBatch) -> QuadratureBatch:
    (x, wx), (y, wy) = bx.axes[0], by.axes[0]
    X, Y = np.meshgrid(x, y, indexing="ij")
    points = np.column_stack([X.ravel(), Y.ravel()])
    weights = np.outer(wx, wy).ravel()
    return QuadratureBatch(points, weights, ((x, wx), (y, wy)))


def sample_composite_2d(partition_x: Partition, partition_y: Partition, rng) -> QuadratureBatch:
    """Cartesian product of two independent 1D draws; ``K = 4 P_x P_y``."""
    return product_batch(sample_composite(partition_x, rng), sample_composite(partition_y, rng))


def trapezoid_grid(n: int) -> QuadratureBatch:
    """Deterministic trapezoidal rule with ``n`` equispaced nodes on [0, pi]."""
    x = np.linspace(0.0, LENGTH, n)
    w = np.full(n, LENGTH / (n - 1))
    w[[0, -1]] /= 2.0
    return QuadratureBatch(x[:, None], w, ((x, w),))


def make_partition(kind: str, cells: int) -> Partition:
    if kind == "uniform":
        return uniform_partition(cells)
    if kind == "graded":
        return graded_partition(cells)
    raise ValueError(f"unknown partition kind {kind!r}")


def cells_for(points: int) -> int:
    if points < 2 or points % 2:
        raise ValueError("the two-point rule needs an even number of points per axis")
    return points // 2


def validation_grid(points, seed, kind="uniform") -> QuadratureBatch:
    """A fixed composite batch drawn once from ``seed``.

    ``points`` is the 1D point count or a ``(K_x, K_y)`` pair.
    """
    rng = np.random.default_rng(seed)
    if np.ndim(points) == 0:
        return sample_composite(make_partition(kind, cells_for(int(points))), rng)
    kx, ky = points
    return sample_composite_2d(
        make_partition(kind, cells_for(kx)), make_partition(kind, cells_for(ky)), rng
    )
