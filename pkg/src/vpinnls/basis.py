"""Orthonormal sine test functions on (0, pi)^d.

1D: ``v_m(x) = sin(m x) / (m sqrt(pi/2))``.
2D: ``v_m(x, y) = sin(m1 x) sin(m2 y) / ((pi/2) sqrt(m1^2 + m2^2))``.

Both families are orthonormal for the inner product ``(grad u, grad v)``,
so their Gram matrix is the identity.  2D modes are flattened with ``m1``
fastest: index ``(m2 - 1) * M1 + (m1 - 1)``.
"""

from __future__ import annotations

import numpy as np

from .engine import kernels as K, ops

HALF_PI_SQRT = np.sqrt(np.pi / 2.0)


class SineBasis1D:
    dim = 1

    def __init__(self, modes: int):
        if modes < 1:
            raise ValueError("need at least one mode")
        self.M = int(modes)
        self.shape = (self.M,)
        self.freqs = np.arange(1, self.M + 1, dtype=np.float64)
        self.norms = self.freqs * HALF_PI_SQRT

    @property
    def size(self) -> int:
        return self.M

    def mode_indices(self) -> np.ndarray:
        return np.arange(1, self.M + 1)[:, None]

    def extended(self, factor: int) -> "SineBasis1D":
        return SineBasis1D(self.M * factor)

    def _check(self, m):
        m = int(np.atleast_1d(m)[0])
        if not 1 <= m <= self.M:
            raise IndexError(f"mode {m} outside 1..{self.M}")
        return m

    def value(self, m, x):
        m = self._check(m)
        return np.sin(m * _line(x)) / (m * HALF_PI_SQRT)

    def gradient(self, m, x):
        m = self._check(m)
        return (np.cos(m * _line(x)) / HALF_PI_SQRT)[..., None]

    def laplacian(self, m, x):
        return -float(self._check(m)) ** 2 * self.value(m, x)

    def squared_freqs(self) -> np.ndarray:
        return self.freqs**2


class SineBasis2D:
    dim = 2

    def __init__(self, modes_x: int, modes_y: int):
        if modes_x < 1 or modes_y < 1:
            raise ValueError("need at least one mode per axis")
        self.M1, self.M2 = int(modes_x), int(modes_y)
        self.shape = (self.M1, self.M2)
        self.fx = np.arange(1, self.M1 + 1, dtype=np.float64)
        self.fy = np.arange(1, self.M2 + 1, dtype=np.float64)
        # (M1, M2) grid of normalisation constants
        self.norm_grid = (np.pi / 2.0) * np.sqrt(self.fx[:, None] ** 2 + self.fy[None, :] ** 2)

    @property
    def size(self) -> int:
        return self.M1 * self.M2

    def mode_indices(self) -> np.ndarray:
        m1, m2 = np.meshgrid(np.arange(1, self.M1 + 1), np.arange(1, self.M2 + 1), indexing="xy")
        return np.column_stack([m1.ravel(), m2.ravel()])

    def extended(self, factor: int) -> "SineBasis2D":
        """``factor`` times as many modes overall, split evenly between the axes."""
        per_axis = int(round(np.sqrt(factor)))
        if per_axis**2 != factor:
            raise ValueError("2D bases extend by square factors")
        return SineBasis2D(self.M1 * per_axis, self.M2 * per_axis)

    def _check(self, m):
        m1, m2 = (int(v) for v in m)
        if not (1 <= m1 <= self.M1 and 1 <= m2 <= self.M2):
            raise IndexError(f"mode {(m1, m2)} outside the {self.M1}x{self.M2} basis")
        return m1, m2, (np.pi / 2.0) * np.sqrt(m1**2 + m2**2)

    def value(self, m, x):
        m1, m2, c = self._check(m)
        return np.sin(m1 * _coord(x, 0)) * np.sin(m2 * _coord(x, 1)) / c

    def gradient(self, m, x):
        m1, m2, c = self._check(m)
        x0, x1 = _coord(x, 0), _coord(x, 1)
        gx = m1 * np.cos(m1 * x0) * np.sin(m2 * x1) / c
        gy = m2 * np.sin(m1 * x0) * np.cos(m2 * x1) / c
        return np.stack([gx, gy], axis=-1)

    def laplacian(self, m, x):
        m1, m2, _ = self._check(m)
        return -float(m1**2 + m2**2) * self.value(m, x)

    def squared_freqs(self) -> np.ndarray:
        return (self.fx[:, None] ** 2 + self.fy[None, :] ** 2).T.ravel()


def _line(x):
    """1D points given as ``(K,)``, ``(K, 1)`` or a scalar."""
    x = np.asarray(x, dtype=np.float64)
    return x[..., 0] if x.ndim >= 2 and x.shape[-1] == 1 else x


def _coord(x, i):
    x = np.asarray(x, dtype=np.float64)
    return x[..., i] if x.ndim and x.shape[-1] > i else x


def make_basis(modes):
    if np.ndim(modes) == 0:
        return SineBasis1D(int(modes))
    return SineBasis2D(*modes)


def eval_basis(basis, m, x):
    return basis.value(m, x)


def eval_grad(basis, m, x):
    return basis.gradient(m, x)


def eval_laplacian(basis, m, x):
    return basis.laplacian(m, x)


# -- batched projections -------------------------------------------------------


class Projection:
    """Weighted inner products of batch fields with every test function.

    For a field ``F`` sampled on the batch points (shape ``(K,)`` or
    ``(K, N)``) :meth:`values` returns ``sum_k w_k F(x_k) v_m(x_k)`` for all
    modes (shape ``(M,)`` or ``(M, N)``); :meth:`gradients` takes a gradient
    field ``(d, K[, N])`` against ``grad v_m``; :meth:`laplacians` pairs ``F``
    with ``laplace v_m``.  Inputs may be arrays, tape variables or duals.

    Tensor-product batches in 2D are contracted axis by axis, so the cost is
    ``O(K (M1 + M2))`` per field column instead of ``O(K M)``.
    """

    def __init__(self, basis, batch):
        if batch.dim != basis.dim:
            raise ValueError("basis and batch dimensions differ")
        self.basis = basis
        self.batch = batch
        self.factored = basis.dim == 2 and batch.axes is not None and len(batch.axes) == 2
        if basis.dim == 1:
            self._init_1d()
        elif self.factored:
            self._init_2d()
        else:
            self._init_dense_2d()

    # 1D: dense (K, M) tables with normalisation folded in
    def _init_1d(self):
        b = self.basis
        x = self.batch.points[:, 0]
        arg = K.mul(x[:, None], b.freqs[None, :])
        self.sin = K.div(K.sin(arg), b.norms)
        self.grad = (K.div(K.cos(arg), HALF_PI_SQRT),)
        self.lap = K.mul(self.sin, -b.squared_freqs())
        self.w = self.batch.weights

    def _init_2d(self):
        b = self.basis
        (x, wx), (y, wy) = self.batch.axes
        ax, ay = K.mul(x[:, None], b.fx[None, :]), K.mul(y[:, None], b.fy[None, :])
        sx, sy = K.sin(ax), K.sin(ay)
        cx, cy = K.mul(K.cos(ax), b.fx), K.mul(K.cos(ay), b.fy)
        self.kx, self.ky = x.size, y.size
        self.m1, self.m2 = b.fx.size, b.fy.size
        self.w = K.mul(wx[:, None], wy[None, :])[:, :, None]  # (Kx, Ky, 1)
        # per-axis factor pairs for value / d/dx / d/dy
        self.sin_pair = (np.ascontiguousarray(sx.T), sy)
        self.grad_pairs = ((np.ascontiguousarray(cx.T), sy), (np.ascontiguousarray(sx.T), cy))
        self.inv_norm = 1.0 / b.norm_grid  # (M1, M2)
        self.lap_scale = -(b.fx[:, None] ** 2 + b.fy[None, :] ** 2) / b.norm_grid

    def _init_dense_2d(self):
        b = self.basis
        pts = self.batch.points
        modes = b.mode_indices()
        m1, m2 = modes[:, 0].astype(float), modes[:, 1].astype(float)
        norm = (np.pi / 2.0) * np.sqrt(m1**2 + m2**2)
        ax, ay = K.mul(pts[:, :1], m1[None, :]), K.mul(pts[:, 1:], m2[None, :])
        sx, sy, cx, cy = K.sin(ax), K.sin(ay), K.cos(ax), K.cos(ay)
        self.sin = K.div(K.mul(sx, sy), norm)
        self.grad = (K.div(K.mul(K.mul(cx, sy), m1), norm), K.div(K.mul(K.mul(sx, cy), m2), norm))
        self.lap = K.mul(self.sin, -(m1**2 + m2**2))
        self.w = self.batch.weights

    # -- contractions --------------------------------------------------------

    def _dense(self, F, table):
        n_extra = ops.ndim(F) - 1
        if n_extra == 0:
            return ops.matmul(ops.mul(F, self.w), table)
        return ops.matmul(table.T, ops.mul(F, self.w[:, None]))

    def _factored(self, F, pair):
        """``sum_ij w_ij F_ij[n] A[m1, i] B[j, m2]`` as an (M1, N, M2) array.

        Both contractions are single 2-D products so they stay on BLAS.
        """
        left, right = pair
        shp = ops.shape(F)
        n = shp[1] if len(shp) > 1 else 1
        H = ops.mul(ops.reshape(F, (self.kx, self.ky, n)), self.w)
        H = ops.matmul(left, ops.reshape(H, (self.kx, self.ky * n)))  # (M1, Ky*N)
        H = ops.transpose(ops.reshape(H, (self.m1, self.ky, n)), (0, 2, 1))
        H = ops.matmul(ops.reshape(H, (self.m1 * n, self.ky)), right)  # (M1*N, M2)
        return ops.reshape(H, (self.m1, n, self.m2))

    def _finish(self, R, scale, F):
        R = ops.mul(R, scale[:, None, :])
        R = ops.transpose(R, (2, 0, 1))  # (M2, M1, N): m1 fastest after flattening
        if len(ops.shape(F)) == 1:
            return ops.reshape(R, (self.basis.size,))
        return ops.reshape(R, (self.basis.size, ops.shape(F)[1]))

    def values(self, F):
        if self.factored:
            return self._finish(self._factored(F, self.sin_pair), self.inv_norm, F)
        return self._dense(F, self.sin)

    def laplacians(self, F):
        if self.factored:
            return self._finish(self._factored(F, self.sin_pair), self.lap_scale, F)
        return self._dense(F, self.lap)

    def gradients(self, G):
        """``sum_k w_k grad F(x_k) . grad v_m(x_k)`` for a field laid out ``(d, K[, N])``."""
        d = ops.shape(G)[0]
        if d != self.basis.dim:
            raise ValueError("gradient field has the wrong number of components")
        comps = [_component(G, i) for i in range(d)]
        if self.factored:
            R = None
            for comp, pair in zip(comps, self.grad_pairs):
                part = self._factored(comp, pair)
                R = part if R is None else ops.add(R, part)
            return self._finish(R, self.inv_norm, comps[0])
        out = None
        for comp, table in zip(comps, self.grad):
            part = self._dense(comp, table)
            out = part if out is None else ops.add(out, part)
        return out


def _component(G, i):
    shp = ops.shape(G)
    if shp[0] == 1:
        return ops.reshape(G, shp[1:])
    return ops.take(G, i)


def gram_matrix(basis, batch) -> np.ndarray:
    """Numerical Gram matrix ``sum_k w_k grad v_m(x_k) . grad v_n(x_k)``."""
    proj = Projection(basis, batch)
    if proj.factored:
        proj = Projection.__new__(Projection)
        proj.basis, proj.batch, proj.factored = basis, batch, False
        proj._init_dense_2d()
    G = np.zeros((basis.size, basis.size))
    for table in proj.grad:
        G += table.T @ (proj.w[:, None] * table)
    return G
