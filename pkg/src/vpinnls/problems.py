"""Manufactured Poisson problems ``-laplace u* = f`` on (0, pi)^d with u* = 0 on the boundary."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate

BETA = 0.7


@dataclass(frozen=True)
class ProblemSpec:
    """A manufactured solution with its source and default discretization.

    ``u``, ``grad`` and ``f`` take points of shape ``(K, d)``; ``grad``
    returns ``(K, d)``.  ``norm_sq`` is ``||grad u*||^2`` over the domain.
    """

    name: str
    dim: int
    u: Callable
    grad: Callable
    f: Callable
    width: int
    modes: object
    points: object
    val_points: object
    partition: str = "uniform"
    exact_norm_sq: float = None
    norm_integrand: Callable = field(default=None, repr=False)

    @cached_property
    def norm_sq(self) -> float:
        if self.exact_norm_sq is not None:
            return float(self.exact_norm_sq)
        return float(f"{self.norm_integrand():.12g}")

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq))


def _x(p):
    return np.asarray(p, dtype=np.float64)[..., 0]


def _y(p):
    return np.asarray(p, dtype=np.float64)[..., 1]


def _quad(func, a=0.0, b=np.pi):
    val, _ = integrate.quad(func, a, b, limit=500, epsabs=1e-14, epsrel=1e-13)
    return val


# -- 1D: sin(k x) sin(x/2) --------------------------------------------------


def _sine_product(k):
    def u(p):
        x = _x(p)
        return np.sin(k * x) * np.sin(x / 2)

    def du(x):
        return k * np.cos(k * x) * np.sin(x / 2) + 0.5 * np.sin(k * x) * np.cos(x / 2)

    def grad(p):
        return du(_x(p))[..., None]

    def f(p):
        x = _x(p)
        return (k * k + 0.25) * np.sin(k * x) * np.sin(x / 2) - k * np.cos(k * x) * np.cos(x / 2)

    def norm():
        # break points at the zeros of sin(k x) keep quad from under-resolving high k
        breaks = np.linspace(0.0, np.pi, int(2 * k) + 1)
        return sum(_quad(lambda x: du(x) ** 2, a, b) for a, b in zip(breaks[:-1], breaks[1:]))

    return u, grad, f, norm


def _sine_problem(name, k, width):
    u, grad, f, norm = _sine_product(k)
    modes = 2 * width
    return ProblemSpec(name, 1, u, grad, f, width, modes, 32 * modes, 256 * modes,
                       norm_integrand=norm)


# -- 1D singular: x^beta (pi - x) ----------------------------------------------


def _singular():
    b = BETA

    def u(p):
        x = _x(p)
        return x**b * (np.pi - x)

    def du(x):
        return b * x ** (b - 1) * (np.pi - x) - x**b

    def grad(p):
        return du(_x(p))[..., None]

    def f(p):
        x = _x(p)
        return np.pi * b * (1 - b) * x ** (b - 2) + b * (b + 1) * x ** (b - 1)

    def norm():
        # split at 1 so the integrable x^(2 beta - 2) endpoint is handled cleanly
        return _quad(lambda x: du(x) ** 2, 0.0, 1.0) + _quad(lambda x: du(x) ** 2, 1.0, np.pi)

    modes = 128
    return ProblemSpec("singular1d", 1, u, grad, f, 16, modes, 32 * modes, 256 * modes,
                       partition="graded", norm_integrand=norm)


# -- 2D: sin(2 eta x) sin(2y) exp((x + y)/2) -----------------------------------


def _separable(eta):
    a = 2.0 * eta

    def g(t, k):
        return np.sin(k * t) * np.exp(t / 2)

    def dg(t, k):
        return (k * np.cos(k * t) + 0.5 * np.sin(k * t)) * np.exp(t / 2)

    def d2g(t, k):
        return ((0.25 - k * k) * np.sin(k * t) + k * np.cos(k * t)) * np.exp(t / 2)

    def u(p):
        return g(_x(p), a) * g(_y(p), 2.0)

    def grad(p):
        x, y = _x(p), _y(p)
        return np.stack([dg(x, a) * g(y, 2.0), g(x, a) * dg(y, 2.0)], axis=-1)

    def f(p):
        x, y = _x(p), _y(p)
        return -(d2g(x, a) * g(y, 2.0) + g(x, a) * d2g(y, 2.0))

    def norm():
        gx = _quad(lambda t: g(t, a) ** 2)
        dgx = _quad(lambda t: dg(t, a) ** 2)
        gy = _quad(lambda t: g(t, 2.0) ** 2)
        dgy = _quad(lambda t: dg(t, 2.0) ** 2)
        return dgx * gy + gx * dgy

    return u, grad, f, norm


def _problem_2d(name, eta, width, modes, points, val_points):
    u, grad, f, norm = _separable(eta)
    return ProblemSpec(name, 2, u, grad, f, width, modes, points, val_points, norm_integrand=norm)


def _sine1d():
    """u* = sin x, a convenience problem with f = sin x and ||u*||^2 = pi/2."""
    def grad(p):
        return np.cos(_x(p))[..., None]

    return ProblemSpec("sine1d", 1, lambda p: np.sin(_x(p)), grad, lambda p: np.sin(_x(p)),
                       4, 8, 256, 2048, exact_norm_sq=np.pi / 2)


PROBLEMS = {
    "smooth1d": _sine_problem("smooth1d", 4.0, 16),
    "highfreq1d": _sine_problem("highfreq1d", 40.0, 64),
    "singular1d": _singular(),
    "smooth2d": _problem_2d("smooth2d", 1, 32, (8, 8), (128, 128), (256, 256)),
    "highfreq2d": _problem_2d("highfreq2d", 10, 128, (64, 16), (512, 128), (1024, 256)),
    "sine1d": _sine1d(),
}


def get_problem(name: str) -> ProblemSpec:
    try:
        return PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None


def rhs_for(problem) -> Callable:
    if isinstance(problem, str):
        problem = get_problem(problem)
    return problem.f
