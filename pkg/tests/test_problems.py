import numpy as np
import pytest
import sympy as sp

from vpinnls import quadrature as Q
from vpinnls.basis import SineBasis1D, SineBasis2D
from vpinnls.problems import BETA, PROBLEMS, get_problem, rhs_for
from vpinnls.residual import FunctionTrial, loss_via_action

from conftest import central_diff

x, y = sp.symbols("x y", positive=True)
SYMBOLIC = {
    "smooth1d": sp.sin(4 * x) * sp.sin(x / 2),
    "highfreq1d": sp.sin(40 * x) * sp.sin(x / 2),
    "singular1d": x ** sp.Rational(7, 10) * (sp.pi - x),
    "smooth2d": sp.sin(2 * x) * sp.sin(2 * y) * sp.exp((x + y) / 2),
    "highfreq2d": sp.sin(20 * x) * sp.sin(2 * y) * sp.exp((x + y) / 2),
    "sine1d": sp.sin(x),
}


def _symbolic(name):
    u = SYMBOLIC[name]
    syms = (x,) if get_problem(name).dim == 1 else (x, y)
    f = -sum(sp.diff(u, s, 2) for s in syms)
    grads = [sp.diff(u, s) for s in syms]
    return syms, u, f, grads


def _points(rng, dim, n=100):
    return rng.uniform(0.05, np.pi - 0.05, (n, dim))


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_source_is_negative_laplacian(name, rng):
    prob = get_problem(name)
    syms, u, f, grads = _symbolic(name)
    P = _points(rng, prob.dim)
    args = [P[:, i] for i in range(prob.dim)]
    np.testing.assert_allclose(prob.u(P), sp.lambdify(syms, u, "numpy")(*args), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(rhs_for(name)(P), sp.lambdify(syms, f, "numpy")(*args), rtol=1e-10, atol=1e-9)
    ref = np.column_stack([np.broadcast_to(sp.lambdify(syms, g, "numpy")(*args), len(P)) for g in grads])
    np.testing.assert_allclose(prob.grad(P), ref, rtol=1e-11, atol=1e-11)


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_gradient_matches_finite_differences(name, rng):
    prob = get_problem(name)
    for p in _points(rng, prob.dim, 100):
        fd = central_diff(lambda z: float(prob.u(z[None])[0]), p, h=1e-6)
        np.testing.assert_allclose(prob.grad(p[None])[0], fd, rtol=1e-6, atol=1e-6)


def test_smooth_source_closed_form(rng):
    X = _points(rng, 1)
    t = X[:, 0]
    expected = 16.25 * np.sin(4 * t) * np.sin(t / 2) - 4 * np.cos(4 * t) * np.cos(t / 2)
    np.testing.assert_allclose(rhs_for("smooth1d")(X), expected, rtol=1e-12, atol=1e-12)


def test_singular_source_closed_form(rng):
    X = _points(rng, 1)
    t, b = X[:, 0], BETA
    expected = np.pi * b * (1 - b) * t ** (b - 2) + b * (b + 1) * t ** (b - 1)
    np.testing.assert_allclose(rhs_for("singular1d")(X), expected, rtol=1e-14)


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_solution_vanishes_on_boundary(name, rng):
    prob = get_problem(name)
    t = rng.uniform(0, np.pi, 5)
    if prob.dim == 1:
        B = np.array([[0.0], [np.pi]])
    else:
        B = np.concatenate([np.c_[t, 0 * t], np.c_[t, np.pi + 0 * t], np.c_[0 * t, t], np.c_[np.pi + 0 * t, t]])
    np.testing.assert_allclose(prob.u(B), 0.0, atol=1e-12)


@pytest.mark.parametrize("name", ["smooth1d", "highfreq1d", "smooth2d", "highfreq2d", "sine1d"])
def test_energy_norm_matches_symbolic_integral(name):
    prob = get_problem(name)
    syms, u, _, grads = _symbolic(name)
    integrand = sum(g**2 for g in grads)
    bounds = [(s, 0, sp.pi) for s in syms]
    exact = float(sp.integrate(sp.expand(integrand), *bounds))
    assert prob.norm_sq == pytest.approx(exact, rel=1e-11)


def test_singular_norm_against_mpmath():
    import mpmath

    mpmath.mp.dps = 30
    b = mpmath.mpf(7) / 10

    def du2(t):
        return (b * t ** (b - 1) * (mpmath.pi - t) - t**b) ** 2

    exact = float(mpmath.quad(du2, [0, 1, mpmath.pi]))
    assert get_problem("singular1d").norm_sq == pytest.approx(exact, rel=1e-11)


def test_sine_norm_is_half_pi():
    assert get_problem("sine1d").norm_sq == np.pi / 2


def test_default_discretizations():
    assert (get_problem("smooth1d").width, get_problem("smooth1d").modes, get_problem("smooth1d").points) == (16, 32, 1024)
    assert get_problem("smooth1d").val_points == 8192
    assert get_problem("highfreq1d").width == 64
    assert get_problem("singular1d").modes == 128 and get_problem("singular1d").partition == "graded"
    p = get_problem("highfreq2d")
    assert (p.width, p.modes, p.points, p.val_points) == (128, (64, 16), (512, 128), (1024, 256))
    p = get_problem("smooth2d")
    assert (p.width, p.modes, p.points, p.val_points) == (32, (8, 8), (128, 128), (256, 256))


def test_unknown_problem():
    with pytest.raises(ValueError):
        get_problem("nope")


@pytest.mark.parametrize("name", ["smooth1d", "highfreq1d", "sine1d", "smooth2d", "highfreq2d"])
def test_exact_solution_has_negligible_residual(name, rng):
    prob = get_problem(name)
    trial = FunctionTrial(prob.u, prob.grad)
    if prob.dim == 1:
        basis = SineBasis1D(prob.modes)
        batch = Q.sample_composite(Q.uniform_partition(4 * prob.points), rng)
    else:
        basis = SineBasis2D(*prob.modes)
        kx, ky = prob.val_points
        batch = Q.sample_composite_2d(Q.uniform_partition(kx), Q.uniform_partition(ky), rng)
    loss = loss_via_action(trial, basis, batch, prob.f)
    zero = loss_via_action(FunctionTrial(lambda p: 0 * p[:, 0], lambda p: 0 * p), basis, batch, prob.f)
    assert loss < 1e-6 * zero


def test_exact_singular_solution_residual_on_graded_batch(rng):
    prob = get_problem("singular1d")
    trial = FunctionTrial(prob.u, prob.grad)
    basis = SineBasis1D(prob.modes)
    batch = Q.sample_composite(Q.graded_partition(prob.val_points // 2), rng)
    loss = loss_via_action(trial, basis, batch, prob.f)
    zero = loss_via_action(FunctionTrial(lambda p: 0 * p[:, 0], lambda p: 0 * p), basis, batch, prob.f)
    assert loss < 1e-2 * zero
