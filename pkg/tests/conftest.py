import numpy as np
import pytest

from vpinnls.network import Architecture, init_parameters


def central_diff(f, x, h=1e-5):
    """Central differences of a scalar function of an array, same shape as ``x``."""
    x = np.array(x, dtype=np.float64)
    out = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        out[idx] = (f(xp) - f(xm)) / (2 * h)
    return out


def rel_err(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def random_params(rng, d, widths, cutoff="box", scale=1.0):
    params = init_parameters(Architecture(d, widths, cutoff=cutoff), rng)
    for W, b in params.alpha:
        W *= scale
        b += 0.1 * rng.standard_normal(b.shape)
    return params


def interior_points(rng, k, d):
    return rng.uniform(0.1, np.pi - 0.1, size=(k, d))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
