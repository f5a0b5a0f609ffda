import numpy as np
import pytest

from vpinnls import quadrature as Q
from vpinnls.basis import SineBasis1D
from vpinnls.config import RunConfig
from vpinnls.optim import (AdamState, SingularSystemError, TrainingDiverged, TrainingHistory, adam_step,
                           default_lambda, gd_step, ls_solve, ls_solve_with_fallback, lsgd_step, train)
from vpinnls.problems import get_problem
from vpinnls.residual import AssembledSystem, Residual

from conftest import random_params


def _system(B, l):
    return AssembledSystem(np.asarray(B, float), np.asarray(l, float))


def test_identity_system():
    np.testing.assert_allclose(ls_solve(_system(np.eye(2), [1, 2]), lam=0.0), [1.0, 2.0], rtol=0, atol=1e-14)


def test_one_by_one_with_unit_lambda():
    assert ls_solve(_system([[1.0]], [1.0]), lam=1.0)[0] == pytest.approx(0.5, abs=1e-14)


def test_optimality_condition_on_random_systems():
    rng = np.random.default_rng(11)
    for _ in range(100):
        m = int(rng.integers(3, 40))
        n = int(rng.integers(1, m + 1))
        B = rng.standard_normal((m, n)) * 10.0 ** rng.uniform(-3, 3)
        l = rng.standard_normal(m)
        lam = 10.0 ** rng.uniform(-10, 0)
        w = ls_solve(_system(B, l), lam=lam)
        opt = B.T @ (B @ w - l) + lam * w
        assert np.linalg.norm(opt) <= 1e-10 * max(1.0, np.linalg.norm(B.T @ l))


def test_small_lambda_example():
    rng = np.random.default_rng(2)
    B, l = rng.standard_normal((8, 3)), rng.standard_normal(8)
    w = ls_solve(_system(B, l), lam=1e-8)
    assert np.linalg.norm(B.T @ (B @ w - l) + 1e-8 * w) <= 1e-10 * np.linalg.norm(B.T @ l)


def test_rank_deficient_without_regularization():
    B = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    with pytest.raises(SingularSystemError):
        ls_solve(_system(B, [1, 2, 3]), lam=0.0)
    w = ls_solve(_system(B, [1, 2, 3]), lam=1e-6)
    assert np.all(np.isfinite(w))
    w2 = ls_solve_with_fallback(_system(B, [1, 2, 3]), 0.0)
    np.testing.assert_allclose(w2, ls_solve(_system(B, [1, 2, 3])), rtol=1e-12)


def test_underdetermined_without_regularization():
    with pytest.raises(SingularSystemError):
        ls_solve(_system(np.ones((1, 2)), [1.0]), lam=0.0)


def test_default_lambda_is_scale_relative():
    B = np.arange(12.0).reshape(4, 3)
    assert default_lambda(B) == pytest.approx(1e-12 * np.sum(B**2) / 3)
    assert default_lambda(10 * B) == pytest.approx(100 * default_lambda(B))


def test_inner_problem_descent():
    rng = np.random.default_rng(4)
    for _ in range(20):
        B, l = rng.standard_normal((10, 4)), rng.standard_normal(10)
        lam = 1e-3
        w = ls_solve(_system(B, l), lam=lam)
        other = rng.standard_normal(4)
        assert np.sum((B @ w - l) ** 2) <= np.sum((B @ other - l) ** 2) + lam * other @ other + 1e-12


# -- Adam ----------------------------------------------------------------------


def test_zero_gradient_leaves_parameters():
    p = [np.array([1.0, -2.0]), np.array([[3.0]])]
    state = AdamState.zeros_like(p)
    out = adam_step(state, p, [np.zeros(2), np.zeros((1, 1))])
    for a, b in zip(out, p):
        np.testing.assert_array_equal(a, b)
    assert state.t == 1


def test_first_adam_step():
    state = AdamState.zeros_like([np.zeros(1)])
    (theta,) = adam_step(state, [np.zeros(1)], [np.array([10.0])])
    assert theta[0] == pytest.approx(-1e-3 * 10 / (10 + 1e-7), rel=1e-12)
    assert theta[0] == pytest.approx(-1e-3, rel=1e-6)


def test_adam_shape_checks():
    state = AdamState.zeros_like([np.zeros(2)])
    with pytest.raises(ValueError):
        adam_step(state, [np.zeros(2)], [np.zeros(3)])


# -- steps ---------------------------------------------------------------------


def _instance(rng):
    params = random_params(rng, 1, (4, 4, 4))
    basis = SineBasis1D(8)
    batch = Q.sample_composite(Q.uniform_partition(32), rng)
    return params, Residual(basis, batch, get_problem("smooth1d").f)


def test_lsgd_step_records_solved_omega(rng):
    params, res = _instance(rng)
    state = AdamState.zeros_like(params.arrays(omega=False))
    new, loss, evaluated = lsgd_step(params, res, state, "weak", "forward", lam=1e-12)
    system = res.assemble(params)
    omega = ls_solve(system, lam=1e-12)
    np.testing.assert_allclose(evaluated.omega, omega, rtol=1e-12)
    assert loss == pytest.approx(float(system.loss(omega)), rel=1e-10)
    assert loss <= float(system.loss(params.omega)) + 1e-12 * params.omega @ params.omega
    for a, b in zip(evaluated.arrays(omega=False), params.arrays(omega=False)):
        np.testing.assert_array_equal(a, b)
    assert any(not np.array_equal(a, b) for a, b in zip(new.arrays(omega=False), params.arrays(omega=False)))


def test_gd_step_reduces_loss_on_fixed_batch(rng):
    params, res = _instance(rng)
    state = AdamState.zeros_like(params.arrays(), lr=1e-3)
    losses = []
    for _ in range(30):
        params, loss, _ = gd_step(params, res, state, "weak", "backward")
        losses.append(loss)
    assert losses[-1] < losses[0]


# -- training loop -------------------------------------------------------------


def test_zero_iterations_give_initial_record():
    _, hist, _ = train(RunConfig(problem="sine1d", iters=0))
    assert len(hist) == 1 and hist.final["iteration"] == 0
    assert hist.final["relative_error"] is not None


def test_history_length_and_determinism(tmp_path):
    cfg = RunConfig(problem="sine1d", optimizer="ls-adam", iters=5, seed=3)
    p1, h1, _ = train(cfg)
    p2, h2, _ = train(cfg)
    assert len(h1) == 6
    assert p1 == p2
    h1.write_csv(tmp_path / "a.csv")
    h2.write_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_eval_every_leaves_gaps(tmp_path):
    _, hist, _ = train(RunConfig(problem="sine1d", optimizer="adam", iters=5, eval_every=2))
    evaluated = [r["iteration"] for r in hist.records if r["relative_error"] is not None]
    assert evaluated == [0, 2, 4, 5]
    hist.write_csv(tmp_path / "h.csv")
    back = TrainingHistory.read_csv(tmp_path / "h.csv")
    assert [r["iteration"] for r in back.records] == list(range(6))
    assert back.records[1]["relative_error"] is None
    assert back.records[5]["train_loss"] == hist.records[5]["train_loss"]


def test_history_rejects_non_increasing_iterations():
    hist = TrainingHistory()
    hist.append(0, 1.0, 1.0, 1.0, 1.0, 0)
    with pytest.raises(ValueError):
        hist.append(0, 1.0, 1.0, 1.0, 1.0, 0)


def test_final_params_reproduce_final_record():
    cfg = RunConfig(problem="sine1d", optimizer="ls-adam", iters=3)
    params, hist, setup = train(cfg)
    _, err_sq, rel = setup.validate(params)
    assert hist.final["error_sq"] == err_sq and hist.final["relative_error"] == rel


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_is_reported():
    with pytest.raises(TrainingDiverged) as info:
        train(RunConfig(problem="sine1d", optimizer="adam", iters=5, lr=1e300))
    assert info.value.history is not None and len(info.value.history) >= 1


def test_lsgd_beats_gd_on_sine():
    results = {}
    for opt in ("adam", "ls-adam"):
        _, hist, _ = train(RunConfig(problem="sine1d", optimizer=opt, iters=60, eval_every=60))
        results[opt] = hist.final["relative_error"]
    assert results["ls-adam"] < results["adam"]
