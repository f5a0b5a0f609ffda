import numpy as np
import pytest

from vpinnls.costs import BASELINE, BenchConfig, ad_ratio_sweep, loglog_fit, optimizer_cost_sweep


def test_loglog_fit_recovers_power_law():
    ns = [2, 4, 8, 16, 32]
    slope, r2 = loglog_fit(ns, [3.0 * n**1.5 for n in ns])
    assert slope == pytest.approx(1.5, abs=1e-12) and r2 == pytest.approx(1.0, abs=1e-12)


def test_bench_config_rejects_bad_links():
    with pytest.raises(ValueError):
        BenchConfig(modes_per_n=1)
    assert 512 in BenchConfig(include_512=True).sweep_n


def test_small_optimizer_sweep():
    cfg = BenchConfig(sweep_n=(2, 4, 8), width=16, depth=2)
    table = optimizer_cost_sweep(cfg)
    for n in cfg.sweep_n:
        denoms = {r.denominator for r in table.rows if r.N == n}
        assert len(denoms) == 1
    assert all(v == 1.0 for v in table.ratios(BASELINE).values())
    assert all(v < 1.0 for v in table.ratios("lsgd-ultraweak").values())
    bwd = table.ratios("lsgd-weak-backward")
    assert bwd[2] < bwd[4] < bwd[8]
    assert "lsgd-weak-forward" in table.format()


def test_ad_sweep_forward_flat_backward_grows():
    table = ad_ratio_sweep(BenchConfig(dims=(1,), widths_n=(1, 4, 16), width=16, depth=2))
    fwd, bwd = table.ratios("forward"), table.ratios("backward")
    assert max(fwd.values()) <= 3.0
    assert np.all(np.diff([bwd[n] for n in (1, 4, 16)]) > 0)
