"""Run orchestration and result files.

A run directory holds ``history.csv`` (one row per iteration, 17 significant
digits), ``timing.csv`` (wall-clock seconds, kept apart so histories are
byte-reproducible), ``spectrum.csv`` (initial and final residual spectra),
``params.json`` and ``config-echo.json``.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig
from .network import MLPParameters
from .optim import TrainingDiverged, TrainingSetup, train
from .residual import spectral_report

log = logging.getLogger(__name__)


def write_spectra(path, reports: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("stage", "mode", "coefficient", "cumulative", "in_training"))
        for stage, rep in reports.items():
            for mode, coef, cum, inside in rep.rows():
                w.writerow((stage, mode, format(coef, ".17g"), format(cum, ".17g"), int(inside)))


def _spectrum(setup, params):
    cfg = setup.config
    return spectral_report(params, setup.basis, setup.val_batch, setup.problem.f,
                           factor=cfg.spectrum_factor, formulation=cfg.formulation)


def run(config: RunConfig, out=None, params: MLPParameters = None, setup=None, spectra=True):
    """Train and write the result files; returns ``(params, history)``.

    On divergence the partial history is written before the error propagates.
    """
    setup = setup or TrainingSetup.build(config)
    cfg = setup.config
    out = Path(out or cfg.out or "runs")
    out.mkdir(parents=True, exist_ok=True)
    replace(cfg, out=str(out)).save(out / "config-echo.json")
    start = (params or setup.initial_parameters()).copy()
    initial = _spectrum(setup, start) if spectra else None
    try:
        final, history, _ = train(cfg, params=start, setup=setup)
    except TrainingDiverged as exc:
        if exc.history is not None:
            exc.history.write_csv(out / "history.csv")
            exc.history.write_timing(out / "timing.csv")
        raise
    history.write_csv(out / "history.csv")
    history.write_timing(out / "timing.csv")
    final.save(out / "params.json")
    if spectra:
        write_spectra(out / "spectrum.csv", {"initial": initial, "final": _spectrum(setup, final)})
    return final, history


def compare(config: RunConfig, other: RunConfig = None, out=None, spectra=True):
    """Adam and LS/Adam from identical initial parameters and batches.

    ``other`` defaults to ``config`` with the optimizer swapped.  Writes one
    sub-directory per optimizer plus ``compare.csv`` with the side-by-side
    loss and error series.  Returns ``{optimizer: (params, history)}``.
    """
    first = replace(config, optimizer="adam")
    second = replace(other or config, optimizer="ls-adam")
    a, b = first.resolved(), second.resolved()
    for name in ("problem", "width", "depth", "seed", "modes", "points", "val_points"):
        if getattr(a, name) != getattr(b, name):
            raise ValueError(f"compared runs differ in {name}")
    out = Path(out or config.out or "runs")
    setups = {c.optimizer: TrainingSetup.build(c) for c in (a, b)}
    init = setups["adam"].initial_parameters()
    if init != setups["ls-adam"].initial_parameters():
        raise ValueError("compared runs do not share their initialization")
    results = {}
    for name, setup in setups.items():
        results[name] = run(setup.config, out=out / name, params=init, setup=setup, spectra=spectra)
    write_comparison(out / "compare.csv", {k: v[1] for k, v in results.items()})
    return results


def write_comparison(path, histories: dict) -> None:
    names = list(histories)
    cols = ("train_loss", "val_loss", "error_sq", "relative_error")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration"] + [f"{n}_{c}" for n in names for c in cols])
        n_rows = min(len(h) for h in histories.values())
        for i in range(n_rows):
            row = [histories[names[0]].records[i]["iteration"]]
            for n in names:
                rec = histories[n].records[i]
                row += ["" if rec[c] is None else format(rec[c], ".17g") for c in cols]
            w.writerow(row)


def loss_error_correlation(history) -> float:
    """Pearson correlation of log validation loss against log squared error."""
    loss, err = history.column("val_loss"), history.column("error_sq")
    ok = np.isfinite(loss) & np.isfinite(err) & (loss > 0) & (err > 0)
    if ok.sum() < 2:
        return float("nan")
    return float(np.corrcoef(np.log(loss[ok]), np.log(err[ok]))[0, 1])


def summary(history) -> dict:
    rec = history.last_evaluated()
    return {
        "iterations": rec["iteration"],
        "train_loss": rec["train_loss"],
        "val_loss": rec["val_loss"],
        "error_sq": rec["error_sq"],
        "relative_error": rec["relative_error"],
        "loss_error_correlation": loss_error_correlation(history),
    }


def dump_summary(path, summaries: dict) -> None:
    Path(path).write_text(json.dumps(summaries, indent=2, sort_keys=True) + "\n")
