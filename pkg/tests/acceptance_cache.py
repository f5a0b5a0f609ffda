"""Cached long runs for the acceptance suite.

Training runs and the cost sweep take from minutes to hours on one core, so
their outputs live under ``.acceptance-runs/`` (or ``$VPINNLS_ACCEPTANCE_DIR``)
and are reused whenever the stored config matches the requested one.  Delete
the directory to force fresh runs.  ``python tests/acceptance_cache.py``
fills the cache ahead of a pytest session.
"""

from __future__ import annotations

import csv
import json
import os
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

from vpinnls import costs, driver
from vpinnls.config import RunConfig
from vpinnls.optim import TrainingHistory

ROOT = Path(__file__).resolve().parents[1]
CACHE = Path(os.environ.get("VPINNLS_ACCEPTANCE_DIR", ROOT / ".acceptance-runs"))

SMOOTH_SEEDS = (0, 1, 2, 3, 4)

PAIRS = {
    **{f"smooth1d-seed{s}": RunConfig(problem="smooth1d", iters=1000, seed=s, eval_every=10) for s in SMOOTH_SEEDS},
    # the 1000-iteration figures are read off the same trajectory
    "highfreq1d-seed0": RunConfig(problem="highfreq1d", iters=8000, seed=0, eval_every=500),
    "singular1d-seed0": RunConfig(problem="singular1d", iters=1000, seed=0, eval_every=10),
    "smooth2d-seed0": RunConfig(problem="smooth2d", iters=1000, seed=0, eval_every=50),
    "highfreq2d-seed0": RunConfig(problem="highfreq2d", iters=1000, seed=0, eval_every=50),
}

SWEEP = costs.BenchConfig()


def _key(cfg: RunConfig) -> dict:
    doc = asdict(cfg.resolved())
    doc.pop("out", None)
    return json.loads(json.dumps(doc))


def _matches(run_dir: Path, cfg: RunConfig) -> bool:
    echo = run_dir / "config-echo.json"
    if not (echo.exists() and (run_dir / "history.csv").exists() and (run_dir / "timing.csv").exists()):
        return False
    return _key(RunConfig.load(echo)) == _key(cfg)


class RunResult:
    def __init__(self, run_dir: Path):
        self.dir = run_dir
        self.history = TrainingHistory.read_csv(run_dir / "history.csv")
        with open(run_dir / "timing.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        self.seconds = float(rows[-1]["wall_seconds"])

    @property
    def final_error(self) -> float:
        return self.history.last_evaluated()["relative_error"]

    def error_at(self, iteration: int) -> float:
        rec = self.history.records[iteration]
        if rec["iteration"] != iteration or rec["relative_error"] is None:
            raise LookupError(f"iteration {iteration} was not evaluated")
        return rec["relative_error"]


def pair(label: str) -> dict:
    """``{"adam": RunResult, "ls-adam": RunResult}`` for a labelled comparison."""
    cfg = PAIRS[label]
    out = CACHE / label
    dirs = {name: out / name for name in ("adam", "ls-adam")}
    wanted = {"adam": replace(cfg, optimizer="adam"), "ls-adam": replace(cfg, optimizer="ls-adam")}
    if not all(_matches(dirs[n], wanted[n]) for n in dirs):
        driver.compare(cfg, out=out, spectra=False)
    return {n: RunResult(d) for n, d in dirs.items()}


def cost_sweep():
    """The optimizer cost table and its wall time in seconds."""
    out = CACHE / "cost-sweep"
    meta = out / "sweep.json"
    table_csv = out / "costs.csv"
    key = json.loads(json.dumps(asdict(SWEEP)))
    if meta.exists() and table_csv.exists():
        doc = json.loads(meta.read_text())
        if doc.get("config") == key:
            return _read_table(table_csv), doc["seconds"]
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    table = costs.optimizer_cost_sweep(SWEEP)
    seconds = time.perf_counter() - start
    table.write_csv(table_csv)
    meta.write_text(json.dumps({"config": key, "seconds": seconds}, indent=2) + "\n")
    return _read_table(table_csv), seconds


def _read_table(path) -> costs.RatioTable:
    table = costs.RatioTable()
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            table.add(costs.RatioRow(r["implementation"], int(r["N"]), int(r["numerator_ops"]),
                                     int(r["denominator_ops"]), int(r["d"])))
    return table


if __name__ == "__main__":
    labels = sys.argv[1:] or ["cost-sweep"] + list(PAIRS)
    for label in labels:
        start = time.perf_counter()
        if label == "cost-sweep":
            cost_sweep()
        else:
            res = pair(label)
            print(label, {n: f"{100 * r.final_error:.4f}% {r.seconds:.0f}s" for n, r in res.items()}, flush=True)
        print(f"{label} ready after {time.perf_counter() - start:.0f}s", flush=True)
