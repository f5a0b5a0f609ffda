"""Run configuration: JSON file and/or command-line overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .problems import get_problem
from .residual import Formulation

OPTIMIZERS = ("adam", "ls-adam")
AD_MODES = ("forward", "backward")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Settings for one training run.

    ``None`` for ``width``, ``modes``, ``points`` or ``val_points`` means
    "use the problem's default discretization"; :meth:`resolved` fills them
    in.  ``lam=None`` picks the scale-relative default regularization.
    """

    problem: str = "smooth1d"
    optimizer: str = "ls-adam"
    formulation: str = "weak"
    ad_mode: str = "forward"
    width: int = None
    depth: int = 3
    modes: object = None
    points: object = None
    val_points: object = None
    iters: int = 1000
    seed: int = 0
    lam: float = None
    lr: float = 1e-3
    eval_every: int = 1
    spectrum_factor: int = 4
    out: str = None

    def resolved(self) -> "RunConfig":
        prob = get_problem(self.problem)
        cfg = replace(
            self,
            width=prob.width if self.width is None else self.width,
            modes=prob.modes if self.modes is None else self.modes,
            points=prob.points if self.points is None else self.points,
            val_points=prob.val_points if self.val_points is None else self.val_points,
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        prob = get_problem(self.problem)
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}")
        try:
            Formulation.parse(self.formulation)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.ad_mode not in AD_MODES:
            raise ConfigError(f"ad_mode must be one of {AD_MODES}")
        if self.iters < 0 or self.eval_every < 1 or self.depth < 1:
            raise ConfigError("iters must be >= 0, eval_every and depth >= 1")
        if self.lr <= 0:
            raise ConfigError("learning rate must be positive")
        if self.lam is not None and self.lam < 0:
            raise ConfigError("lambda must be non-negative")
        for name in ("modes", "points", "val_points"):
            val = getattr(self, name)
            if val is None:
                continue
            if _arity(val) != prob.dim:
                raise ConfigError(f"{name} needs {prob.dim} value(s) for {self.problem}")
            if min(_tuple(val)) < 1:
                raise ConfigError(f"{name} must be positive")
        for name in ("points", "val_points"):
            val = getattr(self, name)
            if val is not None and any(v % 2 for v in _tuple(val)):
                raise ConfigError(f"{name} must be even per axis (two points per cell)")
        if self.width is not None and self.width < 1:
            raise ConfigError("width must be positive")

    @property
    def dim(self) -> int:
        return get_problem(self.problem).dim

    def to_dict(self) -> dict:
        doc = asdict(self)
        for name in ("modes", "points", "val_points"):
            if isinstance(doc[name], tuple):
                doc[name] = list(doc[name])
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        doc = dict(doc)
        for name in ("modes", "points", "val_points"):
            if isinstance(doc.get(name), list):
                doc[name] = tuple(int(v) for v in doc[name])
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(doc)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def _tuple(val):
    return tuple(val) if isinstance(val, (tuple, list)) else (val,)


def _arity(val) -> int:
    return len(_tuple(val))
