"""Variational PINNs on sine test spaces with a hybrid least-squares / Adam optimizer."""

from .basis import Projection, SineBasis1D, SineBasis2D, make_basis
from .config import ConfigError, RunConfig
from .estimator import VPINNSolver
from .network import Architecture, MLPParameters, init_parameters
from .optim import TrainingDiverged, TrainingHistory, TrainingSetup, ls_solve, train
from .problems import get_problem, rhs_for
from .residual import Formulation, Residual, assemble, loss_via_action, spectral_report

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "ConfigError",
    "Formulation",
    "MLPParameters",
    "Projection",
    "Residual",
    "RunConfig",
    "SineBasis1D",
    "SineBasis2D",
    "TrainingDiverged",
    "TrainingHistory",
    "TrainingSetup",
    "VPINNSolver",
    "assemble",
    "get_problem",
    "init_parameters",
    "loss_via_action",
    "ls_solve",
    "make_basis",
    "rhs_for",
    "spectral_report",
    "train",
]
