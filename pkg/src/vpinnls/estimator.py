"""Scikit-learn style wrapper around a training run.

``fit`` trains on the selected manufactured problem (the data are the
problem's source term and quadrature batches, so ``X`` is unused there),
``predict`` evaluates the trained solution, ``transform`` the spanning
functions, and ``score`` is the negative relative error.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import network
from .config import RunConfig
from .optim import TrainingSetup, train
from .problems import get_problem


class VPINNSolver(RegressorMixin, TransformerMixin, BaseEstimator):
    """Variational PINN trained with Adam or the hybrid least-squares / Adam optimizer.

    Constructor arguments mirror :class:`~vpinnls.config.RunConfig`.

    Attributes set by ``fit``: ``config_``, ``params_``, ``history_``,
    ``n_features_in_`` and ``relative_error_`` (energy-norm, validation grid).
    """

    def __init__(self, problem="smooth1d", optimizer="ls-adam", formulation="weak", ad_mode="forward",
                 width=None, depth=3, modes=None, points=None, val_points=None, iters=1000, seed=0,
                 lam=None, lr=1e-3, eval_every=1):
        self.problem = problem
        self.optimizer = optimizer
        self.formulation = formulation
        self.ad_mode = ad_mode
        self.width = width
        self.depth = depth
        self.modes = modes
        self.points = points
        self.val_points = val_points
        self.iters = iters
        self.seed = seed
        self.lam = lam
        self.lr = lr
        self.eval_every = eval_every

    def _config(self) -> RunConfig:
        return RunConfig(**self.get_params()).resolved()

    def fit(self, X=None, y=None):
        cfg = self._config()
        setup = TrainingSetup.build(cfg)
        params, history, _ = train(cfg, setup=setup)
        self.config_ = cfg
        self.params_ = params
        self.history_ = history
        self.n_features_in_ = setup.problem.dim
        self.relative_error_ = history.last_evaluated()["relative_error"]
        return self

    def _points(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        network.check_domain(X)
        return X

    def predict(self, X):
        """Trained solution ``u`` at the rows of ``X``."""
        return np.asarray(network.eval_scalar(self.params_, self._points(X)))

    def transform(self, X):
        """Spanning functions (cut-off included) at the rows of ``X``, shape ``(n, N)``."""
        return np.asarray(network.eval_components(self.params_, self._points(X)))

    def score(self, X=None, y=None, sample_weight=None):
        """Negative relative error.

        Without ``X`` this is the energy-norm error from the last validation.
        With ``X`` the reference is ``y``, or the exact solution if ``y`` is
        omitted, and the error is the (weighted) discrete L2 one.
        """
        check_is_fitted(self, "params_")
        if X is None:
            return -self.relative_error_
        X = self._points(X)
        if y is None:
            y = get_problem(self.config_.problem).u(X)
        y = np.asarray(y, dtype=np.float64).ravel()
        w = np.ones_like(y) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
        diff = self.predict(X) - y
        return -float(np.sqrt(np.sum(w * diff**2) / np.sum(w * y**2)))
