"""Estimator-style front end to the column generation solver."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import check_game
from .cmb import CmbConfig, run_cmb
from .exceptions import DidNotConverge
from .verify import certify


class TMECorSolver(BaseEstimator):
    """Team-maxmin equilibrium with coordination, found by column generation.

    ``fit`` takes a game instead of a data matrix.  With ``raise_on_limit``
    off, a run that exhausts its budget still leaves the partial solution on
    the estimator with ``converged_ = False``.
    """

    def __init__(self, epsilon=0.0, oracle="art", max_iterations=500, convergence_tol=1e-7,
                 associated_constraints=True, node_limit=100_000, time_limit=None,
                 backend=None, raise_on_limit=True):
        self.epsilon = epsilon
        self.oracle = oracle
        self.max_iterations = max_iterations
        self.convergence_tol = convergence_tol
        self.associated_constraints = associated_constraints
        self.node_limit = node_limit
        self.time_limit = time_limit
        self.backend = backend
        self.raise_on_limit = raise_on_limit

    def _config(self) -> CmbConfig:
        return CmbConfig(epsilon=self.epsilon, max_iterations=self.max_iterations,
                         convergence_tol=self.convergence_tol, oracle=self.oracle,
                         backend=self.backend, associated_constraints=self.associated_constraints,
                         node_limit=self.node_limit, time_limit=self.time_limit)

    def fit(self, game, y=None):
        g = check_game(game)
        cfg = self._config()
        try:
            res = run_cmb(g, cfg)
        except DidNotConverge as exc:
            if self.raise_on_limit:
                raise
            res = exc.result
        self.game_ = g
        self.result_ = res
        self.value_ = res.value
        self.columns_ = res.columns
        self.mixture_ = res.mixture
        self.adversary_plan_ = res.adversary_plan
        self.bound_trace_ = np.asarray(res.bound_trace)
        self.n_iter_ = res.iterations
        self.support_size_ = res.support_size
        self.converged_ = res.converged
        return self

    def _check_fitted(self):
        if not hasattr(self, "result_"):
            raise NotFittedError("call fit() before using this TMECorSolver")

    def certify(self, oracle=None):
        """Exploitability report of the fitted profile."""
        self._check_fitted()
        return certify(self.game_, self.columns_, self.mixture_, self.adversary_plan_,
                       backend=self.backend, oracle=oracle or self.oracle)

    def score(self, game=None, y=None) -> float:
        """Equilibrium value of the fitted game (higher is better for the team)."""
        self._check_fitted()
        if game is not None and game is not self.game_:
            raise ValueError("score is only defined for the game passed to fit")
        return float(self.value_)
