"""Estimator-style wrapper around alpha-set value iteration."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import ValidationError
from .solver import CROSS_SUM_CAP, PRUNE_TOL, Qomdp, StationaryPolicy, value_iteration
from .validation import check_density_matrices


class QomdpValueIteration(BaseEstimator):
    """Solve a :class:`Qomdp` for an epsilon-optimal discounted value function.

    Parameters
    ----------
    epsilon : float
        Target sup-norm error of the returned value function.
    max_iter : int
        Backup budget.
    cross_sum_cap : int
        Largest cross-sum allowed per backup before ``CapExceededError``.
    prune_tol : float
        PSD tolerance of the dominance pruning.

    Attributes
    ----------
    alpha_set_ : AlphaSet
    n_iter_ : int
    bound_ : float
        Certified bound on ``sup |V - V*|``.
    distances_ : tuple of float
    policy_ : StationaryPolicy
    """

    def __init__(self, epsilon=1e-3, max_iter=10_000, cross_sum_cap=CROSS_SUM_CAP, prune_tol=PRUNE_TOL):
        self.epsilon = epsilon
        self.max_iter = max_iter
        self.cross_sum_cap = cross_sum_cap
        self.prune_tol = prune_tol

    def fit(self, model: Qomdp, y=None):
        if not isinstance(model, Qomdp):
            raise ValidationError(f"fit expects a Qomdp, got {type(model).__name__}")
        if not 0 < self.epsilon:
            raise ValidationError("epsilon must be positive")
        res = value_iteration(model, self.epsilon, max_iter=self.max_iter,
                              cap=self.cross_sum_cap, tol=self.prune_tol)
        self.alpha_set_ = res.alpha_set
        self.n_iter_ = res.iterations
        self.bound_ = res.bound
        self.distances_ = res.distances
        self.policy_ = StationaryPolicy(res.alpha_set)
        self.dim_ = model.dim
        return self

    def value(self, X) -> np.ndarray:
        """Approximate optimal value at each state in ``X``."""
        check_is_fitted(self, "alpha_set_")
        X = check_density_matrices(X, self.dim_)
        return self.alpha_set_.values(X).max(axis=1)

    def predict(self, X) -> np.ndarray:
        """Greedy action at each state in ``X``."""
        check_is_fitted(self, "alpha_set_")
        X = check_density_matrices(X, self.dim_)
        return np.array(self.policy_.actions(X), dtype=object)
