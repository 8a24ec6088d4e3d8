"""Estimator-style front for the decoupling transform."""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_laplacian_input, check_square, check_stacked_states
from .decoupler import (
    DEFAULT_COND_CAP,
    assess_diagonalizability,
    construct_perturbation,
    decouple,
)


class AlmostDecoupler(TransformerMixin, BaseEstimator):
    """Learn the eigenbasis of a (possibly perturbed) Laplacian and map stacked
    agent states into decoupled coordinates.

    ``fit`` takes a Laplacian (or a :class:`~decouplenet.graph.WeightedDigraph`).
    If its spectrum is not numerically distinct it is first replaced by a
    zero-row-sum matrix within squared Frobenius distance ``epsilon``.
    ``transform`` then maps rows ``x = [x_1; ...; x_N]`` (any per-agent
    order ``d``) to ``(T kron I_d) x``.

    Parameters
    ----------
    epsilon : float
        Squared Frobenius budget for the perturbation.
    gap_tol : float or None
        Eigenvalue separation threshold; None means ``1e-8 * (1 + ||L||_F)``.
    realify : bool
        Require the perturbed Laplacian to be real.
    cond_cap : float
        Largest accepted eigenvector-matrix condition number.
    random_state : int
        Seed for the perturbation retries.

    Attributes
    ----------
    laplacian_ : ndarray
        Matrix actually decoupled (perturbed if needed).
    perturbation_ : PerturbationResult or None
    diagnosis_ : DiagonalizabilityReport
        Assessment of the input Laplacian.
    decoupled_ : DecoupledSystem
    eigenvalues_ : ndarray
        Zero eigenvalue first.
    """

    def __init__(self, epsilon=1e-6, gap_tol=None, realify=False, cond_cap=DEFAULT_COND_CAP,
                 random_state=0):
        self.epsilon = epsilon
        self.gap_tol = gap_tol
        self.realify = realify
        self.cond_cap = cond_cap
        self.random_state = random_state

    def fit(self, X, y=None):
        lap = check_laplacian_input(X)
        self.diagnosis_ = assess_diagonalizability(lap, self.gap_tol, self.cond_cap)
        self.perturbation_ = None
        target = lap
        if not self.diagnosis_.distinct_eigenvalues:
            self.perturbation_ = construct_perturbation(
                lap, self.epsilon, gap_tol=self.gap_tol, realify=self.realify,
                seed=self.random_state, cond_cap=self.cond_cap,
            )
            target = self.perturbation_.perturbed
        d = np.zeros((1, 1))
        self.decoupled_ = decouple(target, d, d, gap_tol=self.gap_tol, cond_cap=self.cond_cap)
        self.laplacian_ = target
        self.eigenvalues_ = self.decoupled_.eigenvalues
        self.n_agents_ = lap.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "decoupled_")
        X, d = check_stacked_states(X, self.n_agents_)
        return X @ np.kron(self.decoupled_.transform, np.eye(d)).T

    def inverse_transform(self, X):
        check_is_fitted(self, "decoupled_")
        X, d = check_stacked_states(X, self.n_agents_)
        return X @ np.kron(self.decoupled_.inverse, np.eye(d)).T

    def subsystems(self, a, f):
        """Per-eigenvalue blocks ``a - lambda_i f`` (zero eigenvalue first)."""
        check_is_fitted(self, "decoupled_")
        a = check_square(a, "a")
        f = check_square(f, "f")
        if a.shape != f.shape:
            raise ValueError("a and f must have the same shape")
        return [a - lam * f for lam in self.eigenvalues_]
