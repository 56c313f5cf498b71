"""Ordinary logistic likelihood with per-cluster intercepts, profiled out.

For a fixed beta, each cluster's intercept is the unique root tau of

    sum_k expit(eta_k + tau) = T,        eta_k = X_k' beta,  T = sum_k Y_k,

which exists and is finite exactly when the cluster is discordant
(1 <= T <= K-1).  Plugging the roots back in gives the profile
log-likelihood; its gradient needs no d(tau)/d(beta) term because the root
equation holds identically in beta.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .data import Cluster, DataError, Dataset, Parameters

__all__ = [
    "profile_tau",
    "olr_avg_loglik",
    "profile_loglik",
    "olr_profile_score",
]

_TAU_RESIDUAL_TOL = 1e-12
_BISECT_WIDTH = 1e-10
_NEWTON_POLISH_STEPS = 5


def _log1pexp(s):
    """log(1 + exp(s)), stable for large |s|."""
    return np.logaddexp(0.0, s)


def _tau_batch(eta: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Profile roots for a batch of same-size clusters.

    eta is (n, K), T is (n,) with 1 <= T <= K-1.  Bisection on the analytic
    bracket logit(T/K) -/+ max_k|eta_k| (the root equation's left side is
    strictly increasing in tau), then a few Newton steps to polish.
    """
    eta = np.asarray(eta, dtype=float)
    T = np.asarray(T, dtype=float)
    K = eta.shape[1]
    amp = np.abs(eta).max(axis=1)
    center = np.log(T / (K - T))
    lo = center - amp
    hi = center + amp

    def resid(tau):
        return expit(eta + tau[:, None]).sum(axis=1) - T

    # bisection to the requested bracket width
    n_steps = max(1, int(np.ceil(np.log2(max(2.0 * amp.max(), 1.0)
                                         / _BISECT_WIDTH))))
    for _ in range(n_steps):
        mid = 0.5 * (lo + hi)
        high = resid(mid) > 0.0
        hi = np.where(high, mid, hi)
        lo = np.where(high, lo, mid)
    tau = 0.5 * (lo + hi)
    for _ in range(_NEWTON_POLISH_STEPS):
        p = expit(eta + tau[:, None])
        f = p.sum(axis=1) - T
        if np.all(np.abs(f) <= _TAU_RESIDUAL_TOL):
            break
        fp = (p * (1.0 - p)).sum(axis=1)
        tau = tau - f / np.maximum(fp, 1e-300)
    return tau


def profile_tau(cluster: Cluster, beta) -> float:
    """The unique intercept matching the cluster's expected outcome sum."""
    T = cluster.outcome_sum
    if not 1 <= T <= cluster.size - 1:
        raise DataError("profile root is infinite for a concordant cluster")
    eta = cluster.linear_predictors(beta)
    return float(_tau_batch(eta[None, :], np.array([T]))[0])


def _dataset_taus(dataset: Dataset, beta) -> np.ndarray:
    """Profile roots for every cluster, batched by cluster size."""
    beta = np.asarray(beta, dtype=float)
    taus = np.empty(dataset.n_clusters)
    by_size: dict[int, list[int]] = {}
    for j, c in enumerate(dataset.clusters):
        by_size.setdefault(c.size, []).append(j)
    for size, idx in by_size.items():
        eta = np.stack([dataset.clusters[j].linear_predictors(beta)
                        for j in idx])
        T = np.array([dataset.clusters[j].outcome_sum for j in idx])
        taus[idx] = _tau_batch(eta, T)
    return taus


def olr_avg_loglik(dataset: Dataset, params: Parameters) -> float:
    """Average ordinary-logistic log-likelihood at (beta, cluster effects)."""
    if params.cluster_effects is None:
        raise DataError("cluster_effects required (one intercept per cluster)")
    b = params.cluster_effects
    if b.shape != (dataset.n_clusters,):
        raise DataError(f"expected {dataset.n_clusters} cluster effects, "
                        f"got {b.shape}")
    total = 0.0
    for j, c in enumerate(dataset.clusters):
        s = c.linear_predictors(params.beta) + b[j]
        total += float(np.dot(c.outcomes, s) - _log1pexp(s).sum())
    return total / dataset.n_individuals


def profile_loglik(dataset: Dataset, beta) -> float:
    """Ordinary log-likelihood maximized over intercepts at fixed beta."""
    taus = _dataset_taus(dataset, beta)
    return olr_avg_loglik(dataset, Parameters(beta=beta, cluster_effects=taus))


def olr_profile_score(dataset: Dataset, beta) -> np.ndarray:
    """Gradient of profile_loglik.

    (1/N) sum_jk (Y_jk - pi_jk) X_jk with pi_jk = expit(eta_jk + tau_j).
    """
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    taus = _dataset_taus(dataset, beta)
    score = np.zeros(dataset.n_covariates)
    for j, c in enumerate(dataset.clusters):
        p = expit(c.linear_predictors(beta) + taus[j])
        score += (c.outcomes - p) @ c.covariates
    return score / dataset.n_individuals
