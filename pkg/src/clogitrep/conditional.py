"""Exact conditional-likelihood kernels, all carried in log space.

Two normalizers appear:

* the permutation-set sum over binary outcome vectors with a fixed total,
  computed by the elementary symmetric polynomial recursion
  e_t^(k) = e_t^(k-1) + xi_k * e_{t-1}^(k-1); and

* its R-replicated generalization g(eta, R, T), the coefficient of
  z^(R(K-T)) in prod_k (z + xi_k)^R, computed by a log-space convolution
  over counts r_k in {0..R} with binomial weights from log-gamma.

Both return the gradient in eta alongside the value; for the replicated
normalizer the gradient entries are the tilted-measure expectations E[r_k].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .data import DataError, Dataset

__all__ = [
    "LogNormalizer",
    "log_perm_normalizer",
    "clr_avg_loglik",
    "clr_score",
    "log_g",
    "clr_rep_avg_loglik",
    "clr_rep_score",
    "DEFAULT_STATE_CAP",
]

DEFAULT_STATE_CAP = 10**6


@dataclass(frozen=True)
class LogNormalizer:
    """Log normalizer value and its gradient in the linear predictors."""

    value: float
    grad_eta: np.ndarray


# ---------------------------------------------------------------------------
# permutation-set normalizer (elementary symmetric recursion)
# ---------------------------------------------------------------------------

def _esp_forward(eta: np.ndarray, t_max: int) -> np.ndarray:
    """Tables F[k, :, t] = log e_t(xi_1..xi_k) for a batch of eta rows."""
    n, K = eta.shape
    F = np.full((K + 1, n, t_max + 1), -np.inf)
    F[0, :, 0] = 0.0
    for k in range(1, K + 1):
        prev = F[k - 1]
        F[k, :, 0] = 0.0
        F[k, :, 1:] = np.logaddexp(prev[:, 1:],
                                   prev[:, :-1] + eta[:, k - 1, None])
    return F


def _esp_backward(eta: np.ndarray, t_max: int) -> np.ndarray:
    """Tables B[k, :, t] = log e_t(xi_k..xi_K); B[K+1] is the empty product."""
    n, K = eta.shape
    B = np.full((K + 2, n, t_max + 1), -np.inf)
    B[K + 1, :, 0] = 0.0
    for k in range(K, 0, -1):
        nxt = B[k + 1]
        B[k, :, 0] = 0.0
        B[k, :, 1:] = np.logaddexp(nxt[:, 1:],
                                   nxt[:, :-1] + eta[:, k - 1, None])
    return B


def _perm_normalizer_batch(eta: np.ndarray, T: int, with_grad: bool = True):
    """Batched permutation normalizer over same-(K, T) clusters."""
    eta = np.asarray(eta, dtype=float)
    n, K = eta.shape
    if not 0 <= T <= K:
        raise DataError(f"outcome sum {T} outside [0, {K}]")
    if T == 0:
        return np.zeros(n), np.zeros((n, K))
    if T == K:
        return eta.sum(axis=1), np.ones((n, K))
    F = _esp_forward(eta, T)
    value = F[K, :, T]
    if not with_grad:
        return value, None
    B = _esp_backward(eta, T)
    grad = np.empty((n, K))
    for k in range(1, K + 1):
        # log e_{T-1} of the leave-one-out set, split before/after element k
        combo = F[k - 1][:, : T] + B[k + 1][:, T - 1 :: -1]
        with np.errstate(divide="ignore"):
            loo = logsumexp(combo, axis=1)
        grad[:, k - 1] = np.exp(eta[:, k - 1] + loo - value)
    return value, grad


def log_perm_normalizer(eta, T: int) -> LogNormalizer:
    """Log of the sum over outcome vectors with total T, plus its gradient.

    grad_eta[k] is the conditional probability that individual k's outcome
    is 1 given the total; entries lie in [0, 1] and sum to T.
    """
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    value, grad = _perm_normalizer_batch(eta[None, :], int(T))
    return LogNormalizer(value=float(value[0]), grad_eta=grad[0])


# ---------------------------------------------------------------------------
# replicated normalizer g (binomial convolution DP)
# ---------------------------------------------------------------------------

def _log_binom_row(R: int) -> np.ndarray:
    r = np.arange(R + 1)
    return gammaln(R + 1) - gammaln(r + 1) - gammaln(R - r + 1)


def _dp_step(prev: np.ndarray, w: np.ndarray, S: int) -> np.ndarray:
    """One convolution step: out[s] = logsumexp_r prev[s - r] + w[:, r]."""
    R1 = w.shape[1]
    s = np.arange(S)[:, None]
    r = np.arange(R1)[None, :]
    idx = s - r
    valid = idx >= 0
    terms = prev[:, np.clip(idx, 0, S - 1)] + w[:, None, :]
    terms = np.where(valid[None, :, :], terms, -np.inf)
    with np.errstate(divide="ignore"):
        return logsumexp(terms, axis=2)


def _log_g_batch(eta: np.ndarray, R: int, T: int, with_grad: bool = True,
                 state_cap: int = DEFAULT_STATE_CAP):
    """Batched replicated normalizer over same-(K, T) clusters.

    Returns (value (n,), grad (n, K) or None).  grad[:, k] = E[r_k] under
    the binomially weighted tilted measure; entries lie in [0, R] and sum
    to R*T.
    """
    eta = np.asarray(eta, dtype=float)
    n, K = eta.shape
    if R < 1:
        raise DataError("replication count R must be >= 1")
    if not 0 <= T <= K:
        raise DataError(f"outcome sum {T} outside [0, {K}]")
    if R * K > state_cap:
        raise DataError(f"state space R*K = {R * K} exceeds cap {state_cap}")
    if T == 0:
        return np.zeros(n), np.zeros((n, K))
    if T == K:
        return R * eta.sum(axis=1), np.full((n, K), float(R))
    S = R * T + 1
    lb = _log_binom_row(R)
    # w[:, k, r] = log C(R, r) + r * eta_k
    w = lb[None, None, :] + np.arange(R + 1)[None, None, :] * eta[:, :, None]
    start = np.full((n, S), -np.inf)
    start[:, 0] = 0.0
    forward = [start]
    for k in range(K):
        forward.append(_dp_step(forward[-1], w[:, k, :], S))
    value = forward[K][:, R * T]
    if not with_grad:
        return value, None
    backward = [None] * (K + 2)
    end = np.full((n, S), -np.inf)
    end[:, 0] = 0.0
    backward[K + 1] = end
    for k in range(K, 0, -1):
        backward[k] = _dp_step(backward[k + 1], w[:, k - 1, :], S)
    grad = np.empty((n, K))
    s = np.arange(S)[:, None]
    r = np.arange(R + 1)[None, :]
    idx = R * T - s - r
    valid = (idx >= 0) & (idx <= S - 1)
    idx_c = np.clip(idx, 0, S - 1)
    for k in range(1, K + 1):
        terms = (forward[k - 1][:, :, None]
                 + backward[k + 1][:, idx_c])
        terms = np.where(valid[None, :, :], terms, -np.inf)
        with np.errstate(divide="ignore"):
            m = logsumexp(terms, axis=1) + w[:, k - 1, :]
        p = np.exp(m - value[:, None])
        grad[:, k - 1] = p @ np.arange(R + 1)
    return value, grad


def log_g(eta, R: int, T: int, state_cap: int = DEFAULT_STATE_CAP) -> LogNormalizer:
    """Log of the replicated normalizer g(eta, R, T) and its eta-gradient."""
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    value, grad = _log_g_batch(eta[None, :], int(R), int(T), state_cap=state_cap)
    return LogNormalizer(value=float(value[0]), grad_eta=grad[0])


# ---------------------------------------------------------------------------
# dataset-level likelihood and score
# ---------------------------------------------------------------------------

def _grouped_eta(dataset: Dataset, beta):
    """Cluster indices and stacked eta, grouped by (cluster size, outcome sum)."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    groups: dict[tuple[int, int], list[int]] = {}
    for j, c in enumerate(dataset.clusters):
        groups.setdefault((c.size, c.outcome_sum), []).append(j)
    for (K, T), idx in groups.items():
        eta = np.stack([dataset.clusters[j].linear_predictors(beta)
                        for j in idx])
        yield idx, eta, T


def _linear_part(dataset: Dataset, beta) -> float:
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    return sum(float(c.outcomes @ c.linear_predictors(beta))
               for c in dataset.clusters)


def clr_avg_loglik(dataset: Dataset, beta) -> float:
    """Average conditional log-likelihood given each cluster's outcome sum."""
    total = _linear_part(dataset, beta)
    for _, eta, T in _grouped_eta(dataset, beta):
        value, _ = _perm_normalizer_batch(eta, T, with_grad=False)
        total -= value.sum()
    return total / dataset.n_individuals


def clr_score(dataset: Dataset, beta) -> np.ndarray:
    """Gradient of clr_avg_loglik."""
    score = np.zeros(dataset.n_covariates)
    for idx, eta, T in _grouped_eta(dataset, beta):
        _, grad = _perm_normalizer_batch(eta, T)
        for row, j in enumerate(idx):
            c = dataset.clusters[j]
            score += (c.outcomes - grad[row]) @ c.covariates
    return score / dataset.n_individuals


def clr_rep_avg_loglik(dataset: Dataset, R: int, beta,
                       state_cap: int = DEFAULT_STATE_CAP) -> float:
    """Average conditional log-likelihood with every data point replicated R times."""
    if R < 1:
        raise DataError("replication count R must be >= 1")
    total = R * _linear_part(dataset, beta)
    for _, eta, T in _grouped_eta(dataset, beta):
        value, _ = _log_g_batch(eta, R, T, with_grad=False, state_cap=state_cap)
        total -= value.sum()
    return total / (R * dataset.n_individuals)


def clr_rep_score(dataset: Dataset, R: int, beta,
                  state_cap: int = DEFAULT_STATE_CAP) -> np.ndarray:
    """Gradient of clr_rep_avg_loglik."""
    if R < 1:
        raise DataError("replication count R must be >= 1")
    score = np.zeros(dataset.n_covariates)
    for idx, eta, T in _grouped_eta(dataset, beta):
        _, grad = _log_g_batch(eta, R, T, state_cap=state_cap)
        for row, j in enumerate(idx):
            c = dataset.clusters[j]
            score += (R * c.outcomes - grad[row]) @ c.covariates
    return score / (R * dataset.n_individuals)
