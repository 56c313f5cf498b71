"""Concave maximization for the three estimators, plus closed-form relation checks.

All three objectives (profile, conditional, replicated conditional) are
concave with an exact analytic gradient, so the solver is a damped Newton
method with the Hessian taken by forward differences of the gradient and an
Armijo backtracking line search; if the Newton direction fails to be an
ascent direction the step falls back to the gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import conditional, profile
from .data import DataError, Dataset, FitResult

__all__ = [
    "SolverConfig",
    "SolverError",
    "RelationReport",
    "solve_mle",
    "solve_cmle",
    "solve_cmle_replicated",
    "verify_pair_identity",
    "verify_1K_identity",
]


class SolverError(RuntimeError):
    """Maximization failed (divergence, iteration cap, or rank deficiency)."""


@dataclass(frozen=True)
class SolverConfig:
    grad_tol: float = 1e-8
    max_iter: int = 200
    divergence_norm: float = 1e4
    step_shrink: float = 0.5
    armijo_c: float = 1e-4

    def __post_init__(self):
        if min(self.grad_tol, self.max_iter, self.divergence_norm,
               self.armijo_c) <= 0:
            raise ValueError("solver config entries must be positive")
        if not 0 < self.step_shrink < 1:
            raise ValueError("step_shrink must lie in (0, 1)")


@dataclass(frozen=True)
class RelationReport:
    """Two sides of a closed-form MLE/CMLE relation and their gap."""

    lhs: float
    rhs: float
    abs_gap: float
    inputs: dict = field(default_factory=dict)


def _check_column_rank(dataset: Dataset) -> None:
    """Identifiability precheck: [X | cluster indicators] has full column rank.

    Equivalent to the within-cluster-centered covariate matrix having full
    column rank (X a + E b = 0 forces a into the centered null space), which
    avoids materializing the N x (P + J) matrix.
    """
    P = dataset.n_covariates
    centered = np.vstack([c.covariates - c.covariates.mean(axis=0)
                          for c in dataset.clusters])
    if np.linalg.matrix_rank(centered) < P:
        raise SolverError("design matrix [X | cluster indicators] is rank "
                          "deficient; parameters not identified")


def _maximize(objective, gradient, p: int, cfg: SolverConfig,
              x0=None) -> tuple[np.ndarray, float, float, int, list[float]]:
    """Damped Newton ascent on a concave objective with analytic gradient."""
    x = np.zeros(p) if x0 is None else np.array(x0, dtype=float)
    f = objective(x)
    trace = [f]
    for it in range(cfg.max_iter):
        g = gradient(x)
        gnorm = float(np.abs(g).max())
        if gnorm <= cfg.grad_tol:
            return x, f, gnorm, it, trace
        # Hessian by forward differences of the analytic gradient
        H = np.empty((p, p))
        for i in range(p):
            h = 1e-6 * max(1.0, abs(x[i]))
            xp = x.copy()
            xp[i] += h
            H[:, i] = (gradient(xp) - g) / h
        H = 0.5 * (H + H.T)
        try:
            d = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            d = g.copy()
        if float(g @ d) <= 0.0:
            d = g.copy()
        slope = float(g @ d)
        t = 1.0
        while True:
            x_new = x + t * d
            f_new = objective(x_new)
            if f_new >= f + cfg.armijo_c * t * slope:
                break
            t *= cfg.step_shrink
            if t < 1e-14:
                # gradient so flat no step helps; accept the point as-is
                x_new, f_new = x, f
                break
        x, f = x_new, f_new
        trace.append(f)
        if np.abs(x).max() > cfg.divergence_norm:
            raise SolverError("divergence: possible separation / "
                              "nonexistent MLE")
    g = gradient(x)
    gnorm = float(np.abs(g).max())
    if gnorm <= cfg.grad_tol:
        return x, f, gnorm, cfg.max_iter, trace
    raise SolverError("max iterations exceeded")


def solve_mle(dataset: Dataset, cfg: SolverConfig | None = None,
              x0=None) -> FitResult:
    """Maximize the profile log-likelihood (ordinary logistic MLE for beta)."""
    cfg = cfg or SolverConfig()
    _check_column_rank(dataset)
    p = dataset.n_covariates
    beta, f, gnorm, its, trace = _maximize(
        lambda b: profile.profile_loglik(dataset, b),
        lambda b: profile.olr_profile_score(dataset, b),
        p, cfg, x0)
    tau = profile._dataset_taus(dataset, beta)
    return FitResult(beta_hat=beta, objective=f, grad_inf_norm=gnorm,
                     iterations=its, method="MLE", converged=True, tau=tau,
                     objective_trace=trace,
                     dropped_concordant=dataset.dropped_concordant)


def solve_cmle(dataset: Dataset, cfg: SolverConfig | None = None,
               x0=None) -> FitResult:
    """Maximize the exact conditional log-likelihood."""
    cfg = cfg or SolverConfig()
    _check_column_rank(dataset)
    p = dataset.n_covariates
    beta, f, gnorm, its, trace = _maximize(
        lambda b: conditional.clr_avg_loglik(dataset, b),
        lambda b: conditional.clr_score(dataset, b),
        p, cfg, x0)
    return FitResult(beta_hat=beta, objective=f, grad_inf_norm=gnorm,
                     iterations=its, method="CMLE", converged=True,
                     objective_trace=trace,
                     dropped_concordant=dataset.dropped_concordant)


def solve_cmle_replicated(dataset: Dataset, R: int,
                          cfg: SolverConfig | None = None,
                          x0=None) -> FitResult:
    """Maximize the R-replication conditional log-likelihood.

    Pass the previous (smaller-R) estimate as x0 to warm start; R grids are
    typically solved in ascending order.
    """
    cfg = cfg or SolverConfig()
    if R < 1:
        raise DataError("replication count R must be >= 1")
    _check_column_rank(dataset)
    p = dataset.n_covariates
    beta, f, gnorm, its, trace = _maximize(
        lambda b: conditional.clr_rep_avg_loglik(dataset, R, b),
        lambda b: conditional.clr_rep_score(dataset, R, b),
        p, cfg, x0)
    return FitResult(beta_hat=beta, objective=f, grad_inf_norm=gnorm,
                     iterations=its, method=f"CMLE-R(R={R})", converged=True,
                     objective_trace=trace,
                     dropped_concordant=dataset.dropped_concordant)


def verify_pair_identity(dataset: Dataset,
                         cfg: SolverConfig | None = None) -> RelationReport:
    """Matched-pair relation: the MLE equals twice the CMLE when all K_j = 2."""
    for c in dataset.clusters:
        if c.size != 2:
            raise DataError("pair identity requires every cluster size to be 2")
    mle = solve_mle(dataset, cfg)
    cmle = solve_cmle(dataset, cfg)
    gaps = np.abs(mle.beta_hat - 2.0 * cmle.beta_hat)
    worst = int(np.argmax(gaps))
    return RelationReport(
        lhs=float(mle.beta_hat[worst]),
        rhs=float(2.0 * cmle.beta_hat[worst]),
        abs_gap=float(gaps.max()),
        inputs={"beta_mle": mle.beta_hat, "beta_cmle": cmle.beta_hat,
                "n_clusters": dataset.n_clusters},
    )


def _one_to_k_design_controls(dataset: Dataset) -> int:
    """Validate the 1:K treatment-control shape and return K (# controls)."""
    if dataset.n_covariates != 1:
        raise DataError("1:K identity requires a single treatment indicator")
    sizes = {c.size for c in dataset.clusters}
    if len(sizes) != 1:
        raise DataError("1:K identity requires a common cluster size")
    size = sizes.pop()
    if size < 3:
        raise DataError("1:K identity requires K > 1 controls per cluster")
    for c in dataset.clusters:
        x = c.covariates[:, 0]
        if x[0] != 1.0 or np.any(x[1:] != 0.0):
            raise DataError("1:K identity requires the first individual "
                            "treated (x=1) and the rest controls (x=0)")
    return size - 1


def verify_1K_identity(dataset: Dataset,
                       cfg: SolverConfig | None = None) -> RelationReport:
    """1:K matched treatment-control relation between the CMLE and the MLE.

    With K controls per cluster and n_t clusters having outcome sum t, the
    conditional estimating equation evaluated at the CMLE equals a
    closed-form expression in the MLE obtained by solving each cluster's
    intercept equation as a quadratic in exp(b):

        sum_t n_t / (1 + t e^bc / (K-t+1))
          = sum_t n_t / (1 + [(t-1) e^bo - (K-t) + sqrt(D_{K,t})] / (2(K-t+1)))

    with D_{K,t}(b) = ((t-1) e^b - (K-t))^2 + 4 t (K+1-t) e^b.  The last
    factor is t times the cluster size minus t: the (K-t) variant printed in
    some statements of the relation fails the identity (checked against the
    intercept quadratic directly).
    """
    K = _one_to_k_design_controls(dataset)
    mle = solve_mle(dataset, cfg)
    cmle = solve_cmle(dataset, cfg)
    bo = float(mle.beta_hat[0])
    bc = float(cmle.beta_hat[0])
    n_t = np.zeros(K + 1, dtype=int)
    for c in dataset.clusters:
        n_t[c.outcome_sum] += 1
    lhs = rhs = 0.0
    eo = np.exp(bo)
    ec = np.exp(bc)
    for t in range(1, K + 1):
        if n_t[t] == 0:
            continue
        lhs += n_t[t] / (1.0 + t * ec / (K - t + 1))
        disc = ((t - 1) * eo - (K - t)) ** 2 + 4.0 * t * (K + 1 - t) * eo
        denom = (1.0 + ((t - 1) * eo - (K - t) + np.sqrt(disc))
                 / (2.0 * (K - t + 1)))
        rhs += n_t[t] / denom
    return RelationReport(
        lhs=lhs, rhs=rhs, abs_gap=abs(lhs - rhs),
        inputs={"n_t": n_t[1:].tolist(), "K": K,
                "beta_cmle": bc, "beta_mle": bo},
    )
