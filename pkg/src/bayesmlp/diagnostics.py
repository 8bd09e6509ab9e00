"""Convergence and effectiveness diagnostics: lag autocovariances, the
multivariate initial monotone sequence estimator (MINSE) of Monte Carlo
covariance, multivariate PSRF across chains and multivariate ESS per chain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

#: Relative ridge added to a singular within-chain covariance before the
#: PSRF eigenproblem; falls back to an absolute 1e-10 when the trace is zero.
RIDGE_FACTOR = 1e-10


class DegenerateChainError(ValueError):
    """Chain too short or constant in some coordinate for the estimator."""


class EstimatorError(RuntimeError):
    """A covariance estimate came out unusable (non-PD, nonpositive det)."""


@dataclass
class CovarianceEstimate:
    """An n x n covariance matrix tagged with the estimator that made it."""

    matrix: np.ndarray
    kind: str  # "empirical" | "minse"
    chain_length: int

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("covariance estimate must be a square matrix")


@dataclass
class PsrfResult:
    """Multivariate potential scale reduction factor across chains."""

    value: float
    num_chains: int
    chain_length: int
    regularized: bool = False
    degenerate_chains: tuple[int, ...] = ()


@dataclass
class EssResult:
    """Multivariate effective sample size of one chain."""

    value: float
    chain_length: int


def _as_draws(draws) -> np.ndarray:
    draws = np.asarray(draws, dtype=float)
    if draws.ndim == 1:
        draws = draws[:, None]
    if draws.ndim != 2:
        raise ValueError("chain draws must form a v x n matrix")
    return draws


def lag_autocovariance(draws, k: int) -> np.ndarray:
    """Lag-k autocovariance (1/v) sum_t (x_t - mean)(x_{t+k} - mean)^T."""
    draws = _as_draws(draws)
    v = draws.shape[0]
    if not 0 <= k < v:
        raise ValueError(f"lag {k} outside [0, {v})")
    centered = draws - draws.mean(axis=0)
    return centered[: v - k].T @ centered[k:] / v


def empirical_covariance(draws) -> CovarianceEstimate:
    """Sample covariance with divisor v - 1."""
    draws = _as_draws(draws)
    v = draws.shape[0]
    if v < 2:
        raise DegenerateChainError("need at least two draws for a covariance")
    centered = draws - draws.mean(axis=0)
    return CovarianceEstimate(centered.T @ centered / (v - 1), "empirical", v)


def _chol_logdet(matrix) -> float | None:
    """Log-determinant via Cholesky, or None when not positive definite."""
    try:
        chol = np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        return None
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def minse(draws) -> CovarianceEstimate:
    """Initial monotone sequence estimator of the Monte Carlo covariance.

    Accumulates symmetrized lag-pair sums Gamma_t = Sig_{2t} + Sig_{2t+1}
    into partial sums C_t = -Sig_0 + 2 sum_{k<=t} Gamma_k and stops at the
    first t where C_t loses positive definiteness or its determinant stops
    increasing, returning the previous partial sum. The scan is capped at
    t = v/2 - 1.
    """
    draws = _as_draws(draws)
    v, n = draws.shape
    if v < 4:
        raise DegenerateChainError(f"need at least 4 draws for MINSE, got {v}")
    stds = draws.std(axis=0)
    dead = np.flatnonzero(stds == 0.0)
    if dead.size:
        raise DegenerateChainError(
            f"zero-variance coordinate(s) {dead.tolist()}: MINSE is undefined"
        )
    centered = draws - draws.mean(axis=0)

    def sig(k: int) -> np.ndarray:
        return centered[: v - k].T @ centered[k:] / v

    current = -sig(0)
    prev = None
    prev_logdet = -np.inf
    for t in range(v // 2):
        gamma = sig(2 * t) + sig(2 * t + 1)
        current = current + gamma + gamma.T  # 2 * symmetrized Gamma_t
        logdet = _chol_logdet(current)
        if logdet is None or logdet <= prev_logdet:
            if prev is None:
                raise EstimatorError(
                    "first MINSE partial sum is not positive definite; "
                    "the chain is too short or severely anticorrelated"
                )
            return CovarianceEstimate(prev, "minse", v)
        prev = current.copy()
        prev_logdet = logdet
    return CovarianceEstimate(prev, "minse", v)


def _stack_chains(chains) -> np.ndarray:
    mats = [_as_draws(c) for c in chains]
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise ValueError("all chains must share the same (length, dim) shape")
    return np.stack(mats)


def multivariate_psrf(chains) -> PsrfResult:
    """Multivariate potential scale reduction factor.

    W is the average per-chain MINSE covariance; B/v the covariance of
    the chain means (divisor m - 1). The factor is
    sqrt((v-1)/v + ((m+1)/m) * lambda_max(W^-1 B/v)). A chain that is
    constant in some coordinate contributes a zero matrix to W, and a
    singular W is ridged before the eigenproblem; both are flagged.
    """
    stacked = _stack_chains(chains)
    m, v, n = stacked.shape
    if m < 2:
        raise ValueError("PSRF needs at least two chains")

    within = np.zeros((n, n))
    degenerate = []
    for idx in range(m):
        try:
            within += minse(stacked[idx]).matrix
        except DegenerateChainError:
            degenerate.append(idx)  # constant chain: zero Monte Carlo covariance
    within /= m

    means = stacked.mean(axis=1)
    grand = means.mean(axis=0)
    b_over_v = (means - grand).T @ (means - grand) / (m - 1)

    regularized = False
    if _chol_logdet(within) is None:
        ridge = RIDGE_FACTOR * np.trace(within) / n
        if ridge <= 0.0:
            ridge = RIDGE_FACTOR
        within = within + ridge * np.eye(n)
        regularized = True

    lam = float(scipy.linalg.eigh(b_over_v, within, eigvals_only=True)[-1])
    value = float(np.sqrt((v - 1) / v + (m + 1) / m * lam))
    return PsrfResult(value, m, v, regularized, tuple(degenerate))


def multivariate_ess(draws) -> EssResult:
    """Multivariate effective sample size v (det E / det C)^(1/n).

    E is the empirical covariance (divisor v - 1) and C the MINSE; the
    ratio is evaluated through log-determinants.
    """
    draws = _as_draws(draws)
    v, n = draws.shape
    if v <= n:
        raise DegenerateChainError(f"need more draws ({v}) than dimensions ({n})")
    sign_e, logdet_e = np.linalg.slogdet(empirical_covariance(draws).matrix)
    if sign_e <= 0:
        raise EstimatorError("empirical covariance has nonpositive determinant")
    sign_c, logdet_c = np.linalg.slogdet(minse(draws).matrix)
    if sign_c <= 0:
        raise EstimatorError("MINSE covariance has nonpositive determinant")
    value = float(v * np.exp((logdet_e - logdet_c) / n))
    return EssResult(value, v)


def diagnostics_report(chains, burnin: int = 0) -> dict:
    """PSRF across chains plus per-chain ESS on post-burn-in draws.

    Returns the report dictionary {psrf, ess_per_chain, ess_mean, v, m, n}.
    """
    stacked = _stack_chains(chains)
    if burnin:
        if burnin >= stacked.shape[1]:
            raise ValueError("burn-in leaves no draws")
        stacked = stacked[:, burnin:, :]
    m, v, n = stacked.shape
    psrf = multivariate_psrf(stacked)
    ess = [multivariate_ess(stacked[i]).value for i in range(m)]
    return {
        "psrf": psrf.value,
        "ess_per_chain": ess,
        "ess_mean": float(np.mean(ess)),
        "v": v,
        "m": m,
        "n": n,
    }
