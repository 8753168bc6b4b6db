"""Gaussian parameter containers and the partition/conditioning algebra.

Converts between joint multivariate-normal parameters (mu, Sigma) and the
per-variable conditional-regression parameterization (alpha_j, beta_j,
sigma2_j), and conditions a joint Gaussian on an arbitrary observed subset.
All positive-definite solves go through Cholesky factorizations; a failed
factorization raises :class:`NotPositiveDefiniteError` instead of silently
regularizing.

All containers are immutable values; every function here is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NotPositiveDefiniteError",
    "GaussianParams",
    "PartitionedGaussian",
    "ConditionalRegression",
    "partition",
    "to_regression",
    "conditional_mvn",
    "log_density_mvn",
]

SYMMETRY_RTOL = 1e-10


class NotPositiveDefiniteError(ValueError):
    """A matrix required to be symmetric positive definite is not."""


def cholesky_spd(a, what="matrix"):
    """Cholesky factor of ``a`` (lower), raising a typed error on failure."""
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(
            f"{what} is not positive definite (Cholesky failed)"
        ) from None


def symmetrize(sigma, what="sigma"):
    """Return (a + a.T)/2 after checking asymmetry is below tolerance."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {sigma.shape}")
    scale = max(np.abs(sigma).max(), 1.0)
    asym = np.abs(sigma - sigma.T).max()
    if asym > SYMMETRY_RTOL * scale:
        raise ValueError(
            f"{what} is not symmetric (max asymmetry {asym:.3e} exceeds tolerance)"
        )
    return (sigma + sigma.T) / 2.0


@dataclass(frozen=True)
class GaussianParams:
    """Mean vector and covariance matrix of a p-variate normal.

    The covariance is symmetrized on construction (tiny asymmetry only) and
    must admit a Cholesky factorization.
    """

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        sigma = symmetrize(self.sigma)
        if sigma.shape[0] != mu.shape[0]:
            raise ValueError("mu and sigma dimensions disagree")
        cholesky_spd(sigma, "sigma")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        self.mu.setflags(write=False)
        self.sigma.setflags(write=False)

    @property
    def p(self):
        return self.mu.shape[0]


@dataclass(frozen=True)
class PartitionedGaussian:
    """One-variable block decomposition of a :class:`GaussianParams`.

    Variable ``j`` is singled out: ``omega_j`` is its marginal variance,
    ``xi_j`` the cross-covariance with the remaining variables (in ascending
    index order) and ``sigma_rest`` their covariance block.
    """

    j: int
    mu_j: float
    mu_rest: np.ndarray
    omega_j: float
    xi_j: np.ndarray
    sigma_rest: np.ndarray

    def reassemble(self) -> GaussianParams:
        """Invert the partition, reproducing the source parameters exactly."""
        p = self.mu_rest.shape[0] + 1
        rest = [k for k in range(p) if k != self.j]
        mu = np.empty(p)
        mu[self.j] = self.mu_j
        mu[rest] = self.mu_rest
        sigma = np.empty((p, p))
        sigma[self.j, self.j] = self.omega_j
        sigma[self.j, rest] = self.xi_j
        sigma[rest, self.j] = self.xi_j
        sigma[np.ix_(rest, rest)] = self.sigma_rest
        return GaussianParams(mu, sigma)


@dataclass(frozen=True)
class ConditionalRegression:
    """Linear-regression form of one conditional of a joint Gaussian.

    y_j = alpha + beta . y_rest + eps with eps ~ N(0, sigma2).
    """

    alpha: float
    beta: np.ndarray
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError(f"residual variance must be positive, got {self.sigma2}")
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float).reshape(-1))


def partition(params: GaussianParams, j: int) -> PartitionedGaussian:
    """Extract the j-th variable's blocks from (mu, Sigma).

    Remaining indices keep ascending order.  Reassembling the result
    reproduces ``params`` bit-exactly (pure indexing, no arithmetic).
    """
    p = params.p
    if not 0 <= j < p:
        raise IndexError(f"variable index {j} out of range for p={p}")
    rest = [k for k in range(p) if k != j]
    return PartitionedGaussian(
        j=j,
        mu_j=float(params.mu[j]),
        mu_rest=params.mu[rest].copy(),
        omega_j=float(params.sigma[j, j]),
        xi_j=params.sigma[j, rest].copy(),
        sigma_rest=params.sigma[np.ix_(rest, rest)].copy(),
    )


def to_regression(part: PartitionedGaussian) -> ConditionalRegression:
    """Conditional regression of variable j on the rest.

    beta solves sigma_rest beta = xi_j (via Cholesky), alpha = mu_j -
    beta . mu_rest, and sigma2 = omega_j - xi_j . beta is the residual
    variance.
    """
    L = cholesky_spd(part.sigma_rest, "sigma_rest")
    w = np.linalg.solve(L, part.xi_j)
    beta = np.linalg.solve(L.T, w)
    alpha = part.mu_j - beta @ part.mu_rest
    sigma2 = part.omega_j - w @ w
    if not sigma2 > 0:
        raise NotPositiveDefiniteError(
            f"residual variance {sigma2} is not positive; joint covariance degenerate"
        )
    return ConditionalRegression(alpha=float(alpha), beta=beta, sigma2=float(sigma2))


def conditional_mvn(params, observed_idx, observed_vals):
    """Condition a joint Gaussian on observed coordinates.

    Returns the Gaussian of the complementary index set (ascending order)
    given ``observed_vals`` at ``observed_idx``, by the Schur-complement
    formulas with the observed block solved through its Cholesky factor.
    """
    p = params.p
    obs = np.asarray(observed_idx, dtype=int).reshape(-1)
    vals = np.asarray(observed_vals, dtype=float).reshape(-1)
    if obs.size == 0:
        raise ValueError("observed index set is empty")
    if len(set(obs.tolist())) != obs.size:
        raise ValueError("observed indices contain duplicates")
    if obs.min() < 0 or obs.max() >= p:
        raise IndexError("observed index out of range")
    if obs.size != vals.size:
        raise ValueError("observed indices and values differ in length")
    mis = np.array([k for k in range(p) if k not in set(obs.tolist())], dtype=int)
    if mis.size == 0:
        raise ValueError("observed set covers all variables; nothing to condition")

    s_oo = params.sigma[np.ix_(obs, obs)]
    s_mo = params.sigma[np.ix_(mis, obs)]
    L = cholesky_spd(s_oo, "observed block")
    # A = Sigma_mo Sigma_oo^-1 without forming the inverse
    half = np.linalg.solve(L, s_mo.T)          # L^-1 Sigma_om
    resid = np.linalg.solve(L, vals - params.mu[obs])
    mu_cond = params.mu[mis] + half.T @ resid
    sigma_cond = params.sigma[np.ix_(mis, mis)] - half.T @ half
    return GaussianParams(mu_cond, symmetrize(sigma_cond, "conditional covariance"))


def log_density_mvn(params: GaussianParams, y) -> float:
    """Exact multivariate-normal log density at ``y``."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != params.p:
        raise ValueError("point dimension does not match parameters")
    L = cholesky_spd(params.sigma, "sigma")
    z = np.linalg.solve(L, y - params.mu)
    logdet = 2.0 * np.log(np.diag(L)).sum()
    return float(-0.5 * (params.p * np.log(2.0 * np.pi) + logdet + z @ z))
