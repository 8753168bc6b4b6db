"""Joint-model multiple imputation.

Data-augmentation Gibbs sampler on the multivariate normal: alternate a
conjugate (mu, Sigma) draw given the currently completed data with draws of
each row's missing block from its conditional Gaussian.  Rows are grouped by
missingness pattern so each pattern's conditional factorization happens once
per parameter draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import IncompleteData, initial_fill
from .gaussian import GaussianParams, cholesky_spd
from .priors import NiwPrior
from .samplers import draw_inv_wishart, draw_mvn

__all__ = ["JmState", "niw_posterior_update", "jm_gibbs_step", "jm_impute"]


@dataclass(frozen=True)
class JmState:
    """Current parameter draw and completed dataset of a JM chain."""

    params: GaussianParams
    completed: np.ndarray
    iteration: int


def niw_posterior_update(prior: NiwPrior, data) -> NiwPrior:
    """Conjugate posterior hyperparameters given a complete data matrix.

    tau' = tau + n, mu0' = (tau mu0 + n ybar)/(tau + n), m' = m + n, and the
    scale gains the centered scatter matrix plus the shrinkage term
    tau n/(tau+n) (ybar - mu0)(ybar - mu0)^T.  n = 0 returns the prior.
    """
    data = np.asarray(data, dtype=float)
    if data.size == 0:
        return prior
    n = data.shape[0]
    ybar = data.mean(axis=0)
    centered = data - ybar
    scatter = centered.T @ centered
    d = ybar - prior.mu0
    return NiwPrior(
        mu0=(prior.tau * prior.mu0 + n * ybar) / (prior.tau + n),
        tau=prior.tau + n,
        m=prior.m + n,
        lam=prior.lam + scatter + (prior.tau * n / (prior.tau + n)) * np.outer(d, d),
    )


def draw_niw(rng, prior: NiwPrior) -> GaussianParams:
    """One (mu, Sigma) draw: Sigma ~ InvWishart(m, Lambda), mu ~ N(mu0, Sigma/tau)."""
    sigma = draw_inv_wishart(rng, prior.m, prior.lam)
    mu = draw_mvn(rng, GaussianParams(prior.mu0, sigma / prior.tau))
    return GaussianParams(mu, sigma)


def _pattern_groups(mask):
    """Row indices grouped by identical mask rows, insertion-ordered."""
    groups = {}
    for i, row in enumerate(map(tuple, mask)):
        groups.setdefault(row, []).append(i)
    return [
        (np.array(rows), np.flatnonzero(key))
        for key, rows in groups.items()
        if any(key)
    ]


def jm_gibbs_step(state: JmState, data: IncompleteData, prior: NiwPrior, rng) -> JmState:
    """One data-augmentation sweep: theta | completed, then missing | theta.

    Observed cells are never touched.  Patterns are processed in first-
    appearance order; within a pattern, rows are imputed jointly from the
    shared conditional Gaussian (means shifted per row's observed values).
    """
    posterior = niw_posterior_update(prior, state.completed)
    params = draw_niw(rng, posterior)
    completed = state.completed.copy()
    p = data.p
    for rows, mis_idx in _pattern_groups(data.mask):
        obs_idx = np.setdiff1d(np.arange(p), mis_idx)
        s_oo = params.sigma[np.ix_(obs_idx, obs_idx)]
        s_mo = params.sigma[np.ix_(mis_idx, obs_idx)]
        L = cholesky_spd(s_oo, "observed block")
        half = np.linalg.solve(L, s_mo.T)  # L^-1 Sigma_om
        a = np.linalg.solve(L.T, half).T   # Sigma_mo Sigma_oo^-1
        cov = params.sigma[np.ix_(mis_idx, mis_idx)] - half.T @ half
        L_cond = cholesky_spd((cov + cov.T) / 2.0, "conditional covariance")
        means = params.mu[mis_idx] + (
            completed[np.ix_(rows, obs_idx)] - params.mu[obs_idx]
        ) @ a.T
        z = rng.standard_normal((rows.shape[0], mis_idx.shape[0]))
        completed[np.ix_(rows, mis_idx)] = means + z @ L_cond.T
    return JmState(params=params, completed=completed, iteration=state.iteration + 1)


def jm_start(data: IncompleteData, prior: NiwPrior, rng) -> JmState:
    """Initial state: missing cells filled by marginal draws, no theta yet drawn."""
    completed = initial_fill(data, rng)
    start = GaussianParams(prior.mu0, prior.lam / max(prior.m - data.p - 1, 1.0))
    return JmState(params=start, completed=completed, iteration=0)


def jm_impute(data: IncompleteData, prior: NiwPrior, rng, n_burn=10, m=5, thin=1):
    """Burn in one chain, then collect m completed datasets spaced thin steps apart."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if thin < 1:
        raise ValueError("thin must be at least 1")
    state = jm_start(data, prior, rng)
    for _ in range(n_burn):
        state = jm_gibbs_step(state, data, prior, rng)
    out = []
    for _ in range(m):
        for _ in range(thin):
            state = jm_gibbs_step(state, data, prior, rng)
        out.append(state.completed.copy())
    return out
