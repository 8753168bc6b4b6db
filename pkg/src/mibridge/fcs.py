"""Fully conditional specification: iterated per-variable Bayesian regression.

Each sweep visits the incomplete columns in a configurable order; for column
j the conjugate normal-inverse-gamma regression of Y_j on all other columns
is refit on the rows where Y_j is observed (using the most recent values of
the other columns), new parameters are drawn, and the missing cells of the
column are redrawn from the fitted model.  Multiple imputations come from
independent parallel chains, each contributing its final sweep.

The per-column update runs through the compiled kernel when available (see
``mibridge._kernels``); ``nig_posterior_update``/``draw_regression``/
``impute_column`` expose the same mathematics step by step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import IncompleteData, initial_fill
from .gaussian import ConditionalRegression
from .priors import NigPrior

__all__ = [
    "SingularDesignError",
    "VisitSequence",
    "NigPosterior",
    "nig_posterior_update",
    "draw_regression",
    "impute_column",
    "fcs_iterate",
    "fcs_impute",
]


class SingularDesignError(RuntimeError):
    """A regression design became numerically singular during a sweep."""


@dataclass(frozen=True)
class VisitSequence:
    """Order in which incomplete columns are updated within one sweep."""

    order: tuple

    def __post_init__(self):
        order = tuple(int(j) for j in self.order)
        if len(set(order)) != len(order):
            raise ValueError("visit sequence repeats a column")
        object.__setattr__(self, "order", order)

    def validate_for(self, mask):
        incomplete = set(np.flatnonzero(mask.any(axis=0)).tolist())
        if set(self.order) != incomplete:
            raise ValueError(
                f"visit sequence {self.order} does not cover exactly the "
                f"incomplete columns {sorted(incomplete)}"
            )


@dataclass(frozen=True)
class NigPosterior:
    """Conjugate posterior of one column's regression parameters.

    sigma2 ~ InvGamma(sigma_df/2, sigma_scale/2); coefficients given sigma2
    are N(coef_mean, sigma2 (L L^T)^-1) with L = coef_precision_chol.
    """

    coef_mean: np.ndarray
    coef_precision_chol: np.ndarray
    sigma_df: float
    sigma_scale: float


def nig_posterior_update(prior: NigPrior, X, y) -> NigPosterior:
    """Conjugate update of a normal-inverse-gamma regression prior.

    ``X`` is the n x k design (intercept column included), ``y`` the
    response.  Posterior precision = prior precision + X'X (sigma2-scaled
    parameterization), the mean solves the regularized normal equations, the
    sigma2 df grows by n and the scale by the residual and shrinkage terms.
    n = 0 returns the prior unchanged.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("design and response shapes disagree")
    if X.shape[1] != prior.dim:
        raise ValueError("design width does not match prior dimension")
    prec0 = prior.coef_precision_given_sigma
    m0 = prior.coef_mean
    post_prec = prec0 + X.T @ X
    try:
        L = np.linalg.cholesky(post_prec)
    except np.linalg.LinAlgError:
        raise SingularDesignError("posterior precision not positive definite") from None
    rhs = prec0 @ m0 + X.T @ y
    mean = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
    scale = prior.sigma_scale + y @ y + m0 @ prec0 @ m0 - mean @ post_prec @ mean
    if not scale > 0:
        raise SingularDesignError(f"non-positive posterior sigma2 scale ({scale})")
    return NigPosterior(
        coef_mean=mean,
        coef_precision_chol=L,
        sigma_df=prior.sigma_df + X.shape[0],
        sigma_scale=scale,
    )


def draw_regression(post: NigPosterior, rng) -> ConditionalRegression:
    """Draw sigma2 then coefficients | sigma2 from a conjugate posterior."""
    sigma2 = 0.5 * post.sigma_scale / rng.standard_gamma(0.5 * post.sigma_df)
    k = post.coef_mean.shape[0]
    z = rng.standard_normal(k)
    coef = post.coef_mean + np.sqrt(sigma2) * np.linalg.solve(
        post.coef_precision_chol.T, z
    )
    return ConditionalRegression(alpha=float(coef[0]), beta=coef[1:], sigma2=float(sigma2))


def impute_column(completed, mask, j, regression: ConditionalRegression, rng):
    """Return column j with its missing cells redrawn from the regression.

    Missing cells get alpha + beta . y_rest + N(0, sigma2) noise; observed
    cells are returned untouched.  All other columns must be complete.
    """
    completed = np.asarray(completed, dtype=float)
    col = completed[:, j].copy()
    mis = np.flatnonzero(mask[:, j])
    if mis.size:
        rest = [c for c in range(completed.shape[1]) if c != j]
        pred = regression.alpha + completed[np.ix_(mis, rest)] @ regression.beta
        col[mis] = pred + np.sqrt(regression.sigma2) * rng.standard_normal(mis.size)
    return col


def _column_plan(data: IncompleteData, priors, visit: VisitSequence):
    """Precompute per-column kernel arguments (prior arrays, row index sets)."""
    plan = []
    for j in visit.order:
        prior = priors[j]
        if prior.dim != data.p:
            raise ValueError(f"prior for column {j} has wrong dimension")
        mis = np.flatnonzero(data.mask[:, j]).astype(np.intp)
        obs = np.flatnonzero(~data.mask[:, j]).astype(np.intp)
        plan.append(
            (
                j,
                obs,
                mis,
                np.ascontiguousarray(prior.coef_mean),
                np.ascontiguousarray(prior.coef_precision_given_sigma),
                0.5 * prior.sigma_df,
                0.5 * prior.sigma_scale,
            )
        )
    return plan


def fcs_iterate(
    data: IncompleteData,
    priors,
    visit: VisitSequence,
    rng,
    n_iter,
    hook=None,
    completed=None,
):
    """Run ``n_iter`` chained-regression sweeps and return the completed matrix.

    ``priors`` maps column index to its :class:`NigPrior`.  Missing cells are
    initialized by random draws from each column's observed values unless a
    ``completed`` starting matrix is supplied.  After each column update the
    optional hook is called as ``hook(iteration, position, j, completed,
    coef, sigma2)`` with the freshly drawn parameters; the hook must treat
    the matrix as read-only.
    """
    visit.validate_for(data.mask)
    if completed is None:
        completed = initial_fill(data, rng)
    else:
        completed = np.array(completed, dtype=float)
    completed = np.ascontiguousarray(completed)
    plan = _column_plan(data, priors, visit)
    update = _kernels.fcs_update_column
    for it in range(n_iter):
        for pos, (j, obs, mis, mean, prec, a0, b0) in enumerate(plan):
            try:
                coef, sigma2 = update(completed, obs, mis, j, mean, prec, a0, b0, rng)
            except np.linalg.LinAlgError as err:
                raise SingularDesignError(
                    f"column {data.column_names[j]} at sweep {it}: {err}"
                ) from None
            if hook is not None:
                hook(it, pos, j, completed, coef, sigma2)
    return completed


def fcs_impute(data: IncompleteData, priors, visit: VisitSequence, rng, n_burn=10, m=5):
    """m imputations from m independent chains, each contributing its final sweep.

    Chains run on independent streams spawned from ``rng``, mirroring
    parallel application of the sampler with different seeds.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    return [
        fcs_iterate(data, priors, visit, chain_rng, n_burn)
        for chain_rng in rng.spawn(m)
    ]
