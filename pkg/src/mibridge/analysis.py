"""Pooling, frequentist evaluation, order-effect inference and posterior comparison.

Implements combining rules for m imputed datasets (point estimate, within/
between variance, total variance, df, t-interval), bias/coverage/width
summaries over replications, batch-means confidence intervals for MCMC
traces, and the two-sample Kolmogorov-Smirnov / quantile-quantile machinery
used to compare the joint-model and chained-equation posteriors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _kernels
from .amputate import AmputationSpec, ampute, generate_complete
from .fcs import VisitSequence, fcs_iterate
from .priors import decompose
from .samplers import stream

__all__ = [
    "PooledEstimate",
    "EvalSummary",
    "OrderEffectResult",
    "pool",
    "evaluate",
    "batch_means_ci",
    "ks_two_sample",
    "posterior_compare",
    "order_effect_replication",
    "order_effect_experiment",
]


@dataclass(frozen=True)
class PooledEstimate:
    """Combined inference from m completed-data (estimate, variance) pairs."""

    qbar: float
    ubar: float
    b: float
    t_var: float
    df: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class EvalSummary:
    """Bias, CI coverage and mean CI width over replications."""

    bias: float
    coverage: float
    ci_width: float
    n_reps: int


@dataclass(frozen=True)
class OrderEffectResult:
    """Batch-means inference on the mean of an order-effect difference trace."""

    mean_diff: float
    se: float
    ci_low: float
    ci_high: float
    excludes_zero: bool


def pool(estimates) -> PooledEstimate:
    """Combine m (point, variance) pairs into one interval estimate.

    qbar is the mean point estimate, ubar the mean within variance, b the
    between variance, t_var = ubar + (1 + 1/m) b, and the interval uses a t
    quantile with df = (m-1)(1 + ubar/((1+1/m) b))^2.  Identical points
    (b = 0) degrade gracefully to the normal-theory interval.
    """
    points = np.array([q for q, _ in estimates], dtype=float)
    variances = np.array([u for _, u in estimates], dtype=float)
    m = points.shape[0]
    if m < 2:
        raise ValueError("pooling requires at least two imputations")
    if (variances <= 0).any():
        raise ValueError("within-imputation variances must be positive")
    qbar = points.mean()
    ubar = variances.mean()
    b = points.var(ddof=1)
    t_var = ubar + (1.0 + 1.0 / m) * b
    if b > 0:
        df = (m - 1) * (1.0 + ubar / ((1.0 + 1.0 / m) * b)) ** 2
        q = stats.t.ppf(0.975, df)
    else:
        df = np.inf
        q = stats.norm.ppf(0.975)
    half = q * np.sqrt(t_var)
    return PooledEstimate(
        qbar=float(qbar),
        ubar=float(ubar),
        b=float(b),
        t_var=float(t_var),
        df=float(df),
        ci_low=float(qbar - half),
        ci_high=float(qbar + half),
    )


def evaluate(pooled, truth) -> EvalSummary:
    """Bias, coverage and mean width of pooled intervals against the truth."""
    pooled = list(pooled)
    if not pooled:
        raise ValueError("no replications to evaluate")
    qbars = np.array([e.qbar for e in pooled])
    lows = np.array([e.ci_low for e in pooled])
    highs = np.array([e.ci_high for e in pooled])
    return EvalSummary(
        bias=float(qbars.mean() - truth),
        coverage=float(((lows <= truth) & (truth <= highs)).mean()),
        ci_width=float((highs - lows).mean()),
        n_reps=len(pooled),
    )


def batch_means_ci(trace, n_batches, mean_null=0.0) -> OrderEffectResult:
    """Batch-means 95% interval for the mean of an autocorrelated trace.

    The trace is split into contiguous equal batches; the standard error is
    sd(batch means)/sqrt(n_batches) and the interval uses a t quantile with
    n_batches - 1 df.  ``excludes_zero`` reports whether ``mean_null`` falls
    outside the interval.
    """
    trace = np.asarray(trace, dtype=float).reshape(-1)
    if n_batches < 2:
        raise ValueError("need at least two batches")
    if trace.shape[0] % n_batches != 0:
        raise ValueError(
            f"trace length {trace.shape[0]} not divisible by {n_batches} batches"
        )
    means = trace.reshape(n_batches, -1).mean(axis=1)
    se = means.std(ddof=1) / np.sqrt(n_batches)
    if se == 0:
        raise ValueError("degenerate trace: batch means have zero variance")
    center = trace.mean()
    half = stats.t.ppf(0.975, n_batches - 1) * se
    lo, hi = center - half, center + half
    return OrderEffectResult(
        mean_diff=float(center - mean_null),
        se=float(se),
        ci_low=float(lo),
        ci_high=float(hi),
        excludes_zero=bool(not (lo <= mean_null <= hi)),
    )


def ks_two_sample(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic (max ECDF distance)."""
    a = np.sort(np.asarray(a, dtype=float).reshape(-1))
    b = np.sort(np.asarray(b, dtype=float).reshape(-1))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.shape[0]
    fb = np.searchsorted(b, grid, side="right") / b.shape[0]
    return float(np.abs(fa - fb).max())


def posterior_compare(draws_a, draws_b, percentiles=None):
    """KS statistic plus matched quantile pairs of two posterior samples.

    Returns (ks, pairs) where pairs[i] = (quantile of a, quantile of b) at
    the i-th percentile (1..99 by default); the pairs trace the QQ plot.
    """
    draws_a = np.asarray(draws_a, dtype=float).reshape(-1)
    draws_b = np.asarray(draws_b, dtype=float).reshape(-1)
    if draws_a.shape[0] < 100 or draws_b.shape[0] < 100:
        raise ValueError("need at least 100 draws per sample")
    if percentiles is None:
        percentiles = np.arange(1, 100)
    qa = np.percentile(draws_a, percentiles)
    qb = np.percentile(draws_b, percentiles)
    return ks_two_sample(draws_a, draws_b), list(zip(qa.tolist(), qb.tolist()))


def order_effect_replication(
    rng,
    population,
    n_cases,
    amputation: AmputationSpec,
    prior,
    visit: VisitSequence,
    response,
    predictor_pos,
    n_burn,
    n_keep,
    n_batches,
    check_cols=(0, 1),
):
    """One replication of the visit-order experiment.

    Generates data, amputes, and runs an augmented chained-regression chain
    that refits the ``response`` regression by least squares right after each
    of the first two column updates of every sweep, recording the
    ``predictor_pos`` coefficient both times.  Returns the batch-means
    interval for the mean difference of the two recordings over the kept
    sweeps.
    """
    complete = generate_complete(rng, n_cases, population)
    data = ampute(rng, complete, amputation)
    priors = {j: decompose(prior, j)[0] for j in visit.order}
    total = n_burn + n_keep
    trace = np.empty((n_keep, 2))
    ols = _kernels.ols_coef

    def hook(it, pos, j, completed, coef, sigma2):
        if it >= n_burn and pos in check_cols:
            trace[it - n_burn, check_cols.index(pos)] = ols(completed, response)[
                predictor_pos
            ]

    fcs_iterate(data, priors, visit, rng, total, hook=hook)
    return batch_means_ci(trace[:, 0] - trace[:, 1], n_batches)


def _one_order_effect_rep(args):
    (seed, rep, population, n_cases, amputation, prior, visit_order, response,
     predictor_pos, n_burn, n_keep, n_batches) = args
    rng = stream(seed, rep)
    return order_effect_replication(
        rng,
        population,
        n_cases,
        amputation,
        prior,
        VisitSequence(visit_order),
        response,
        predictor_pos,
        n_burn,
        n_keep,
        n_batches,
    )


def order_effect_experiment(
    seed,
    n_replications,
    population,
    n_cases,
    amputation: AmputationSpec,
    prior,
    visit: VisitSequence,
    response,
    predictor_pos,
    n_burn=10,
    n_keep=1000,
    n_batches=20,
    workers=1,
):
    """Fraction of replications whose batch-means CI excludes zero.

    Replication r runs on the independent stream (seed, r), so results do
    not depend on worker count or execution order.  Returns (fraction,
    results list ordered by replication).
    """
    jobs = [
        (seed, rep, population, n_cases, amputation, prior, visit.order,
         response, predictor_pos, n_burn, n_keep, n_batches)
        for rep in range(n_replications)
    ]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool_:
            results = list(pool_.map(_one_order_effect_rep, jobs))
    else:
        results = [_one_order_effect_rep(job) for job in jobs]
    fraction = sum(r.excludes_zero for r in results) / n_replications
    return fraction, results
