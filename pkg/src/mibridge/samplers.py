"""Seedable random draws for every distribution the imputation engine needs.

Streams
-------
All randomness flows through ``numpy.random.Generator`` (PCG64).  Independent
streams for replications and chains are derived with :func:`stream` from a
master seed plus integer ids, so replications can run in any order or in
parallel and still reproduce bit-identically.

Inverse-Wishart convention
--------------------------
``Sigma ~ InvWishart(df, scale)`` here means the standard density

    p(Sigma) propto |Sigma|^(-(df+p+1)/2) exp(-tr(scale Sigma^-1)/2),

proper for df >= p, with E[Sigma] = scale/(df-p-1) when df > p+1.  The scalar
case InvWishart(df, s) coincides with InvGamma(shape=df/2, scale=s/2).  See
the README for how joint-prior hyperparameters map onto this convention.
"""

from __future__ import annotations

import numpy as np

from .gaussian import GaussianParams, cholesky_spd

__all__ = [
    "stream",
    "draw_mvn",
    "draw_inv_wishart",
    "draw_inv_gamma",
    "draw_mv_student_t",
]


def stream(seed, *key):
    """Generator for stream ``key`` (e.g. replication id, chain id) of ``seed``.

    Distinct keys yield statistically independent PCG64 streams; the same
    (seed, key) always yields the same stream.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def draw_mvn(rng, params: GaussianParams):
    """One draw from N(mu, Sigma) as mu + L z with L the Cholesky factor."""
    L = cholesky_spd(params.sigma, "sigma")
    return params.mu + L @ rng.standard_normal(params.p)


def draw_inv_wishart(rng, df, scale):
    """One draw from InvWishart(df, scale); see module docstring for the convention.

    Uses the Bartlett decomposition of W = Sigma^-1 ~ Wishart(df, scale^-1):
    with scale = L L^T and A the Bartlett factor (sqrt chi-square diagonal,
    standard-normal subdiagonal), Sigma = (L A^-T)(L A^-T)^T, so the draw is
    SPD by construction and costs one triangular solve.
    """
    scale = np.asarray(scale, dtype=float)
    p = scale.shape[0]
    if df < p:
        raise ValueError(f"inverse-Wishart df {df} below dimension {p}")
    L = cholesky_spd(scale, "scale")
    A = np.zeros((p, p))
    for i in range(p):
        # chi2(k) == 2 * Gamma(k/2); keeps the whole engine on one gamma primitive
        A[i, i] = np.sqrt(2.0 * rng.standard_gamma(0.5 * (df - i)))
        for k in range(i):
            A[i, k] = rng.standard_normal()
    B = np.linalg.solve(A, L.T).T  # L A^-T
    return B @ B.T


def draw_inv_gamma(rng, shape, scale):
    """One draw from InvGamma(shape, scale), i.e. 1/Gamma(shape, rate=scale)."""
    if shape <= 0 or scale <= 0:
        raise ValueError("inverse-gamma shape and scale must be positive")
    return scale / rng.standard_gamma(shape)


def draw_mv_student_t(rng, loc, scale, df):
    """One draw from the multivariate Student t(loc, scale, df).

    loc + L z sqrt(df/g) with z standard normal and g ~ chi2(df).
    """
    loc = np.asarray(loc, dtype=float).reshape(-1)
    scale = np.asarray(scale, dtype=float)
    if df <= 0:
        raise ValueError("t degrees of freedom must be positive")
    L = cholesky_spd(scale, "scale")
    z = rng.standard_normal(loc.shape[0])
    g = 2.0 * rng.standard_gamma(0.5 * df)
    return loc + (L @ z) * np.sqrt(df / g)
