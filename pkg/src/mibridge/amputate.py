"""Complete-data generation and missingness induction (MCAR / right-tailed MAR).

Every pattern deletes exactly one cell, so no row is ever fully missing.
Under MCAR a row becomes incomplete with a fixed probability; under MARr the
probability is tilted by a logistic function of the row's remaining observed
variables (standardized), so rows whose other values are high lose their
cell more often while the expected overall fraction of incomplete rows stays
at the nominal level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import IncompleteData
from .gaussian import GaussianParams, cholesky_spd

__all__ = ["AmputationSpec", "generate_complete", "ampute"]

MECHANISMS = ("MCAR", "MARr")


@dataclass(frozen=True)
class AmputationSpec:
    """Mechanism, fraction of incomplete rows, and single-cell patterns.

    ``patterns`` lists (column index, weight) pairs; weights must be positive
    and sum to one, and each pattern removes only its own column.
    """

    mechanism: str
    prop_missing_rows: float
    patterns: tuple

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"mechanism must be one of {MECHANISMS}")
        if not 0.0 < self.prop_missing_rows < 1.0:
            raise ValueError("prop_missing_rows must lie strictly in (0, 1)")
        patterns = tuple((int(c), float(w)) for c, w in self.patterns)
        cols = [c for c, _ in patterns]
        weights = np.array([w for _, w in patterns])
        if len(set(cols)) != len(cols):
            raise ValueError("pattern columns must be distinct")
        if (weights <= 0).any():
            raise ValueError("pattern weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("pattern weights must sum to one")
        object.__setattr__(self, "patterns", patterns)

    @classmethod
    def equal_single_cell(cls, mechanism, prop_missing_rows, p):
        """One single-cell pattern per column, equal weights."""
        return cls(
            mechanism=mechanism,
            prop_missing_rows=prop_missing_rows,
            patterns=tuple((j, 1.0 / p) for j in range(p)),
        )


def generate_complete(rng, n, params: GaussianParams):
    """n iid rows from N(mu, Sigma)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    L = cholesky_spd(params.sigma, "sigma")
    return params.mu + rng.standard_normal((n, params.p)) @ L.T


def ampute(rng, data, spec: AmputationSpec, column_names=None) -> IncompleteData:
    """Delete cells from a complete matrix according to ``spec``.

    Each row is independently assigned a candidate pattern by weight and is
    then made incomplete with probability ``prop_missing_rows`` (MCAR) or
    with a probability proportional to the logistic of the standardized mean
    of the columns the pattern keeps (MARr), rescaled so the expected
    fraction of incomplete rows stays at the nominal level.
    """
    data = np.asarray(data, dtype=float)
    n, p = data.shape
    cols = np.array([c for c, _ in spec.patterns])
    if cols.max() >= p or cols.min() < 0:
        raise ValueError("pattern references a column outside the data")
    weights = np.array([w for _, w in spec.patterns])
    if column_names is None:
        column_names = [f"v{j}" for j in range(p)]

    assigned = rng.choice(cols.shape[0], size=n, p=weights)
    u = rng.random(n)

    if spec.mechanism == "MCAR":
        incomplete = u < spec.prop_missing_rows
    else:
        std = data.std(axis=0)
        if (std == 0).any():
            raise ValueError("constant column; cannot standardize for MARr")
        z = (data - data.mean(axis=0)) / std
        zbar = np.empty(n)
        for k, j in enumerate(cols):
            keep = [c for c in range(p) if c != j]
            rows = assigned == k
            zbar[rows] = z[np.ix_(np.flatnonzero(rows), keep)].mean(axis=1)
        w = 1.0 / (1.0 + np.exp(-zbar))
        prob = np.clip(spec.prop_missing_rows * w / w.mean(), 0.0, 1.0)
        incomplete = u < prob

    mask = np.zeros((n, p), dtype=bool)
    mask[incomplete, cols[assigned[incomplete]]] = True
    return IncompleteData(values=data, mask=mask, column_names=column_names)
