"""Incomplete-data container shared by both imputers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["IncompleteData", "initial_fill"]


@dataclass(frozen=True)
class IncompleteData:
    """An n x p numeric matrix with a boolean missingness mask.

    ``mask`` is True where a cell is missing; masked entries of ``values``
    are NaN and are ignored by every statistic.  No row may be fully missing.
    """

    values: np.ndarray
    mask: np.ndarray
    column_names: tuple

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        mask = np.array(self.mask, dtype=bool)
        if values.shape != mask.shape or values.ndim != 2:
            raise ValueError("values and mask must be equal-shape 2-d arrays")
        names = tuple(str(c) for c in self.column_names)
        if len(names) != values.shape[1]:
            raise ValueError("column_names length does not match columns")
        if mask.all(axis=1).any():
            raise ValueError("a row with every cell missing cannot be imputed")
        if np.isnan(values[~mask]).any():
            raise ValueError("NaN in a cell not flagged missing")
        values[mask] = np.nan
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    @property
    def n_missing(self):
        return int(self.mask.sum())

    def column_index(self, name):
        return self.column_names.index(name)


def initial_fill(data: IncompleteData, rng) -> np.ndarray:
    """Completed copy with missing cells drawn from each column's observed values.

    Columns are visited in ascending order; within a column the draws are
    uniform over the observed entries, one per missing cell in row order.
    """
    out = data.values.copy()
    for j in range(data.p):
        mis = data.mask[:, j]
        n_mis = int(mis.sum())
        if n_mis == 0:
            continue
        obs_vals = data.values[~mis, j]
        if obs_vals.size == 0:
            raise ValueError(f"column {data.column_names[j]} has no observed values")
        out[mis, j] = obs_vals[rng.integers(0, obs_vals.size, size=n_mis)]
    return out
