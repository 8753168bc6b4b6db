"""File formats: CSV with empty-field missing cells, prior JSON documents."""

from __future__ import annotations

import csv
import hashlib
import json

import numpy as np

from .data import IncompleteData
from .priors import NigPrior, NiwPrior

__all__ = [
    "write_data_csv",
    "read_data_csv",
    "niw_from_dict",
    "niw_to_dict",
    "nig_to_dict",
    "nig_from_dict",
    "canonical_hash",
]

# documented once, echoed into every prior JSON this package writes
CONVENTION = {
    "inverse_wishart": (
        "InvWishart(df, scale): p(S) propto |S|^(-(df+p+1)/2) exp(-tr(scale S^-1)/2); "
        "scalar case equals InvGamma(df/2, scale/2)"
    ),
    "coef_given_sigma": "cov(coef | sigma2) = sigma2 * coef_scale_given_sigma",
    "nominal_coef_covariance": (
        "reporting form: intercept variance at the sigma2 prior mean, slope "
        "block scaled by the rest-block scale matrix"
    ),
}


def write_data_csv(path, values, column_names, mask=None):
    """Write a matrix as CSV; cells where ``mask`` is True are left empty."""
    values = np.asarray(values)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(column_names)
        for i in range(values.shape[0]):
            row = []
            for j in range(values.shape[1]):
                if mask is not None and mask[i, j]:
                    row.append("")
                else:
                    row.append(repr(float(values[i, j])))
            writer.writerow(row)


def read_data_csv(path) -> IncompleteData:
    """Read a CSV with a header row; empty fields become missing cells."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if r]
    n, p = len(rows), len(header)
    values = np.zeros((n, p))
    mask = np.zeros((n, p), dtype=bool)
    for i, row in enumerate(rows):
        if len(row) != p:
            raise ValueError(f"row {i + 2} has {len(row)} fields, expected {p}")
        for j, cell in enumerate(row):
            if cell.strip() == "":
                mask[i, j] = True
                values[i, j] = np.nan
            else:
                values[i, j] = float(cell)
    return IncompleteData(values=values, mask=mask, column_names=header)


def niw_to_dict(prior: NiwPrior) -> dict:
    return {
        "mu0": prior.mu0.tolist(),
        "tau": prior.tau,
        "m": prior.m,
        "lambda": prior.lam.tolist(),
    }


def niw_from_dict(d: dict) -> NiwPrior:
    known = {"mu0", "tau", "m", "lambda"}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown joint-prior fields: {sorted(unknown)}")
    missing = known - set(d)
    if missing:
        raise ValueError(f"joint prior missing fields: {sorted(missing)}")
    return NiwPrior(
        mu0=np.asarray(d["mu0"], dtype=float),
        tau=float(d["tau"]),
        m=float(d["m"]),
        lam=np.asarray(d["lambda"], dtype=float),
    )


def nig_to_dict(cond: NigPrior, column=None) -> dict:
    out = {
        "j": cond.j,
        "sigma_prior": {"df": cond.sigma_df, "scale": cond.sigma_scale},
        "coef_mean": cond.coef_mean.tolist(),
        "coef_scale_given_sigma": cond.coef_scale_given_sigma.tolist(),
    }
    if column is not None:
        out["column"] = column
    try:
        out["nominal_coef_covariance"] = cond.nominal_coef_covariance().tolist()
    except ValueError:
        out["nominal_coef_covariance"] = None  # undefined for sigma_df <= 2
    return out


def nig_from_dict(d: dict) -> NigPrior:
    return NigPrior(
        j=int(d["j"]),
        sigma_df=float(d["sigma_prior"]["df"]),
        sigma_scale=float(d["sigma_prior"]["scale"]),
        coef_mean=np.asarray(d["coef_mean"], dtype=float),
        coef_scale_given_sigma=np.asarray(d["coef_scale_given_sigma"], dtype=float),
    )


def canonical_hash(obj) -> str:
    """Stable sha256 of a JSON-serializable object."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
