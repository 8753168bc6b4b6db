"""Experiment harness: configuration, replication studies, file outputs.

Binds the modules together for the four studies the package ships: the
coverage study (generate, ampute, impute, pool, evaluate), the visit-order
experiment, the joint-model versus chained-equations posterior comparison,
and the prior transformation.  Every study derives per-replication random
streams from (seed, replication id), so outputs are byte-identical for a
given configuration regardless of worker count.
"""

from __future__ import annotations

import csv
import json
import subprocess
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import _kernels, analysis, io, jm
from .amputate import AmputationSpec, ampute, generate_complete
from .data import IncompleteData
from .fcs import SingularDesignError, VisitSequence, fcs_impute, fcs_iterate
from .gaussian import GaussianParams, partition, to_regression
from .priors import NiwPrior, decompose
from .samplers import stream

__all__ = [
    "ExperimentConfig",
    "run_coverage_study",
    "run_order_effect",
    "run_posterior_compare",
    "transform_prior",
    "simulate",
    "impute_file",
]

DEFAULT_POPULATION_MU = (1.0, 4.0, 9.0)
DEFAULT_POPULATION_SIGMA = ((4.0, 2.0, 2.0), (2.0, 4.0, 2.0), (2.0, 2.0, 9.0))
DEFAULT_PRIOR = {
    "mu0": [0.0, 0.0, 0.0],
    "tau": 1.0,
    "m": 3.0,
    "lambda": [[60.0, 0.0, 0.0], [0.0, 60.0, 0.0], [0.0, 0.0, 60.0]],
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a study run needs; JSON-serializable, unknown fields rejected."""

    seed: int = 20260809
    n_cases: int = 200
    n_replications: int = 500
    mechanism: str = "MCAR"
    method: str = "fcs"  # fcs | jm | both
    m_imputations: int = 5
    burn_in: int = 10
    thin: int = 1
    order_effect_iters: int = 1000
    n_batches: int = 20
    prop_missing: float = 0.5
    columns: tuple = ("x", "y", "z")
    population_mu: tuple = DEFAULT_POPULATION_MU
    population_sigma: tuple = DEFAULT_POPULATION_SIGMA
    prior: dict = field(default_factory=lambda: dict(DEFAULT_PRIOR))
    visit_sequence: tuple = ("z", "x", "y")
    estimand_column: str = "y"
    compare_draws: int = 2000
    workers: int = 1
    output_dir: str = None

    def __post_init__(self):
        for name in ("n_cases", "n_replications", "m_imputations", "thin",
                     "order_effect_iters", "n_batches", "compare_draws", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.mechanism not in ("MCAR", "MARr"):
            raise ValueError("mechanism must be MCAR or MARr")
        if self.method not in ("fcs", "jm", "both"):
            raise ValueError("method must be fcs, jm or both")
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "visit_sequence", tuple(self.visit_sequence))
        object.__setattr__(self, "population_mu", tuple(self.population_mu))
        object.__setattr__(
            self, "population_sigma", tuple(map(tuple, self.population_sigma))
        )
        if self.estimand_column not in self.columns:
            raise ValueError("estimand_column not among columns")
        prior = self.joint_prior()
        if prior is not None and prior.p != len(self.columns):
            raise ValueError("prior dimension does not match columns")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            f.name: _jsonify(getattr(self, f.name)) for f in fields(self)
        }

    def population(self) -> GaussianParams:
        return GaussianParams(
            np.asarray(self.population_mu), np.asarray(self.population_sigma)
        )

    def joint_prior(self):
        """The joint prior, or None if the config carries per-column priors only."""
        if "nig" in self.prior:
            return None
        d = self.prior.get("niw", self.prior)
        return io.niw_from_dict(d)

    def column_priors(self) -> dict:
        """Per-column conditional priors, decomposed from the joint if needed."""
        if "nig" in self.prior:
            out = {}
            for name, spec in self.prior["nig"].items():
                j = self.columns.index(name)
                d = dict(spec)
                d.setdefault("j", j)
                out[j] = io.nig_from_dict(d)
                if out[j].j != j:
                    raise ValueError(f"prior for {name} carries wrong column index")
            return out
        joint = self.joint_prior()
        return {j: decompose(joint, j)[0] for j in range(len(self.columns))}

    def amputation(self) -> AmputationSpec:
        return AmputationSpec.equal_single_cell(
            self.mechanism, self.prop_missing, len(self.columns)
        )

    def visit(self) -> VisitSequence:
        return VisitSequence(tuple(self.columns.index(c) for c in self.visit_sequence))


def _jsonify(v):
    if isinstance(v, tuple):
        return [_jsonify(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def _git_describe():
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
        )
        return out.stdout.strip() or "unknown"
    except OSError:
        return "unknown"


class _RunDir:
    """Output directory helper: config echo, manifest, CSV/JSON writers."""

    def __init__(self, config: ExperimentConfig, study: str):
        self.config = config
        self.study = study
        self.t0 = time.time()
        self.path = None
        if config.output_dir is not None:
            import os

            self.path = config.output_dir
            os.makedirs(self.path, exist_ok=True)
            self.write_json("config.json", config.to_dict())

    def file(self, name):
        import os

        return os.path.join(self.path, name)

    def write_json(self, name, obj):
        if self.path is None:
            return
        with open(self.file(name), "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_rows(self, name, header, rows):
        if self.path is None:
            return
        with open(self.file(name), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)

    def manifest(self, **extra):
        self.write_json(
            "manifest.json",
            {
                "study": self.study,
                "seed": self.config.seed,
                "git": _git_describe(),
                "kernel_backend": _kernels.BACKEND,
                "wall_seconds": round(time.time() - self.t0, 3),
                **extra,
            },
        )


def _impute(method, inc, config, rng, joint, col_priors, visit):
    if method == "jm":
        return jm.jm_impute(
            inc, joint, rng, config.burn_in, config.m_imputations, config.thin
        )
    return fcs_impute(inc, col_priors, visit, rng, config.burn_in, config.m_imputations)


def _one_coverage_rep(args):
    config, rep, joint, col_priors, method = args
    rng = stream(config.seed, rep)
    population = config.population()
    complete = generate_complete(rng, config.n_cases, population)
    inc = ampute(rng, complete, config.amputation(), config.columns)
    visit = VisitSequence(tuple(j for j in config.visit().order if inc.mask[:, j].any()))
    yj = config.columns.index(config.estimand_column)
    try:
        imps = _impute(method, inc, config, rng, joint, col_priors, visit)
    except SingularDesignError as err:
        return rep, None, str(err)
    n = config.n_cases
    est = [(Y[:, yj].mean(), Y[:, yj].var(ddof=1) / n) for Y in imps]
    return rep, analysis.pool(est), None


def run_coverage_study(config: ExperimentConfig):
    """Replicated generate/ampute/impute/pool pipeline; returns the summary.

    Writes per-replication pooled estimates, an evaluation summary and a run
    manifest when the config names an output directory.  Aborts (after
    writing) if more than 1% of replications failed on degenerate designs.
    """
    method = config.method if config.method != "both" else "fcs"
    run = _RunDir(config, "coverage-study")
    joint = config.joint_prior()
    col_priors = config.column_priors() if method == "fcs" else None
    if method == "jm" and joint is None:
        raise ValueError("joint-model imputation needs a joint prior")
    jobs = [(config, rep, joint, col_priors, method) for rep in range(config.n_replications)]
    if config.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            results = list(ex.map(_one_coverage_rep, jobs))
    else:
        results = [_one_coverage_rep(job) for job in jobs]
    results.sort(key=lambda r: r[0])

    truth = float(
        config.population_mu[config.columns.index(config.estimand_column)]
    )
    pooled = [p for _, p, _ in results if p is not None]
    failures = [(rep, err) for rep, p, err in results if p is None]
    summary = analysis.evaluate(pooled, truth)

    run.write_rows(
        "replications.csv",
        ["rep", "qbar", "ubar", "b", "t_var", "df", "ci_low", "ci_high"],
        [
            (rep, p.qbar, p.ubar, p.b, p.t_var, p.df, p.ci_low, p.ci_high)
            for rep, p, _ in results
            if p is not None
        ],
    )
    run.write_json(
        "summary.json",
        {
            "truth": truth,
            "bias": summary.bias,
            "coverage": summary.coverage,
            "ci_width": summary.ci_width,
            "n_reps": summary.n_reps,
            "method": method,
            "n_failed": len(failures),
        },
    )
    run.manifest(n_failed=len(failures), failures=[list(f) for f in failures])
    if len(failures) > 0.01 * config.n_replications:
        raise RuntimeError(
            f"{len(failures)} of {config.n_replications} replications aborted"
        )
    return summary


def run_order_effect(config: ExperimentConfig):
    """Visit-order experiment; returns (exclusion fraction, per-rep results)."""
    if config.mechanism != "MCAR":
        raise ValueError("the order-effect experiment runs under MCAR only")
    run = _RunDir(config, "order-effect")
    yj = config.columns.index(config.estimand_column)
    visit = config.visit()
    # coefficient position: slope of the first visited predictor in the
    # response regression (intercept first, predictors in ascending order)
    rest = [c for c in range(len(config.columns)) if c != yj]
    predictor = visit.order[1] if visit.order[1] != yj else visit.order[0]
    predictor_pos = 1 + rest.index(predictor)
    fraction, results = analysis.order_effect_experiment(
        config.seed,
        config.n_replications,
        config.population(),
        config.n_cases,
        config.amputation(),
        config.joint_prior(),
        visit,
        yj,
        predictor_pos,
        n_burn=config.burn_in,
        n_keep=config.order_effect_iters,
        n_batches=config.n_batches,
        workers=config.workers,
    )
    run.write_rows(
        "order_effect.csv",
        ["rep", "mean_diff", "se", "ci_low", "ci_high", "excludes_zero"],
        [
            (i, r.mean_diff, r.se, r.ci_low, r.ci_high, int(r.excludes_zero))
            for i, r in enumerate(results)
        ],
    )
    run.write_json(
        "summary.json",
        {
            "exclusion_fraction": fraction,
            "n_replications": config.n_replications,
            "n_excluding": int(round(fraction * config.n_replications)),
        },
    )
    run.manifest()
    return fraction, results


def _jm_beta_trace(inc, prior, rng, n_burn, n_draws, response, predictor_pos):
    state = jm.jm_start(inc, prior, rng)
    trace = np.empty(n_draws)
    for it in range(n_burn + n_draws):
        state = jm.jm_gibbs_step(state, inc, prior, rng)
        if it >= n_burn:
            reg = to_regression(partition(state.params, response))
            trace[it - n_burn] = reg.beta[predictor_pos - 1]
    return trace


def _fcs_beta_trace(inc, col_priors, visit, rng, n_burn, n_draws, response, predictor_pos):
    trace = np.empty(n_draws)

    def hook(it, pos, j, completed, coef, sigma2):
        if j == response and it >= n_burn:
            trace[it - n_burn] = coef[predictor_pos]

    fcs_iterate(inc, col_priors, visit, rng, n_burn + n_draws, hook=hook)
    return trace


def run_posterior_compare(config: ExperimentConfig):
    """Both samplers on one amputed dataset; returns (ks, qq pairs, traces).

    Collects ``compare_draws`` post-burn-in draws of the response
    regression's first-predictor coefficient from each sampler and compares
    them by the two-sample KS statistic and matched quantiles.
    """
    run = _RunDir(config, "posterior-compare")
    rng_data = stream(config.seed, 0)
    population = config.population()
    complete = generate_complete(rng_data, config.n_cases, population)
    inc = ampute(rng_data, complete, config.amputation(), config.columns)

    yj = config.columns.index(config.estimand_column)
    rest = [c for c in range(len(config.columns)) if c != yj]
    predictor_pos = 1  # slope of the lowest-index predictor
    joint = config.joint_prior()
    col_priors = config.column_priors()
    visit = VisitSequence(tuple(j for j in config.visit().order if inc.mask[:, j].any()))

    bjm = _jm_beta_trace(
        inc, joint, stream(config.seed, 1), config.burn_in, config.compare_draws,
        yj, predictor_pos,
    )
    bfcs = _fcs_beta_trace(
        inc, col_priors, visit, stream(config.seed, 2), config.burn_in,
        config.compare_draws, yj, predictor_pos,
    )
    ks, qq = analysis.posterior_compare(bjm, bfcs)
    run.write_rows(
        "qq.csv",
        ["percentile", "q_jm", "q_fcs"],
        [(i + 1, a, b) for i, (a, b) in enumerate(qq)],
    )
    run.write_json(
        "ks.json",
        {
            "ks": ks,
            "n_draws": config.compare_draws,
            "predictor": config.columns[rest[predictor_pos - 1]],
            "response": config.estimand_column,
        },
    )
    run.manifest()
    return ks, qq, (bjm, bfcs)


def transform_prior(prior_dict: dict, j=None, columns=None) -> dict:
    """Decompose a joint prior into per-column conditional priors (JSON form).

    ``j`` restricts the output to one column (index or name).  The document
    echoes the convention every matrix is stated in, the marginal prior left
    after removing each column, and a hash of the source prior.
    """
    joint = io.niw_from_dict(prior_dict)
    if columns is None:
        columns = [f"v{k}" for k in range(joint.p)]
    if isinstance(j, str):
        j = list(columns).index(j)
    indices = range(joint.p) if j is None else [j]
    cols = []
    for idx in indices:
        cond, marg = decompose(joint, idx)
        entry = io.nig_to_dict(cond, column=columns[idx])
        entry["marginal_rest"] = io.niw_to_dict(marg)
        cols.append(entry)
    return {
        "convention": dict(io.CONVENTION),
        "source": {
            "niw": io.niw_to_dict(joint),
            "sha256": io.canonical_hash(io.niw_to_dict(joint)),
        },
        "columns": cols,
    }


def simulate(config: ExperimentConfig, out_path, complete_path=None, rep=0):
    """Generate one dataset, ampute it, and write the CSV with empty missing cells."""
    rng = stream(config.seed, rep)
    complete = generate_complete(rng, config.n_cases, config.population())
    inc = ampute(rng, complete, config.amputation(), config.columns)
    io.write_data_csv(out_path, complete, config.columns, mask=inc.mask)
    if complete_path is not None:
        io.write_data_csv(complete_path, complete, config.columns)
    return inc


def impute_file(data_path, config: ExperimentConfig, out_prefix, method=None):
    """Impute a CSV dataset m times; writes one completed CSV per imputation."""
    inc = io.read_data_csv(data_path)
    method = method or config.method
    if method == "both":
        raise ValueError("impute writes one method at a time; pass fcs or jm")
    rng = stream(config.seed, 0)
    joint = config.joint_prior()
    if len(inc.column_names) != len(config.columns):
        raise ValueError("data columns do not match config")
    col_priors = config.column_priors() if method == "fcs" else None
    visit = VisitSequence(
        tuple(
            j
            for j in range(inc.p)
            if inc.mask[:, j].any()
        )
        if config.visit_sequence is None
        else tuple(
            config.columns.index(c)
            for c in config.visit_sequence
            if inc.mask[:, config.columns.index(c)].any()
        )
    )
    imps = _impute(method, inc, config, rng, joint, col_priors, visit)
    paths = []
    for i, Y in enumerate(imps, start=1):
        path = f"{out_prefix}{i}.csv"
        io.write_data_csv(path, Y, inc.column_names)
        paths.append(path)
    return paths
