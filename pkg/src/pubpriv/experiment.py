"""Seeded experiment runner and summary reports."""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import asdict, dataclass, fields
import itertools
import json
import math
from pathlib import Path
import time

import numpy as np
from scipy import stats

from .dp_core import Accountant, PrivacyBudget, ZeroNoise, stream
from .errors import ConfigError, IncompleteClusteringError, ParameterError, ReportParseError
from .gauss_est import GaussianParams, one_sample_mean_estimator, pub_dp_gaussian_estimator
from .gmm_est import estimate_gmm_easy, estimate_gmm_hard
from .synth import (clean_partition, evaluate_learning, gamma_far_gaussian, make_separated_mixture,
                    random_gaussian, sample_gaussian, sample_mixture, tv_distance)

TASKS = ("gaussian", "gaussian_robust", "gmm_hard", "gmm_easy", "mean_1sample")
GAUSSIAN_TASKS = ("gaussian", "gaussian_robust", "mean_1sample")
GMM_TASKS = ("gmm_hard", "gmm_easy")

RESULT_COLUMNS = [
    "config_index", "trial_index", "seed", "task", "d", "k", "n", "m", "alpha", "beta", "gamma",
    "w_min", "separation_multiplier", "budget_kind", "budget_value", "success", "tv",
    "tv_components", "weight_errors", "mean_error", "clean", "budget_spent", "spent_delta",
    "within_budget", "error",
]
TIMING_COLUMNS = ["config_index", "trial_index", "wall_ms"]
SUMMARY_COLUMNS = [
    "task", "d", "k", "n", "m", "alpha", "beta", "gamma", "budget_kind", "budget_value", "trials",
    "success_rate", "ci_lo", "ci_hi", "mean_tv", "median_tv", "mean_ms",
]
NO_DATA = "no data"


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment cell: a task, its sizes and parameters, and the trial seed.

    ``spread`` bounds the condition number of generated covariances and
    ``mean_scale`` the spread of generated means; ``learner`` picks the
    inner Gaussian learner method.
    """

    task: str
    d: int
    n: int
    budget: PrivacyBudget
    k: int = 1
    m: int = None
    alpha: float = 0.2
    beta: float = 0.1
    gamma: float = 0.0
    w_min: float = None
    separation_multiplier: float = 10.0
    spread: float = 2.0
    mean_scale: float = 10.0
    learner: str = "iterative"
    trials: int = 1
    seed: int = 0
    out_path: str = "results.csv"

    def __post_init__(self):
        if self.m is None:
            if self.task in ("gaussian", "gaussian_robust"):
                object.__setattr__(self, "m", self.d + 1 if isinstance(self.d, int) else None)
            elif self.task == "mean_1sample":
                object.__setattr__(self, "m", 1)
        if self.w_min is None and self.task in GMM_TASKS and isinstance(self.k, int) and self.k > 0:
            object.__setattr__(self, "w_min", 1.0 / self.k)

    def validate(self):
        """Raise ConfigError unless every field suits the task."""
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        def is_int(v):
            return isinstance(v, (int, np.integer)) and not isinstance(v, bool)

        def is_num(v):
            return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) \
                and math.isfinite(v)

        need(self.task in TASKS, f"task must be one of {TASKS}, got {self.task!r}")
        for name in ("d", "k", "n", "m", "trials", "seed"):
            need(is_int(getattr(self, name)), f"{name} must be an integer")
        for name in ("alpha", "beta", "gamma", "separation_multiplier", "spread", "mean_scale"):
            need(is_num(getattr(self, name)), f"{name} must be a finite number")
        need(isinstance(self.budget, PrivacyBudget), "budget must be a privacy budget")
        need(self.budget.value > 0, "budget must be positive")
        need(self.d >= 1, "d must be >= 1")
        need(self.trials >= 0, "trials must be >= 0")
        need(0 <= self.seed < 2 ** 64, "seed must be a 64-bit unsigned integer")
        need(self.alpha > 0, "alpha must be positive")
        need(0 < self.beta < 1, "beta must lie in (0, 1)")
        need(0 <= self.gamma < 1, "gamma must lie in [0, 1)")
        need(self.spread >= 1, "spread must be >= 1")
        need(self.mean_scale >= 0, "mean_scale must be >= 0")
        need(self.learner in ("iterative", "single_shot"), "learner must be iterative or single_shot")
        need(isinstance(self.out_path, str) and self.out_path, "out_path must be a path")
        if self.task in ("gaussian", "gaussian_robust"):
            need(self.k == 1, f"{self.task} needs k = 1")
            need(self.m == self.d + 1, f"{self.task} needs exactly m = d + 1 public rows")
            need(self.n >= 2, "n must be >= 2")
        if self.task == "gaussian":
            need(self.gamma == 0, "use task gaussian_robust for gamma > 0")
        if self.task == "mean_1sample":
            need(self.k == 1 and self.m == 1, "mean_1sample needs k = 1 and m = 1")
            need(self.n >= 1, "n must be >= 1")
        if self.task in GMM_TASKS:
            need(self.k >= 1, "k must be >= 1")
            need(is_num(self.w_min) and 0 < self.w_min <= 1 / self.k + 1e-12,
                 "w_min must lie in (0, 1/k]")
            need(self.m >= 2 and self.n >= 2, "m and n must be >= 2")
            need(self.separation_multiplier > 0, "separation_multiplier must be positive")
            need(self.gamma == 0, "mixture tasks take gamma = 0")
        if self.task == "gmm_easy":
            need(self.m >= self.d + 1, "gmm_easy needs at least d + 1 public rows")
        return self

    def to_dict(self):
        out = asdict(self)
        out["budget"] = self.budget.to_dict()
        return out


_FIELDS = {f.name for f in fields(ExperimentConfig)}


def _make_config(obj):
    obj = dict(obj)
    try:
        obj["budget"] = PrivacyBudget.from_dict(obj["budget"])
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc}") from exc
    except (ParameterError, TypeError, AttributeError) as exc:
        raise ConfigError(f"bad budget: {exc}") from exc
    try:
        return ExperimentConfig(**obj).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def expand_config(obj):
    """Configs for every point of a sweep, in sorted key order.

    Any field may hold a list of values; the cross product is enumerated
    with keys sorted alphabetically and the last key varying fastest.
    Unknown keys are an error.
    """
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    keys = sorted(obj)
    axes = [obj[kk] if isinstance(obj[kk], list) else [obj[kk]] for kk in keys]
    if any(len(a) == 0 for a in axes):
        raise ConfigError("a sweep list is empty")
    return [_make_config(dict(zip(keys, combo))) for combo in itertools.product(*axes)]


def load_config(path):
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return expand_config(obj)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return ";".join(_fmt(float(x)) for x in v)
    return str(v)


def _trial_rngs(cfg, ci, ti, zero_noise):
    data = stream(cfg.seed, ci, ti, 0)
    mech = ZeroNoise() if zero_noise else stream(cfg.seed, ci, ti, 1)
    return data, mech, stream(cfg.seed, ci, ti, 2)


def _gaussian_trial(cfg, data_rng, mech_rng, eval_rng, acc, out):
    truth = random_gaussian(cfg.d, cfg.spread, cfg.mean_scale, data_rng)
    if cfg.task == "mean_1sample":
        truth = GaussianParams(truth.mean, np.eye(cfg.d))
        pub = sample_gaussian(truth, 1, data_rng).rows[0]
        priv = sample_gaussian(truth, cfg.n, data_rng).rows
        mu = one_sample_mean_estimator(pub, priv, cfg.alpha, cfg.beta, cfg.budget, mech_rng, acc)
        err = float(np.linalg.norm(mu - truth.mean))
        out.update(mean_error=err, tv=2 * stats.norm.cdf(err / 2) - 1, success=err <= cfg.alpha)
        out["tv_components"] = [out["tv"]]
        return
    source = truth
    if cfg.task == "gaussian_robust":
        source = gamma_far_gaussian(truth, cfg.gamma, data_rng)
    pub = sample_gaussian(source, cfg.m, data_rng).rows
    priv = sample_gaussian(truth, cfg.n, data_rng).rows
    est = pub_dp_gaussian_estimator(pub, priv, cfg.alpha, cfg.beta, cfg.budget, cfg.gamma,
                                    mech_rng, cfg.learner, acc)
    tv, _ = tv_distance(truth, est, rng=eval_rng)
    out.update(tv=tv, tv_components=[tv], success=tv <= cfg.alpha,
               mean_error=float(np.linalg.norm(est.mean - truth.mean)))


def _gmm_trial(cfg, data_rng, mech_rng, eval_rng, acc, out):
    truth = make_separated_mixture(cfg.d, cfg.k, cfg.separation_multiplier, cfg.w_min, cfg.spread,
                                   data_rng, offset_scale=cfg.mean_scale)
    pub = sample_mixture(truth, cfg.m, data_rng)
    priv = sample_mixture(truth, cfg.n, data_rng)
    run = estimate_gmm_hard if cfg.task == "gmm_hard" else estimate_gmm_easy
    try:
        est, part = run(pub.rows, priv.rows, cfg.k, cfg.w_min, cfg.alpha, cfg.beta, cfg.budget,
                        mech_rng, acc, method=cfg.learner)
    except IncompleteClusteringError as exc:
        out.update(clean=False, success=False, error=f"incomplete clustering: {exc}")
        return
    out["clean"] = clean_partition(part, priv.labels, cfg.k)
    rep = evaluate_learning(truth, est, cfg.alpha, rng=eval_rng)
    out.update(success=rep.passed, tv=rep.max_tv if rep.tv else math.nan,
               tv_components=rep.tv, weight_errors=rep.weight_err)
    if rep.reason:
        out["error"] = rep.reason


def run_trial(cfg, config_index, trial_index, zero_noise=False):
    """One trial as (result row dict, wall time in ms). Pipeline errors land in the row."""
    data_rng, mech_rng, eval_rng = _trial_rngs(cfg, config_index, trial_index, zero_noise)
    acc = Accountant(cfg.budget)
    out = {"config_index": config_index, "trial_index": trial_index, "seed": cfg.seed,
           "task": cfg.task, "d": cfg.d, "k": cfg.k, "n": cfg.n, "m": cfg.m,
           "alpha": float(cfg.alpha), "beta": float(cfg.beta), "gamma": float(cfg.gamma),
           "w_min": None if cfg.w_min is None else float(cfg.w_min),
           "separation_multiplier": float(cfg.separation_multiplier),
           "budget_kind": cfg.budget.kind, "budget_value": float(cfg.budget.value),
           "success": False, "tv": math.nan, "tv_components": [], "weight_errors": [],
           "mean_error": None, "clean": None, "error": ""}
    t0 = time.perf_counter()
    try:
        if cfg.task in GAUSSIAN_TASKS:
            _gaussian_trial(cfg, data_rng, mech_rng, eval_rng, acc, out)
        else:
            _gmm_trial(cfg, data_rng, mech_rng, eval_rng, acc, out)
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        out.update(success=False, error=f"{type(exc).__name__}: {exc}")
    wall_ms = (time.perf_counter() - t0) * 1000.0
    spent = acc.spent()
    out.update(success=bool(out["success"]), tv=float(out["tv"]), budget_spent=float(spent.value),
               spent_delta=float(spent.delta), within_budget=acc.within_budget())
    return out, wall_ms


def _job(args):
    return run_trial(*args)


def timing_path(results_path):
    p = Path(results_path)
    return p.with_name(p.name + ".timing.csv")


def run_experiment(configs, out_path=None, zero_noise=False, threads=1, trials=None):
    """Run every trial of every config and write the results CSV.

    Rows come out in (config, trial) order whatever the completion order,
    and each trial's randomness depends only on (seed, config index, trial
    index), so the same inputs give a byte-identical file. Wall times go to
    a separate ``<results>.timing.csv`` so they do not break that.
    """
    if isinstance(configs, ExperimentConfig):
        configs = [configs]
    configs = [c.validate() for c in configs]
    if trials is not None:
        configs = [replace_config(c, trials=int(trials)) for c in configs]
    path = Path(out_path or configs[0].out_path)
    jobs = [(c, ci, ti, zero_noise) for ci, c in enumerate(configs) for ti in range(c.trials)]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for row, _ in results:
            w.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])
    with open(timing_path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMING_COLUMNS)
        for row, ms in results:
            w.writerow([row["config_index"], row["trial_index"], repr(round(ms, 3))])
    return path


def replace_config(cfg, **kw):
    d = {f.name: getattr(cfg, f.name) for f in fields(ExperimentConfig)}
    d.update(kw)
    return ExperimentConfig(**d).validate()


def wilson_interval(successes, trials, confidence=0.95):
    """Wilson score interval for a binomial proportion."""
    if trials == 0:
        return math.nan, math.nan
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


def _read_results(path):
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ReportParseError(f"cannot open {path}: {exc}") from exc
    rows = []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RESULT_COLUMNS:
            raise ReportParseError("unexpected header", 1)
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(RESULT_COLUMNS):
                raise ReportParseError(f"expected {len(RESULT_COLUMNS)} fields, got {len(rec)}",
                                       lineno)
            row = dict(zip(RESULT_COLUMNS, rec))
            try:
                for c in ("config_index", "trial_index", "d", "k", "n", "m"):
                    row[c] = int(row[c])
                for c in ("alpha", "beta", "gamma", "budget_value", "tv"):
                    row[c] = float(row[c])
                if row["success"] not in ("0", "1"):
                    raise ValueError(f"success must be 0 or 1, got {row['success']!r}")
                row["success"] = row["success"] == "1"
            except ValueError as exc:
                raise ReportParseError(str(exc), lineno) from exc
            rows.append(row)
    return rows


def _read_timing(path):
    p = timing_path(path)
    if not p.exists():
        return {}
    out = {}
    with open(p, newline="") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for lineno, rec in enumerate(reader, start=2):
            try:
                out[(int(rec[0]), int(rec[1]))] = float(rec[2])
            except (ValueError, IndexError) as exc:
                raise ReportParseError(f"bad timing record: {exc}", lineno) from exc
    return out


def summarize(results_path):
    """One summary dict per config cell, in config order."""
    rows = _read_results(results_path)
    timing = _read_timing(results_path)
    groups = {}
    for r in rows:
        groups.setdefault(r["config_index"], []).append(r)
    out = []
    for ci in sorted(groups):
        g = groups[ci]
        succ = sum(r["success"] for r in g)
        lo, hi = wilson_interval(succ, len(g))
        tvs = np.array([r["tv"] for r in g if math.isfinite(r["tv"])])
        ms = [timing[(ci, r["trial_index"])] for r in g if (ci, r["trial_index"]) in timing]
        first = g[0]
        out.append({
            "task": first["task"], "d": first["d"], "k": first["k"], "n": first["n"],
            "m": first["m"], "alpha": first["alpha"], "beta": first["beta"],
            "gamma": first["gamma"], "budget_kind": first["budget_kind"],
            "budget_value": first["budget_value"], "trials": len(g),
            "success_rate": succ / len(g), "ci_lo": lo, "ci_hi": hi,
            "mean_tv": float(tvs.mean()) if tvs.size else math.nan,
            "median_tv": float(np.median(tvs)) if tvs.size else math.nan,
            "mean_ms": float(np.mean(ms)) if ms else math.nan,
        })
    return out


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def emit_report(results_path, out_prefix=None):
    """Write ``<prefix>.summary.csv`` and ``<prefix>.summary.json``; returns the summary rows.

    Both files are rendered from the same list of dicts. With no trials the
    CSV carries a single ``# no data`` line after the header and the JSON
    sets ``"no_data": true``.
    """
    summary = summarize(results_path)
    prefix = Path(out_prefix) if out_prefix else Path(results_path).with_suffix("")
    csv_path = prefix.with_name(prefix.name + ".summary.csv")
    json_path = prefix.with_name(prefix.name + ".summary.json")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        if not summary:
            fh.write(f"# {NO_DATA}\n")
        for s in summary:
            w.writerow([_fmt(s[c]) for c in SUMMARY_COLUMNS])
    doc = {"no_data": not summary, "columns": SUMMARY_COLUMNS,
           "rows": [{c: _json_value(s[c]) for c in SUMMARY_COLUMNS} for s in summary]}
    json_path.write_text(json.dumps(doc, indent=2) + "\n")
    return summary
