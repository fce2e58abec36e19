"""Replicated benchmark runs: crude vs importance-sampling arms, RMSE
tables, and plot-ready CSV emission.

Per-replication seeds derive from the master seed and the replication and
arm indices through SeedSequence, so arms are statistically independent and
any single replication can be re-run in isolation. Wall-clock fields aside,
a report is a pure function of its config.
"""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .distortion import (drm_from_quantiles, estimation_levels, g_increments,
                         make_partition, power_tail, reference_drm)
from .errors import ConfigError, DrmisError, EstimationError
from .models import alm_model, builtin_model
from .pipeline import (DrmReport, PipelineConfig, crude_drm, estimate_drm,
                       estimate_drm_iterative)

ARM_CRUDE = "crude"
ARM_IS = "is"
ARM_ITERATIVE = "iterative"
_ARMS = (ARM_CRUDE, ARM_IS, ARM_ITERATIVE)

REF_ANALYTIC = "analytic"
REF_CRUDE = "crude"
REF_SELF = "self"

SUMMARY_COLUMNS = ("model", "gamma", "alpha", "arm", "surrogate", "mean",
                   "rmse", "ratio", "h_calls", "wall_time_s")
RATIO_COLUMNS = ("model", "gamma", "alpha", "surrogate", "ratio")


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark: a model, a grid of (gamma, alpha) distortion points,
    a pipeline template whose distortion is replaced per point, and the
    replication plan."""

    model: object                      # builtin id, "alm", or a model factory
    points: tuple                      # ((gamma, alpha), ...)
    pipeline: PipelineConfig
    reps: int = 50
    arms: tuple = (ARM_CRUDE, ARM_IS)
    reference: str = REF_ANALYTIC
    n_ref: int = 10_000_000
    master_seed: int = 0
    stage_levels: tuple | None = None
    stage_budgets: tuple | None = None
    label: str = ""

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        pts = tuple((float(gm), float(al)) for gm, al in self.points)
        if not pts:
            raise ConfigError("at least one (gamma, alpha) point required")
        for gm, al in pts:
            if not 0.0 < al < 1.0:
                raise ConfigError("alpha grid must lie inside (0, 1)")
            if gm <= 0.0:
                raise ConfigError("gamma must be positive")
        object.__setattr__(self, "points", pts)
        arms = tuple(self.arms)
        if not arms or any(a not in _ARMS for a in arms):
            raise ConfigError(f"arms must be a subset of {_ARMS}")
        object.__setattr__(self, "arms", arms)
        if self.reference not in (REF_ANALYTIC, REF_CRUDE, REF_SELF):
            raise ConfigError(f"unknown reference mode {self.reference!r}")
        if ARM_ITERATIVE in arms and (self.stage_levels is None
                                      or self.stage_budgets is None):
            raise ConfigError("iterative arm needs stage_levels and "
                              "stage_budgets")


@dataclass(frozen=True)
class ArmRow:
    """Aggregate of one (point, arm) cell of the experiment grid."""

    model: str
    gamma: float
    alpha: float
    arm: str
    surrogate: str
    mean: float
    rmse: float
    ratio: float
    h_calls: int
    wall_time_s: float
    reference: float
    estimates: tuple
    seeds: tuple
    failures: tuple


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple
    master_seed: int
    reps: int
    reference_mode: str
    total_wall_time_s: float
    meta: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "reps": self.reps,
            "reference_mode": self.reference_mode,
            "total_wall_time_s": self.total_wall_time_s,
            "meta": self.meta,
            "rows": [asdict(r) for r in self.rows],
        }


def rep_seed(master: int, rep: int, arm_index: int) -> int:
    """Derived per-replication seed; stable across runs and platforms."""
    ss = np.random.SeedSequence([int(master), int(rep), int(arm_index)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _model_factory(selector):
    if callable(selector) and not hasattr(selector, "evaluate"):
        return selector, getattr(selector, "__name__", "custom")
    if isinstance(selector, str) and selector == "alm":
        return (lambda: alm_model()), "alm"
    if isinstance(selector, (int, np.integer)):
        i = int(selector)
        builtin_model(i)  # validate early
        return (lambda: builtin_model(i)), str(i)
    if hasattr(selector, "evaluate"):
        label = type(selector).__name__
        return (lambda: selector), label
    raise ConfigError("model must be a builtin id, 'alm', a model instance, "
                      "or a zero-argument factory")


def reference_value(model, g, pipeline_cfg, mode, n_ref, seed) -> float:
    """Grid-matched reference: the same discretization as the estimators,
    with exact quantiles where the model provides them."""
    part = make_partition(g, pipeline_cfg.partition_size, pipeline_cfg.scheme)
    if mode == REF_ANALYTIC:
        if not callable(getattr(model, "response_quantile", None)):
            raise ConfigError(
                "analytic reference needs a model with a response_quantile "
                "method; use reference='crude'")
        levels = estimation_levels(g, part, pipeline_cfg.convention)
        dg = g_increments(g, part)
        q = np.zeros(levels.size)
        live = dg > 0.0
        q[live] = model.response_quantile(levels[live])
        return drm_from_quantiles(q, g, part)
    return reference_drm(model, g, part, n_ref, seed=seed,
                         convention=pipeline_cfg.convention)


def _run_one(arm, factory, pcfg, cfg, rep):
    seed = rep_seed(cfg.master_seed, rep, _ARMS.index(arm))
    run_cfg = replace(pcfg, seed=seed)
    model = factory()
    model.reset_count()
    if arm == ARM_CRUDE:
        rep_out = crude_drm(model, run_cfg)
    elif arm == ARM_IS:
        rep_out = estimate_drm(model, run_cfg)
    else:
        rep_out = estimate_drm_iterative(model, run_cfg, cfg.stage_levels,
                                         cfg.stage_budgets)
    return seed, rep_out


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """All points x arms x reps. Failures are recorded per seed and become
    fatal only past a 10% rate within one grid cell."""
    factory, label = _model_factory(cfg.model)
    if cfg.label:
        label = cfg.label
    t_start = time.perf_counter()
    rows = []
    for gamma, alpha in cfg.points:
        g = power_tail(alpha, gamma)
        pcfg = replace(cfg.pipeline, g=g)
        ref = None
        if cfg.reference != REF_SELF:
            ref = reference_value(factory(), g, pcfg, cfg.reference,
                                  cfg.n_ref, cfg.master_seed)
        arm_rows = {}
        for arm in cfg.arms:
            t_arm = time.perf_counter()
            estimates, seeds, failures, h_calls, sur_labels = [], [], [], [], []

            def _task(rep, arm=arm):
                return _run_one(arm, factory, pcfg, cfg, rep)

            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    outcomes = list(pool.map(
                        lambda r: _guard(_task, r), range(cfg.reps)))
            else:
                outcomes = [_guard(_task, r) for r in range(cfg.reps)]
            for rep, outcome in enumerate(outcomes):
                if isinstance(outcome, Exception):
                    failures.append((rep, f"{type(outcome).__name__}: "
                                          f"{outcome}"))
                    continue
                seed, rep_out = outcome
                seeds.append(seed)
                estimates.append(rep_out.estimate)
                h_calls.append(rep_out.h_calls["total"])
                sur_labels.append(rep_out.surrogate_label or "")
            if len(failures) > 0.1 * cfg.reps:
                msgs = "; ".join(m for _, m in failures[:3])
                raise EstimationError(
                    f"{len(failures)}/{cfg.reps} replications failed for "
                    f"arm {arm} at (gamma={gamma}, alpha={alpha}): {msgs}")
            est = np.asarray(estimates, dtype=float)
            ref_here = float(est.mean()) if cfg.reference == REF_SELF else ref
            rmse = float(np.sqrt(np.mean((est - ref_here) ** 2)))
            arm_rows[arm] = ArmRow(
                model=label, gamma=gamma, alpha=alpha, arm=arm,
                surrogate=(sur_labels[0] if sur_labels and arm != ARM_CRUDE
                           else ""),
                mean=float(est.mean()), rmse=rmse, ratio=np.nan,
                h_calls=int(round(float(np.mean(h_calls)))),
                wall_time_s=time.perf_counter() - t_arm,
                reference=ref_here, estimates=tuple(est.tolist()),
                seeds=tuple(seeds), failures=tuple(failures))
        crude_rmse = arm_rows.get(ARM_CRUDE).rmse if ARM_CRUDE in arm_rows else np.nan
        for arm, row in arm_rows.items():
            denom = row.rmse
            ratio = crude_rmse / denom if denom > 0 else np.nan
            rows.append(replace(row, ratio=float(ratio)))
    return ExperimentReport(
        rows=tuple(rows), master_seed=cfg.master_seed, reps=cfg.reps,
        reference_mode=cfg.reference,
        total_wall_time_s=time.perf_counter() - t_start,
        meta={"model": label, "arms": list(cfg.arms),
              "pipeline": {"pivot_budget": cfg.pipeline.pivot_budget,
                           "sample_budget": cfg.pipeline.sample_budget,
                           "partition_size": cfg.pipeline.partition_size,
                           "folds": cfg.pipeline.folds,
                           "surrogate": str(cfg.pipeline.surrogate),
                           "strategy": cfg.pipeline.strategy,
                           "option": cfg.pipeline.option}})


def _guard(fn, rep):
    try:
        return fn(rep)
    except DrmisError as exc:
        return exc


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_tables(report: ExperimentReport, out_dir) -> dict:
    """Write summary.csv, ratio_curve.csv, and report.json; returns paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "summary": os.path.join(out_dir, "summary.csv"),
        "ratio_curve": os.path.join(out_dir, "ratio_curve.csv"),
        "report": os.path.join(out_dir, "report.json"),
    }
    with open(paths["summary"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for r in report.rows:
            w.writerow([_fmt(v) for v in (
                r.model, r.gamma, r.alpha, r.arm, r.surrogate, r.mean,
                r.rmse, r.ratio, r.h_calls, r.wall_time_s)])
    with open(paths["ratio_curve"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RATIO_COLUMNS)
        for r in report.rows:
            if r.arm == ARM_CRUDE:
                continue
            w.writerow([_fmt(v) for v in (
                r.model, r.gamma, r.alpha, r.surrogate, r.ratio)])
    with open(paths["report"], "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths


def read_summary(path) -> list:
    """Re-ingest summary.csv; numeric columns come back as float/int."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rec["gamma"] = float(rec["gamma"])
            rec["alpha"] = float(rec["alpha"])
            rec["mean"] = float(rec["mean"])
            rec["rmse"] = float(rec["rmse"])
            rec["ratio"] = float(rec["ratio"])
            rec["h_calls"] = int(rec["h_calls"])
            rec["wall_time_s"] = float(rec["wall_time_s"])
            rows.append(rec)
    return rows
