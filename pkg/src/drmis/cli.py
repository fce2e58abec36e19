"""Command-line front end.

Subcommands:
  estimate   one pipeline run, report printed and optionally dumped as JSON
  bench      replicated crude/IS/iterative comparison over a (gamma, alpha)
             grid, CSV + JSON artifacts
  table1     preset: the four builtin models in the extreme tail
             (alpha = 0.002, m = 50, budgets 7500 + 20000, three arms)
  alm        preset: the insurance balance-sheet model at gamma=1, alpha=0.01
  validate   run the cross-module invariant suite

Shared flags: --config <path>, --seed <int>, --threads <int>, --out <dir>.
Config files are flat ``key = value`` lines; section membership is spelled
with dots in the key (``pipeline.folds = 20``). Flags win over file values.
Exit codes: 0 success, 2 bad configuration, 3 estimation failure.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bench import (ARM_CRUDE, ARM_IS, ARM_ITERATIVE, REF_ANALYTIC, REF_CRUDE,
                    ExperimentConfig, emit_tables, run_experiment)
from .distortion import avar, power_tail, var_at
from .errors import ConfigError, DrmisError
from .pipeline import (OPTION_MIXTURE, PipelineConfig, crude_drm,
                       estimate_drm, estimate_drm_iterative)
from .models import alm_model, builtin_model
from .sampler import (ADAPTIVE_QUADRATURE, ANCESTRAL, KDE_RATIO, MONTE_CARLO,
                      TRAPEZOID_ON_SAMPLES, MhConfig)
from .surrogate import (knn, linear, polynomial, svm_gaussian, svm_linear,
                        svm_polynomial)
from .validate import run_validation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ESTIMATION = 3

# Shared desk-scale defaults; presets override pieces of this below.
_PIPELINE_DEFAULTS = {
    "pivot_budget": 2000,
    "sample_budget": 20000,
    "partition_size": 20,
    "folds": 20,
}

# Per-model surrogate classes for the table1 preset. Selection is done once
# on a pivot set, then only the class is kept and refit per replication;
# re-running the full cross-validated ladder every repetition would multiply
# the runtime without changing the winner.
_TABLE1_SURROGATES = {
    1: linear(),
    2: linear(),
    3: polynomial(2),
    4: polynomial(2),
}
_ALM_SURROGATE = polynomial(7)


class _Conf:
    """Parsed config with unused-key tracking.

    Every lookup marks its key as consumed; after a subcommand wires up its
    run, leftover keys raise, catching typos like ``pipline.folds``.
    """

    def __init__(self, mapping: dict):
        self._map = dict(mapping)
        self._used: set = set()

    def get(self, key: str, default: str | None = None):
        self._used.add(key)
        return self._map.get(key, default)

    def has(self, key: str) -> bool:
        self._used.add(key)
        return key in self._map

    def check_consumed(self):
        left = sorted(set(self._map) - self._used)
        if left:
            raise ConfigError(f"unknown config key(s): {', '.join(left)}")


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` per line. Blank lines and lines starting with
    '#' are skipped; values are kept verbatim (no inline comments). Later
    occurrences of a key override earlier ones."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


def load_config(path: str | None) -> _Conf:
    if path is None:
        return _Conf({})
    try:
        with open(path) as fh:
            return _Conf(parse_config_text(fh.read()))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc


def _coerce(conf: _Conf, key: str, default, kind):
    raw = conf.get(key)
    if raw is None:
        return default
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot read {raw!r} as {kind.__name__}") from exc


def _float_list(conf: _Conf, key: str, default: tuple) -> tuple:
    raw = conf.get(key)
    if raw is None:
        return default
    try:
        return tuple(float(tok) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated numbers") from exc


def _int_list(conf: _Conf, key: str, default: tuple | None) -> tuple | None:
    raw = conf.get(key)
    if raw is None:
        return default
    try:
        return tuple(int(tok) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated integers") from exc


def parse_surrogate(text: str):
    """Surrogate field syntax: ``auto``, one spec, or a comma list of specs.

    Specs: linear | polynomial:<degree> | knn:<k> | svm_linear |
    svm_polynomial:<degree> | svm_gaussian.
    """
    text = text.strip()
    if text == "auto":
        return "auto"
    specs = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        name, _, arg = tok.partition(":")
        try:
            if name == "linear":
                specs.append(linear())
            elif name == "polynomial":
                specs.append(polynomial(int(arg)))
            elif name == "knn":
                specs.append(knn(int(arg)))
            elif name == "svm_linear":
                specs.append(svm_linear())
            elif name == "svm_polynomial":
                specs.append(svm_polynomial(int(arg)))
            elif name == "svm_gaussian":
                specs.append(svm_gaussian())
            else:
                raise ConfigError(f"unknown surrogate {tok!r}")
        except ValueError as exc:
            raise ConfigError(f"surrogate {tok!r}: bad parameter") from exc
    if not specs:
        raise ConfigError("empty surrogate list")
    return specs[0] if len(specs) == 1 else tuple(specs)


def _distortion(conf: _Conf, section: str, default_gamma: float,
                default_alpha: float):
    kind = conf.get(f"{section}.kind", "power_tail")
    alpha = _coerce(conf, f"{section}.alpha", default_alpha, float)
    gamma = _coerce(conf, f"{section}.gamma", default_gamma, float)
    if kind == "power_tail":
        return power_tail(alpha, gamma)
    if kind == "avar":
        return avar(alpha)
    if kind == "var":
        return var_at(alpha)
    raise ConfigError(f"{section}.kind: unknown distortion {kind!r}")


def _mcmc(conf: _Conf) -> MhConfig:
    base = MhConfig()
    step = conf.get("pipeline.mcmc.step_scale")
    return MhConfig(
        step_scale=float(step) if step is not None else None,
        burn_in=_coerce(conf, "pipeline.mcmc.burn_in", base.burn_in, int),
        thinning=_coerce(conf, "pipeline.mcmc.thinning", base.thinning, int),
        chains=_coerce(conf, "pipeline.mcmc.chains", base.chains, int),
        target_accept=_coerce(conf, "pipeline.mcmc.target_accept",
                              base.target_accept, float),
        max_adapt_steps=_coerce(conf, "pipeline.mcmc.max_adapt_steps",
                                base.max_adapt_steps, int),
    )


_NORM_METHODS = (ADAPTIVE_QUADRATURE, MONTE_CARLO, KDE_RATIO,
                 TRAPEZOID_ON_SAMPLES)


def build_pipeline(conf: _Conf, g, seed: int, defaults: dict | None = None,
                   surrogate_default="auto") -> PipelineConfig:
    d = dict(_PIPELINE_DEFAULTS)
    d.update(defaults or {})
    sur = conf.get("pipeline.surrogate")
    surrogate = parse_surrogate(sur) if sur is not None else surrogate_default
    method = conf.get("pipeline.norm_const_method")
    if method is not None and method not in _NORM_METHODS:
        raise ConfigError(f"pipeline.norm_const_method: unknown method "
                          f"{method!r} (choose from {_NORM_METHODS})")
    return PipelineConfig(
        g=g,
        pivot_budget=_coerce(conf, "pipeline.pivot_budget",
                             d["pivot_budget"], int),
        sample_budget=_coerce(conf, "pipeline.sample_budget",
                              d["sample_budget"], int),
        partition_size=_coerce(conf, "pipeline.partition_size",
                               d["partition_size"], int),
        scheme=conf.get("pipeline.scheme", "uniform_on_alpha"),
        surrogate=surrogate,
        folds=_coerce(conf, "pipeline.folds", d["folds"], int),
        option=conf.get("pipeline.option", OPTION_MIXTURE),
        mcmc=_mcmc(conf),
        norm_const_method=method,
        seed=seed,
        strategy=conf.get("pipeline.strategy", ANCESTRAL),
        convention=conf.get("pipeline.convention", "auto"),
        cal_tail_min=_coerce(conf, "pipeline.cal_tail_min", 10, int),
    )


def _model_selector(conf: _Conf, key: str, default: str):
    raw = conf.get(key, default)
    if raw == "alm":
        return "alm"
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a builtin model id or 'alm', "
                          f"got {raw!r}") from exc


def _seed_of(args, conf: _Conf) -> int:
    if args.seed is not None:
        conf.get("seed")  # flag wins, but the key counts as consumed
        return int(args.seed)
    return _coerce(conf, "seed", 0, int)


def _threads_of(args, conf: _Conf) -> int:
    if args.threads is not None:
        conf.get("threads")
        return max(1, int(args.threads))
    return max(1, _coerce(conf, "threads", 1, int))


def _report_json(rep) -> dict:
    """DrmReport as plain JSON-ready data (wall-time free)."""
    plan = None
    if rep.plan is not None:
        plan = {
            "coeffs": list(map(float, rep.plan.coeffs)),
            "weights": list(map(float, rep.plan.weights)),
            "counts": (list(map(int, rep.plan.counts))
                       if rep.plan.counts is not None else None),
        }
    comps = [
        {"level": c.level, "theta": c.theta, "psi_hat": c.psi_hat,
         "norm_const": c.norm_const}
        for c in (rep.components or ())
    ]
    quantiles = [
        {"level": q.level, "value": q.value,
         "variance_est": q.variance_est, "n_effective": q.n_effective,
         "finite": q.finite}
        for q in rep.quantiles
    ]
    diag = {}
    for key, val in rep.diagnostics.items():
        if isinstance(val, np.ndarray):
            val = val.tolist()
        elif isinstance(val, (np.floating, np.integer)):
            val = val.item()
        elif isinstance(val, tuple):
            val = list(val)
        diag[key] = val
    return {
        "estimate": rep.estimate,
        "kind": rep.kind,
        "levels": list(map(float, rep.levels)),
        "quantiles": quantiles,
        "allocation": plan,
        "components": comps,
        "surrogate": rep.surrogate_label,
        "option": rep.option,
        "strategy": rep.strategy,
        "level_choices": (list(rep.level_choices)
                          if rep.level_choices is not None else None),
        "h_calls": dict(rep.h_calls),
        "seed": rep.seed,
        "diagnostics": diag,
    }


def _print_report(rep, g):
    print(f"estimate       {rep.estimate:.6g}")
    print(f"distortion     {g.kind} alpha={g.alpha} gamma={g.gamma}")
    print(f"mode           {rep.kind}")
    if rep.surrogate_label:
        print(f"surrogate      {rep.surrogate_label}")
    calls = rep.h_calls
    print(f"h-calls        pivot={calls['pivot']} sampling={calls['sampling']}"
          f" total={calls['total']}")
    print(f"seed           {rep.seed}")
    live = [q for q in rep.quantiles if q.finite and q.n_effective > 0]
    if live:
        lo, hi = live[0], live[-1]
        print(f"levels         {len(rep.levels)} cells, "
              f"q({lo.level:.6g})={lo.value:.6g} .. "
              f"q({hi.level:.6g})={hi.value:.6g}")


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_json(payload: dict, out_dir: str, name: str) -> str:
    import os

    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")
    return path


def cmd_estimate(args) -> int:
    conf = load_config(args.config)
    seed = _seed_of(args, conf)
    _threads_of(args, conf)
    selector = _model_selector(conf, "estimate.model", "1")
    model = alm_model() if selector == "alm" else builtin_model(selector)
    g = _distortion(conf, "estimate", default_gamma=1.0, default_alpha=0.05)
    mode = conf.get("estimate.mode", "is")
    cfg = build_pipeline(conf, g, seed)
    if mode == "iterative":
        levels = _float_list(conf, "estimate.stage_levels", None)
        budgets = _int_list(conf, "estimate.stage_budgets", None)
        if levels is None or budgets is None:
            raise ConfigError("estimate.mode=iterative needs "
                              "estimate.stage_levels and estimate.stage_budgets")
    else:
        levels = budgets = None
    conf.check_consumed()
    model.reset_count()
    if mode == "crude":
        rep = crude_drm(model, cfg)
    elif mode == "is":
        rep = estimate_drm(model, cfg)
    elif mode == "iterative":
        rep = estimate_drm_iterative(model, cfg, levels, budgets)
    else:
        raise ConfigError(f"estimate.mode: unknown mode {mode!r}")
    _print_report(rep, g)
    if args.out:
        path = _write_json(_report_json(rep), args.out, "report.json")
        print(f"wrote {path}")
    return EXIT_OK


def _print_summary(report):
    header = f"{'model':>6} {'gamma':>6} {'alpha':>8} {'arm':>10} " \
             f"{'mean':>10} {'rmse':>10} {'ratio':>8}"
    print(header)
    for r in report.rows:
        print(f"{r.model:>6} {r.gamma:>6g} {r.alpha:>8g} {r.arm:>10} "
              f"{r.mean:>10.4f} {r.rmse:>10.4g} {r.ratio:>8.3g}")


def _run_and_emit(cfg: ExperimentConfig, threads: int, out_dir: str) -> int:
    report = run_experiment(cfg, threads=threads)
    _print_summary(report)
    paths = emit_tables(report, out_dir)
    print(f"wrote {paths['summary']}")
    return EXIT_OK


def cmd_bench(args) -> int:
    conf = load_config(args.config)
    seed = _seed_of(args, conf)
    threads = _threads_of(args, conf)
    selector = _model_selector(conf, "bench.model", "1")
    gammas = _float_list(conf, "bench.gammas", (1.0,))
    alphas = _float_list(conf, "bench.alphas", (0.05,))
    points = tuple((gm, al) for gm in gammas for al in alphas)
    arms = tuple(t.strip() for t in
                 conf.get("bench.arms", "crude,is").split(",") if t.strip())
    reference = conf.get("bench.reference", REF_ANALYTIC)
    stage_levels = _float_list(conf, "bench.stage_levels", None)
    stage_budgets = _int_list(conf, "bench.stage_budgets", None)
    pipeline = build_pipeline(conf, power_tail(alphas[0], gammas[0]), seed)
    cfg = ExperimentConfig(
        model=selector, points=points, pipeline=pipeline,
        reps=_coerce(conf, "bench.reps", 50, int), arms=arms,
        reference=reference,
        n_ref=_coerce(conf, "bench.n_ref", 10_000_000, int),
        master_seed=seed, stage_levels=stage_levels,
        stage_budgets=stage_budgets)
    conf.check_consumed()
    return _run_and_emit(cfg, threads, args.out or "out/bench")


def cmd_table1(args) -> int:
    """Extreme-tail preset: alpha=0.002, m=50, crude 27500 draws vs direct
    IS (7500 pivots + 20000 draws) vs two-stage iterative (5000 + 2500
    pivots through an intermediate alpha'=0.01)."""
    import os

    conf = load_config(args.config)
    seed = _seed_of(args, conf)
    threads = _threads_of(args, conf)
    models = _int_list(conf, "table1.models", (1, 2, 3, 4))
    gammas = _float_list(conf, "table1.gammas", (0.5, 1.0, 2.0))
    reps = _coerce(conf, "table1.reps", 50, int)
    alpha = _coerce(conf, "table1.alpha", 0.002, float)
    n_ref = _coerce(conf, "table1.n_ref", 10_000_000, int)
    conf.check_consumed()
    out_dir = args.out or "out/table1"
    all_rows = []
    for mid in models:
        if mid not in _TABLE1_SURROGATES:
            raise ConfigError(f"table1.models: no preset for model {mid}")
        pipeline = PipelineConfig(
            g=power_tail(alpha, 1.0), pivot_budget=7500, sample_budget=20000,
            partition_size=50, surrogate=_TABLE1_SURROGATES[mid], seed=seed)
        has_quantile = callable(getattr(builtin_model(mid),
                                        "response_quantile", None))
        cfg = ExperimentConfig(
            model=mid, points=tuple((gm, alpha) for gm in gammas),
            pipeline=pipeline, reps=reps,
            arms=(ARM_CRUDE, ARM_IS, ARM_ITERATIVE),
            reference=REF_ANALYTIC if has_quantile else REF_CRUDE,
            n_ref=n_ref, master_seed=seed,
            stage_levels=(0.01, alpha), stage_budgets=(5000, 2500, 20000))
        report = run_experiment(cfg, threads=threads)
        emit_tables(report, os.path.join(out_dir, f"model{mid}"))
        all_rows.extend(report.rows)
    merged = _merge_rows(all_rows, seed, reps)
    _print_summary(merged)
    paths = emit_tables(merged, out_dir)
    print(f"wrote {paths['summary']}")
    return EXIT_OK


def _merge_rows(rows, seed, reps):
    from .bench import ExperimentReport

    total = sum(r.wall_time_s for r in rows)
    return ExperimentReport(
        rows=tuple(rows), master_seed=seed, reps=reps,
        reference_mode="per-model", total_wall_time_s=total,
        meta={"models": sorted({r.model for r in rows})})


def cmd_alm(args) -> int:
    """Balance-sheet preset: gamma=1, alpha=0.01, budgets 2000 + 20000,
    polynomial(7) surrogate, crude-reference at n_ref draws."""
    conf = load_config(args.config)
    seed = _seed_of(args, conf)
    threads = _threads_of(args, conf)
    gamma = _coerce(conf, "alm.gamma", 1.0, float)
    alpha = _coerce(conf, "alm.alpha", 0.01, float)
    reps = _coerce(conf, "alm.reps", 50, int)
    n_ref = _coerce(conf, "alm.n_ref", 10_000_000, int)
    pipeline = build_pipeline(conf, power_tail(alpha, gamma), seed,
                              surrogate_default=_ALM_SURROGATE)
    cfg = ExperimentConfig(
        model="alm", points=((gamma, alpha),), pipeline=pipeline, reps=reps,
        arms=(ARM_CRUDE, ARM_IS), reference=REF_CRUDE, n_ref=n_ref,
        master_seed=seed)
    conf.check_consumed()
    return _run_and_emit(cfg, threads, args.out or "out/alm")


def cmd_validate(args) -> int:
    conf = load_config(args.config)
    seed = _seed_of(args, conf)
    _threads_of(args, conf)
    conf.check_consumed()
    results = run_validation(seed=seed)
    width = max(len(name) for name, _, _ in results)
    failed = 0
    for name, ok, detail in results:
        mark = "ok  " if ok else "FAIL"
        print(f"{mark} {name:<{width}}  {detail}")
        failed += 0 if ok else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    if args.out:
        _write_json({"results": [
            {"name": n, "ok": o, "detail": d} for n, o, d in results]},
            args.out, "validate.json")
    return EXIT_ESTIMATION if failed else EXIT_OK


def _add_common(sub):
    sub.add_argument("--config", default=None, metavar="PATH",
                     help="flat key=value config file")
    sub.add_argument("--seed", type=int, default=None,
                     help="master seed (wins over the config file)")
    sub.add_argument("--threads", type=int, default=None,
                     help="worker threads for replications")
    sub.add_argument("--out", default=None, metavar="DIR",
                     help="artifact directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drmis",
        description="Distortion-risk-measure estimation via surrogate-guided "
                    "importance sampling")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, fn, blurb in (
        ("estimate", cmd_estimate, "single estimation run"),
        ("bench", cmd_bench, "replicated crude/IS comparison"),
        ("table1", cmd_table1, "extreme-tail preset over builtin models"),
        ("alm", cmd_alm, "insurance balance-sheet preset"),
        ("validate", cmd_validate, "cross-module invariant suite"),
    ):
        sub = subs.add_parser(name, help=blurb)
        _add_common(sub)
        sub.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DrmisError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
