"""End-to-end distortion-risk-measure estimation.

Direct flow: draw pivots and pay M costly calls, fit/select a surrogate,
calibrate one tilt per partition cell against clamped pivot quantiles,
estimate allocation coefficients and the square-root budget split, estimate
component normalizers, draw N weighted samples with exactly N further costly
calls, then read the distortion estimate off pooled (or per-level) weighted
quantiles. The iterative variant repeats the pivot stage at a sequence of
tail levels, carrying likelihood-ratio weights into every later calibration.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from .allocation import (INDIVIDUAL, MIXTURE, AllocationPlan, MixtureIS,
                         allocate, compare_variances, estimate_coeffs,
                         kde_density)
from .distortion import (UNIFORM_ON_ALPHA, DistortionSpec, Partition,
                         drm_from_quantiles, estimation_levels, g_increments,
                         make_partition)
from .errors import ConfigError, DrmisError, EstimationError
from .estimator import QuantileEstimate, clt_variance, interp_quantile, is_quantile
from .sampler import (ADAPTIVE_QUADRATURE, ANCESTRAL, KDE_RATIO, MONTE_CARLO,
                      POOLED, TRAPEZOID_ON_SAMPLES, MhConfig, WeightedSamples,
                      draw_mixture, estimate_norm_const)
from .surrogate import HypothesisSpec, TrainingSet, auto_select, fit, kfold_select
from .tilt import TiltComponent, calibrate_theta, estimate_psi, likelihood_ratio

OPTION_MIXTURE = "mixture"
OPTION_PER_LEVEL = "per_level_comparison"

_KDE_REFINE_MIN = 50


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one estimation run needs besides the model.

    surrogate is "auto" (walk the default complexity ladder), a fixed
    HypothesisSpec, or an explicit candidate sequence for k-fold selection.
    cal_tail_min clamps every calibration level to 1 - cal_tail_min/M so the
    tilted-mean targets stay safely inside the pivot hull; see the quantile
    clamp discussion in the package docs.
    """

    g: DistortionSpec
    pivot_budget: int
    sample_budget: int
    partition_size: int
    scheme: str = UNIFORM_ON_ALPHA
    surrogate: object = "auto"
    folds: int = 20
    option: str = OPTION_MIXTURE
    mcmc: MhConfig = field(default_factory=MhConfig)
    norm_const_method: str | None = None
    seed: int = 0
    strategy: str = ANCESTRAL
    convention: str = "auto"
    cal_tail_min: int = 10

    def __post_init__(self):
        if self.pivot_budget < 2:
            raise ConfigError("pivot budget must be at least 2")
        if self.sample_budget < 1:
            raise ConfigError("sampling budget must be at least 1")
        if self.partition_size < 1:
            raise ConfigError("partition size must be at least 1")
        if not 2 <= self.folds <= self.pivot_budget:
            raise ConfigError("fold count must lie in [2, pivot budget]")
        if self.option not in (OPTION_MIXTURE, OPTION_PER_LEVEL):
            raise ConfigError(f"unknown option {self.option!r}")
        if self.strategy not in (ANCESTRAL, POOLED):
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if not 1 <= self.cal_tail_min < self.pivot_budget:
            raise ConfigError("cal_tail_min must lie in [1, pivot budget)")
        if self.surrogate != "auto" and not isinstance(self.surrogate, HypothesisSpec):
            try:
                specs = tuple(self.surrogate)
            except TypeError:
                raise ConfigError(
                    "surrogate must be 'auto', a HypothesisSpec, or a "
                    "sequence of them") from None
            if not all(isinstance(s, HypothesisSpec) for s in specs):
                raise ConfigError("surrogate candidates must be HypothesisSpec")
            object.__setattr__(self, "surrogate", specs)


@dataclass(frozen=True)
class DrmReport:
    """Result of one estimation run, self-checking against its quantiles."""

    estimate: float
    kind: str
    g: DistortionSpec
    part: Partition
    levels: np.ndarray
    quantiles: tuple
    h_calls: dict
    seed: int | None = None
    plan: AllocationPlan | None = None
    components: tuple | None = None
    surrogate_label: str | None = None
    cv_table: tuple | None = None
    level_choices: tuple | None = None
    option: str | None = None
    strategy: str | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = self.quantile_values()
        check = drm_from_quantiles(vals, self.g, self.part)
        if not np.isclose(check, self.estimate, rtol=1e-12, atol=1e-12):
            raise EstimationError("estimate inconsistent with its quantiles")

    def quantile_values(self) -> np.ndarray:
        return np.array([q.value for q in self.quantiles], dtype=float)

    @property
    def increments(self) -> np.ndarray:
        return g_increments(self.g, self.part)


def _with_level(level, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except DrmisError as exc:
        raise type(exc)(f"level {level:.6g}: {exc}") from exc


def _select_surrogate(cfg, training):
    if isinstance(cfg.surrogate, str) and cfg.surrogate == "auto":
        sur, winner, entries = auto_select(training, k=cfg.folds)
        return sur, winner, tuple(entries)
    if isinstance(cfg.surrogate, HypothesisSpec):
        return fit(cfg.surrogate, training), cfg.surrogate, None
    winner, entries = kfold_select(list(cfg.surrogate), training, cfg.folds)
    return fit(winner, training), winner, tuple(entries)


def _build_components(cfg, levels, dg, y, w, surrogate, yhat):
    """One tilt per cell; inert cells (zero increment) stay at theta = 0.

    Every calibrated component is capped at the observed surrogate-response
    range: the exponential family is trusted only where pivots were seen,
    which keeps components proper even when the response has a finite MGF
    radius (gamma-like tails).
    """
    y = np.asarray(y, dtype=float)
    constant = bool(y.max() == y.min())
    cal_cap = 1.0 - cfg.cal_tail_min / y.size
    live_hat = yhat if w is None else yhat[np.asarray(w) > 0]
    cap_low = float(live_hat.min())
    cap_high = float(live_hat.max())
    comps = []
    targets = np.full(levels.size, np.nan)
    for i, (u, inc) in enumerate(zip(levels, dg)):
        if inc <= 0.0 or constant:
            comps.append(TiltComponent(level=float(u), theta=0.0, psi_hat=0.0,
                                       surrogate=surrogate))
            continue
        u_cal = min(float(u), cal_cap)
        target = interp_quantile(y, u_cal, w=w)
        theta = _with_level(u, calibrate_theta, y, target, weights=w)
        psi = estimate_psi(y, theta, weights=w) if theta != 0.0 else 0.0
        comps.append(TiltComponent(level=float(u), theta=theta, psi_hat=psi,
                                   surrogate=surrogate, cap_low=cap_low,
                                   cap_high=cap_high))
        targets[i] = target
    return comps, targets, constant


def _norm_const_defaults(cfg, model):
    """Pick the before-sampling method and the after-sampling refinement.

    Quadrature handles dim <= 2 exactly enough on its own. Higher dimension
    gets a cheap Monte Carlo pass (through the surrogate, no costly calls)
    whose constants steer the allocation, then a KDE-ratio refinement on the
    drawn component blocks where the integrand actually has mass. Methods
    that need samples cannot run before the draw, so an explicit choice of
    one of those still gets the Monte Carlo provisional pass first.
    """
    m = cfg.norm_const_method
    if m is None:
        if model.dim <= 2:
            return ADAPTIVE_QUADRATURE, None
        return MONTE_CARLO, KDE_RATIO
    if m in (KDE_RATIO, TRAPEZOID_ON_SAMPLES):
        return MONTE_CARLO, m
    return m, None


def _estimate_norm_consts(comps, plan, model, cfg, rng, method):
    live = [i for i, (comp, p) in enumerate(zip(comps, plan.weights))
            if p > 0.0 and comp.theta != 0.0]
    if not live:
        return list(comps)
    out = list(comps)
    if method == MONTE_CARLO:
        # one shared base sample, one surrogate pass, all components at once
        draws = np.atleast_2d(model.sample_base(rng, 200_000))
        yhat = np.asarray(comps[live[0]].surrogate.predict(draws), dtype=float)
        for i in live:
            comp = comps[i]
            capped = np.clip(yhat, comp.cap_low, comp.cap_high)
            log_c = (logsumexp(comp.theta * capped) - comp.psi_hat
                     - np.log(yhat.size))
            c = float(np.exp(log_c))
            if not np.isfinite(c) or c <= 0.0:
                raise EstimationError(
                    f"level {comp.level:.6g}: Monte Carlo normalizer is not "
                    f"a positive finite number")
            out[i] = replace(comp, norm_const=c)
        return out
    for i in live:
        c = _with_level(comps[i].level, estimate_norm_const, comps[i], model,
                        method)
        out[i] = replace(comps[i], norm_const=c)
    return out


def _refine_norm_consts(samples, comps, model, method):
    """Re-estimate component normalizers from the drawn blocks, then
    recompute weights for the realized counts. Components without a usable
    block keep their provisional (shared Monte Carlo) constant."""
    refined = list(comps)
    counts = np.bincount(samples.origin[samples.origin >= 0],
                         minlength=len(comps))
    for i, comp in enumerate(comps):
        if comp.theta == 0.0 or counts[i] < _KDE_REFINE_MIN:
            continue
        try:
            c = estimate_norm_const(comp, model, method,
                                    samples=samples.x[samples.origin == i])
        except DrmisError:
            continue
        refined[i] = replace(comp, norm_const=c)
    inv = counts / float(len(samples)) / np.array(
        [c.norm_const for c in refined])
    if not np.any(inv > 0):
        return tuple(refined), samples
    lr_mix = MixtureIS(tuple(refined), inv / inv.sum())
    w = likelihood_ratio(lr_mix, model, samples.x)
    reweighted = WeightedSamples(samples.x, samples.y, np.atleast_1d(w),
                                 samples.origin, samples.strategy,
                                 samples.diagnostics)
    return tuple(refined), reweighted


def _per_level_estimates(cfg, samples, comps, plan, levels, dg, gprime, model):
    quantiles, choices = [], []
    for i, (u, inc) in enumerate(zip(levels, dg)):
        if inc <= 0.0:
            quantiles.append(QuantileEstimate(float(u), 0.0, None, 0.0, True))
            choices.append(None)
            continue
        qe = is_quantile(samples, float(u))
        used = samples
        choice = MIXTURE
        if cfg.option == OPTION_PER_LEVEL:
            mask = samples.origin == i
            if np.any(mask):
                block = samples.subset(mask)
                solo = MixtureIS((comps[i],), np.array([1.0]))
                w_ind = np.atleast_1d(
                    likelihood_ratio(solo, model, block.x))
                choice = compare_variances(1.0 - float(u), (block.y, w_ind),
                                           (samples.y, samples.w),
                                           float(plan.weights[i]))
                if choice == INDIVIDUAL:
                    qe = is_quantile((block.y, w_ind), float(u))
                    used = WeightedSamples(block.x, block.y, w_ind)
        if not qe.finite:
            raise EstimationError(
                f"level {u:.6g}: weighted mass too small for a finite "
                f"quantile (option {cfg.option})")
        gp = float(gprime(qe.value))
        if gp > 0.0:
            var = clt_variance((used.y, used.w), qe.value, float(u), gp)
            qe = replace(qe, variance_est=var)
        quantiles.append(qe)
        choices.append(choice)
    return quantiles, choices


def _run_core(model, cfg, x_piv, y_piv, w_piv, surrogate, sur_spec, cv, rng_mh,
              rng_nc, kind, extra_diag, pivot_calls):
    """Shared tail of the direct and iterative flows, after pivots exist."""
    part = make_partition(cfg.g, cfg.partition_size, cfg.scheme)
    levels = estimation_levels(cfg.g, part, cfg.convention)
    dg = g_increments(cfg.g, part)

    yhat_piv = np.asarray(surrogate.predict(x_piv), dtype=float)
    comps, targets, constant = _build_components(
        cfg, levels, dg, y_piv, w_piv, surrogate, yhat_piv)
    if constant:
        coeffs = np.where(dg > 0.0, 1.0, 0.0)
        gprime = lambda q: 0.0  # never used: variances skipped when <= 0
    else:
        kde_w = None
        if w_piv is not None and not np.all(w_piv == w_piv[0]):
            kde_w = w_piv
        gprime = kde_density(y_piv, weights=kde_w)
        coeffs = estimate_coeffs((y_piv, yhat_piv, w_piv), comps, cfg.g, part,
                                 gprime, convention=cfg.convention,
                                 targets=targets)
    plan = allocate(coeffs, cfg.sample_budget)

    method, refine = _norm_const_defaults(cfg, model)
    comps = _estimate_norm_consts(comps, plan, model, cfg, rng_nc, method)
    mix = MixtureIS(tuple(comps), plan.weights)

    pivots_ws = WeightedSamples(
        x_piv, y_piv, np.ones(y_piv.size) if w_piv is None else w_piv)
    before = model.eval_count
    draws = draw_mixture(mix, model, cfg.sample_budget, cfg.mcmc, rng_mh,
                         strategy=cfg.strategy, pivots=pivots_ws)
    sampling_calls = model.eval_count - before
    if refine is not None and cfg.strategy == ANCESTRAL:
        comps, draws = _refine_norm_consts(draws, comps, model, refine)
        mix = MixtureIS(tuple(comps), plan.weights)
    elif refine is not None and cfg.strategy == POOLED:
        try:
            c_ref = estimate_norm_const(mix, model, refine, samples=draws.x)
            scale = c_ref / mix.norm_const
            draws = WeightedSamples(draws.x, draws.y, draws.w * scale,
                                    draws.origin, draws.strategy,
                                    draws.diagnostics)
        except DrmisError:
            pass

    quantiles, choices = _per_level_estimates(
        cfg, draws, comps, plan, levels, dg, gprime, model)
    estimate = drm_from_quantiles(
        np.array([q.value for q in quantiles]), cfg.g, part)

    nc_note = "none" if method is None else method
    if refine is not None:
        nc_note += f"+refine:{refine}"
    diag = {"sampler": draws.diagnostics, "n_effective": draws.n_effective,
            "norm_const_method": nc_note,
            "mean_weight": float(np.mean(draws.w)),
            "constant_response": constant}
    diag.update(extra_diag)
    return DrmReport(
        estimate=estimate, kind=kind, g=cfg.g, part=part, levels=levels,
        quantiles=tuple(quantiles),
        h_calls={"pivot": int(pivot_calls), "sampling": int(sampling_calls),
                 "total": int(pivot_calls + sampling_calls)},
        seed=cfg.seed, plan=plan, components=tuple(comps),
        surrogate_label=sur_spec.label(), cv_table=cv,
        level_choices=tuple(choices), option=cfg.option,
        strategy=cfg.strategy, diagnostics=diag)


def estimate_drm(model, cfg: PipelineConfig) -> DrmReport:
    """Direct importance-sampling estimation: M pivots + N weighted draws."""
    ss = np.random.SeedSequence(cfg.seed)
    ss_piv, ss_mh, ss_nc = ss.spawn(3)
    rng_piv = np.random.default_rng(ss_piv)

    count0 = model.eval_count
    x_piv = np.atleast_2d(model.sample_base(rng_piv, cfg.pivot_budget))
    y_piv = np.asarray(model.evaluate(x_piv), dtype=float)
    pivot_calls = model.eval_count - count0

    training = TrainingSet(x_piv, y_piv)
    surrogate, sur_spec, cv = _select_surrogate(cfg, training)
    return _run_core(model, cfg, x_piv, y_piv, None, surrogate, sur_spec, cv,
                     np.random.default_rng(ss_mh), np.random.default_rng(ss_nc),
                     "is", {}, pivot_calls)


def crude_drm(model, cfg: PipelineConfig) -> DrmReport:
    """Baseline: spend the whole budget on plain draws, read off empirical
    quantiles at the same estimation levels."""
    ss = np.random.SeedSequence(cfg.seed)
    (ss_draw,) = ss.spawn(1)
    rng = np.random.default_rng(ss_draw)
    part = make_partition(cfg.g, cfg.partition_size, cfg.scheme)
    levels = estimation_levels(cfg.g, part, cfg.convention)
    dg = g_increments(cfg.g, part)

    n_tot = cfg.pivot_budget + cfg.sample_budget
    count0 = model.eval_count
    x = np.atleast_2d(model.sample_base(rng, n_tot))
    y = np.asarray(model.evaluate(x), dtype=float)
    calls = model.eval_count - count0

    ones = np.ones(y.size)
    quantiles = []
    for u, inc in zip(levels, dg):
        if inc <= 0.0:
            quantiles.append(QuantileEstimate(float(u), 0.0, None, 0.0, True))
            continue
        quantiles.append(is_quantile((y, ones), float(u)))
    estimate = drm_from_quantiles(
        np.array([q.value for q in quantiles]), cfg.g, part)
    return DrmReport(
        estimate=estimate, kind="crude", g=cfg.g, part=part, levels=levels,
        quantiles=tuple(quantiles),
        h_calls={"pivot": 0, "sampling": int(calls), "total": int(calls)},
        seed=cfg.seed, diagnostics={"n_draws": int(n_tot)})


def _respec_alpha(g: DistortionSpec, alpha: float) -> DistortionSpec:
    if g.kind == "tabulated":
        raise ConfigError("iterative staging needs a parametric tail level")
    return replace(g, alpha=float(alpha))


def estimate_drm_iterative(model, cfg: PipelineConfig, stage_levels,
                           stage_budgets) -> DrmReport:
    """Iterative extreme-tail refinement.

    stage_levels is a decreasing sequence of tail levels ending at the
    final one (cfg.g.alpha); stage_budgets holds one pivot budget per stage
    and must sum to cfg.pivot_budget (a trailing entry equal to the sampling
    budget is accepted and ignored, for symmetry with total-cost tallies).
    Stage 1 pivots come from the base law; each later stage draws its pivots
    from the previous stage's mixture and carries the likelihood-ratio
    weights into every subsequent calibration. The surrogate class is chosen
    once, on stage-1 pivots, and refit on the growing union.
    """
    alphas = [float(a) for a in stage_levels]
    budgets = [int(b) for b in stage_budgets]
    if len(budgets) == len(alphas) + 1:
        if budgets[-1] != cfg.sample_budget:
            raise ConfigError("trailing stage budget must equal the sampling "
                              "budget when given")
        budgets = budgets[:-1]
    if len(budgets) != len(alphas) or not alphas:
        raise ConfigError("need one pivot budget per stage level")
    if not np.isclose(alphas[-1], cfg.g.alpha):
        raise ConfigError("last stage level must match the distortion's tail")
    if sum(budgets) != cfg.pivot_budget:
        raise ConfigError("stage budgets must sum to the pivot budget")
    if budgets[0] < 2:
        raise ConfigError("first-stage pivot budget must be at least 2")
    if len(alphas) == 1 or (all(b == 0 for b in budgets[1:])
                            and all(np.isclose(a, cfg.g.alpha) for a in alphas)):
        return estimate_drm(model, cfg)
    if any(a2 >= a1 for a1, a2 in zip(alphas, alphas[1:])):
        raise ConfigError("stage levels must be strictly decreasing")

    ss = np.random.SeedSequence(cfg.seed)
    ss_piv, ss_mh, ss_nc, ss_stage = ss.spawn(4)
    rng_piv = np.random.default_rng(ss_piv)
    rng_stage = np.random.default_rng(ss_stage)
    rng_nc = np.random.default_rng(ss_nc)

    count0 = model.eval_count
    x_all = np.atleast_2d(model.sample_base(rng_piv, budgets[0]))
    y_all = np.asarray(model.evaluate(x_all), dtype=float)
    w_all = np.ones(budgets[0])

    training = TrainingSet(x_all, y_all)
    surrogate, sur_spec, cv = _select_surrogate(cfg, training)
    stage_notes = []

    for j in range(len(alphas) - 1):
        g_j = _respec_alpha(cfg.g, alphas[j])
        part_j = make_partition(g_j, cfg.partition_size, cfg.scheme)
        levels_j = estimation_levels(g_j, part_j, cfg.convention)
        dg_j = g_increments(g_j, part_j)
        yhat = np.asarray(surrogate.predict(x_all), dtype=float)
        comps, targets, constant = _build_components(
            cfg, levels_j, dg_j, y_all, w_all, surrogate, yhat)
        if constant:
            coeffs = np.where(dg_j > 0.0, 1.0, 0.0)
        else:
            kde_w = None if np.all(w_all == w_all[0]) else w_all
            coeffs = estimate_coeffs((y_all, yhat, w_all), comps, g_j, part_j,
                                     kde_density(y_all, weights=kde_w),
                                     convention=cfg.convention, targets=targets)
        plan_j = allocate(coeffs, max(budgets[j + 1], 1))
        method, refine = _norm_const_defaults(cfg, model)
        comps = _estimate_norm_consts(comps, plan_j, model, cfg, rng_nc, method)
        mix_j = MixtureIS(tuple(comps), plan_j.weights)
        if budgets[j + 1] == 0:
            stage_notes.append({"alpha": alphas[j], "drawn": 0})
            continue
        pivots_ws = WeightedSamples(x_all, y_all, w_all)
        extra = draw_mixture(mix_j, model, budgets[j + 1], cfg.mcmc, rng_stage,
                             strategy=cfg.strategy, pivots=pivots_ws)
        if refine is not None and cfg.strategy == ANCESTRAL:
            _, extra = _refine_norm_consts(extra, comps, model, refine)
        x_all = np.concatenate([x_all, extra.x], axis=0)
        y_all = np.concatenate([y_all, extra.y])
        w_all = np.concatenate([w_all, extra.w])
        stage_notes.append({"alpha": alphas[j], "drawn": int(len(extra)),
                            "mean_weight": float(np.mean(extra.w))})
        surrogate = fit(sur_spec, TrainingSet(x_all, y_all))

    pivot_calls = model.eval_count - count0
    extra_diag = {"stages": stage_notes,
                  "stage_levels": alphas, "stage_budgets": budgets}
    report = _run_core(model, cfg, x_all, y_all, w_all, surrogate, sur_spec,
                       cv, np.random.default_rng(ss_mh), rng_nc, "iterative",
                       extra_diag, pivot_calls)
    return report
