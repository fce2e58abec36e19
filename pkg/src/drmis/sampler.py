"""Random-walk Metropolis sampling and normalizing-constant estimation.

Targets are unnormalized log densities built from a tilt component or a
mixture; the costly response map is never called while chains move, only the
surrogate. Proposals are Gaussian with a per-coordinate scale adapted during
burn-in (Robbins-Monro on the log scale toward a target acceptance rate) and
frozen afterwards. Finite support bounds are handled by folding proposals
back into the box, which keeps the proposal kernel symmetric.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp
from scipy.stats import gaussian_kde

from .allocation import largest_remainder_counts
from .errors import ConfigError, EstimationError, NumericError, SamplingError
from .tilt import (mixture_log_density_unnorm, tilted_log_density_unnorm,
                   likelihood_ratio, tilted_mean)

ORIGIN_CRUDE = -1
ORIGIN_POOLED = -2

ANCESTRAL = "ancestral"
POOLED = "pooled"

TRAPEZOID_ON_SAMPLES = "trapezoid_on_samples"
ADAPTIVE_QUADRATURE = "adaptive_quadrature"
KDE_RATIO = "kde_ratio"
MONTE_CARLO = "monte_carlo"

_ADAPT_WINDOW = 50
_MIN_ACCEPT = 0.01


@dataclass(frozen=True)
class MhConfig:
    """Random-walk tuning knobs.

    step_scale is the proposal standard deviation per coordinate (scalar or
    vector); None means "use the spread of the initialization points". The
    adaptive multiplier on top of it is learned during burn-in, with at most
    max_adapt_steps Robbins-Monro updates.
    """

    step_scale: float | np.ndarray | None = None
    burn_in: int = 2000
    thinning: int = 5
    chains: int = 32
    target_accept: float = 0.35
    max_adapt_steps: int = 1000

    def __post_init__(self):
        if self.burn_in < 0:
            raise ConfigError("burn_in must be >= 0")
        if self.thinning < 1:
            raise ConfigError("thinning must be >= 1")
        if self.chains < 1:
            raise ConfigError("chains must be >= 1")
        if not 0.0 < self.target_accept < 1.0:
            raise ConfigError("target_accept must lie in (0,1)")
        if self.step_scale is not None and np.any(np.asarray(self.step_scale) <= 0):
            raise ConfigError("step_scale must be positive")
        if self.max_adapt_steps < 0:
            raise ConfigError("max_adapt_steps must be >= 0")


@dataclass(frozen=True)
class WeightedSample:
    """One importance-sampling draw: point, response, weight, provenance."""

    x: np.ndarray
    y: float
    w: float
    origin: int


class WeightedSamples:
    """Array-backed batch of weighted draws.

    origin holds the level index each draw was sampled from, or ORIGIN_CRUDE
    / ORIGIN_POOLED. y may be None until the responses are filled in; the
    estimator refuses to work on unfilled batches.
    """

    def __init__(self, x, y, w, origin=None, strategy=None, diagnostics=None):
        self.diagnostics = diagnostics
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n = x.shape[0]
        w = np.asarray(w, dtype=float).ravel()
        if w.shape != (n,):
            raise ConfigError("one weight per draw required")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ConfigError("weights must be finite and non-negative")
        if y is not None:
            y = np.asarray(y, dtype=float).ravel()
            if y.shape != (n,):
                raise ConfigError("one response per draw required")
        if origin is None:
            origin = np.full(n, ORIGIN_CRUDE, dtype=int)
        else:
            origin = np.asarray(origin, dtype=int).ravel()
            if origin.shape != (n,):
                raise ConfigError("one origin per draw required")
        self.x = x
        self.y = y
        self.w = w
        self.origin = origin
        self.strategy = strategy

    def __len__(self):
        return self.x.shape[0]

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def __getitem__(self, i):
        y = None if self.y is None else float(self.y[i])
        return WeightedSample(self.x[i], y, float(self.w[i]),
                              int(self.origin[i]))

    def with_responses(self, y) -> "WeightedSamples":
        return WeightedSamples(self.x, y, self.w, self.origin, self.strategy,
                               self.diagnostics)

    def subset(self, mask) -> "WeightedSamples":
        y = None if self.y is None else self.y[mask]
        return WeightedSamples(self.x[mask], y, self.w[mask],
                               self.origin[mask], self.strategy,
                               self.diagnostics)

    @property
    def n_effective(self) -> float:
        total = float(self.w.sum())
        return total * total / float(self.w @ self.w) if total > 0 else 0.0


@dataclass
class MhResult:
    draws: np.ndarray
    acceptance_rate: float
    step_scale: np.ndarray
    n_steps: int
    warnings: list = field(default_factory=list)

    def __len__(self):
        return self.draws.shape[0]

    def __iter__(self):
        return iter(self.draws)


def _fold_into_support(x, low, high):
    """Reflect proposals into the support box; symmetric by construction."""
    out = x
    lo_fin = np.isfinite(low)
    hi_fin = np.isfinite(high)
    if not (lo_fin.any() or hi_fin.any()):
        return out
    out = out.copy()
    for j in range(x.shape[1]):
        lo, hi = low[j], high[j]
        col = out[:, j]
        if lo_fin[j] and hi_fin[j]:
            width = hi - lo
            if width <= 0:
                out[:, j] = lo
                continue
            t = np.mod(col - lo, 2.0 * width)
            out[:, j] = lo + np.minimum(t, 2.0 * width - t)
        elif lo_fin[j]:
            out[:, j] = lo + np.abs(col - lo)
        elif hi_fin[j]:
            out[:, j] = hi - np.abs(hi - col)
    return out


def _resolve_scale(cfg, init, dim):
    if cfg.step_scale is not None:
        return np.broadcast_to(np.asarray(cfg.step_scale, dtype=float),
                               (dim,)).copy()
    spread = np.std(init, axis=0)
    spread[~(spread > 0)] = 1.0
    return spread


def mh_sample(target_log_density, init, n: int, cfg: MhConfig,
              rng: np.random.Generator, *, support_low=None,
              support_high=None) -> MhResult:
    """Draw n thinned post-burn-in points from an unnormalized log target.

    The target must accept a (k, d) batch and return (k,) log densities;
    proposals falling where the target is -inf are rejected, or folded back
    first when finite support bounds are supplied. init is one point (d,) or
    a (chains, d) block of starting points.
    """
    if n < 1:
        raise ConfigError("need at least one draw")
    init = np.atleast_2d(np.asarray(init, dtype=float))
    dim = init.shape[1]
    chains = cfg.chains
    if init.shape[0] == 1:
        init = np.repeat(init, chains, axis=0)
    elif init.shape[0] != chains:
        raise ConfigError("init must be one point or one per chain")
    low = np.full(dim, -np.inf) if support_low is None else np.asarray(
        support_low, dtype=float)
    high = np.full(dim, np.inf) if support_high is None else np.asarray(
        support_high, dtype=float)

    lp = np.asarray(target_log_density(init), dtype=float)
    if not np.all(np.isfinite(lp)):
        raise SamplingError("target log density not finite at the start point")

    scale = _resolve_scale(cfg, init, dim)
    log_s = 0.0
    x = init.copy()
    rounds = int(np.ceil(n / chains))
    total = cfg.burn_in + rounds * cfg.thinning
    kept = []
    acc_window = 0.0
    acc_after = 0.0
    n_updates = 0
    notes = []

    for t in range(total):
        prop = x + np.exp(log_s) * scale * rng.standard_normal((chains, dim))
        prop = _fold_into_support(prop, low, high)
        lpp = np.asarray(target_log_density(prop), dtype=float)
        with np.errstate(invalid="ignore"):
            accept = np.log(rng.random(chains)) < lpp - lp
        accept &= np.isfinite(lpp)
        x[accept] = prop[accept]
        lp[accept] = lpp[accept]
        rate = float(accept.mean())
        if t < cfg.burn_in:
            acc_window += rate
            if (t + 1) % _ADAPT_WINDOW == 0 and n_updates < cfg.max_adapt_steps:
                gain = (1.0 + t / 200.0) ** -0.6
                log_s += gain * (acc_window / _ADAPT_WINDOW - cfg.target_accept)
                acc_window = 0.0
                n_updates += 1
        else:
            acc_after += rate
            s = t - cfg.burn_in
            if s % cfg.thinning == cfg.thinning - 1:
                kept.append(x.copy())

    draws = np.concatenate(kept, axis=0)[:n]
    post_steps = max(total - cfg.burn_in, 1)
    acc_rate = acc_after / post_steps
    if acc_rate < _MIN_ACCEPT:
        msg = f"acceptance rate {acc_rate:.4f} below {_MIN_ACCEPT}"
        notes.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return MhResult(draws, acc_rate, np.exp(log_s) * scale, total, notes)


# ---------------------------------------------------------------------------
# normalizing constants


def _log_integrand(obj, model):
    if hasattr(obj, "components"):
        return lambda x: mixture_log_density_unnorm(obj, model, x)
    return lambda x: tilted_log_density_unnorm(obj, model, x)


def _scan_window_1d(logf, lo, hi, support_lo, support_hi):
    for _ in range(60):
        grid = np.linspace(lo, hi, 2049)
        vals = np.asarray(logf(grid[:, None]), dtype=float)
        top = int(np.argmax(vals))
        grew = False
        if top < 102 and lo > support_lo:
            lo = max(lo - (hi - lo), support_lo)
            grew = True
        if top > 2049 - 103 and hi < support_hi:
            hi = min(hi + (hi - lo), support_hi)
            grew = True
        if not grew:
            return grid, vals
    raise NumericError("integrand window failed to stabilize in 1d scan")


def _quadrature_1d(logf, support_lo, support_hi, n_nodes=512):
    lo = support_lo if np.isfinite(support_lo) else -8.0
    hi = support_hi if np.isfinite(support_hi) else 8.0
    if not lo < hi:
        raise NumericError("degenerate 1d support")
    grid, vals = _scan_window_1d(logf, lo, hi, support_lo, support_hi)
    peak = vals.max()
    if not np.isfinite(peak):
        raise EstimationError("integrand vanished on the whole scan window")
    mask = vals > peak - 45.0
    step = grid[1] - grid[0]
    a = max(grid[mask].min() - 2 * step, support_lo)
    b = min(grid[mask].max() + 2 * step, support_hi)
    if b - a < 1e-12:
        a, b = max(a - step, support_lo), min(b + step, support_hi)
    nodes, wts = np.polynomial.legendre.leggauss(n_nodes)
    xq = 0.5 * (b - a) * nodes + 0.5 * (a + b)
    lw = np.log(0.5 * (b - a) * wts)
    lv = np.asarray(logf(xq[:, None]), dtype=float)
    return float(np.exp(logsumexp(lv + lw)))


def _quadrature_2d(logf, support_lo, support_hi, n_scan=161, n_nodes=160):
    lo = np.where(np.isfinite(support_lo), support_lo, -8.0)
    hi = np.where(np.isfinite(support_hi), support_hi, 8.0)
    for _ in range(60):
        axes = [np.linspace(lo[j], hi[j], n_scan) for j in range(2)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        vals = np.asarray(logf(mesh.reshape(-1, 2)), dtype=float)
        vals = vals.reshape(n_scan, n_scan)
        top = np.unravel_index(int(np.argmax(vals)), vals.shape)
        grew = False
        for j in range(2):
            span = hi[j] - lo[j]
            if top[j] < n_scan // 20 and lo[j] > support_lo[j]:
                lo[j] = max(lo[j] - span, support_lo[j])
                grew = True
            if top[j] > n_scan - n_scan // 20 - 1 and hi[j] < support_hi[j]:
                hi[j] = min(hi[j] + span, support_hi[j])
                grew = True
        if not grew:
            break
    else:
        raise NumericError("integrand window failed to stabilize in 2d scan")
    peak = vals.max()
    if not np.isfinite(peak):
        raise EstimationError("integrand vanished on the whole scan window")
    mask = vals > peak - 45.0
    idx = np.where(mask)
    bounds = []
    for j in range(2):
        step = axes[j][1] - axes[j][0]
        a = max(axes[j][idx[j].min()] - 2 * step, support_lo[j])
        b = min(axes[j][idx[j].max()] + 2 * step, support_hi[j])
        if b - a < 1e-12:
            a, b = max(a - step, support_lo[j]), min(b + step, support_hi[j])
        bounds.append((a, b))
    nodes, wts = np.polynomial.legendre.leggauss(n_nodes)
    qx = [0.5 * (b - a) * nodes + 0.5 * (a + b) for a, b in bounds]
    lw = [np.log(0.5 * (b - a) * wts) for a, b in bounds]
    mesh = np.stack(np.meshgrid(*qx, indexing="ij"), axis=-1).reshape(-1, 2)
    lv = np.asarray(logf(mesh), dtype=float).reshape(n_nodes, n_nodes)
    return float(np.exp(logsumexp(lv + lw[0][:, None] + lw[1][None, :])))


def _trapezoid_on_samples(logf, xs, support_lo, support_hi):
    pts = np.unique(np.asarray(xs, dtype=float).ravel())
    if pts.size < 2:
        raise ConfigError("need at least two sample points for the grid")
    step = (pts[-1] - pts[0]) / pts.size
    if step <= 0:
        raise ConfigError("degenerate sample grid")

    def extend(start, direction, bound):
        extra = []
        pos = start
        for _ in range(20000):
            pos = pos + direction * step
            if direction < 0 and pos <= bound:
                break
            if direction > 0 and pos >= bound:
                break
            extra.append(pos)
            lv = float(np.asarray(logf(np.array([[pos]]))).ravel()[0])
            if lv < peak - 32.0:
                break
        return extra

    vals = np.asarray(logf(pts[:, None]), dtype=float)
    peak = float(vals.max())
    left = extend(pts[0], -1.0, support_lo)
    right = extend(pts[-1], +1.0, support_hi)
    grid = np.concatenate([np.array(left)[::-1], pts, np.array(right)])
    lv = np.asarray(logf(grid[:, None]), dtype=float)
    rel = np.exp(lv - peak)
    area = float(np.trapezoid(rel, grid)) if hasattr(np, "trapezoid") else \
        float(np.trapz(rel, grid))
    return float(np.exp(peak) * area)


def _kde_ratio(logf, xs, model, eval_points, robust, rng):
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[0] < 10:
        raise ConfigError("kde ratio needs a reasonably sized mixture sample")
    sub = xs
    if sub.shape[0] > 2000:
        stride = int(np.ceil(sub.shape[0] / 2000))
        sub = sub[::stride]
    try:
        kde = gaussian_kde(sub.T, bw_method="silverman")
    except np.linalg.LinAlgError as exc:
        raise EstimationError("KDE bandwidth degenerate on mixture sample") from exc
    k = min(eval_points, xs.shape[0])
    if rng is None:
        pick = np.linspace(0, xs.shape[0] - 1, k).astype(int)
    else:
        pick = rng.choice(xs.shape[0], size=k, replace=False)
    pts = xs[pick]
    log_num = np.asarray(logf(pts), dtype=float)
    log_den = kde.logpdf(pts.T)
    ratios = np.exp(log_num - log_den)
    return float(np.median(ratios)) if robust else float(np.mean(ratios))


def estimate_norm_const(obj, model, method=None, *, samples=None,
                        n_draws=200_000, rng=None, eval_points=100,
                        robust=False) -> float:
    """Estimate the normalizing integral of a component or mixture.

    obj is a TiltComponent or a MixtureIS; the integrand is the unnormalized
    tilted (or mixture) density, evaluated through the surrogate only.
    Method default: adaptive quadrature for d <= 2, KDE ratio otherwise.
    """
    if method is None:
        method = ADAPTIVE_QUADRATURE if model.dim <= 2 else KDE_RATIO
    logf = _log_integrand(obj, model)
    if method == ADAPTIVE_QUADRATURE:
        if model.dim > 2:
            raise ConfigError("adaptive quadrature supports d <= 2 only")
        if model.dim == 1:
            out = _quadrature_1d(logf, float(model.support_low[0]),
                                 float(model.support_high[0]))
        else:
            out = _quadrature_2d(logf, model.support_low.astype(float),
                                 model.support_high.astype(float))
    elif method == TRAPEZOID_ON_SAMPLES:
        if model.dim != 1:
            raise ConfigError("trapezoid-on-samples supports d = 1 only")
        if samples is None:
            raise ConfigError("trapezoid-on-samples needs sample grid points")
        out = _trapezoid_on_samples(logf, samples, float(model.support_low[0]),
                                    float(model.support_high[0]))
    elif method == KDE_RATIO:
        if samples is None:
            raise ConfigError("kde ratio needs a drawn mixture sample")
        out = _kde_ratio(logf, samples, model, eval_points, robust, rng)
    elif method == MONTE_CARLO:
        gen = rng if rng is not None else np.random.default_rng(0)
        xb = model.sample_base(gen, int(n_draws))
        log_ratio = np.asarray(logf(xb), dtype=float) - np.asarray(
            model.base_log_density(xb), dtype=float)
        out = float(np.exp(logsumexp(log_ratio) - np.log(xb.shape[0])))
    else:
        raise ConfigError(f"unknown norm-const method {method!r}")
    if not out > 0.0 or not np.isfinite(out):
        raise EstimationError(f"normalizing constant came out {out!r}")
    return out


# ---------------------------------------------------------------------------
# mixture sampling


def _component_inits(mix, pivots, chains_per_comp, model, rng):
    """Start points per component: pivot points nearest each tilted mean."""
    n_comp = len(mix.components)
    if pivots is not None:
        px = np.atleast_2d(np.asarray(pivots.x, dtype=float))
        py = np.asarray(pivots.y, dtype=float)
        pw = getattr(pivots, "w", None)
        inits = []
        for comp, k in zip(mix.components, chains_per_comp):
            if k == 0:
                inits.append(np.empty((0, px.shape[1])))
                continue
            tgt = tilted_mean(py, comp.theta, pw)
            near = np.argsort(np.abs(py - tgt), kind="stable")[:k]
            if near.size < k:
                near = np.resize(near, k)
            inits.append(px[near])
        return inits
    inits = []
    for comp, k in zip(mix.components, chains_per_comp):
        if k == 0:
            inits.append(np.empty((0, model.dim)))
            continue
        pts = model.sample_base(rng, int(k))
        inits.append(np.atleast_2d(pts))
    return inits


def draw_mixture(mix, model, n: int, cfg: MhConfig, rng: np.random.Generator,
                 *, strategy: str = ANCESTRAL, pivots=None) -> WeightedSamples:
    """Draw n weighted samples from the calibrated mixture.

    ancestral: split the budget over components in proportion to p_i times
    the component normalizer (so the closed-form likelihood ratio is exact
    for the realized sampling law), then run one batched random-walk MH pass
    with all components' walkers stepping together; one surrogate batch
    predict per step. pooled: a single MH run on the mixture target.

    The costly h is evaluated exactly once per retained draw, at the end.
    """
    if n < 1:
        raise ConfigError("need at least one draw")
    if strategy == POOLED:
        return _draw_pooled(mix, model, n, cfg, rng, pivots)
    if strategy != ANCESTRAL:
        raise ConfigError(f"unknown sampling strategy {strategy!r}")

    n_comp = len(mix.components)
    mass = mix.weights * np.array([c.norm_const for c in mix.components])
    if not np.any(mass > 0):
        raise SamplingError("mixture carries no sampling mass")
    p_draw = mass / mass.sum()
    counts = largest_remainder_counts(p_draw, n)
    chains_per_comp = np.minimum(cfg.chains, counts)
    inits = _component_inits(mix, pivots, chains_per_comp, model, rng)

    active = [i for i in range(n_comp) if counts[i] > 0]
    comp_of_walker = np.concatenate(
        [np.full(chains_per_comp[i], i) for i in active])
    x = np.concatenate([inits[i] for i in active], axis=0).astype(float)
    thetas = np.array([mix.components[i].theta for i in range(n_comp)])
    psis = np.array([mix.components[i].psi_hat for i in range(n_comp)])
    caps_lo = np.array([mix.components[i].cap_low for i in range(n_comp)])
    caps_hi = np.array([mix.components[i].cap_high for i in range(n_comp)])
    th_w = thetas[comp_of_walker]
    ps_w = psis[comp_of_walker]
    lo_w = caps_lo[comp_of_walker]
    hi_w = caps_hi[comp_of_walker]
    surrogate = mix.components[active[0]].surrogate
    if surrogate is None:
        raise ConfigError("mixture components carry no surrogate")
    low = model.support_low.astype(float)
    high = model.support_high.astype(float)

    def walker_logp(pts):
        yhat = np.asarray(surrogate.predict(pts), dtype=float)
        base = np.asarray(model.base_log_density(pts), dtype=float)
        return th_w * np.clip(yhat, lo_w, hi_w) - ps_w + base

    lp = walker_logp(x)
    bad = ~np.isfinite(lp)
    if np.any(bad):
        raise SamplingError("start points have zero target density")

    scale = _resolve_scale(cfg, x, x.shape[1])
    log_s = np.zeros(n_comp)
    need = np.zeros(n_comp, dtype=int)
    need[active] = np.ceil(counts[active] / chains_per_comp[active]).astype(int)
    total = cfg.burn_in + int(need.max()) * cfg.thinning
    n_walk = x.shape[0]
    kept = [[] for _ in range(n_comp)]
    acc_win = np.zeros(n_comp)
    acc_post = np.zeros(n_comp)
    walkers_of = {i: comp_of_walker == i for i in active}
    n_updates = 0

    for t in range(total):
        noise = rng.standard_normal((n_walk, x.shape[1]))
        prop = x + np.exp(log_s[comp_of_walker])[:, None] * scale * noise
        prop = _fold_into_support(prop, low, high)
        lpp = walker_logp(prop)
        with np.errstate(invalid="ignore"):
            accept = np.log(rng.random(n_walk)) < lpp - lp
        accept &= np.isfinite(lpp)
        x[accept] = prop[accept]
        lp[accept] = lpp[accept]
        per_comp = np.array([float(np.mean(accept[walkers_of[i]]))
                             for i in active])
        if t < cfg.burn_in:
            acc_win[active] += per_comp
            if (t + 1) % _ADAPT_WINDOW == 0 and n_updates < cfg.max_adapt_steps:
                gain = (1.0 + t / 200.0) ** -0.6
                log_s[active] += gain * (acc_win[active] / _ADAPT_WINDOW
                                         - cfg.target_accept)
                acc_win[:] = 0.0
                n_updates += 1
        else:
            acc_post[active] += per_comp
            s = t - cfg.burn_in
            if s % cfg.thinning == cfg.thinning - 1:
                round_no = s // cfg.thinning
                for i in active:
                    if round_no < need[i]:
                        kept[i].append(x[walkers_of[i]].copy())

    post_steps = max(total - cfg.burn_in, 1)
    for i in active:
        rate = acc_post[i] / post_steps
        if rate < _MIN_ACCEPT:
            raise SamplingError(
                f"chain for level {mix.components[i].level:.6g} failed "
                f"diagnostics: acceptance {rate:.4f}")

    blocks, origins = [], []
    for i in active:
        got = np.concatenate(kept[i], axis=0)[: counts[i]]
        blocks.append(got)
        origins.append(np.full(got.shape[0], i))
    xs_all = np.concatenate(blocks, axis=0)
    origin = np.concatenate(origins)
    y = model.evaluate(xs_all)
    if model.dim == 1 and np.ndim(y) == 0:
        y = np.array([y])
    # the realized law is sum_i (counts_i/n) Fhat_i; expressing it as a
    # mixture with weights ~ (counts_i/n)/c_i makes the closed-form ratio
    # exact for the sample actually drawn (it reduces to the p_i weights
    # whenever all norm consts are 1 and rounding is immaterial)
    inv_mass = counts / float(n) / np.array([c.norm_const
                                             for c in mix.components])
    lr_mix = _replace_weights(mix, inv_mass / inv_mass.sum())
    w = likelihood_ratio(lr_mix, model, xs_all)
    diag = {"acceptance": {int(i): acc_post[i] / post_steps for i in active},
            "step_scale": {int(i): float(np.exp(log_s[i])) for i in active},
            "counts": counts.copy()}
    out = WeightedSamples(xs_all, y, np.atleast_1d(w), origin, ANCESTRAL)
    out.diagnostics = diag
    return out


def _replace_weights(mix, new_weights):
    from dataclasses import replace

    return replace(mix, weights=np.asarray(new_weights, dtype=float))


def _draw_pooled(mix, model, n, cfg, rng, pivots):
    n_comp = len(mix.components)
    per = np.full(n_comp, cfg.chains // n_comp, dtype=int)
    per[: cfg.chains % n_comp] += 1
    inits = _component_inits(mix, pivots, per, model, rng)
    init = np.concatenate([b for b in inits if b.shape[0]], axis=0)

    def target(pts):
        return mixture_log_density_unnorm(mix, model, pts)

    result = mh_sample(target, init, n, cfg, rng,
                       support_low=model.support_low,
                       support_high=model.support_high)
    xs = result.draws
    y = model.evaluate(xs)
    if model.dim == 1 and np.ndim(y) == 0:
        y = np.array([y])
    w = likelihood_ratio(mix, model, xs)
    origin = np.full(xs.shape[0], ORIGIN_POOLED)
    diag = {"acceptance": result.acceptance_rate,
            "step_scale": result.step_scale.tolist(),
            "notes": list(result.warnings)}
    return WeightedSamples(xs, y, np.atleast_1d(w), origin, POOLED, diag)
