"""Per-level variance coefficients, optimal budget split, mixture assembly.

The per-level contribution to the estimator's MSE scales like c_i / N_i, so
under a fixed total budget the optimal counts follow square-root
proportionality N_i = N * sqrt(c_i) / sum_j sqrt(c_j). Coefficients are
estimated from the pivot sample: tail second moment of the per-level
likelihood ratio minus the squared tail probability, divided by a kernel
density estimate of the response density at the level's quantile, scaled by
the distortion increment of the cell.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import gaussian_kde

from .distortion import estimation_levels, g_increments
from .errors import AllocationError, ConfigError
from .estimator import interp_quantile

INDIVIDUAL = "individual"
MIXTURE = "mixture"

_COEFF_FLOOR_REL = 1e-12


@dataclass(frozen=True)
class AllocationPlan:
    """Coefficients, mixture weights, and integer counts for one budget."""

    coeffs: np.ndarray
    weights: np.ndarray
    counts: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        p = np.asarray(self.weights, dtype=float)
        if c.shape != p.shape or c.ndim != 1:
            raise ConfigError("coeffs and weights must be matching vectors")
        if np.any(c < 0):
            raise ConfigError("coefficients must be non-negative")
        if abs(p.sum() - 1.0) > 1e-9 or np.any(p < 0):
            raise ConfigError("weights must be a probability vector")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "weights", p)
        if self.counts is not None:
            n = np.asarray(self.counts, dtype=int)
            if n.shape != c.shape or np.any(n < 0):
                raise ConfigError("counts must be non-negative, one per level")
            object.__setattr__(self, "counts", n)


@dataclass(frozen=True)
class MixtureIS:
    """The sampling mixture: calibrated components and their weights."""

    components: tuple
    weights: np.ndarray

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ConfigError("mixture needs at least one component")
        p = np.asarray(self.weights, dtype=float)
        if p.shape != (len(comps),):
            raise ConfigError("one weight per component required")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ConfigError("weights must sum to 1 within 1e-12")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", p)

    @property
    def norm_const(self) -> float:
        """Global constant c = sum_i p_i c_i."""
        return float(sum(p * c.norm_const
                         for p, c in zip(self.weights, self.components)))


def kde_density(y, weights=None):
    """Gaussian KDE (Silverman bandwidth) of the response density.

    Returns a callable q -> density estimate, the default way to evaluate
    the response density appearing in the coefficient denominator.
    """
    kde = gaussian_kde(np.asarray(y, dtype=float), bw_method="silverman",
                       weights=weights)
    return lambda q: float(kde(np.atleast_1d(float(q)))[0])


def _pivot_arrays(pivot, tilts):
    """Extract (y_true, y_surrogate, weights) from the pivot argument.

    Accepts a batch with .x/.y (weights optional) or a plain (y, yhat, w)
    triple; the surrogate responses come from the shared component surrogate
    when only x is available.
    """
    if hasattr(pivot, "y") and hasattr(pivot, "x"):
        y = np.asarray(pivot.y, dtype=float)
        w = np.asarray(getattr(pivot, "w", np.ones(y.size)), dtype=float)
        sur = tilts[0].surrogate
        if sur is None:
            raise ConfigError("components carry no surrogate for pivot ratios")
        yhat = np.asarray(sur.predict(np.asarray(pivot.x, dtype=float)), dtype=float)
        return y, yhat, w
    y, yhat, w = pivot
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    w = np.ones(y.size) if w is None else np.asarray(w, dtype=float)
    return y, yhat, w


def estimate_coeffs(pivot, tilts, g, part, gprime_est=None, *,
                    convention="auto", targets=None,
                    top_level_cap=None) -> np.ndarray:
    """Per-level variance coefficients from the pivot sample.

    For each cell with positive distortion increment, with u the cell's
    estimation level and q the pivot quantile there: the coefficient is
    (tail second moment of the level's likelihood ratio - (1-u)^2), divided
    by the density estimate at q, times the cell increment. Cells with zero
    increment get exactly zero; sampling-noise negatives are floored at
    1e-12 of the largest coefficient so every live level stays sampleable.

    `targets` overrides the per-level quantiles (the pipeline passes its
    clamped calibration targets so both stages see the same anchor points).
    """
    y, yhat, w = _pivot_arrays(pivot, tilts)
    levels = estimation_levels(g, part, convention=convention,
                               top_level_cap=top_level_cap)
    dg = g_increments(g, part)
    if len(tilts) != levels.size:
        raise ConfigError("one tilt component per partition cell required")
    if gprime_est is None:
        gprime_est = kde_density(y, weights=None if np.all(w == w[0]) else w)
    if targets is not None and len(targets) != levels.size:
        raise ConfigError("one target per partition cell required")

    m_piv = y.size
    coeffs = np.zeros(levels.size)
    for i, (u, inc, comp) in enumerate(zip(levels, dg, tilts)):
        if inc <= 0.0:
            continue
        q = float(targets[i]) if targets is not None else interp_quantile(y, u, w=w)
        if not np.isfinite(q):
            raise AllocationError(f"non-finite pivot quantile at level {u:.6g}")
        dens = float(gprime_est(q))
        if not dens > 0.0:
            raise AllocationError(
                f"response density estimate vanished at level {u:.6g}")
        tail = y > q
        if np.any(tail & (w > 0)):
            capped = np.clip(yhat[tail], comp.cap_low, comp.cap_high)
            log_lr = comp.psi_hat - comp.theta * capped
            tail_moment = float(np.exp(logsumexp(log_lr, b=w[tail]))) / m_piv
        else:
            tail_moment = 0.0
        alpha = 1.0 - u
        coeffs[i] = (tail_moment - alpha * alpha) / dens * inc

    top = coeffs.max(initial=0.0)
    live = dg > 0.0
    floor = _COEFF_FLOOR_REL * top if top > 0.0 else 0.0
    coeffs[live] = np.maximum(coeffs[live], floor)
    return coeffs


def largest_remainder_counts(weights, n_total: int) -> np.ndarray:
    """Integer counts proportional to weights, summing exactly to n_total."""
    p = np.asarray(weights, dtype=float)
    raw = p * n_total
    base = np.floor(raw).astype(int)
    short = int(n_total - base.sum())
    if short > 0:
        frac = raw - base
        order = np.argsort(-frac, kind="stable")
        base[order[:short]] += 1
    return base


def allocate(coeffs, n_total: int) -> AllocationPlan:
    """Optimal square-root budget split with exact integer counts."""
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise ConfigError("coefficients must be a non-empty vector")
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise ConfigError("coefficients must be finite and non-negative")
    if n_total < 1:
        raise ConfigError("total budget must be at least 1")
    if np.all(c == 0.0):
        warnings.warn("all allocation coefficients are zero; uniform fallback",
                      RuntimeWarning, stacklevel=2)
        p = np.full(c.size, 1.0 / c.size)
    else:
        roots = np.sqrt(c)
        p = roots / roots.sum()
    counts = largest_remainder_counts(p, int(n_total))
    return AllocationPlan(coeffs=c, weights=p, counts=counts)


def compare_variances(alpha_level: float, level_samples, pooled_samples,
                      p_i: float) -> str:
    """Pick the lower-variance estimator for one level.

    Compares the individual-component tail numerator against p_i times the
    mixture tail numerator (both per-draw variances share the denominator
    p_i * N). Ties and non-finite comparisons fall back to the mixture; a
    level with p_i = 0 cannot be served by the mixture at all.
    """
    if not 0.0 <= alpha_level <= 1.0:
        raise ConfigError("tail level outside [0,1]")
    if p_i == 0.0:
        return INDIVIDUAL
    y_ind, w_ind = _as_yw(level_samples)
    y_mix, w_mix = _as_yw(pooled_samples)
    if y_ind.size == 0 or y_mix.size == 0:
        raise ConfigError("both sample sets must be non-empty")

    from .estimator import is_quantile

    q = is_quantile((y_mix, w_mix), 1.0 - alpha_level).value
    with np.errstate(invalid="ignore", over="ignore"):
        ind = float(np.mean(w_ind**2 * (y_ind > q))) - alpha_level**2
        mix = p_i * (float(np.mean(w_mix**2 * (y_mix > q))) - alpha_level**2)
    if not (np.isfinite(ind) and np.isfinite(mix)):
        warnings.warn("non-finite variance comparison; defaulting to mixture",
                      RuntimeWarning, stacklevel=2)
        return MIXTURE
    return INDIVIDUAL if ind < mix else MIXTURE


def _as_yw(samples):
    if hasattr(samples, "y") and hasattr(samples, "w"):
        return (np.asarray(samples.y, dtype=float),
                np.asarray(samples.w, dtype=float))
    y, w = samples
    return np.asarray(y, dtype=float), np.asarray(w, dtype=float)
