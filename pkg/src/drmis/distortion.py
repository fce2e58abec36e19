"""Distortion functions, level partitions, and the discretized risk measure.

A distortion risk measure is a mixture of quantiles of the loss variable,
weighted by increments of a distortion function g over a partition of (0,1).
This module defines the supported distortion families, builds partitions,
maps partition cells to the quantile levels that get estimated, and folds
estimated quantiles into the final risk number.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, EstimationError

UNIFORM_ON_ALPHA = "uniform_on_alpha"
INVERSE_G = "inverse_g"

_KINDS = ("power_tail", "var", "avar", "tabulated")


@dataclass(frozen=True)
class DistortionSpec:
    """A distortion function g on [0,1] with g(0)=0, g(1)=1, non-decreasing.

    Kinds:
      power_tail  g(u) = (u/alpha)^gamma on [0, alpha], 1 above
      avar        power_tail with gamma = 1
      var         step function 1 on (alpha, 1], 0 on [0, alpha]
      tabulated   piecewise-linear through the given knots
    """

    kind: str
    alpha: float | None = None
    gamma: float | None = None
    knots: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown distortion kind {self.kind!r}")
        if self.kind in ("power_tail", "var", "avar"):
            if self.alpha is None or not 0.0 < self.alpha <= 1.0:
                raise ConfigError("alpha must lie in (0, 1]")
            if self.kind == "power_tail":
                if self.gamma is None or self.gamma <= 0.0:
                    raise ConfigError("gamma must be positive")
            else:
                object.__setattr__(self, "gamma", 1.0 if self.kind == "avar" else None)
        else:
            if not self.knots:
                raise ConfigError("tabulated distortion needs knots")
            ks = tuple((float(u), float(v)) for u, v in self.knots)
            us = np.array([u for u, _ in ks])
            vs = np.array([v for _, v in ks])
            if us[0] != 0.0 or vs[0] != 0.0 or us[-1] != 1.0 or vs[-1] != 1.0:
                raise ConfigError("knots must start at (0,0) and end at (1,1)")
            if np.any(np.diff(us) <= 0):
                raise ConfigError("knot u-values must be strictly increasing")
            grid = np.linspace(0.0, 1.0, 1001)
            vals = np.interp(grid, us, vs)
            if np.any(np.diff(vals) < -1e-12):
                raise ConfigError("tabulated distortion is not non-decreasing")
            object.__setattr__(self, "knots", ks)


def power_tail(alpha: float, gamma: float) -> DistortionSpec:
    return DistortionSpec("power_tail", alpha=alpha, gamma=gamma)


def avar(alpha: float) -> DistortionSpec:
    """Average value at risk; identical to power_tail(alpha, 1)."""
    return DistortionSpec("avar", alpha=alpha)


def var_at(alpha: float) -> DistortionSpec:
    return DistortionSpec("var", alpha=alpha)


def tabulated(knots) -> DistortionSpec:
    return DistortionSpec("tabulated", knots=tuple(knots))


def eval_distortion(g: DistortionSpec, u):
    """Evaluate g pointwise; u may be a scalar or an array in [0,1]."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("distortion argument outside [0,1]")
    if g.kind in ("power_tail", "avar"):
        gam = g.gamma
        with np.errstate(invalid="ignore"):
            out = np.where(arr <= g.alpha, (arr / g.alpha) ** gam, 1.0)
    elif g.kind == "var":
        out = np.where(arr > g.alpha, 1.0, 0.0)
    else:
        us = np.array([p for p, _ in g.knots])
        vs = np.array([q for _, q in g.knots])
        out = np.interp(arr, us, vs)
    return out if isinstance(u, np.ndarray) else float(out)


def _generalized_inverse(g: DistortionSpec, t: float) -> float:
    """inf{u : g(u) >= t} by bisection; exact closed form for power tails."""
    if g.kind in ("power_tail", "avar"):
        return float(g.alpha * t ** (1.0 / g.gamma))
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if eval_distortion(g, mid) >= t:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class Partition:
    """Levels 0 <= a_0 < a_1 < ... < a_m < a_{m+1} = 1."""

    levels: np.ndarray
    scheme: str = UNIFORM_ON_ALPHA

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        object.__setattr__(self, "levels", lv)
        if lv.ndim != 1 or lv.size < 2:
            raise ConfigError("partition needs at least two levels")
        if np.any(np.diff(lv) <= 0):
            raise ConfigError("partition levels must be strictly increasing")
        if lv[0] < 0.0 or lv[-1] != 1.0:
            raise ConfigError("partition must start >= 0 and end at exactly 1")

    @property
    def m(self) -> int:
        return self.levels.size - 2

    @property
    def n_cells(self) -> int:
        return self.levels.size - 1


def make_partition(g: DistortionSpec, m: int, scheme: str = UNIFORM_ON_ALPHA) -> Partition:
    if m < 1:
        raise ConfigError("partition size m must be >= 1")
    if scheme == UNIFORM_ON_ALPHA:
        if g.kind == "tabulated":
            us = np.array([p for p, _ in g.knots])
            vs = np.array([q for _, q in g.knots])
            alpha = float(us[vs >= 1.0][0])  # first level where g saturates
        else:
            alpha = g.alpha
        if not 0.0 < alpha < 1.0:
            raise ConfigError("uniform_on_alpha needs the growth region to end below 1")
        lv = np.append(np.arange(m + 1) * (alpha / m), 1.0)
        return Partition(lv, UNIFORM_ON_ALPHA)
    if scheme == INVERSE_G:
        lv = np.array([_generalized_inverse(g, i / (m + 1)) for i in range(m + 1)] + [1.0])
        if np.any(np.diff(lv) <= 0):
            raise ConfigError("distortion not invertible at the requested levels")
        return Partition(lv, INVERSE_G)
    raise ConfigError(f"unknown partition scheme {scheme!r}")


def g_increments(g: DistortionSpec, part: Partition) -> np.ndarray:
    """Per-cell increments g(a_{i+1}) - g(a_i); they sum to 1 up to 1 ulp."""
    vals = eval_distortion(g, part.levels)
    return np.diff(vals)


def estimation_levels(
    g: DistortionSpec,
    part: Partition,
    convention: str = "auto",
    top_level_cap: float | None = None,
) -> np.ndarray:
    """Quantile levels estimated for each partition cell.

    Cell i spans [a_i, a_{i+1}]. Under the "left" convention its quantile
    level is 1 - a_i (which includes level 1 for the first cell); under
    "right" it is 1 - a_{i+1}. "auto" picks left for the step distortion
    (whose single jump cell must be read at the jump itself) and right for
    the continuous kinds, where the right edge reproduces reference values
    without needing an essential-sup proxy at level 1.

    top_level_cap, when given, replaces any level above the cap (notably
    level 1 under the left convention) by the cap.
    """
    if convention == "auto":
        convention = "left" if g.kind == "var" else "right"
    if convention == "left":
        lv = 1.0 - part.levels[:-1]
    elif convention == "right":
        lv = 1.0 - part.levels[1:]
    else:
        raise ConfigError(f"unknown level convention {convention!r}")
    if top_level_cap is not None:
        lv = np.minimum(lv, top_level_cap)
    return lv


def drm_from_quantiles(qhat, g: DistortionSpec, part: Partition) -> float:
    """Weighted sum of per-cell quantile estimates: sum_i qhat_i * dg_i."""
    q = np.asarray(qhat, dtype=float)
    if q.shape != (part.n_cells,):
        raise EstimationError(
            f"expected {part.n_cells} quantiles (one per cell), got shape {q.shape}"
        )
    if not np.all(np.isfinite(q)):
        bad = int(np.flatnonzero(~np.isfinite(q))[0])
        raise EstimationError(
            f"non-finite quantile at cell {bad} (level {part.levels[bad]:g})"
        )
    return float(q @ g_increments(g, part))


def reference_drm(model, g: DistortionSpec, part: Partition, n_samples: int,
                  seed=0, convention: str = "auto") -> float:
    """Crude Monte Carlo reference: empirical quantiles at the partition's
    estimation levels plugged into drm_from_quantiles.

    Draws in chunks to bound memory; sorting happens once at the end.
    """
    if n_samples < 1:
        raise ConfigError("n_samples must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x9E3779B9]))
    chunks = []
    left = int(n_samples)
    while left > 0:
        take = min(left, 2_000_000)
        x = model.sample_base(rng, take)
        chunks.append(np.asarray(model.evaluate(x), dtype=float))
        left -= take
    ys = np.sort(np.concatenate(chunks))
    lv = estimation_levels(g, part, convention, top_level_cap=1.0 - 1.0 / ys.size)
    idx = np.ceil(ys.size * lv).astype(int) - 1
    idx = np.clip(idx, 0, ys.size - 1)
    return drm_from_quantiles(ys[idx], g, part)
