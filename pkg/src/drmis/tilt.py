"""Exponential tilting calibrated from pivot responses.

A tilt reweights the base law by exp(theta * y - psi). Calibration solves the
empirical tilted-mean equation for theta on the pivot responses (the true,
already-paid-for h values); density evaluation afterwards only ever touches
the cheap surrogate. The normalizing constant of each component absorbs both
the surrogate mismatch and the plug-in error in psi.

All tilted means and log-partition values use the max-shift trick, so they
stay finite for any theta the calibrator can return.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import CalibrationError, ConfigError, NumericError

_THETA_CAP = 1e8
_RESIDUAL_REL = 1e-8


@dataclass(frozen=True)
class TiltComponent:
    """One calibrated tilt: level, parameter, log-partition, normalizer.

    norm_const defaults to 1 and is replaced (via dataclasses.replace) once
    estimated; the surrogate reference is whatever predictor the pipeline
    fitted, shared across components.

    cap_low/cap_high bound the surrogate response inside the exponent:
    the density factor is exp(theta * clip(hhat(x), cap_low, cap_high)).
    Calibration sees only responses inside the pivot hull, where the clip is
    the identity, but beyond it the pure exponential factor can make the
    component non-normalizable (a gamma-tailed response has no tilt beyond
    its MGF radius). Capping at the observed response range keeps every
    component a proper distribution whose tail follows the base law's shape,
    while the normalizing constant, estimated for the capped density,
    preserves exactness of the likelihood ratios.
    """

    level: float
    theta: float
    psi_hat: float
    norm_const: float = 1.0
    surrogate: object = None
    cap_low: float = -np.inf
    cap_high: float = np.inf

    def __post_init__(self):
        if not 0.0 <= self.level <= 1.0:
            raise ConfigError("level must lie in [0, 1]")
        if not np.isfinite(self.theta):
            raise ConfigError("theta must be finite")
        if not np.isfinite(self.psi_hat):
            raise ConfigError("psi_hat must be finite")
        if not self.norm_const > 0.0:
            raise ConfigError("norm_const must be positive")
        if np.isnan(self.cap_low) or np.isnan(self.cap_high):
            raise ConfigError("response caps must not be NaN")
        if not self.cap_low <= self.cap_high:
            raise ConfigError("cap_low must not exceed cap_high")


def _clean_weights(y, weights):
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise ConfigError("empty pivot response sample")
    if not np.all(np.isfinite(y)):
        raise ConfigError("pivot responses must be finite")
    if weights is None:
        return y, np.ones_like(y)
    w = np.asarray(weights, dtype=float).ravel()
    if w.shape != y.shape:
        raise ConfigError("weights must match the responses in length")
    if not np.all(np.isfinite(w)) or np.any(w < 0.0):
        raise ConfigError("weights must be finite and non-negative")
    if not np.any(w > 0.0):
        raise CalibrationError("all pivot weights are zero")
    return y, w


def tilted_mean(pivot_y, theta, weights=None) -> float:
    """Empirical mean of y under the tilt exp(theta*y), max-shifted."""
    y, w = _clean_weights(pivot_y, weights)
    shift = theta * y
    shift -= shift.max()
    ew = w * np.exp(shift)
    return float(np.sum(ew * y) / np.sum(ew))


def calibrate_theta(pivot_y, target_q, weights=None) -> float:
    """Solve the tilted-mean equation tilted_mean(y, theta) = target_q.

    The map theta -> tilted mean is strictly increasing between the smallest
    and largest response, so the root is unique; it is bracketed by doubling
    and polished by Brent's method. Targets outside the open hull of the
    responses are calibration errors (the caller clamps its level first).
    """
    y, w = _clean_weights(pivot_y, weights)
    active = y[w > 0.0]
    lo_y, hi_y = float(active.min()), float(active.max())
    if hi_y == lo_y:
        raise CalibrationError("pivot responses are constant; tilt undefined")
    if not lo_y < target_q < hi_y:
        raise CalibrationError(
            f"target {target_q:.6g} outside the open response hull "
            f"({lo_y:.6g}, {hi_y:.6g})")

    def resid(theta):
        return tilted_mean(y, theta, w) - target_q

    r0 = resid(0.0)
    if r0 == 0.0:
        return 0.0
    lo, hi = (-1.0, 0.0) if r0 > 0.0 else (0.0, 1.0)
    grow = lo if r0 > 0.0 else hi
    while (resid(grow) > 0.0) == (r0 > 0.0):
        grow *= 2.0
        if abs(grow) > _THETA_CAP:
            raise CalibrationError(
                f"tilt parameter exceeded its cap {_THETA_CAP:.0e} before "
                f"reaching target {target_q:.6g}")
    if r0 > 0.0:
        lo = grow
    else:
        hi = grow
    root = brentq(resid, lo, hi, xtol=1e-14, rtol=4e-15, maxiter=200)
    if abs(resid(root)) > _RESIDUAL_REL * (hi_y - lo_y):
        raise CalibrationError("tilted-mean residual did not converge")
    return float(root)


def estimate_psi(pivot_y, theta, weights=None) -> float:
    """Plug-in log-partition: log of the (weighted) mean of exp(theta*y)."""
    y, w = _clean_weights(pivot_y, weights)
    return float(logsumexp(theta * y, b=w) - np.log(y.size))


def tilted_log_density_unnorm(comp: TiltComponent, model, x):
    """log of exp(theta*clip(hhat(x)) - psi_hat) * f(x); surrogate only."""
    if comp.surrogate is None:
        raise ConfigError("tilt component carries no surrogate")
    base = model.base_log_density(x)
    yhat = np.clip(comp.surrogate.predict(x), comp.cap_low, comp.cap_high)
    return comp.theta * yhat - comp.psi_hat + base


def mixture_log_density_unnorm(mix, model, x):
    """log of sum_i p_i exp(theta_i*clip(hhat(x)) - psi_i) * f(x), up to 1/c."""
    base = np.asarray(model.base_log_density(x), dtype=float)
    yhat = np.asarray(mix.components[0].surrogate.predict(x), dtype=float)
    thetas = np.array([c.theta for c in mix.components])
    psis = np.array([c.psi_hat for c in mix.components])
    lows = np.array([c.cap_low for c in mix.components])
    highs = np.array([c.cap_high for c in mix.components])
    weights = np.asarray(mix.weights, dtype=float)
    with np.errstate(divide="ignore"):
        logp = np.where(weights > 0.0, np.log(np.maximum(weights, 1e-300)), -np.inf)
    # (n, m+1) exponents, reduced over components
    expo = np.clip(yhat[..., None], lows, highs) * thetas - psis + logp
    out = logsumexp(np.atleast_2d(expo), axis=-1) + base
    if np.ndim(base) == 0:
        return float(out[0])
    return out


def likelihood_ratio(mix, model, x):
    """dF/dF* at x: c / sum_i p_i exp(theta_i*hhat(x) - psi_i).

    Scalar in, scalar out; any denominator underflowing to zero makes the
    affected sample unusable and raises.
    """
    base = np.asarray(model.base_log_density(x), dtype=float)
    log_mix = np.asarray(mixture_log_density_unnorm(mix, model, x), dtype=float)
    log_den = log_mix - base  # log sum_i p_i exp(theta_i yhat - psi_i)
    if np.any(np.isneginf(log_den)) or np.any(np.isnan(log_den)):
        bad = int(np.sum(~np.isfinite(np.atleast_1d(log_den))))
        raise NumericError(
            f"likelihood-ratio denominator underflowed for {bad} sample(s)")
    out = np.exp(np.log(mix.norm_const) - log_den)
    if not np.all(np.isfinite(out)):
        bad = int(np.sum(~np.isfinite(np.atleast_1d(out))))
        raise NumericError(
            f"likelihood-ratio denominator underflowed for {bad} sample(s)")
    if np.ndim(base) == 0:
        return float(out)
    return out
