"""Weighted importance-sampling quantile estimation.

The estimator of the u-quantile from weighted draws (y_i, w_i) is

    qhat(u) = inf{ x : (1/N) * sum_{y_i > x} w_i <= 1 - u },

computed by sorting y descending and accumulating w/N until the running sum
strictly exceeds 1 - u. Equal y values form one block so the result does not
depend on input order. The estimate is finite exactly when the total weighted
mass (1/N) sum w_i exceeds 1 - u; otherwise the defining set is all of R and
the infimum is -inf.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EstimationError


@dataclass(frozen=True)
class QuantileEstimate:
    level: float
    value: float
    variance_est: float | None
    n_effective: float
    finite: bool


def _extract_yw(samples, w):
    if w is not None:
        return np.asarray(samples, dtype=float), np.asarray(w, dtype=float)
    if hasattr(samples, "y") and hasattr(samples, "w"):
        return np.asarray(samples.y, dtype=float), np.asarray(samples.w, dtype=float)
    if isinstance(samples, (list, tuple)) and samples and hasattr(samples[0], "y"):
        return (np.array([s.y for s in samples], dtype=float),
                np.array([s.w for s in samples], dtype=float))
    y, w = samples
    return np.asarray(y, dtype=float), np.asarray(w, dtype=float)


def is_quantile(samples, u: float, w=None) -> QuantileEstimate:
    """IS quantile estimate at level u from weighted samples.

    `samples` is either an object with .y/.w arrays (a WeightedSamples batch)
    or a (y, w) pair; alternatively pass y as `samples` and weights as `w`.
    """
    y, wt = _extract_yw(samples, w)
    if y.size == 0:
        raise EstimationError("empty sample")
    if not 0.0 <= u <= 1.0:
        raise DomainError("quantile level outside [0,1]")
    if np.any(wt < 0) or not np.all(np.isfinite(wt)):
        raise EstimationError("weights must be finite and non-negative")
    n = y.size
    total = float(wt.sum())
    n_eff = total * total / float(wt @ wt) if total > 0 else 0.0
    threshold = (1.0 - u) * n
    if not total > threshold:
        return QuantileEstimate(u, -np.inf, None, n_eff, False)

    order = np.argsort(-y, kind="stable")
    ys = y[order]
    ws = wt[order]
    # block boundaries of tied y values
    is_new = np.empty(n, dtype=bool)
    is_new[0] = True
    is_new[1:] = ys[1:] != ys[:-1]
    block_id = np.cumsum(is_new) - 1
    block_w = np.zeros(block_id[-1] + 1)
    np.add.at(block_w, block_id, ws)
    block_y = ys[is_new]
    cum = np.cumsum(block_w)
    k = int(np.searchsorted(cum, threshold, side="right"))
    # total > threshold guarantees a crossing block exists
    value = float(block_y[min(k, block_y.size - 1)])
    return QuantileEstimate(u, value, None, n_eff, True)


def crude_quantile(ys, u: float) -> float:
    """Empirical quantile: the IS estimator with unit weights."""
    y = np.asarray(ys, dtype=float)
    if y.size == 0:
        raise EstimationError("empty sample")
    return is_quantile(y, u, w=np.ones(y.size)).value


def interp_quantile(ys, u: float, w=None) -> float:
    """Smooth (interpolated) weighted quantile.

    Calibration targets use this instead of the defining estimator above:
    interpolation keeps the target strictly inside the sample hull, which the
    tilt root-finder requires. Midpoint plotting positions, linear between.
    """
    if w is None and (hasattr(ys, "y") or (
            isinstance(ys, (list, tuple)) and ys and hasattr(ys[0], "y"))):
        y, wt = _extract_yw(ys, None)
    else:
        y = np.asarray(ys, dtype=float).ravel()
        wt = None if w is None else np.asarray(w, dtype=float).ravel()
    if y.size == 0:
        raise EstimationError("empty sample")
    if not 0.0 <= u <= 1.0:
        raise DomainError("quantile level outside [0,1]")
    if wt is None:
        return float(np.quantile(y, u))
    total = float(wt.sum())
    if total <= 0:
        raise EstimationError("weights sum to zero")
    order = np.argsort(y, kind="stable")
    sorted_y = y[order]
    sorted_w = wt[order]
    pos = (np.cumsum(sorted_w) - 0.5 * sorted_w) / total
    return float(np.interp(u, pos, sorted_y))


def clt_variance(samples, qhat: float, u: float, gprime_at_q: float, w=None) -> float:
    """Plug-in asymptotic variance of the IS quantile estimator.

    (E[w^2 1{y > qhat}] - (1-u)^2) / gprime_at_q^2 with the expectation
    replaced by the sample mean; floored at 0 since sampling noise can push
    the numerator slightly negative.
    """
    if gprime_at_q <= 0:
        raise DomainError("density at the quantile must be positive")
    y, wt = _extract_yw(samples, w)
    m2 = float(np.mean(wt * wt * (y > qhat)))
    num = m2 - (1.0 - u) ** 2
    return max(num, 0.0) / gprime_at_q**2


def jensen_tail_bounds(samples, u: float, qhat: float, w=None) -> dict:
    """Lower bounds on the tail second moment E[w^2 1{y > qhat}].

    Two Jensen/Cauchy-Schwarz bounds: (1-u)^2 unconditionally, and
    (1-u)^2 / (1 - Gstar(qhat)) where Gstar is the sampling law of y,
    estimated by the unweighted empirical CDF. Returns the estimated moment,
    its standard error, and both bounds for diagnostic comparison.
    """
    y, wt = _extract_yw(samples, w)
    n = y.size
    tail = y > qhat
    terms = wt * wt * tail
    moment = float(terms.mean())
    se = float(terms.std(ddof=1) / np.sqrt(n)) if n > 1 else np.inf
    frac_above = float(tail.mean())
    bound_plain = (1.0 - u) ** 2
    bound_cond = bound_plain / frac_above if frac_above > 0 else np.inf
    return {
        "moment": moment,
        "se": se,
        "bound_plain": bound_plain,
        "bound_conditional": bound_cond,
    }
