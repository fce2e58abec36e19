"""Black-box model interface and built-in case-study models.

A model bundles a base law F on R^d (cheap to sample, known density), a
costly response map h, and an evaluation counter that tracks every h call.
evaluate() accepts a single point (d,) or a batch (n, d) and is the only
place the counter moves; everything surrogate-driven stays off the ledger.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import ConfigError, NumericError


class BlackBoxModel:
    """Base class wiring the counter and array plumbing.

    Subclasses provide dim, _sample(rng, n), _h(x: (n,d)) -> (n,), and
    _log_density(x: (n,d)) -> (n,); support bounds default to all of R^d.
    """

    dim: int = 1
    name: str = "model"

    def __init__(self):
        self._count = 0
        self._lock = threading.Lock()
        self.support_low = np.full(self.dim, -np.inf)
        self.support_high = np.full(self.dim, np.inf)

    # -- sampling -----------------------------------------------------------
    def sample_base(self, rng: np.random.Generator, n: int | None = None):
        """Draw from F; returns (d,) for n=None, else (n, d)."""
        if n is None:
            return self._sample(rng, 1)[0]
        return self._sample(rng, int(n))

    def _as_batch(self, x):
        """Coerce input to (n, d); report whether the caller sent a batch.

        A 1-D array of length d is a single point. For d = 1 a 1-D array of
        any other length is read as a batch of scalar points.
        """
        raw = np.asarray(x, dtype=float)
        if raw.ndim <= 1:
            if self.dim == 1 and raw.size != 1:
                return raw.reshape(-1, 1), True
            arr = np.atleast_2d(raw)
            if arr.shape[1] != self.dim:
                raise ConfigError(f"expected dimension {self.dim}, got {arr.shape[1]}")
            return arr, False
        if raw.shape[1] != self.dim:
            raise ConfigError(f"expected dimension {self.dim}, got {raw.shape[1]}")
        return raw, True

    # -- costly response ----------------------------------------------------
    def evaluate(self, x):
        """Evaluate h, counting one call per input row."""
        arr, batched = self._as_batch(x)
        out = self._h(arr)
        with self._lock:
            self._count += arr.shape[0]
        return out if batched else float(out[0])

    def base_log_density(self, x):
        """log f(x) w.r.t. the model's reference measure; -inf off support."""
        arr, batched = self._as_batch(x)
        out = self._log_density(arr)
        return out if batched else float(out[0])

    # -- counter ------------------------------------------------------------
    @property
    def eval_count(self) -> int:
        return self._count

    def reset_count(self) -> None:
        with self._lock:
            self._count = 0


def eval_count(model) -> int:
    return model.eval_count


def reset_count(model) -> None:
    model.reset_count()


class _StdNormal1d(BlackBoxModel):
    dim = 1
    name = "normal_identity"

    def _sample(self, rng, n):
        return rng.standard_normal((n, 1))

    def _h(self, x):
        return x[:, 0].copy()

    def _log_density(self, x):
        return stats.norm.logpdf(x[:, 0])

    def response_quantile(self, u):
        return stats.norm.ppf(u)


class _BivariateSum(BlackBoxModel):
    """Centered bivariate normal, correlation 0.3, response = coordinate sum."""

    dim = 2
    name = "bivariate_sum"
    _rho = 0.3

    def __init__(self):
        super().__init__()
        self._chol = np.linalg.cholesky(np.array([[1.0, self._rho], [self._rho, 1.0]]))
        self._cov_inv = np.linalg.inv(self._chol @ self._chol.T)
        self._log_norm = -np.log(2 * np.pi) - 0.5 * np.linalg.slogdet(
            self._chol @ self._chol.T
        )[1]

    def _sample(self, rng, n):
        return rng.standard_normal((n, 2)) @ self._chol.T

    def _h(self, x):
        return x.sum(axis=1)

    def _log_density(self, x):
        q = np.einsum("ni,ij,nj->n", x, self._cov_inv, x)
        return self._log_norm - 0.5 * q

    def response_quantile(self, u):
        # the sum is normal with variance 2(1 + rho)
        return np.sqrt(2.0 * (1.0 + self._rho)) * stats.norm.ppf(u)


class _BivariateProduct(_BivariateSum):
    """Centered bivariate normal, correlation -0.3, response = product."""

    dim = 2
    name = "bivariate_product"
    _rho = -0.3

    # the product's distribution has no closed-form quantile
    response_quantile = None

    def _h(self, x):
        return x[:, 0] * x[:, 1]


class _SumOfSquares(BlackBoxModel):
    """Four iid standard normals, response = squared norm (chi-square, 4 df)."""

    dim = 4
    name = "sum_of_squares"

    def _sample(self, rng, n):
        return rng.standard_normal((n, 4))

    def _h(self, x):
        return (x * x).sum(axis=1)

    def _log_density(self, x):
        return stats.norm.logpdf(x).sum(axis=1)

    def response_quantile(self, u):
        return stats.chi2.ppf(u, df=4)


class _SineUniform(BlackBoxModel):
    dim = 1
    name = "sine_uniform"

    def __init__(self):
        super().__init__()
        self.support_low = np.array([0.0])
        self.support_high = np.array([1.0])

    def _sample(self, rng, n):
        return rng.random((n, 1))

    def _h(self, x):
        t = x[:, 0]
        return t * np.sin(2.5 * np.pi * t)

    def _log_density(self, x):
        t = x[:, 0]
        out = np.where((t >= 0.0) & (t <= 1.0), 0.0, -np.inf)
        return out


class _LogisticFromExp(BlackBoxModel):
    """x ~ Exp(1); h(x) = -log(exp(-x)/(1-exp(-x))), so h(X) ~ Logistic(0,1)."""

    dim = 1
    name = "logistic_from_exp"

    def __init__(self):
        super().__init__()
        self.support_low = np.array([0.0])

    def _sample(self, rng, n):
        return rng.exponential(1.0, (n, 1))

    def _h(self, x):
        t = x[:, 0]
        # log(expm1(t)) without overflow; for large t it equals t - exp(-t) + ...
        with np.errstate(divide="ignore"):
            out = np.where(t > 30.0, t, np.log(np.expm1(np.minimum(t, 30.0))))
        return out

    def _log_density(self, x):
        t = x[:, 0]
        return np.where(t >= 0.0, -t, -np.inf)

    def response_quantile(self, u):
        return stats.logistic.ppf(u)


_BUILTINS = {
    1: _StdNormal1d,
    2: _BivariateSum,
    3: _BivariateProduct,
    4: _SumOfSquares,
    5: _SineUniform,
    6: _LogisticFromExp,
}


def builtin_model(model_id: int) -> BlackBoxModel:
    """Instantiate one of the six built-in case-study models."""
    try:
        cls = _BUILTINS[int(model_id)]
    except (KeyError, ValueError):
        raise ConfigError(f"unknown builtin model id {model_id!r}") from None
    return cls()


@dataclass(frozen=True)
class AlmParams:
    """Balance-sheet parameters of the one-period insurance model.

    The premium and reserve load on expected claims and are always derived,
    never stored: premium = premium_loading * lam * claim_mean.
    """

    equity: float = 1000.0
    mu: float = 0.02
    sigma: float = 0.2
    dt: float = 1.0
    stock_fraction: float = 0.5
    lam: float = 5.0
    claim_mean: float = 10.0
    premium_loading: float = 1.03
    reserve_loading: float = 1.05

    def __post_init__(self):
        if not 0.0 <= self.stock_fraction <= 1.0:
            raise ConfigError("stock_fraction must lie in [0,1]")
        if self.sigma <= 0 or self.lam <= 0 or self.claim_mean <= 0:
            raise ConfigError("sigma, lam, claim_mean must be positive")

    @property
    def premium(self) -> float:
        return self.premium_loading * self.lam * self.claim_mean

    @property
    def reserve(self) -> float:
        return self.reserve_loading * self.lam * self.claim_mean


class AlmModel(BlackBoxModel):
    """One-period asset-liability loss.

    Factors are (v, z, c): v ~ Beta(2,2) drives the bond-book return
    1 + (v - 1/2)/10, z ~ N(0,1) drives the lognormal stock return, and c is
    the aggregate claim amount, compound Poisson with exponential severities.
    Loss = -(R_A - 1) * equity + c - premium.

    The law of c mixes an atom exp(-lam) at 0 with a series density
    sum_{n>=1} P(N=n) Gamma(c; n, claim_mean); base_log_density is taken
    w.r.t. Lebesgue plus a unit point mass at c = 0, truncating the series
    when the remaining Poisson tail is below 1e-12.
    """

    dim = 3
    name = "alm"

    def __init__(self, params: AlmParams | None = None):
        self.params = params or AlmParams()
        super().__init__()
        self.support_low = np.array([0.0, -np.inf, 0.0])
        self.support_high = np.array([1.0, np.inf, np.inf])
        p = self.params
        n_max = int(stats.poisson.isf(1e-12, p.lam))
        if n_max > 10_000:
            raise NumericError("claim-count series needs more than 1e4 terms")
        self._ns = np.arange(1, n_max + 1)
        self._log_pois = (
            self._ns * np.log(p.lam) - p.lam - special.gammaln(self._ns + 1)
        )

    def _sample(self, rng, n):
        p = self.params
        v = rng.beta(2.0, 2.0, n)
        z = rng.standard_normal(n)
        counts = rng.poisson(p.lam, n)
        c = rng.gamma(np.maximum(counts, 1), p.claim_mean, n)
        c[counts == 0] = 0.0
        return np.column_stack([v, z, c])

    def _h(self, x):
        p = self.params
        v, z, c = x[:, 0], x[:, 1], x[:, 2]
        stock = np.exp((p.mu - 0.5 * p.sigma**2) * p.dt + p.sigma * np.sqrt(p.dt) * z)
        r_a = p.stock_fraction * stock + (1.0 - p.stock_fraction) * (1.0 + (v - 0.5) / 10.0)
        return -(r_a - 1.0) * p.equity + c - p.premium

    def _claims_log_density(self, c):
        """Log density of the aggregate claim amount on (0, inf)."""
        p = self.params
        out = np.full(c.shape, -np.inf)
        pos = c > 0.0
        if np.any(pos):
            cp = c[pos]
            ns = self._ns
            # Gamma(c; shape n, scale claim_mean) log pdf, all shapes at once
            log_gamma = (
                (ns - 1.0)[None, :] * np.log(cp)[:, None]
                - cp[:, None] / p.claim_mean
                - ns[None, :] * np.log(p.claim_mean)
                - special.gammaln(ns)[None, :]
            )
            out[pos] = special.logsumexp(self._log_pois[None, :] + log_gamma, axis=1)
        out[c == 0.0] = -p.lam
        return out

    def _log_density(self, x):
        v, z, c = x[:, 0], x[:, 1], x[:, 2]
        lv = stats.beta.logpdf(v, 2.0, 2.0)
        lz = stats.norm.logpdf(z)
        lc = self._claims_log_density(c)
        return lv + lz + lc

    def claims_cdf(self, c):
        """CDF of the aggregate claim amount (atom at 0 included)."""
        p = self.params
        arr = np.atleast_1d(np.asarray(c, dtype=float))
        out = np.zeros(arr.shape)
        nonneg = arr >= 0.0
        weights = np.exp(self._log_pois)
        gam = np.zeros(arr.shape)
        for n, wn in zip(self._ns, weights):
            gam[nonneg] += wn * stats.gamma.cdf(arr[nonneg], a=n, scale=p.claim_mean)
        out[nonneg] = np.exp(-p.lam) + gam[nonneg]
        return out if np.asarray(c).ndim else float(out[0])

    def mean_loss(self) -> float:
        """Closed-form expected loss."""
        p = self.params
        er_a = p.stock_fraction * np.exp(p.mu * p.dt) + (1.0 - p.stock_fraction)
        return float(-(er_a - 1.0) * p.equity + p.lam * p.claim_mean - p.premium)


def alm_model(params: AlmParams | None = None) -> AlmModel:
    return AlmModel(params)
