"""Cheap regression stand-ins for the costly response map.

Six hypothesis families: least-squares linear and polynomial fits, support
vector regression with linear / polynomial / Gaussian kernels, and k-nearest
neighbors. A fitted predictor is pure: calling it moves no evaluation budget.
Selection is k-fold cross validation with squared loss, ties resolved to the
earlier (simpler) candidate.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np
from scipy.spatial.distance import pdist
from sklearn.neighbors import KNeighborsRegressor
from sklearn.svm import SVR

from .errors import ConfigError, SelectionError, TrainingError

LINEAR = "linear"
POLYNOMIAL = "polynomial"
SVM_LINEAR = "svm_linear"
SVM_POLYNOMIAL = "svm_polynomial"
SVM_GAUSSIAN = "svm_gaussian"
KNN = "knn"

_FAMILIES = (LINEAR, POLYNOMIAL, SVM_LINEAR, SVM_POLYNOMIAL, SVM_GAUSSIAN, KNN)
_SVM_FAMILIES = (SVM_LINEAR, SVM_POLYNOMIAL, SVM_GAUSSIAN)


@dataclass(frozen=True)
class HypothesisSpec:
    """One candidate regression class with its hyperparameters.

    Unset SVR hyperparameters (None) are resolved from the training data at
    fit time: epsilon = 0.1 * std(y), c_reg = max|y|, kernel_width = median
    pairwise distance of the inputs. These defaults are heuristics, not
    published values, and are flagged as such in reports.
    """

    family: str
    degree: int = 0
    n_neighbors: int = 0
    epsilon: float | None = None
    c_reg: float | None = None
    kernel_width: float | None = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ConfigError(f"unknown hypothesis family {self.family!r}")
        if self.family in (POLYNOMIAL, SVM_POLYNOMIAL) and self.degree < 2:
            raise ConfigError("polynomial families need degree >= 2")
        if self.family == KNN and self.n_neighbors < 1:
            raise ConfigError("knn needs n_neighbors >= 1")
        for label in ("epsilon", "c_reg", "kernel_width"):
            val = getattr(self, label)
            if val is not None and not val > 0.0:
                if label == "epsilon" and val == 0.0:
                    continue
                raise ConfigError(f"{label} must be positive when given")

    def label(self) -> str:
        if self.family in (POLYNOMIAL, SVM_POLYNOMIAL):
            return f"{self.family}({self.degree})"
        if self.family == KNN:
            return f"knn({self.n_neighbors})"
        return self.family


def linear() -> HypothesisSpec:
    return HypothesisSpec(LINEAR)


def polynomial(degree: int) -> HypothesisSpec:
    return HypothesisSpec(POLYNOMIAL, degree=int(degree))


def svm_linear(epsilon=None, c_reg=None) -> HypothesisSpec:
    return HypothesisSpec(SVM_LINEAR, epsilon=epsilon, c_reg=c_reg)


def svm_polynomial(degree: int, epsilon=None, c_reg=None) -> HypothesisSpec:
    return HypothesisSpec(SVM_POLYNOMIAL, degree=int(degree), epsilon=epsilon, c_reg=c_reg)


def svm_gaussian(kernel_width=None, epsilon=None, c_reg=None) -> HypothesisSpec:
    return HypothesisSpec(
        SVM_GAUSSIAN, kernel_width=kernel_width, epsilon=epsilon, c_reg=c_reg
    )


def knn(n_neighbors: int) -> HypothesisSpec:
    return HypothesisSpec(KNN, n_neighbors=int(n_neighbors))


@dataclass(frozen=True)
class TrainingSet:
    """Pivot pairs (x_i, y_i) used to fit a surrogate."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.asarray(self.y, dtype=float).ravel()
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise ConfigError("x must be (M, d) with one response per row")
        if x.shape[0] < 2:
            raise ConfigError("need at least two training pairs")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ConfigError("training data must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def size(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]


class Surrogate:
    """A fitted predictor ĥ. predict accepts (d,) or (n, d) like a model."""

    def __init__(self, spec, dim, predictor, training_mse, ridge_fallback=False,
                 details=None):
        self.spec = spec
        self.dim = dim
        self._predictor = predictor
        self.training_mse = float(training_mse)
        self.ridge_fallback = bool(ridge_fallback)
        self.details = dict(details or {})

    def predict(self, x):
        raw = np.asarray(x, dtype=float)
        if raw.ndim <= 1:
            if self.dim == 1 and raw.size != 1:
                return self._predictor(raw.reshape(-1, 1))
            arr = np.atleast_2d(raw)
            if arr.shape[1] != self.dim:
                raise ConfigError(f"expected dimension {self.dim}, got {arr.shape[1]}")
            return float(self._predictor(arr)[0])
        if raw.shape[1] != self.dim:
            raise ConfigError(f"expected dimension {self.dim}, got {raw.shape[1]}")
        return self._predictor(raw)


def _monomial_powers(dim: int, degree: int):
    powers = [(0,) * dim]
    for deg in range(1, degree + 1):
        for combo in combinations_with_replacement(range(dim), deg):
            e = [0] * dim
            for j in combo:
                e[j] += 1
            powers.append(tuple(e))
    return powers


def _design_matrix(x, powers):
    # per-dimension power tables built by cumulative multiplication, then
    # gathered per monomial: no pow() calls and no (n, P, d) temporary
    exps = np.asarray(powers, dtype=np.int64)
    n = x.shape[0]
    cols = np.ones((n, exps.shape[0]))
    for j in range(x.shape[1]):
        e = exps[:, j]
        top = int(e.max(initial=0))
        if top == 0:
            continue
        table = np.empty((n, top + 1))
        table[:, 0] = 1.0
        for k in range(1, top + 1):
            np.multiply(table[:, k - 1], x[:, j], out=table[:, k])
        cols *= table[:, e]
    return cols


def _fit_least_squares(spec, ts):
    degree = 1 if spec.family == LINEAR else spec.degree
    powers = _monomial_powers(ts.dim, degree)
    phi = _design_matrix(ts.x, powers)
    n_params = phi.shape[1]
    ridge = ts.size <= n_params
    coef = None
    if not ridge:
        coef, _, rank, _ = np.linalg.lstsq(phi, ts.y, rcond=None)
        if rank < n_params:
            ridge, coef = True, None
    if coef is None:
        gram = phi.T @ phi + 1e-8 * np.eye(n_params)
        try:
            coef = np.linalg.solve(gram, phi.T @ ts.y)
        except np.linalg.LinAlgError as exc:
            raise TrainingError(f"normal equations unsolvable for {spec.label()}") from exc
    mse = float(np.mean((phi @ coef - ts.y) ** 2))

    def predictor(xq, powers=powers, coef=coef):
        return _design_matrix(xq, powers) @ coef

    return Surrogate(spec, ts.dim, predictor, mse, ridge_fallback=ridge,
                     details={"coefficients": coef, "powers": powers})


def _median_pairwise_distance(x):
    # permutation-invariant: order rows lexicographically before striding
    order = np.lexsort(x.T[::-1])
    pts = x[order]
    if pts.shape[0] > 1000:
        stride = int(np.ceil(pts.shape[0] / 1000))
        pts = pts[::stride]
    d = pdist(pts)
    d = d[d > 0.0]
    if d.size == 0:
        return 1.0
    return float(np.median(d))


def _fit_svr(spec, ts):
    eps = 0.1 * float(np.std(ts.y)) if spec.epsilon is None else spec.epsilon
    c_reg = spec.c_reg
    if c_reg is None:
        c_reg = max(float(np.max(np.abs(ts.y))), 1e-6)
    if spec.family == SVM_LINEAR:
        est = SVR(kernel="linear", C=c_reg, epsilon=eps, tol=1e-7, max_iter=2_000_000)
    elif spec.family == SVM_POLYNOMIAL:
        est = SVR(kernel="poly", degree=spec.degree, gamma=1.0, coef0=1.0,
                  C=c_reg, epsilon=eps, tol=1e-7, max_iter=2_000_000)
    else:
        width = spec.kernel_width
        if width is None:
            width = _median_pairwise_distance(ts.x)
        est = SVR(kernel="rbf", gamma=1.0 / (2.0 * width * width),
                  C=c_reg, epsilon=eps, tol=1e-7, max_iter=2_000_000)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        est.fit(ts.x, ts.y)
    if getattr(est, "fit_status_", 0) != 0:
        raise TrainingError(f"SVR optimizer did not converge for {spec.label()}")
    mse = float(np.mean((est.predict(ts.x) - ts.y) ** 2))
    return Surrogate(spec, ts.dim, est.predict, mse,
                     details={"n_support": int(est.support_.size),
                              "epsilon": eps, "c_reg": c_reg})


def _fit_knn(spec, ts):
    if spec.n_neighbors > ts.size:
        raise TrainingError(
            f"knn({spec.n_neighbors}) needs at least that many training points")
    est = KNeighborsRegressor(n_neighbors=spec.n_neighbors)
    est.fit(ts.x, ts.y)
    mse = float(np.mean((est.predict(ts.x) - ts.y) ** 2))
    return Surrogate(spec, ts.dim, est.predict, mse)


def fit(spec: HypothesisSpec, training: TrainingSet) -> Surrogate:
    """Train one hypothesis class on the pivot pairs."""
    if spec.family in (LINEAR, POLYNOMIAL):
        return _fit_least_squares(spec, training)
    if spec.family in _SVM_FAMILIES:
        return _fit_svr(spec, training)
    return _fit_knn(spec, training)


@dataclass(frozen=True)
class CvEntry:
    spec: HypothesisSpec
    cv_mse: float
    failed: bool = False
    message: str = ""


def _fold_slices(m: int, k: int):
    """Contiguous folds; the last one absorbs any remainder."""
    base = m // k
    slices = []
    for i in range(k):
        stop = (i + 1) * base if i < k - 1 else m
        slices.append(slice(i * base, stop))
    return slices


def _cv_error(spec, training, k) -> CvEntry:
    losses = []
    for sl in _fold_slices(training.size, k):
        mask = np.ones(training.size, dtype=bool)
        mask[sl] = False
        try:
            part = TrainingSet(training.x[mask], training.y[mask])
            model = fit(spec, part)
            pred = model.predict(training.x[~mask])
        except Exception as exc:  # candidate excluded, selection continues
            return CvEntry(spec, np.nan, failed=True, message=str(exc))
        losses.append(float(np.mean((pred - training.y[~mask]) ** 2)))
    return CvEntry(spec, float(np.mean(losses)))


def _pick_winner(entries, y_var):
    live = [e for e in entries if not e.failed]
    if not live:
        raise SelectionError("every candidate failed cross validation")
    best = min(e.cv_mse for e in live)
    band = max(1e-9 * best, 1e-12 * max(y_var, 1.0))
    for e in live:
        if e.cv_mse <= best + band:
            return e.spec
    return live[0].spec  # unreachable; keeps the type checker honest


def kfold_select(candidates, training: TrainingSet, k: int):
    """Cross-validated pick among explicit candidates.

    Returns (winner, entries) where entries carry one CvEntry per candidate
    in the order given. Near-ties (relative band 1e-9, with a small absolute
    floor for exactly-interpolated data) go to the earlier candidate.
    """
    if not candidates:
        raise ConfigError("candidate list is empty")
    if not 2 <= k <= training.size:
        raise ConfigError("fold count must lie in [2, M]")
    entries = [_cv_error(spec, training, k) for spec in candidates]
    winner = _pick_winner(entries, float(np.var(training.y)))
    return winner, entries


def auto_select(training: TrainingSet, k: int = 10,
                max_degree: int = 8, max_neighbors: int = 50):
    """Walk each family's complexity ladder, stopping at the first CV
    increase, then pick the global minimizer.

    Ladder order: linear; polynomial degrees 2..max_degree; linear SVR;
    polynomial SVR degrees 2..max_degree; Gaussian SVR; k-NN with
    k = 1..max_neighbors. Returns (fitted surrogate, winner, entries).
    """
    if not 2 <= k <= training.size:
        raise ConfigError("fold count must lie in [2, M]")
    entries: list[CvEntry] = []

    def walk(make, grid):
        prev = np.inf
        for value in grid:
            entry = _cv_error(make(value), training, k)
            entries.append(entry)
            if entry.failed or entry.cv_mse > prev:
                break
            prev = entry.cv_mse

    entries.append(_cv_error(linear(), training, k))
    walk(polynomial, range(2, max_degree + 1))
    entries.append(_cv_error(svm_linear(), training, k))
    walk(svm_polynomial, range(2, max_degree + 1))
    entries.append(_cv_error(svm_gaussian(), training, k))
    walk(knn, range(1, min(max_neighbors, training.size) + 1))

    winner = _pick_winner(entries, float(np.var(training.y)))
    return fit(winner, training), winner, entries
