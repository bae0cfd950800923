"""Noiseless kriging, the nested multilevel predictor, and GP path sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .kernel import KernelSpec, correlation_matrix, cross_correlation_batch
from .lowdisc import DomainBox, NestedDesign

JITTER_START = 1e-12
JITTER_MAX = 1e-6


class FactorizationError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    """y_i = y_{i-1} + delta_i with independent delta_i ~ GP(0, lambda^(2i) sigma^2 Phi)."""

    lambda_sq: float
    sigma_sq: float = 1.0
    levels: int = 0
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec(1.25))
    box: DomainBox = field(default_factory=lambda: DomainBox.unit(1))

    def __post_init__(self):
        if not 0 < self.lambda_sq < 1:
            raise ValueError(f"lambda_sq must lie in (0, 1), got {self.lambda_sq}")
        if not self.sigma_sq > 0:
            raise ValueError(f"sigma_sq must be positive, got {self.sigma_sq}")
        if self.levels < 0 or int(self.levels) != self.levels:
            raise ValueError(f"levels must be a non-negative integer, got {self.levels}")

    @property
    def dim(self) -> int:
        return self.box.dim

    def level_variance(self, i: int) -> float:
        return self.lambda_sq**i * self.sigma_sq

    @property
    def domain_volume(self) -> float:
        return self.box.volume

    @property
    def c_l(self) -> float:
        """sqrt(C_s) / (1 - lambda), C_s the domain volume."""
        return math.sqrt(self.domain_volume) / (1.0 - math.sqrt(self.lambda_sq))


def cholesky_jittered(R: np.ndarray, what: str = "correlation matrix") -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of R, retried with jitter*mean(diag)*I escalated on failure.

    Returns the factor and the relative jitter used (0.0 if none was needed).
    """
    try:
        return linalg.cholesky(R, lower=True, check_finite=False), 0.0
    except linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(R)))
    jitter = JITTER_START
    while jitter <= JITTER_MAX * (1 + 1e-9):
        try:
            L = linalg.cholesky(R + jitter * scale * np.eye(len(R)), lower=True, check_finite=False)
            return L, jitter
        except linalg.LinAlgError:
            jitter *= 10.0
    cond = np.linalg.cond(R)
    raise FactorizationError(f"{what}: Cholesky failed up to jitter {JITTER_MAX:g} (condition estimate {cond:.3e})")


def _queries(x, d: int) -> tuple[np.ndarray, bool]:
    q = np.asarray(x, dtype=float)
    if q.ndim == 0:
        return q.reshape(1, 1), True
    if q.ndim == 1:
        if d == 1:
            return q[:, None], False
        if q.shape[0] != d:
            raise ValueError(f"query of length {q.shape[0]} in dimension {d}")
        return q[None, :], True
    return q, False


class KrigingPredictor:
    """x -> a(x)^T R^{-1} Y for a fixed design; immutable after construction."""

    def __init__(self, kernel: KernelSpec, points, values, level: int | None = None):
        x = np.asarray(points, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.asarray(values, dtype=float).ravel()
        if len(x) == 0:
            raise ValueError("kriging needs at least one training point")
        if len(y) != len(x):
            raise ValueError(f"{len(y)} values for {len(x)} points")
        self.kernel = kernel
        self.points = x
        self.values = y
        self.level = level
        what = "correlation matrix" if level is None else f"level {level} correlation matrix"
        self.chol, self.jitter = cholesky_jittered(correlation_matrix(kernel, x), what)
        self.weights = linalg.cho_solve((self.chol, True), y, check_finite=False)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def predict(self, queries):
        q, single = _queries(queries, self.dim)
        out = cross_correlation_batch(self.kernel, q, self.points) @ self.weights
        return float(out[0]) if single else out

    __call__ = predict


def krige_fit(kernel: KernelSpec, points, values, level: int | None = None) -> KrigingPredictor:
    return KrigingPredictor(kernel, points, values, level)


def krige_predict(predictor: KrigingPredictor, queries):
    return predictor.predict(queries)


@dataclass(frozen=True)
class LevelData:
    """Observed increments y_i(X_i) - y_{i-1}(X_i) at the level-i design."""

    level: int
    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        vals = np.asarray(self.values, dtype=float).ravel()
        if pts.ndim == 1:
            pts = pts[:, None]
        if len(pts) != len(vals):
            raise ValueError(f"level {self.level}: {len(vals)} values for {len(pts)} points")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class MultilevelEmulator:
    model: ModelSpec
    predictors: tuple[KrigingPredictor, ...]

    def predict(self, queries):
        return multilevel_predict(self, queries)

    __call__ = predict


def multilevel_fit(model: ModelSpec, design: NestedDesign, data: list[LevelData]) -> MultilevelEmulator:
    """One kriging predictor per level on that level's increments."""
    if len(data) != len(design.levels):
        raise ValueError(f"{len(data)} data levels for a {len(design.levels)}-level design")
    if model.levels != design.K:
        raise ValueError(f"model has K={model.levels}, design has K={design.K}")
    preds = []
    for i, (X, ld) in enumerate(zip(design.levels, data)):
        if ld.level != i:
            raise ValueError(f"data for level {ld.level} given in slot {i}")
        if ld.points.shape != X.shape or not np.array_equal(ld.points, X):
            raise ValueError(f"level {i}: data points do not match the design")
        preds.append(KrigingPredictor(model.kernel, X, ld.values, level=i))
    return MultilevelEmulator(model, tuple(preds))


def multilevel_predict(emulator: MultilevelEmulator, queries):
    total = None
    for p in emulator.predictors:
        v = p.predict(queries)
        total = v if total is None else total + v
    return total


def increments_from_cumulative(cumulative_at_points: np.ndarray) -> np.ndarray:
    """Rows y_0, y_1, ... at fixed points -> rows delta_0, delta_1, ..."""
    y = np.asarray(cumulative_at_points, dtype=float)
    return np.diff(y, axis=0, prepend=np.zeros((1,) + y.shape[1:]))


def sample_gp_path(kernel: KernelSpec, variance: float, points, rng: np.random.Generator) -> np.ndarray:
    """One draw of a zero-mean GP with covariance variance * Phi at ``points``."""
    x = np.asarray(points, dtype=float)
    n = len(x)
    if variance < 0:
        raise ValueError("variance must be non-negative")
    if variance == 0:
        return np.zeros(n)
    L, _ = cholesky_jittered(correlation_matrix(kernel, x), "sampling covariance")
    return math.sqrt(variance) * (L @ rng.standard_normal(n))


@dataclass(frozen=True)
class TruthSample:
    """Increments delta_i and cumulative y_i (rows i = 0..K) at a fixed point set."""

    points: np.ndarray
    increments: np.ndarray
    cumulative: np.ndarray


def sample_multilevel_truth(model: ModelSpec, eval_points, rng: np.random.Generator) -> TruthSample:
    """Joint draw of every level at ``eval_points``.

    Equivalent to K+1 successive ``sample_gp_path`` calls on the same stream;
    the shared correlation matrix is factored once.
    """
    x = np.asarray(eval_points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    L, _ = cholesky_jittered(correlation_matrix(model.kernel, x), "truth covariance")
    incs = np.empty((model.levels + 1, len(x)))
    for i in range(model.levels + 1):
        incs[i] = math.sqrt(model.level_variance(i)) * (L @ rng.standard_normal(len(x)))
    return TruthSample(x, incs, np.cumsum(incs, axis=0))


def mc_l2_sq(values, box: DomainBox) -> float:
    """Monte-Carlo ||f||^2_{L2}: domain volume times the mean of f^2 at uniform points."""
    v = np.asarray(values, dtype=float)
    return box.volume * float(np.mean(v**2))
