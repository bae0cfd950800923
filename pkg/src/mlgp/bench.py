"""Simulation studies: paired RMSE comparisons on synthetic multilevel truths, cost asymptotics."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .allocator import (BudgetProblem, CostModel, DesignStructure, budget_allocation, geometric_mf_design,
                        mlgp_total_cost_curve, single_level_cost_curve, single_level_design)
from .gp import KrigingPredictor, ModelSpec, sample_multilevel_truth
from .kernel import KernelSpec
from .lowdisc import DomainBox, build_nested_design

METHODS = ("mlgp", "geometric", "single", "nlhd")
SCHEMA_VERSION = 1

# Nested Latin hypercube in [0,1]^2: the first 2 and first 8 points are the upper levels.
_NLHD_32 = (
    (0.166670, 0.863640), (0.712120, 0.318180), (0.590910, 0.712120), (0.984850, 0.590910),
    (0.863640, 0.984850), (0.045455, 0.166670), (0.439390, 0.045455), (0.287880, 0.469700),
    (0.954550, 0.409090), (0.833330, 0.681820), (0.196970, 0.136360), (0.348480, 0.924240),
    (0.681820, 0.954550), (0.651520, 0.530300), (0.136360, 0.378790), (0.530300, 0.439390),
    (0.893940, 0.833330), (0.621210, 0.075758), (0.318180, 0.772730), (0.257580, 0.287880),
    (0.772730, 0.106060), (0.075758, 0.742420), (0.378790, 0.196970), (0.106060, 0.560610),
    (0.560610, 0.227270), (0.803030, 0.500000), (0.469700, 0.621210), (0.227270, 0.651520),
    (0.924240, 0.257580), (0.409090, 0.348480), (0.500000, 0.893940), (0.742420, 0.803030),
)


def nlhd_fixture() -> list[np.ndarray]:
    """Levels 0, 1, 2 of the fixed nested Latin hypercube (32, 8 and 2 points)."""
    pts = np.array(_NLHD_32)
    return [pts.copy(), pts[:8].copy(), pts[:2].copy()]


def rmse(truth, predictions) -> float:
    t = np.asarray(truth, dtype=float).ravel()
    p = np.asarray(predictions, dtype=float).ravel()
    if len(t) != len(p):
        raise ValueError(f"length mismatch: {len(t)} truths vs {len(p)} predictions")
    if len(t) == 0:
        raise ValueError("rmse of empty vectors")
    return float(np.sqrt(np.mean((t - p) ** 2)))


@dataclass(frozen=True)
class BenchConfig:
    """One simulation study.

    ``design_lambda_sq`` / ``design_nu`` feed the MLGP allocator only, so a
    misspecified design can be scored against the true model.
    """

    lambda_sq: float
    levels: int
    budget: float
    cost_ratio: float
    nu: float = 1.25
    sigma_sq: float = 1.0
    lengthscale: float = 1.0
    lower: tuple[float, ...] = (0.0,)
    upper: tuple[float, ...] = (1.0,)
    cost_base: float = 1.0
    decay_ratio: float | None = None
    methods: tuple[str, ...] = ("mlgp", "geometric", "single")
    n_test: int = 200
    replications: int = 30
    seed: int = 0
    p_const: float = 1.0
    single_level: int | None = None
    design_lambda_sq: float | None = None
    design_nu: float | None = None
    eta_search: str = "binary"
    enforce_monotone: bool = True

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in np.atleast_1d(self.lower)))
        object.__setattr__(self, "upper", tuple(float(v) for v in np.atleast_1d(self.upper)))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.n_test < 1:
            raise ValueError("n_test must be >= 1")
        if not self.methods:
            raise ValueError("methods must be non-empty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}; choose from {METHODS}")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("duplicate method")
        if "geometric" in self.methods and self.decay_ratio is None:
            raise ValueError("the geometric baseline needs decay_ratio")
        if "nlhd" in self.methods and (len(self.lower) != 2 or self.levels != 2):
            raise ValueError("the NLHD fixture is a 3-level design in two dimensions")
        # constructing these validates the remaining fields
        self.truth_model()
        self.design_model()
        self.cost_model()

    @property
    def box(self) -> DomainBox:
        return DomainBox(self.lower, self.upper)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def truth_model(self) -> ModelSpec:
        return ModelSpec(self.lambda_sq, self.sigma_sq, self.levels, KernelSpec(self.nu, self.lengthscale), self.box)

    def design_model(self) -> ModelSpec:
        lam2 = self.lambda_sq if self.design_lambda_sq is None else self.design_lambda_sq
        nu = self.nu if self.design_nu is None else self.design_nu
        return ModelSpec(lam2, self.sigma_sq, self.levels, KernelSpec(nu, self.lengthscale), self.box)

    def cost_model(self) -> CostModel:
        return CostModel(self.cost_ratio, self.cost_base)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MethodDesign:
    structure: DesignStructure
    levels: tuple[np.ndarray, ...]  # empty arrays at unused levels
    single_level: int | None = None  # set for single-level designs


def method_design(config: BenchConfig, method: str) -> MethodDesign:
    cost = config.cost_model()
    box = config.box
    K = config.levels
    if method == "mlgp":
        prob = BudgetProblem(config.budget, config.design_model(), cost,
                             enforce_monotone=config.enforce_monotone, eta_search=config.eta_search)
        s = budget_allocation(prob)
        d = build_nested_design(s.counts, box, allow_non_nested=not s.is_monotone)
        return MethodDesign(s, tuple(d.levels))
    if method == "geometric":
        s = geometric_mf_design(config.budget, K, cost, config.decay_ratio)
        return MethodDesign(s, tuple(build_nested_design(s.counts, box).levels))
    if method == "single":
        s, k = single_level_design(config.budget, config.design_model(), cost, config.p_const, config.single_level)
        d = build_nested_design(s.counts, box, allow_non_nested=True)
        return MethodDesign(s, tuple(d.levels), single_level=k)
    if method == "nlhd":
        lv = [box.scale(x) for x in nlhd_fixture()]
        s = DesignStructure.from_counts([len(x) for x in lv], cost, mode="nlhd")
        return MethodDesign(s, tuple(lv))
    raise ValueError(f"unknown method {method!r}")


def replication_seed(master: int, replication: int) -> int:
    """Counter-based child seed: SeedSequence([master, replication])."""
    ss = np.random.SeedSequence([int(master), int(replication)])
    return int(ss.generate_state(1, np.uint64)[0])


def _point_index(union: np.ndarray, pts: np.ndarray) -> np.ndarray:
    lookup = {tuple(p): j for j, p in enumerate(union)}
    return np.array([lookup[tuple(p)] for p in pts], dtype=int)


def _fit_and_predict(config: BenchConfig, md: MethodDesign, cumulative: np.ndarray,
                     union: np.ndarray, test_idx: np.ndarray) -> np.ndarray:
    """Emulator prediction of y_K at the test points from this method's observations."""
    kernel = KernelSpec(config.nu, config.lengthscale)
    test = union[test_idx]
    if md.single_level is not None:
        k = md.single_level
        ix = _point_index(union, md.levels[k])
        return KrigingPredictor(kernel, md.levels[k], cumulative[k, ix], level=k).predict(test)
    total = np.zeros(len(test))
    for i, X in enumerate(md.levels):
        if len(X) == 0:
            continue  # unobserved increment: prior mean zero
        ix = _point_index(union, X)
        below = cumulative[i - 1, ix] if i > 0 else 0.0
        total += KrigingPredictor(kernel, X, cumulative[i, ix] - below, level=i).predict(test)
    return total


def _replication(config: BenchConfig, designs: dict[str, MethodDesign], seed: int) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    box = config.box
    test = box.scale(rng.random((config.n_test, config.dim)))
    design_pts = [X for md in designs.values() for X in md.levels if len(X)]
    union = np.unique(np.vstack(design_pts), axis=0)
    union = np.vstack([union, test])
    test_idx = np.arange(len(union) - len(test), len(union))
    truth = sample_multilevel_truth(config.truth_model(), union, rng)
    y_top = truth.cumulative[-1, test_idx]
    return {m: rmse(y_top, _fit_and_predict(config, md, truth.cumulative, union, test_idx))
            for m, md in designs.items()}


def study_designs(config: BenchConfig) -> dict[str, MethodDesign]:
    return {m: method_design(config, m) for m in config.methods}


def run_replication(config: BenchConfig, method: str, seed: int) -> float:
    """RMSE of one method on the truth drawn from ``seed``.

    The truth is drawn at the union of every configured method's points, so
    the value equals that method's entry in a full study replication.
    """
    if method not in config.methods:
        raise ValueError(f"method {method!r} not in config.methods")
    return _replication(config, study_designs(config), seed)[method]


@dataclass
class BenchResult:
    config: BenchConfig
    structures: dict[str, DesignStructure]
    seeds: list[int]
    rmse: dict[str, np.ndarray]
    single_level: int | None = None

    @property
    def mean_rmse(self) -> dict[str, float]:
        return {m: float(np.mean(v)) for m, v in self.rmse.items()}

    def best_method(self) -> str:
        means = self.mean_rmse
        return min(self.config.methods, key=lambda m: means[m])

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "replication_seeds": list(self.seeds),
            "methods": {
                m: {
                    "structure": self.structures[m].to_dict(),
                    "total_cost": self.structures[m].total_cost,
                    "rmse": [float(v) for v in self.rmse[m]],
                    "mean_rmse": self.mean_rmse[m],
                }
                for m in self.config.methods
            },
            "single_level": self.single_level,
        }

    def write_json(self, stream) -> None:
        json.dump(self.to_dict(), stream, indent=2)
        stream.write("\n")

    def write_csv(self, stream) -> None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["method", "replication", "seed", "rmse", "total_cost", "structure"])
        for m in self.config.methods:
            s = self.structures[m]
            for r, (sd, v) in enumerate(zip(self.seeds, self.rmse[m])):
                w.writerow([m, r, sd, repr(float(v)), repr(s.total_cost), ";".join(map(str, s.counts))])


def run_study(config: BenchConfig, threads: int = 1) -> BenchResult:
    """All methods x replications on common truths; output independent of ``threads``."""
    designs = study_designs(config)
    seeds = [replication_seed(config.seed, r) for r in range(config.replications)]

    def one(sd):
        return _replication(config, designs, sd)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(one, seeds))
    else:
        rows = [one(sd) for sd in seeds]
    rm = {m: np.array([row[m] for row in rows]) for m in config.methods}
    single = designs["single"].single_level if "single" in designs else None
    return BenchResult(config, {m: md.structure for m, md in designs.items()}, seeds, rm, single)


def budget_sweep(config: BenchConfig, budgets, threads: int = 1) -> list[tuple[float, str, float]]:
    """(budget, method, mean_rmse) rows for a budget-sweep figure."""
    from dataclasses import replace

    rows = []
    for b in budgets:
        res = run_study(replace(config, budget=float(b)), threads)
        rows.extend((float(b), m, res.mean_rmse[m]) for m in config.methods)
    return rows


def write_sweep_csv(rows, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["budget", "method", "mean_rmse"])
    for b, m, v in rows:
        w.writerow([repr(b), m, repr(v)])


# ---------------------------------------------------------------- asymptotics


@dataclass
class AsymptoticsReport:
    epsilons: list[float]
    mlgp_cost: list[float]
    single_cost: list[float]
    mlgp_slope: float
    single_slope: float
    regime: str
    predicted_mlgp_slope: float
    predicted_single_slope: float
    alpha: float
    beta: float
    fit_mask: list[bool] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def write_csv(self, stream) -> None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["epsilon", "cost_mlgp", "cost_single"])
        for e, a, b in zip(self.epsilons, self.mlgp_cost, self.single_cost):
            w.writerow([repr(e), repr(a), repr(b)])


def classify_regime(model: ModelSpec, cost: CostModel) -> tuple[str, float]:
    """Regime label and the predicted MLGP cost exponent in eps."""
    alpha, beta = math.log(cost.ratio), -math.log(model.lambda_sq)
    d, nu = model.dim, model.kernel.nu
    lhs, rhs = 2 * alpha * nu, d * beta
    if math.isclose(lhs, rhs, rel_tol=1e-12):
        return "boundary", -d / nu
    if lhs < rhs:
        return "variance-dominated", -d / nu
    return "cost-dominated", -2 * alpha / beta


def fit_slope(x, y) -> float:
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


def asymptotics_study(model: ModelSpec, cost: CostModel, epsilons, p_const: float = 1.0,
                      min_cost: float = 0.0) -> AsymptoticsReport:
    """Cost curves and least-squares log-log slopes.

    Points whose MLGP cost is below ``min_cost`` (ceiling-rounding plateaus
    near eps ~ 1) or whose single-level cost is infinite are left out of the fits.
    """
    eps = sorted({float(e) for e in epsilons}, reverse=True)
    if len(eps) < 4:
        raise ValueError(f"need at least 4 distinct epsilon values, got {len(eps)}")
    ml = [c for _, c in mlgp_total_cost_curve(model, cost, eps, p_const)]
    sl = [c for _, c in single_level_cost_curve(model, cost, eps, p_const)]
    mask = [a >= min_cost and math.isfinite(b) for a, b in zip(ml, sl)]
    use = [i for i, ok in enumerate(mask) if ok]
    if len(use) < 4:
        raise ValueError(f"only {len(use)} usable epsilon values (need 4)")
    e_use = [eps[i] for i in use]
    regime, pred = classify_regime(model, cost)
    alpha, beta = math.log(cost.ratio), -math.log(model.lambda_sq)
    return AsymptoticsReport(
        epsilons=eps, mlgp_cost=ml, single_cost=sl,
        mlgp_slope=fit_slope(e_use, [ml[i] for i in use]),
        single_slope=fit_slope(e_use, [sl[i] for i in use]),
        regime=regime, predicted_mlgp_slope=pred,
        predicted_single_slope=-(model.dim / model.kernel.nu + 2 * alpha / beta),
        alpha=alpha, beta=beta, fit_mask=mask,
    )
