"""Design-structure computation: precision and budget allocation, error bounds, baselines."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

from .gp import ModelSpec

# relative slack on budget comparisons so that scaling costs by an inexact
# float factor does not flip feasibility
COST_RTOL = 1e-12


@dataclass(frozen=True)
class CostModel:
    """Per-level cost C_i = c_high * ratio**i."""

    ratio: float
    c_high: float = 1.0
    c_low: float | None = None

    def __post_init__(self):
        if not self.ratio > 1:
            raise ValueError(f"cost ratio must exceed 1, got {self.ratio}")
        if not self.c_high > 0:
            raise ValueError(f"c_high must be positive, got {self.c_high}")
        low = self.c_high if self.c_low is None else self.c_low
        if not 0 < low <= self.c_high:
            raise ValueError(f"need 0 < c_low <= c_high, got c_low={low}")
        object.__setattr__(self, "c_low", float(low))

    def level_cost(self, i: int) -> float:
        return self.c_high * self.ratio**i

    def costs(self, K: int) -> tuple[float, ...]:
        return tuple(self.level_cost(i) for i in range(K + 1))

    @property
    def alpha(self) -> float:
        return math.log(self.ratio)


@dataclass(frozen=True)
class DesignStructure:
    counts: tuple[int, ...]
    costs_per_level: tuple[float, ...]
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != len(self.costs_per_level):
            raise ValueError("counts and per-level costs differ in length")
        if any(c < 0 for c in counts):
            raise ValueError(f"negative count in {counts}")
        if not any(c >= 1 for c in counts):
            raise ValueError("a structure needs at least one sample")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "costs_per_level", tuple(float(c) for c in self.costs_per_level))

    @classmethod
    def from_counts(cls, counts: Sequence[int], cost: CostModel, **params) -> "DesignStructure":
        return cls(tuple(counts), cost.costs(len(counts) - 1), params)

    @property
    def K(self) -> int:
        return len(self.counts) - 1

    @property
    def total_cost(self) -> float:
        return float(sum(n * c for n, c in zip(self.counts, self.costs_per_level)))

    @property
    def is_monotone(self) -> bool:
        return all(b <= a for a, b in zip(self.counts, self.counts[1:]))

    def to_dict(self) -> dict:
        return {
            "counts": list(self.counts),
            "costs_per_level": list(self.costs_per_level),
            "total_cost": self.total_cost,
            "params": dict(self.params),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def csv_row(self, label: str = "") -> str:
        """One sweep-table row: label, semicolon-joined counts, total cost."""
        return f"{label},{';'.join(map(str, self.counts))},{self.total_cost!r}"


def _within_budget(cost: float, budget: float) -> bool:
    return cost <= budget * (1.0 + COST_RTOL)


@dataclass(frozen=True)
class PrecisionProblem:
    epsilon: float
    model: ModelSpec
    cost: CostModel
    p_const: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.p_const > 0:
            raise ValueError("p_const must be positive")

    @property
    def dim(self) -> int:
        return self.model.dim

    @property
    def alpha(self) -> float:
        return math.log(self.cost.ratio)

    @property
    def beta(self) -> float:
        return -math.log(self.model.lambda_sq)


ETA_SEARCH_MODES = ("binary", "integer")


@dataclass(frozen=True)
class BudgetProblem:
    """Fixed budget B over levels 0..model.levels.

    ``eta_search`` is "binary" (bisection on a log scale over ``eta_range``)
    or "integer" (screen eta = 1..``eta_grid_max`` and keep the largest feasible).
    """

    budget: float
    model: ModelSpec
    cost: CostModel
    eta_range: tuple[float, float] = (1e-8, 1e8)
    enforce_monotone: bool = True
    eta_search: str = "binary"
    eta_grid_max: int = 100

    def __post_init__(self):
        lo, hi = self.eta_range
        if not 0 < lo < hi:
            raise ValueError(f"bad eta range {self.eta_range}")
        if self.eta_search not in ETA_SEARCH_MODES:
            raise ValueError(f"eta_search must be one of {ETA_SEARCH_MODES}")
        if self.budget < self.cost.level_cost(0) * (1 - COST_RTOL):
            raise ValueError("budget below cheapest sample")

    @property
    def K(self) -> int:
        return self.model.levels


# ---------------------------------------------------------------- bounds


def truncation_bound(model: ModelSpec, K: int) -> float:
    """C_l^2 lambda^(2K) sigma^2."""
    if K < 0:
        raise ValueError("K must be non-negative")
    return model.c_l**2 * model.lambda_sq**K * model.sigma_sq


def truncation_tail(model: ModelSpec, K: int) -> float:
    """Exact E||y_inf - y_K||^2: C_s sigma^2 lambda^(2(K+1)) / (1 - lambda^2)."""
    lam2 = model.lambda_sq
    return model.domain_volume * model.sigma_sq * lam2 ** (K + 1) / (1.0 - lam2)


def _rate(model: ModelSpec) -> float:
    return 2.0 * model.kernel.nu / model.dim


def interpolation_bound_surrogate(counts: Sequence[int] | DesignStructure, model: ModelSpec,
                                  p_const: float = 1.0) -> float:
    """sum_i p lambda^(2i) sigma^2 n_i^(-2nu/d); infinite if any level is empty."""
    if isinstance(counts, DesignStructure):
        counts = counts.counts
    e = _rate(model)
    total = 0.0
    for i, n in enumerate(counts):
        if n <= 0:
            return math.inf
        total += p_const * model.lambda_sq**i * model.sigma_sq * float(n) ** (-e)
    return total


# ------------------------------------------------------------ precision mode


def level_count_for_precision(prob: PrecisionProblem, k_max: int = 10_000) -> int:
    """Smallest K with C_l^2 lambda^(2K) sigma^2 <= eps^2 / 2."""
    target = prob.epsilon**2 / 2.0
    # scan instead of a ceil(log) so that exact powers do not round up
    for K in range(k_max + 1):
        if truncation_bound(prob.model, K) <= target * (1.0 + 1e-12):
            return K
    raise ValueError(f"no K <= {k_max} reaches epsilon={prob.epsilon}")


def allocation_ratios(model: ModelSpec, cost: CostModel, K: int) -> list[float]:
    """(a^i / lambda^(2i))^(-d/(d+2nu)) for i = 0..K."""
    d, nu = model.dim, model.kernel.nu
    x = d / (d + 2.0 * nu)
    return [(cost.ratio**i / model.lambda_sq**i) ** (-x) for i in range(K + 1)]


def allocation_normaliser(model: ModelSpec, cost: CostModel, K: int) -> float:
    """S = sum_i (a^i)^(2nu/(d+2nu)) (lambda^(2i))^(d/(d+2nu)).

    This is the normaliser under which the stationary point of the relaxed
    problem meets the error constraint with equality.
    """
    d, nu = model.dim, model.kernel.nu
    x = d / (d + 2.0 * nu)
    return sum(cost.ratio ** (i * (1.0 - x)) * model.lambda_sq ** (i * x) for i in range(K + 1))


def stationary_counts(prob: PrecisionProblem, K: int | None = None) -> list[float]:
    """Real-valued minimiser of sum n_i C_i subject to the surrogate equalling eps^2/2."""
    m = prob.model
    K = level_count_for_precision(prob) if K is None else K
    S = allocation_normaliser(m, prob.cost, K)
    scale = (prob.epsilon**2 / (2.0 * prob.p_const * m.sigma_sq * S)) ** (-m.dim / (2.0 * m.kernel.nu))
    return [scale * r for r in allocation_ratios(m, prob.cost, K)]


def _ceil(x: float) -> int:
    # guard against 3.0000000000000004 style roundoff
    r = round(x)
    return int(r) if abs(x - r) <= 1e-9 * max(1.0, abs(x)) else math.ceil(x)


def precision_allocation(prob: PrecisionProblem) -> DesignStructure:
    K = level_count_for_precision(prob)
    counts = [max(1, _ceil(v)) for v in stationary_counts(prob, K)]
    return DesignStructure.from_counts(counts, prob.cost, mode="precision", K=K,
                                       epsilon=prob.epsilon, p_const=prob.p_const)


# --------------------------------------------------------------- budget mode


def structure_for_eta(prob: BudgetProblem, eta: float) -> list[int]:
    """n_i = ceil((eta S / lambda^(2K))^(d/(2nu)) * ratio_i)."""
    m, K = prob.model, prob.K
    S = allocation_normaliser(m, prob.cost, K)
    scale = (eta * S / m.lambda_sq**K) ** (m.dim / (2.0 * m.kernel.nu))
    return [_ceil(scale * r) for r in allocation_ratios(m, prob.cost, K)]


def _cost(counts: Sequence[int], costs: Sequence[float]) -> float:
    return float(sum(n * c for n, c in zip(counts, costs)))


def search_eta(prob: BudgetProblem) -> tuple[float | None, list[int]]:
    """Largest eta whose ceiling structure fits the budget, and that structure.

    Returns (None, zeros) when even the smallest admissible eta is unaffordable.
    """
    costs = prob.cost.costs(prob.K)
    fits = lambda eta: _within_budget(_cost(structure_for_eta(prob, eta), costs), prob.budget)
    zeros = [0] * (prob.K + 1)

    if prob.eta_search == "integer":
        best = None
        for eta in range(1, prob.eta_grid_max + 1):
            if fits(eta):
                best = eta
            else:
                break  # cost is nondecreasing in eta
        return (None, zeros) if best is None else (float(best), structure_for_eta(prob, best))

    lo, hi = prob.eta_range
    if not fits(lo):
        return None, zeros
    if fits(hi):
        return hi, structure_for_eta(prob, hi)
    llo, lhi = math.log(lo), math.log(hi)
    while lhi - llo > 1e-9:
        mid = 0.5 * (llo + lhi)
        if fits(math.exp(mid)):
            llo = mid
        else:
            lhi = mid
    eta = math.exp(llo)
    return eta, structure_for_eta(prob, eta)


def greedy_objective(counts: Sequence[int], base: Sequence[int], model: ModelSpec) -> float:
    """G(N) = sum_i lambda^(2i) sigma^2 (n_i^(-2nu/d) - base_i^(-2nu/d))."""
    e = _rate(model)
    g = 0.0
    for i, (n, b) in enumerate(zip(counts, base)):
        if n == b:
            continue
        if n == 0:
            return math.inf
        term_b = math.inf if b == 0 else float(b) ** (-e)
        g += model.lambda_sq**i * model.sigma_sq * (float(n) ** (-e) - term_b)
    return g


def _marginal_gain(n: int, i: int, model: ModelSpec) -> float:
    if n == 0:
        return math.inf
    e = _rate(model)
    return model.lambda_sq**i * model.sigma_sq * (float(n) ** (-e) - float(n + 1) ** (-e))


def reallocate_greedy(base: DesignStructure | Sequence[int], residual: float, prob: BudgetProblem,
                      history: list | None = None) -> DesignStructure:
    """Spend ``residual`` one sample at a time on the level with the largest drop in G.

    Only affordable levels are candidates; with monotone enforcement a level
    is skipped when it would overtake the level below it. Ties go to the
    lowest level index. If ``history`` is given, the counts after every step
    are appended to it.
    """
    counts = list(base.counts if isinstance(base, DesignStructure) else base)
    costs = prob.cost.costs(prob.K)
    if len(counts) != len(costs):
        raise ValueError(f"base has {len(counts)} levels, problem has {len(costs)}")
    if residual < 0:
        raise ValueError("residual budget must be non-negative")
    left = float(residual)
    slack = prob.budget * COST_RTOL
    while True:
        best, best_gain = None, -1.0
        for i, c in enumerate(costs):
            if c > left + slack:
                continue
            if prob.enforce_monotone and i > 0 and counts[i] + 1 > counts[i - 1]:
                continue
            g = _marginal_gain(counts[i], i, prob.model)
            if g > best_gain:
                best, best_gain = i, g
        if best is None:
            break
        counts[best] += 1
        left -= costs[best]
        if history is not None:
            history.append(tuple(counts))
    return DesignStructure.from_counts(counts, prob.cost)


def budget_allocation(prob: BudgetProblem) -> DesignStructure:
    eta, base = search_eta(prob)
    costs = prob.cost.costs(prob.K)
    residual = prob.budget - _cost(base, costs)
    out = reallocate_greedy(base, max(residual, 0.0), prob)
    return DesignStructure(out.counts, out.costs_per_level, {
        "mode": "budget", "budget": prob.budget, "eta": eta,
        "base_counts": list(base), "eta_search": prob.eta_search,
        "enforce_monotone": prob.enforce_monotone,
    })


# ------------------------------------------------------------------ baselines


def single_level_bound(model: ModelSpec, k: int, n: int, p_const: float = 1.0) -> float:
    """Tail beyond level k plus the interpolation term for n samples of y_k."""
    if n <= 0:
        return math.inf
    var_k = model.sigma_sq * sum(model.lambda_sq**i for i in range(k + 1))
    return truncation_tail(model, k) + p_const * var_k * float(n) ** (-_rate(model))


def single_level_design(budget: float, model: ModelSpec, cost: CostModel, p_const: float = 1.0,
                        level: int | None = None) -> tuple[DesignStructure, int]:
    """All budget on one level; the level minimising the bound unless ``level`` is given."""
    K = model.levels
    if budget < cost.level_cost(0) * (1 - COST_RTOL):
        raise ValueError("budget below cheapest sample")
    per = [int(math.floor(budget / cost.level_cost(k) * (1 + COST_RTOL))) for k in range(K + 1)]
    if level is not None:
        if not 0 <= level <= K:
            raise ValueError(f"single-level override {level} outside 0..{K}")
        if per[level] < 1:
            raise ValueError(f"budget {budget} buys no sample at level {level}")
        chosen = level
    else:
        bounds = [single_level_bound(model, k, per[k], p_const) for k in range(K + 1)]
        chosen = min(range(K + 1), key=lambda k: (bounds[k], k))
    counts = [0] * (K + 1)
    counts[chosen] = per[chosen]
    s = DesignStructure.from_counts(counts, cost, mode="single", level=chosen)
    return s, chosen


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-12))


def geometric_mf_design(budget: float, K: int, cost: CostModel, decay_ratio: float) -> DesignStructure:
    """n_i = round(n_0 / r^i) with the largest n_0 that fits the budget and keeps n_K >= 1."""
    r = float(decay_ratio)
    if r < 1:
        raise ValueError("decay ratio must be >= 1")
    costs = cost.costs(K)

    def pattern(n0):
        return [_round_half_up(n0 / r**i) for i in range(K + 1)]

    best = None
    n0 = 1
    n0_max = int(budget // costs[0]) + 1
    while n0 <= n0_max:
        c = pattern(n0)
        if _within_budget(_cost(c, costs), budget):
            if c[-1] >= 1:
                best = c
        else:
            break  # cost is nondecreasing in n0
        n0 += 1
    if best is None:
        raise ValueError(f"budget {budget} cannot afford a geometric pattern with ratio {r}")
    return DesignStructure.from_counts(best, cost, mode="geometric", decay_ratio=r)


# ----------------------------------------------------------------- asymptotics


def mlgp_total_cost_curve(model: ModelSpec, cost: CostModel, epsilons: Sequence[float],
                          p_const: float = 1.0) -> list[tuple[float, float]]:
    out = []
    for eps in epsilons:
        prob = PrecisionProblem(eps, _with_levels(model, 0), cost, p_const)
        out.append((eps, precision_allocation(prob).total_cost))
    return out


def _with_levels(model: ModelSpec, K: int) -> ModelSpec:
    return ModelSpec(model.lambda_sq, model.sigma_sq, K, model.kernel, model.box)


def single_level_count(model: ModelSpec, k: int, eps: float, p_const: float = 1.0) -> int | None:
    """Fewest samples of y_k meeting tail + interpolation <= eps^2, or None if the tail alone exceeds it."""
    room = eps**2 - truncation_tail(model, k)
    if room <= 0:
        return None
    var_k = model.sigma_sq * sum(model.lambda_sq**i for i in range(k + 1))
    return max(1, _ceil((room / (p_const * var_k)) ** (-1.0 / _rate(model))))


def single_level_cost_curve(model: ModelSpec, cost: CostModel, epsilons: Sequence[float],
                            p_const: float = 1.0, k_extra: int = 20) -> list[tuple[float, float]]:
    """Minimal single-level cost per eps; math.inf marks an infeasible eps."""
    out = []
    for eps in epsilons:
        k_top = 0
        while truncation_tail(model, k_top) >= eps**2:
            k_top += 1
        best = math.inf
        for k in range(k_top + k_extra + 1):
            n = single_level_count(model, k, eps, p_const)
            if n is not None:
                best = min(best, n * cost.level_cost(k))
        out.append((eps, best))
    return out
