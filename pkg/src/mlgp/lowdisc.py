"""Halton points, nested designs, and quasi-uniformity diagnostics."""
from __future__ import annotations

import csv
import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

log = logging.getLogger(__name__)


def _first_primes(d: int) -> list[int]:
    primes: list[int] = []
    k = 2
    while len(primes) < d:
        if all(k % p for p in primes if p * p <= k):
            primes.append(k)
        k += 1
    return primes


def radical_inverse(i: int, base: int) -> float:
    inv, f = 0.0, 1.0 / base
    while i > 0:
        i, digit = divmod(i, base)
        inv += digit * f
        f /= base
    return inv


def halton_point(index: int, d: int) -> np.ndarray:
    """Point ``index`` (0-based) of the d-dimensional Halton sequence.

    Coordinate j is the radical inverse of ``index + 1`` in the j-th prime base,
    so the origin is never produced.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if index < 0:
        raise ValueError("index must be non-negative")
    return np.array([radical_inverse(index + 1, p) for p in _first_primes(d)])


def halton_points(n: int, d: int, start: int = 0) -> np.ndarray:
    """The n x d block of Halton points with indices start .. start+n-1."""
    bases = _first_primes(d)
    out = np.empty((n, d))
    for row, i in enumerate(range(start, start + n)):
        out[row] = [radical_inverse(i + 1, p) for p in bases]
    return out


@dataclass(frozen=True)
class DomainBox:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or not lo:
            raise ValueError("lower and upper must be non-empty and of equal length")
        if any(h <= l for l, h in zip(lo, hi)):
            raise ValueError(f"degenerate box: lower={lo} upper={hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, d: int) -> "DomainBox":
        return cls((0.0,) * d, (1.0,) * d)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    def scale(self, unit_points) -> np.ndarray:
        """Affine map from [0,1)^d into the box."""
        u = np.asarray(unit_points, dtype=float)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        return lo + u * (hi - lo)

    def contains(self, points) -> bool:
        x = np.asarray(points, dtype=float).reshape(-1, self.dim)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass
class NestedDesign:
    """Point sets X_0 ⊇ X_1 ⊇ ... ⊇ X_K, one (n_i, d) array per level."""

    levels: list[np.ndarray]
    box: DomainBox
    nested: bool = True
    counts: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        self.levels = [np.asarray(x, dtype=float).reshape(-1, self.box.dim) for x in self.levels]
        self.counts = tuple(len(x) for x in self.levels)

    @property
    def K(self) -> int:
        return len(self.levels) - 1

    def is_nested(self) -> bool:
        for coarse, fine in zip(self.levels, self.levels[1:]):
            have = {tuple(p) for p in coarse}
            if any(tuple(p) not in have for p in fine):
                return False
        return True

    def deepest_level(self) -> list[tuple[np.ndarray, int]]:
        """Each distinct point of X_0 with the deepest level that contains it."""
        rows = []
        for p in self.levels[0]:
            key = tuple(p)
            depth = 0
            for i in range(1, len(self.levels)):
                if any(tuple(q) == key for q in self.levels[i]):
                    depth = i
            rows.append((p, depth))
        return rows


def build_nested_design(counts: Sequence[int], box: DomainBox, allow_non_nested: bool = False) -> NestedDesign:
    """Level i gets the first ``counts[i]`` Halton points scaled into ``box``.

    Prefixes of one sequence are nested whenever counts are non-increasing.
    With ``allow_non_nested`` a level may be larger than the level below it;
    the sets are then still prefixes but inclusion fails for that pair.
    """
    counts = [int(c) for c in counts]
    if not counts:
        raise ValueError("empty structure")
    if any(c < 0 for c in counts):
        raise ValueError(f"negative count in {counts}")
    if not allow_non_nested:
        if any(c < 1 for c in counts):
            raise ValueError(f"nested designs need at least one point per level: {counts}")
        if any(b > a for a, b in zip(counts, counts[1:])):
            raise ValueError(f"counts must be non-increasing for nesting: {counts}")
    pts = box.scale(halton_points(max(counts), box.dim))
    return NestedDesign([pts[:c] for c in counts], box, nested=not allow_non_nested)


def default_grid_resolution(d: int) -> int:
    if d <= 2:
        return 101
    if d <= 4:
        return 21
    return 7


def fill_distance(points, box: DomainBox, grid_resolution: int | None = None) -> float:
    """Grid approximation of sup_x min_j ||x - x_j|| over the box.

    The supremum is taken over grid_resolution**d regular grid nodes (box
    corners included), so the value is a lower bound on the true fill distance.
    """
    x = np.asarray(points, dtype=float).reshape(-1, box.dim)
    if len(x) == 0:
        raise ValueError("fill distance of an empty point set")
    m = grid_resolution or default_grid_resolution(box.dim)
    if m < 2:
        raise ValueError("grid_resolution must be >= 2")
    axes = [np.linspace(lo, hi, m) for lo, hi in zip(box.lower, box.upper)]
    grid = np.array(list(itertools.product(*axes)))
    dist, _ = cKDTree(x).query(grid)
    return float(dist.max())


def separation_radius(points) -> float:
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if len(x) < 2:
        raise ValueError("separation radius needs at least two points")
    return float(pdist(x).min() / 2.0)


def quasi_uniformity_ratio(points, box: DomainBox, grid_resolution: int | None = None) -> float:
    h = fill_distance(points, box, grid_resolution)
    q = separation_radius(points)
    ratio = h / q if q > 0 else float("inf")
    log.debug("quasi-uniformity h=%g q=%g h/q=%g (n=%d)", h, q, ratio, len(np.atleast_1d(points)))
    return ratio


def write_design_csv(design: NestedDesign, stream) -> None:
    """One row per distinct point: coordinates then the deepest containing level."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow([f"x{j}" for j in range(design.box.dim)] + ["level"])
    if design.nested:
        rows = design.deepest_level()
    else:
        # non-nested: emit every level's points separately
        rows = [(p, i) for i, lvl in enumerate(design.levels) for p in lvl]
    for p, lvl in rows:
        w.writerow([repr(float(v)) for v in p] + [lvl])


def write_points_csv(points, stream, level: int | None = None) -> None:
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    w = csv.writer(stream, lineterminator="\n")
    w.writerow([f"x{j}" for j in range(x.shape[1])] + ([] if level is None else ["level"]))
    for p in x:
        w.writerow([repr(float(v)) for v in p] + ([] if level is None else [level]))
