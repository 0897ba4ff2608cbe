"""Poisson trap field, obstacle potentials, and spatial distance queries.

The infinite-intensity Poisson process is realised only inside a bounding
box covering the string trajectory padded by the interaction radius plus a
safety margin; traps outside that box cannot touch the string, so the
restriction is exact in law for every survival functional.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, float))
        hi = np.atleast_1d(np.asarray(self.upper, float))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ValueError("box must have positive extent in every coordinate")

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def pad(self, amount: float) -> "Box":
        return Box(self.lower - amount, self.upper + amount)

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(n, self.d))


class GridIndex:
    """Spatial hash over a fixed point set for distance queries.

    Cells are cubes of side `cell`; a query of radius r visits the
    ceil(r/cell)-neighborhood of the query's cell, so fixed-radius lookups
    are O(1) expected at the densities simulated here.
    """

    def __init__(self, points: np.ndarray, cell: float):
        if cell <= 0:
            raise ValueError("cell size must be > 0")
        self.points = np.atleast_2d(np.asarray(points, float))
        self.cell = float(cell)
        self.d = self.points.shape[1] if self.points.size else 0
        self._table: dict[tuple, np.ndarray] = {}
        if self.points.size:
            keys = np.floor(self.points / self.cell).astype(np.int64)
            order = np.lexsort(keys.T[::-1])
            sorted_keys = keys[order]
            boundaries = np.nonzero(np.any(np.diff(sorted_keys, axis=0), axis=1))[0] + 1
            for grp in np.split(order, boundaries):
                self._table[tuple(keys[grp[0]])] = grp

    def __len__(self) -> int:
        return self.points.shape[0]

    def _cells_in_range(self, z: np.ndarray, reach: int):
        base = np.floor(z / self.cell).astype(np.int64)
        ranges = [range(b - reach, b + reach + 1) for b in base]
        out = [()]
        for r in ranges:
            out = [key + (i,) for key in out for i in r]
        return out

    def query_within(self, z: np.ndarray, r: float) -> np.ndarray:
        """Indices of all points with |p - z| <= r (closed ball)."""
        if len(self) == 0:
            return np.empty(0, dtype=np.int64)
        z = np.asarray(z, float)
        reach = int(math.ceil(r / self.cell))
        cand = [self._table[key] for key in self._cells_in_range(z, reach) if key in self._table]
        if not cand:
            return np.empty(0, dtype=np.int64)
        idx = np.concatenate(cand)
        dist2 = ((self.points[idx] - z) ** 2).sum(axis=1)
        return idx[dist2 <= r * r + 1e-300]

    def count_within(self, z: np.ndarray, r: float) -> int:
        return int(self.query_within(z, r).shape[0])

    def min_distance(self, z: np.ndarray) -> float:
        """Exact nearest-point distance via expanding shell search (inf if empty)."""
        if len(self) == 0:
            return math.inf
        z = np.asarray(z, float)
        base = np.floor(z / self.cell).astype(np.int64)
        best = math.inf
        shell = 0
        max_shell = self._max_shell(z)
        while shell <= max_shell:
            idx = self._shell_candidates(base, shell)
            if idx.size:
                dist = np.sqrt(((self.points[idx] - z) ** 2).sum(axis=1)).min()
                best = min(best, float(dist))
            # any point in an unvisited cell lies at distance >= shell * cell
            if best <= shell * self.cell:
                break
            shell += 1
        return best

    def _max_shell(self, z: np.ndarray) -> int:
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        extent = float(np.max(np.maximum(np.abs(z - lo), np.abs(hi - z))))
        return int(math.ceil(extent / self.cell)) + 1

    def _shell_candidates(self, base: np.ndarray, shell: int) -> np.ndarray:
        cand = []
        for key in self._cells_in_range(base * self.cell + self.cell / 2.0, shell):
            if max(abs(k - b) for k, b in zip(key, base)) != shell and shell > 0:
                continue
            if key in self._table:
                cand.append(self._table[key])
        if not cand:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(cand)


class PotentialKind(enum.Enum):
    HARD = "hard"
    SOFT_INDICATOR = "soft_indicator"


@dataclass(frozen=True)
class PotentialSpec:
    """Obstacle potential: hard kill inside the closed ball B(0, a), or a
    soft indicator of height `height` (Assumption C = height)."""

    kind: PotentialKind
    a: float
    height: float = 0.0

    def __post_init__(self):
        if not 0 < self.a <= 1:
            raise ValueError("support radius a must lie in (0, 1]")
        if self.kind is PotentialKind.SOFT_INDICATOR and self.height < 0:
            raise ValueError("soft indicator height must be >= 0")


@dataclass(frozen=True)
class PoissonEnvironment:
    points: np.ndarray
    box: Box
    nu: float
    index: GridIndex = field(compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points, float).reshape(-1, self.box.d)
        object.__setattr__(self, "points", pts)
        if pts.size and not np.all(self.box.contains(pts)):
            raise ValueError("all trap points must lie inside the box")

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def to_json(self) -> str:
        return json.dumps(
            {
                "nu": self.nu,
                "box": {"lower": self.box.lower.tolist(), "upper": self.box.upper.tolist()},
                "points": self.points.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str, cell: float) -> "PoissonEnvironment":
        obj = json.loads(text)
        box = Box(np.asarray(obj["box"]["lower"]), np.asarray(obj["box"]["upper"]))
        pts = np.asarray(obj["points"], float).reshape(-1, box.d)
        return cls(pts, box, float(obj["nu"]), GridIndex(pts, cell))


def default_cell(box: Box, a: float) -> float:
    return max(a, float(np.max(box.upper - box.lower)) / 128.0)


def sample_environment(
    box: Box, nu: float, rng: np.random.Generator, cell: float | None = None
) -> PoissonEnvironment:
    """Poisson(nu * vol) many i.i.d. uniform traps inside the box."""
    if nu < 0:
        raise ValueError("intensity must be >= 0")
    n = int(rng.poisson(nu * box.volume))
    points = box.sample_uniform(n, rng) if n else np.empty((0, box.d))
    if cell is None:
        cell = default_cell(box, a=0.25)
    return PoissonEnvironment(points, box, nu, GridIndex(points, cell))


def min_distance(z: np.ndarray, env: PoissonEnvironment) -> float:
    """Exact Euclidean distance from z to the nearest trap (+inf if none)."""
    return env.index.min_distance(np.asarray(z, float))


def potential_at(z: np.ndarray, env: PoissonEnvironment, spec: PotentialSpec) -> float:
    """V(z, eta) = sum_i H(z - xi_i); hard potentials return +inf on contact."""
    if spec.kind is PotentialKind.HARD:
        return math.inf if min_distance(z, env) <= spec.a else 0.0
    return spec.height * env.index.count_within(np.asarray(z, float), spec.a)


def contact_counts(points: np.ndarray, env: PoissonEnvironment, a: float) -> np.ndarray:
    """Number of traps within (closed) distance a of each query point.

    Computed trap-by-trap against the full query array; exact, and fast at
    the trap counts a padded trajectory box produces.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    counts = np.zeros(pts.shape[0], dtype=np.int64)
    for xi in env.points:
        dist2 = ((pts - xi[None, :]) ** 2).sum(axis=1)
        counts += dist2 <= a * a
    return counts


def any_contact(points: np.ndarray, env: PoissonEnvironment, a: float) -> bool:
    """True iff some query point lies within distance a of some trap."""
    pts = np.atleast_2d(np.asarray(points, float))
    for xi in env.points:
        dist2 = ((pts - xi[None, :]) ** 2).sum(axis=1)
        if np.any(dist2 <= a * a):
            return True
    return False


def path_functional(
    trajectory, env: PoissonEnvironment, spec: PotentialSpec, dt: float, dx: float
) -> float:
    """Composite quadrature of int_0^T int V(u(s,x)) dx ds for soft potentials.

    `trajectory` is a sequence of FieldSamples on uniform (dt, dx) grids.
    """
    if spec.kind is not PotentialKind.SOFT_INDICATOR:
        raise ValueError("path_functional handles soft potentials only")
    total = 0
    for samples in trajectory:
        values = samples.values if hasattr(samples, "values") else np.asarray(samples)
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite field values in trajectory")
        total += int(contact_counts(values, env, spec.a).sum())
    return spec.height * dt * dx * total
