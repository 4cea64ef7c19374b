"""Model manifolds: products of Gaussian-weighted lines and flat circles.

A model is an ordered product of flat 1-D factors.  Each line factor
carries a quadratic weight exponent h_j(x) = (c_j/2) x^2 and is truncated
to [-L, L]; each circle factor is unweighted.  The total weight is
h(x) = sum_j (c_j/2) x_j^2 with density e^{2h} relative to Lebesgue
measure, so the density behaves as exp(c r^2) along every line tail.

Cells of the tensor grid are indexed by a per-axis position and a
per-axis extent bit (0 = vertex direction, 1 = edge direction); the
number of extent bits set is the form degree the cell supports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

LINE = "line"
CIRCLE = "circle"

#: boundary-condition modes for truncated line factors
RELATIVE = "relative"
ABSOLUTE = "absolute"


class InvalidSpecError(ValueError):
    """A factor or manifold description violates its invariants."""


class DegreeError(ValueError):
    """A form degree is outside 0..n."""


@dataclass(frozen=True)
class FactorSpec:
    """One flat 1-D factor of the product model.

    kind:          "line" or "circle"
    subdivisions:  number of grid intervals N (at least 4)
    c:             weight exponent; free sign on lines, must be 0 on circles
    truncation:    half-width L of the truncated line [-L, L]
    circumference: total length of the circle
    """

    kind: str
    subdivisions: int
    c: float = 0.0
    truncation: float = 0.0
    circumference: float = 0.0

    def __post_init__(self):
        if self.kind not in (LINE, CIRCLE):
            raise InvalidSpecError(f"unknown factor kind {self.kind!r}")
        if self.subdivisions < 4:
            raise InvalidSpecError("subdivisions must be at least 4")
        if self.kind == LINE:
            if self.truncation <= 0:
                raise InvalidSpecError("line factor needs truncation > 0")
        else:
            if self.circumference <= 0:
                raise InvalidSpecError("circle factor needs circumference > 0")
            if self.c != 0.0:
                raise InvalidSpecError("circle factors carry zero weight exponent")


def line(c: float, truncation: float, subdivisions: int) -> FactorSpec:
    """A weighted line factor truncated to [-truncation, truncation]."""
    return FactorSpec(LINE, subdivisions, c=c, truncation=truncation)


def circle(circumference: float, subdivisions: int) -> FactorSpec:
    """An unweighted flat circle factor."""
    return FactorSpec(CIRCLE, subdivisions, circumference=circumference)


def default_truncation(c: float, lam_request: float = 10.0) -> float:
    """Default truncation radius for a line of weight exponent c.

    Chosen so eigenforms up to the requested eigenvalue are exponentially
    small at the artificial boundary:  L = max(6, sqrt((lam + 10)/c^2)).
    """
    if c == 0.0:
        return 6.0
    return max(6.0, math.sqrt((lam_request + 10.0) / c**2))


@dataclass(frozen=True)
class ManifoldSpec:
    """Ordered product of factors; the factor order fixes the orientation."""

    factors: tuple[FactorSpec, ...]

    def __post_init__(self):
        if len(self.factors) < 1:
            raise InvalidSpecError("need at least one factor")

    @property
    def n(self) -> int:
        return len(self.factors)

    @property
    def weight_exponents(self) -> tuple[float, ...]:
        return tuple(f.c for f in self.factors)

    def line_axes(self) -> tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.factors) if f.kind == LINE)

    def circle_axes(self) -> tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.factors) if f.kind == CIRCLE)


def manifold(*factors: FactorSpec) -> ManifoldSpec:
    return ManifoldSpec(tuple(factors))


def product_manifold(a: ManifoldSpec, b: ManifoldSpec) -> ManifoldSpec:
    return ManifoldSpec(a.factors + b.factors)


@dataclass(frozen=True)
class Grid1D:
    """Equispaced nodes of one factor."""

    nodes: np.ndarray
    spacing: float
    periodic: bool


def build_factor_grid(f: FactorSpec) -> Grid1D:
    """Nodes of one factor: N+1 nodes on [-L, L] for a line (non-periodic),
    N nodes with wraparound for a circle."""
    n = f.subdivisions
    if f.kind == LINE:
        nodes = np.linspace(-f.truncation, f.truncation, n + 1)
        return Grid1D(nodes, 2.0 * f.truncation / n, periodic=False)
    spacing = f.circumference / n
    return Grid1D(spacing * np.arange(n), spacing, periodic=True)


@dataclass(frozen=True)
class WeightField:
    """The weight h(x) = sum_j (c_j/2) x_j^2 and its derived fields."""

    cs: tuple[float, ...]

    def h(self, x: np.ndarray) -> np.ndarray:
        """h at points; x has the axis coordinates along its last dimension."""
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum(np.asarray(self.cs) * x**2, axis=-1)

    def grad_h(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.asarray(self.cs) * x

    @property
    def hess_diag(self) -> np.ndarray:
        return np.asarray(self.cs)

    def density(self, x: np.ndarray) -> np.ndarray:
        """e^{2h} at points."""
        return np.exp(2.0 * self.h(x))

    def axis_h(self, axis: int, coords: np.ndarray) -> np.ndarray:
        """Per-axis share of h along one coordinate array."""
        return 0.5 * self.cs[axis] * np.asarray(coords, dtype=float) ** 2


def weight_fields(m: ManifoldSpec) -> WeightField:
    return WeightField(m.weight_exponents)


@dataclass(frozen=True, order=True)
class CellIndex:
    """One cell of the tensor grid: per-axis extent bits and positions."""

    extents: tuple[int, ...]
    positions: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.extents)


Pattern = tuple  # per-axis extent bits, e.g. (1, 0) for dx^1 on a 2-D model


def degree_patterns(n: int, p: int) -> list[tuple[int, ...]]:
    """All direction patterns of degree p, lexicographic in the axis subsets."""
    if not 0 <= p <= n:
        raise DegreeError(f"degree {p} out of range 0..{n}")
    out = []
    for axes in combinations(range(n), p):
        out.append(tuple(1 if a in axes else 0 for a in range(n)))
    return out


def axis_cell_count(f: FactorSpec, extent: int, mode: str) -> int:
    """Number of cells of one factor in the given direction and mode.

    Relative mode drops the two truncation-boundary vertices of a line.
    """
    n = f.subdivisions
    if extent == 1:
        return n
    if f.kind == CIRCLE:
        return n
    return n - 1 if mode == RELATIVE else n + 1


def enumerate_cells(m: ManifoldSpec, p: int, mode: str = ABSOLUTE) -> list[CellIndex]:
    """All p-cells, direction pattern major, position row-major minor.

    The order here is the coefficient layout used everywhere else.
    """
    cells = []
    for pattern in degree_patterns(m.n, p):
        shape = tuple(
            axis_cell_count(f, e, mode) for f, e in zip(m.factors, pattern)
        )
        for pos in np.ndindex(shape):
            cells.append(CellIndex(pattern, tuple(int(q) for q in pos)))
    return cells
