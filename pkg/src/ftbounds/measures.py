"""Finitely supported marginals and joint measures on product grids."""

from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .numeric import Number, TOL, is_exact, to_number, tolerance_for


@dataclass(frozen=True)
class DiscreteMarginal:
    """A (sub-)probability on the real line with finitely many atoms.

    ``atoms`` is a tuple of ``(point, mass)`` pairs with strictly increasing
    points. Zero masses are allowed, which lets a marginal carry grid points it
    does not charge.
    """

    atoms: tuple[tuple[Number, Number], ...]
    require_probability: bool = False
    _cum: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        atoms = tuple((p, m) for p, m in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        for (p, _), (q, _) in zip(atoms, atoms[1:]):
            if not p < q:
                raise ValueError(f"atom points must be strictly increasing, got {p!r} then {q!r}")
        cum = []
        total = 0
        for _, m in atoms:
            if m < 0:
                raise ValueError(f"negative atom mass {m!r}")
            total = total + m
            cum.append(total)
        object.__setattr__(self, "_cum", tuple(cum))
        tol = tolerance_for(total)
        if total > 1 + tol:
            raise ValueError(f"total mass {total} exceeds 1")
        if self.require_probability and abs(total - 1) > tol:
            raise ValueError(f"total mass {total} is not 1")

    @classmethod
    def from_pairs(cls, pairs: Iterable, exact: bool = True, require_probability: bool = False):
        """Build from unsorted ``(point, mass)`` pairs; repeated points are merged."""
        merged: dict = {}
        for p, m in pairs:
            p, m = to_number(p, exact), to_number(m, exact)
            merged[p] = merged.get(p, 0) + m
        return cls(tuple(sorted(merged.items())), require_probability=require_probability)

    @classmethod
    def point_mass(cls, point, mass=1):
        return cls(((point, mass),))

    @property
    def points(self) -> tuple:
        return tuple(p for p, _ in self.atoms)

    @property
    def masses(self) -> tuple:
        return tuple(m for _, m in self.atoms)

    @property
    def total_mass(self):
        return self._cum[-1] if self._cum else 0

    @property
    def exact(self) -> bool:
        return all(is_exact(p) and is_exact(m) for p, m in self.atoms)

    def cdf(self, t) -> Number:
        k = bisect.bisect_right(self.points, t)
        return self._cum[k - 1] if k else self.total_mass * 0

    def mass_at(self, t) -> Number:
        k = bisect.bisect_left(self.points, t)
        if k < len(self.atoms) and self.atoms[k][0] == t:
            return self.atoms[k][1]
        return self.total_mass * 0

    def interval_mass(self, a, b) -> Number:
        """Mass of the half-open interval ``(a, b]``; zero when ``a >= b``.

        ``a=None`` stands for minus infinity.
        """
        if a is None:
            return self.cdf(b)
        if a >= b:
            return self.total_mass * 0
        return self.cdf(b) - self.cdf(a)

    def upper_tail(self, t) -> Number:
        """Mass of ``[t, inf)``."""
        k = bisect.bisect_left(self.points, t)
        below = self._cum[k - 1] if k else self.total_mass * 0
        return self.total_mass - below

    def scaled(self, c) -> "DiscreteMarginal":
        return DiscreteMarginal(tuple((p, m * c) for p, m in self.atoms))

    def __len__(self):
        return len(self.atoms)


def cdf_eval(m: DiscreteMarginal, t) -> Number:
    """Mass of ``(-inf, t]``."""
    return m.cdf(t)


@dataclass(frozen=True)
class ProductGrid:
    """Cartesian product of finitely many strictly increasing axes."""

    axes: tuple[tuple[Number, ...], ...]

    def __post_init__(self):
        axes = tuple(tuple(a) for a in self.axes)
        object.__setattr__(self, "axes", axes)
        if not axes:
            raise ValueError("a grid needs at least one axis")
        for axis in axes:
            if not axis:
                raise ValueError("grid axes must be nonempty")
            if any(not p < q for p, q in zip(axis, axis[1:])):
                raise ValueError("grid axes must be strictly increasing")

    @classmethod
    def from_points(cls, axes: Iterable[Iterable]) -> "ProductGrid":
        return cls(tuple(tuple(sorted(set(a))) for a in axes))

    @property
    def dimension(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @property
    def size(self) -> int:
        n = 1
        for a in self.axes:
            n *= len(a)
        return n

    def indices(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(len(a)) for a in self.axes))

    def points(self) -> Iterator[tuple]:
        return itertools.product(*self.axes)

    def flat_index(self, idx: Sequence[int]) -> int:
        k = 0
        for i, n in zip(idx, self.shape):
            k = k * n + i
        return k

    def locate(self, point: Sequence) -> int:
        """Flat index of a grid point; ``KeyError`` if the point is off-grid."""
        idx = []
        for axis, x in zip(self.axes, point):
            k = bisect.bisect_left(axis, x)
            if k == len(axis) or axis[k] != x:
                raise KeyError(f"{tuple(point)} is not on the grid")
            idx.append(k)
        return self.flat_index(idx)

    def contains_axes_of(self, other: "ProductGrid") -> bool:
        return other.dimension == self.dimension and all(
            set(b) <= set(a) for a, b in zip(self.axes, other.axes)
        )


def leq(x: Sequence, y: Sequence) -> bool:
    """Componentwise ``x <= y``."""
    return all(a <= b for a, b in zip(x, y))


@dataclass(frozen=True)
class JointMeasure:
    """Nonnegative masses on a product grid with total mass at most one.

    ``masses`` is flat, in the order of :meth:`ProductGrid.points`.
    """

    grid: ProductGrid
    masses: tuple

    def __post_init__(self):
        masses = tuple(self.masses)
        object.__setattr__(self, "masses", masses)
        if len(masses) != self.grid.size:
            raise ValueError(f"expected {self.grid.size} masses, got {len(masses)}")
        tol = tolerance_for(*masses)
        if any(m < -tol for m in masses):
            raise ValueError("joint masses must be nonnegative")
        if self.total_mass > 1 + tol:
            raise ValueError(f"total mass {self.total_mass} exceeds 1")

    @classmethod
    def from_dict(cls, weights: Mapping[tuple, Number], axes: Iterable[Iterable] | None = None):
        """Build from ``{point: mass}``; the grid is the product of seen coordinates."""
        pts = list(weights)
        if not pts:
            raise ValueError("need at least one point")
        d = len(pts[0])
        if axes is None:
            axes = [[p[j] for p in pts] for j in range(d)]
        grid = ProductGrid.from_points(axes)
        masses = [0] * grid.size
        for p, m in weights.items():
            masses[grid.locate(p)] += m
        zero = next(iter(weights.values())) * 0
        return cls(grid, tuple(m if m != 0 else zero for m in masses))

    @classmethod
    def from_table(cls, axes: Sequence[Sequence], table) -> "JointMeasure":
        """2-d convenience constructor: ``table[i][k]`` is the mass at ``(axes[0][i], axes[1][k])``."""
        grid = ProductGrid(tuple(tuple(a) for a in axes))
        return cls(grid, tuple(m for row in table for m in row))

    @classmethod
    def zero(cls, grid: ProductGrid, exact: bool = True) -> "JointMeasure":
        z = to_number(0, exact)
        return cls(grid, (z,) * grid.size)

    @property
    def dimension(self) -> int:
        return self.grid.dimension

    @property
    def total_mass(self):
        total = 0
        for m in self.masses:
            total = total + m
        return total

    def items(self) -> Iterator[tuple[tuple, Number]]:
        return zip(self.grid.points(), self.masses)

    def support(self) -> list[tuple[tuple, Number]]:
        return [(p, m) for p, m in self.items() if m != 0]

    def mass_at(self, point) -> Number:
        try:
            return self.masses[self.grid.locate(point)]
        except KeyError:
            return self.total_mass * 0

    def cdf(self, x: Sequence) -> Number:
        if len(x) != self.dimension:
            raise ValueError(f"point has dimension {len(x)}, measure has {self.dimension}")
        total = self.total_mass * 0
        for p, m in self.items():
            if m and leq(p, x):
                total = total + m
        return total

    def integrate(self, values: Sequence) -> Number:
        total = self.total_mass * 0
        for m, v in zip(self.masses, values):
            total = total + m * v
        return total


def joint_cdf_eval(mu: JointMeasure, x: Sequence) -> Number:
    """``mu((-inf, x])`` for the closed lower orthant at ``x``."""
    return mu.cdf(x)


def lower_orthant_mass(mu: JointMeasure, corner: Sequence) -> Number:
    return mu.cdf(corner)


def marginal_of(mu: JointMeasure, axis: int) -> DiscreteMarginal:
    """Projection of ``mu`` onto ``axis`` (0-based); zero-mass grid points are kept."""
    if not 0 <= axis < mu.dimension:
        raise IndexError(f"axis {axis} out of range for dimension {mu.dimension}")
    points = mu.grid.axes[axis]
    sums = [mu.total_mass * 0] * len(points)
    for idx, m in zip(mu.grid.indices(), mu.masses):
        sums[idx[axis]] = sums[idx[axis]] + m
    return DiscreteMarginal(tuple(zip(points, sums)))


def breakpoints(*marginals: DiscreteMarginal) -> list:
    return sorted(set().union(*(m.points for m in marginals)))


def dominates_order0(a: DiscreteMarginal, b: DiscreteMarginal, tol: float = TOL) -> bool:
    """True when ``b`` dominates ``a`` setwise, i.e. atom by atom.

    Mass of ``a`` at a point outside the support of ``b`` makes this false.
    """
    tol = tolerance_for(*a.masses, *b.masses, tol=tol)
    return all(m <= b.mass_at(p) + tol for p, m in a.atoms)


def dominates_order1(a: DiscreteMarginal, b: DiscreteMarginal, tol: float = TOL) -> bool:
    """True when the cdf of ``a`` lies below the cdf of ``b`` everywhere.

    Equivalently ``a`` is stochastically larger than ``b``; this is the
    convention used for the first-order relaxed class.
    """
    tol = tolerance_for(*a.masses, *b.masses, tol=tol)
    return all(a.cdf(t) <= b.cdf(t) + tol for t in breakpoints(a, b))
