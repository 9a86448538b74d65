"""Attaining measures, class membership checks, and a bundled separating instance."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .bounds import OrthantConstraint, check_dimensions, sharp_upper_order1
from .measures import (
    DiscreteMarginal,
    JointMeasure,
    ProductGrid,
    breakpoints,
    marginal_of,
)
from .numeric import TOL, Number, is_exact, to_number, tolerance_for, zero_like
from .transport import Envelope, PayoffGrid, canonical_kind, price_bound, support_grid

MEMBERSHIP_KINDS = {"Q": "exact", "Q0": "order0", "F1": "order1", "Q1": "band"}


@dataclass(frozen=True)
class Violation:
    kind: str
    location: object
    magnitude: Number


@dataclass
class MembershipReport:
    class_kind: str
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.passed


def _membership_kind(kind: str) -> str:
    if kind in ("exact", "order0", "order1", "band"):
        return kind
    return MEMBERSHIP_KINDS[canonical_kind(kind)]


def verify_membership(
    mu: JointMeasure,
    class_kind: str,
    marginals: Sequence[DiscreteMarginal] | None,
    constraints: Sequence[OrthantConstraint],
    tol: float = TOL,
    envelopes: Sequence[Envelope] | None = None,
) -> MembershipReport:
    """Check ``mu`` against the defining conditions of a class.

    ``class_kind`` is one of ``exact``, ``order0``, ``order1`` (or the class
    names ``Q``, ``Q0``, ``F1``); ``band`` / ``Q1`` needs ``envelopes``.
    Every broken condition is listed with the size of the breach.
    """
    kind = _membership_kind(class_kind)
    laws = envelopes if kind == "band" else marginals
    if laws is None:
        raise ValueError(f"membership in {kind} needs {'envelopes' if kind == 'band' else 'marginals'}")
    check_dimensions(list(laws), constraints)
    if mu.dimension != len(laws):
        raise ValueError(f"measure has dimension {mu.dimension}, instance has {len(laws)}")
    values = list(mu.masses)
    for law in laws:
        if kind == "band":
            values += [*law.lower.masses, *law.upper.masses]
        else:
            values += list(law.masses)
    for c in constraints:
        values += [c.pi_lower, c.pi_upper]
    tol = tolerance_for(*values, tol=tol)
    report = MembershipReport(kind)
    out = report.violations

    total = mu.total_mass
    if kind == "order0":
        if total > 1 + tol:
            out.append(Violation("mass", "total", total - 1))
    elif abs(total - 1) > tol:
        out.append(Violation("mass", "total", abs(total - 1)))

    for j in range(mu.dimension):
        mj = marginal_of(mu, j)
        if kind == "exact":
            target = laws[j]
            for t in breakpoints(mj, target):
                diff = abs(mj.mass_at(t) - target.mass_at(t))
                if diff > tol:
                    out.append(Violation("marginal_equality", (j, t), diff))
        elif kind == "order0":
            for t, w in mj.atoms:
                excess = w - laws[j].mass_at(t)
                if excess > tol:
                    out.append(Violation("marginal_order0", (j, t), excess))
        elif kind == "order1":
            for t in breakpoints(mj, laws[j]):
                excess = mj.cdf(t) - laws[j].cdf(t)
                if excess > tol:
                    out.append(Violation("marginal_order1", (j, t), excess))
        else:
            env = laws[j]
            for t in breakpoints(mj, env.lower, env.upper):
                above = mj.cdf(t) - env.lower.cdf(t)
                below = env.upper.cdf(t) - mj.cdf(t)
                if above > tol:
                    out.append(Violation("marginal_order1", (j, t), above))
                if below > tol:
                    out.append(Violation("marginal_order1", (j, t), below))

    for i, c in enumerate(constraints):
        mass = mu.cdf(c.corner)
        check_upper = kind in ("exact", "order0", "order1")
        check_lower = kind in ("exact", "band")
        if kind == "exact" and c.pi_lower == c.pi_upper:
            diff = abs(mass - c.pi_upper)
            if diff > tol:
                out.append(Violation("orthant_equality", (i, c.corner), diff))
            continue
        if check_upper and mass - c.pi_upper > tol:
            out.append(Violation("orthant_upper", (i, c.corner), mass - c.pi_upper))
        if check_lower and c.pi_lower - mass > tol:
            out.append(Violation("orthant_lower", (i, c.corner), c.pi_lower - mass))
    return report


def measure_from_cdf(axes: Sequence[Sequence], cdf: Callable[[tuple], Number]) -> JointMeasure:
    """Discrete measure on the product of ``axes`` whose cdf agrees with ``cdf`` there.

    Each point's mass is the rectangle increment of ``cdf`` over the cell
    reaching back to the previous axis point (inclusion-exclusion).
    """
    grid = ProductGrid(tuple(tuple(a) for a in axes))
    d = grid.dimension
    cache = {}

    def value(idx):
        if any(k < 0 for k in idx):
            return 0
        if idx not in cache:
            cache[idx] = cdf(tuple(grid.axes[j][k] for j, k in enumerate(idx)))
        return cache[idx]

    masses = []
    for idx in grid.indices():
        total = 0
        for eps in itertools.product((0, 1), repeat=d):
            sign = -1 if sum(eps) % 2 else 1
            total = total + sign * value(tuple(k - e for k, e in zip(idx, eps)))
        masses.append(total)
    sample = next(iter(cache.values()), 0)
    zero = zero_like(sample)
    return JointMeasure(grid, tuple(m + zero for m in masses))


def comonotone_coupling(laws: Sequence[DiscreteMarginal]) -> JointMeasure:
    """The coupling with cdf ``min_j F_j(y_j)`` on the product of the supports."""
    return measure_from_cdf([law.points for law in laws], lambda y: min(l.cdf(t) for l, t in zip(laws, y)))


def attain_order1(
    marginals: Sequence[DiscreteMarginal], constraints: Sequence[OrthantConstraint], x: Sequence
) -> JointMeasure:
    """A first-order class member whose cdf at ``x`` equals :func:`sharp_upper_order1`.

    Each axis gets a two-point law: mass ``c_j`` at ``x_j`` and the rest at a
    point ``r`` above every coordinate in sight. The laws are coupled
    comonotonically. ``c_j`` is ``F_j(x_j)`` when the marginal term attains the
    bound (preferred on ties) and the binding ``pi_upper`` otherwise.
    """
    x = tuple(x)
    check_dimensions(marginals, constraints, x)
    value = sharp_upper_order1(marginals, constraints, x)
    fx = [m.cdf(t) for m, t in zip(marginals, x)]
    coords = [p for m in marginals for p in m.points] + [c for con in constraints for c in con.corner] + list(x)
    r = max(coords) + 1
    if min(fx) == value:
        levels = fx
    else:
        levels = [value] * len(x)
    one = zero_like(value) + 1
    laws = [DiscreteMarginal(((t, c), (r, one - c))) for t, c in zip(x, levels)]
    return comonotone_coupling(laws)


def attain_order0(
    marginals: Sequence[DiscreteMarginal], constraints: Sequence[OrthantConstraint], x: Sequence
) -> JointMeasure:
    """A maximiser of ``mu((-inf, x])`` over the order-0 class, read off the transport LP."""
    x = tuple(x)
    check_dimensions(marginals, constraints, x)
    grid = support_grid(marginals)
    exact = all(m.exact for m in marginals) and all(
        is_exact(c.pi_upper) and all(is_exact(v) for v in c.corner) for c in constraints
    )
    payoff = PayoffGrid.indicator(grid, x, exact=exact)
    return price_bound("Q0", marginals, constraints, payoff).plan


_SEPARATING_ATOMS = (("0", "0.1"), ("1", "0.2"), ("2", "0.05"), ("3", "0.65"))
_SEPARATING_PI = (((0, 0), "0"), ((0, 2), "0.1"), ((2, 0), "0.1"), ((1, 1), "0.1"))
_SEPARATING_TABLE = (
    ("0", "0.05", "0.05", "0"),
    ("0.05", "0", "0", "0.15"),
    ("0.05", "0", "0", "0"),
    ("0", "0.15", "0", "0.5"),
)


def counterexample_instance(exact: bool = True):
    """Two-dimensional instance where the improved upper bound is not attained.

    Returns ``(marginals, constraints, table_measure)``: identical marginals on
    {0, 1, 2, 3}, four equality constraints, and one member of the constrained
    class. The bound at ``(0, 1)`` is 1/10 while every member has cdf at most
    1/20 there.
    """
    marginal = DiscreteMarginal.from_pairs(_SEPARATING_ATOMS, exact=exact, require_probability=True)
    constraints = tuple(
        OrthantConstraint.parse(corner, pi, pi, exact=exact) for corner, pi in _SEPARATING_PI
    )
    axis = marginal.points
    table = [[to_number(v, exact) for v in row] for row in _SEPARATING_TABLE]
    measure = JointMeasure.from_table((axis, axis), table)
    return (marginal, marginal), constraints, measure
