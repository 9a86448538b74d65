"""Constrained transport problems and their superhedging duals.

Four classes of joint laws are supported, all living on a product grid:

``Q``
    probability measures with the given marginals and
    ``pi_lower <= mu(A) <= pi_upper`` on every constrained orthant ``A``.
``Q0``
    sub-probabilities whose marginals are dominated atom by atom and with
    ``mu(A) <= pi_upper``.
``Q1``
    probability measures whose marginal cdfs lie between two envelopes
    (``cdf(upper) <= cdf(mu_j) <= cdf(lower)``) and with ``mu(A) >= pi_lower``.
``F1``
    probability measures whose marginal cdfs lie below the target cdfs and
    with ``mu(A) <= pi_upper`` (the first-order relaxed Fréchet class).

Each class has a dual LP over hedges: per-axis step functions plus positions
in the orthant digitals. The primal maximises ``sum(payoff * mu)``, the dual
minimises the hedge price, and the two optima coincide.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .bounds import OrthantConstraint, check_dimensions
from .lp import EQ, GE, LE, LinearProgram, LpSolution, solve
from .measures import DiscreteMarginal, JointMeasure, ProductGrid, breakpoints, leq
from .numeric import TOL, Number, all_exact, is_exact, tolerance_for, zero_like

log = logging.getLogger(__name__)

CLASS_KINDS = ("Q", "Q0", "Q1", "F1")
DUAL_VARIANTS = {"Q": "Theta", "Q0": "Theta0", "Q1": "Theta1", "F1": "ThetaF1"}
CLASS_ALIASES = {
    "Q": "Q", "exact": "Q",
    "Q0": "Q0", "order0": "Q0",
    "Q1": "Q1", "Q1_band": "Q1", "band": "Q1",
    "F1": "F1", "order1": "F1",
}


class EmptyClassError(Exception):
    """The primal class is empty. For ``Q`` this means a uniform strong arbitrage exists."""

    def __init__(self, kind: str):
        self.kind = kind
        self.arbitrage = kind == "Q"
        msg = f"class {kind} is empty"
        if self.arbitrage:
            msg += " (a uniform strong arbitrage exists)"
        super().__init__(msg)


class DualityGapError(RuntimeError):
    pass


def canonical_kind(kind: str) -> str:
    try:
        return CLASS_ALIASES[kind]
    except KeyError:
        raise ValueError(f"unknown class {kind!r}; expected one of {sorted(CLASS_ALIASES)}") from None


@dataclass(frozen=True)
class Envelope:
    """Two probability laws bracketing a marginal in first-order dominance.

    ``lower`` is the stochastically smaller law (its cdf is on top), ``upper``
    the larger one.
    """

    lower: DiscreteMarginal
    upper: DiscreteMarginal

    def __post_init__(self):
        tol = tolerance_for(*self.lower.masses, *self.upper.masses)
        for m in (self.lower, self.upper):
            if abs(m.total_mass - 1) > tol:
                raise ValueError("envelopes must be probability measures")
        for t in breakpoints(self.lower, self.upper):
            if self.upper.cdf(t) > self.lower.cdf(t) + tol:
                raise ValueError(f"envelope order violation at {t}: cdf(upper) > cdf(lower)")


@dataclass(frozen=True)
class PayoffGrid:
    """Payoff values on a grid. ``corner`` is set for lower-orthant indicators."""

    grid: ProductGrid
    values: tuple
    corner: tuple | None = None

    def __post_init__(self):
        values = tuple(self.values)
        object.__setattr__(self, "values", values)
        if len(values) != self.grid.size:
            raise ValueError(f"expected {self.grid.size} payoff values, got {len(values)}")
        for v in values:
            if isinstance(v, float) and not math.isfinite(v):
                raise ValueError("payoff values must be finite")
        if self.corner is not None:
            object.__setattr__(self, "corner", tuple(self.corner))
            for p, v in zip(self.grid.points(), values):
                if v != (1 if leq(p, self.corner) else 0):
                    raise ValueError("indicator payoff inconsistent with its corner")

    @property
    def kind(self) -> str:
        return "grid_sampled" if self.corner is None else "lower_orthant_indicator"

    @classmethod
    def indicator(cls, grid: ProductGrid, corner: Sequence, exact: bool = True) -> "PayoffGrid":
        one, zero = (1, 0)
        if not exact:
            one, zero = 1.0, 0.0
        corner = tuple(corner)
        if len(corner) != grid.dimension:
            raise ValueError(f"corner has dimension {len(corner)}, grid has {grid.dimension}")
        values = tuple(one if leq(p, corner) else zero for p in grid.points())
        return cls(grid, values, corner)

    @classmethod
    def from_function(cls, grid: ProductGrid, fn: Callable[[tuple], Number]) -> "PayoffGrid":
        return cls(grid, tuple(fn(p) for p in grid.points()))

    @classmethod
    def constant(cls, grid: ProductGrid, value) -> "PayoffGrid":
        return cls(grid, (value,) * grid.size)

    def regrid(self, grid: ProductGrid) -> "PayoffGrid":
        """Re-express on ``grid``. Indicators are re-evaluated; sampled payoffs must already cover ``grid``."""
        if grid == self.grid:
            return self
        if self.corner is not None:
            exact = all_exact(self.values)
            return PayoffGrid.indicator(grid, self.corner, exact=exact)
        return PayoffGrid(grid, tuple(self.values[self.grid.locate(p)] for p in grid.points()))


@dataclass(frozen=True)
class HedgePortfolio:
    """A superhedge: per-axis step functions plus orthant digital positions.

    ``f[j][k]`` (and ``g[j][k]`` for the first-order variants) is the value at
    ``axes[j][k]``; ``a[i]`` is the position in the digital on ``corners[i]``.
    The hedge pays ``sum_j f_j(x_j) - sum_j g_j(x_j) + sum_i a_i 1[x <= corner_i]``.
    """

    variant: str
    axes: tuple
    f: tuple
    a: tuple
    corners: tuple
    price: Number
    g: tuple | None = None

    def _axis_value(self, table, j, t):
        axis = self.axes[j]
        for k, p in enumerate(axis):
            if p == t:
                return table[j][k]
        raise KeyError(f"{t} is not an axis point of coordinate {j}")

    def value_at(self, point: Sequence) -> Number:
        total = zero_like(self.price)
        for j, t in enumerate(point):
            total = total + self._axis_value(self.f, j, t)
            if self.g is not None:
                total = total - self._axis_value(self.g, j, t)
        for a, c in zip(self.a, self.corners):
            if a and leq(point, c):
                total = total + a
        return total

    def shortfall(self, payoff: PayoffGrid) -> Number:
        """Largest ``payoff(x) - hedge(x)`` over the payoff grid (<= 0 means domination)."""
        worst = None
        for p, v in zip(payoff.grid.points(), payoff.values):
            gap = v - self.value_at(p)
            if worst is None or gap > worst:
                worst = gap
        return worst

    def dominates(self, payoff: PayoffGrid, tol: float = TOL) -> bool:
        tol = tolerance_for(self.price, *payoff.values, tol=tol)
        return self.shortfall(payoff) <= tol

    def sign_violations(self, tol: float = TOL) -> list[str]:
        """Sign and monotonicity rules of the hedge's variant that are broken."""
        tol = tolerance_for(self.price, tol=tol)
        out = []
        if self.variant == "Theta0":
            if any(v < -tol for row in self.f for v in row):
                out.append("negative marginal position")
            if any(a < -tol for a in self.a):
                out.append("negative digital position")
        elif self.variant in ("Theta1", "ThetaF1"):
            tables = [("f", self.f)] + ([("g", self.g)] if self.g is not None else [])
            for name, table in tables:
                for j, row in enumerate(table):
                    if any(q < p - tol for p, q in zip(row, row[1:])):
                        out.append(f"{name}_{j} not nondecreasing")
            if self.variant == "Theta1" and any(a > tol for a in self.a):
                out.append("positive digital position")
            if self.variant == "ThetaF1" and any(a < -tol for a in self.a):
                out.append("negative digital position")
        return out

    def positions(self) -> list[dict]:
        """Nonzero holdings, for reports."""
        out = []
        for name, table in (("f", self.f), ("g", self.g)):
            if table is None:
                continue
            for j, row in enumerate(table):
                for t, v in zip(self.axes[j], row):
                    if v:
                        out.append({"kind": name, "axis": j, "point": t, "value": v})
        for i, (a, c) in enumerate(zip(self.a, self.corners)):
            if a:
                out.append({"kind": "a", "constraint": i, "corner": c, "value": a})
        return out


@dataclass
class PriceResult:
    kind: str
    value: Number
    primal_value: Number
    dual_value: Number
    plan: JointMeasure
    hedge: HedgePortfolio


@dataclass
class ArbitrageReport:
    arbitrage_free: bool
    witness: JointMeasure | None = None
    portfolio: HedgePortfolio | None = None


# ---------------------------------------------------------------- grids


def support_grid(marginals: Sequence[DiscreteMarginal]) -> ProductGrid:
    return ProductGrid(tuple(m.points for m in marginals))


def band_grid(envelopes: Sequence[Envelope]) -> ProductGrid:
    return ProductGrid.from_points([breakpoints(e.lower, e.upper) for e in envelopes])


def order1_grid(marginals: Sequence[DiscreteMarginal], constraints=(), points=()) -> ProductGrid:
    """Marginal supports plus one point above everything else on every axis.

    The extra point lets mass escape all constrained orthants, which keeps the
    first-order class nonempty.
    """
    coords = [p for m in marginals for p in m.points]
    coords += [c for con in constraints for c in con.corner]
    coords += [c for x in points for c in x]
    top = max(coords) + 1
    return ProductGrid.from_points([list(m.points) + [top] for m in marginals])


def _check_grid(grid: ProductGrid, point_sets: Sequence[Sequence]):
    if grid.dimension != len(point_sets):
        raise ValueError(f"grid has dimension {grid.dimension}, expected {len(point_sets)}")
    for j, pts in enumerate(point_sets):
        axis = set(grid.axes[j])
        missing = [p for p in pts if p not in axis]
        if missing:
            raise ValueError(f"grid/marginal mismatch on axis {j}: atoms {missing} are off the grid")


class _GridIndex:
    """Precomputed incidence structure of a grid."""

    def __init__(self, grid: ProductGrid):
        self.grid = grid
        self.idx = list(grid.indices())
        self.points = list(grid.points())

    def axis_members(self, j, k):
        return [n for n, idx in enumerate(self.idx) if idx[j] == k]

    def orthant(self, corner):
        return [1 if leq(p, corner) else 0 for p in self.points]

    def cdf_row(self, j, k):
        return [1 if idx[j] <= k else 0 for idx in self.idx]


def _num(exact):
    return (lambda v: v) if exact else float


# ---------------------------------------------------------------- primal


def build_primal(
    kind: str,
    marginals: Sequence[DiscreteMarginal] | None,
    constraints: Sequence[OrthantConstraint],
    payoff: PayoffGrid,
    envelopes: Sequence[Envelope] | None = None,
) -> LinearProgram:
    """LP over joint masses at the points of ``payoff.grid`` (in grid order).

    For ``Q1`` the marginals are ignored and ``envelopes`` are required.
    """
    kind = canonical_kind(kind)
    grid = payoff.grid
    laws = _laws_for(kind, marginals, envelopes)
    check_dimensions(laws, constraints)
    _check_grid(grid, _grid_laws(kind, marginals, envelopes))
    gi = _GridIndex(grid)
    n = grid.size
    lp = LinearProgram(list(payoff.values), [], "max", row_labels=[], var_labels=[("mu", p) for p in gi.points])

    if kind in ("Q", "Q0"):
        rel = EQ if kind == "Q" else LE
        for j, m in enumerate(marginals):
            for k, t in enumerate(grid.axes[j]):
                row = [0] * n
                for v in gi.axis_members(j, k):
                    row[v] = 1
                lp.add_row(row, rel, m.mass_at(t), ("marginal", j, t))
    else:
        lp.add_row([1] * n, EQ, 1, ("total",))
        for j in range(grid.dimension):
            axis = grid.axes[j]
            for k, t in enumerate(axis[:-1]):
                row = gi.cdf_row(j, k)
                if kind == "Q1":
                    lp.add_row(row, LE, envelopes[j].lower.cdf(t), ("cdf_lower", j, t))
                    lp.add_row(row, GE, envelopes[j].upper.cdf(t), ("cdf_upper", j, t))
                else:
                    lp.add_row(row, LE, marginals[j].cdf(t), ("cdf", j, t))

    for i, c in enumerate(constraints):
        row = gi.orthant(c.corner)
        if kind in ("Q", "Q0", "F1"):
            lp.add_row(row, LE, c.pi_upper, ("orthant_upper", i))
        if kind in ("Q", "Q1"):
            lp.add_row(row, GE, c.pi_lower, ("orthant_lower", i))
    return lp


def _laws_for(kind, marginals, envelopes):
    if kind == "Q1":
        if envelopes is None:
            raise ValueError("class Q1 needs envelopes")
        return list(envelopes)
    if marginals is None:
        raise ValueError(f"class {kind} needs marginals")
    return list(marginals)


def _grid_laws(kind, marginals, envelopes):
    """Charged points that every axis of the grid must contain."""
    if kind == "Q1":
        return [[p for law in (e.lower, e.upper) for p, w in law.atoms if w] for e in envelopes]
    return [[p for p, w in m.atoms if w] for m in marginals]


# ---------------------------------------------------------------- dual


def build_dual(
    variant: str,
    marginals: Sequence[DiscreteMarginal] | None,
    constraints: Sequence[OrthantConstraint],
    payoff: PayoffGrid,
    envelopes: Sequence[Envelope] | None = None,
) -> LinearProgram:
    """Superhedging LP: minimise the hedge price subject to domination at every grid point.

    Variable layout (see ``var_labels``):

    * ``Theta``/``Theta0``: ``("f", j, k)`` is the value of ``f_j`` at the k-th
      axis point; ``Theta`` splits digital positions into ``("a+", i)`` and
      ``("a-", i)`` priced at ``pi_upper`` and ``pi_lower``.
    * ``Theta1``/``ThetaF1``: a free constant ``("base",)`` plus nonnegative
      increments ``("df", j, k)``/``("dg", j, k)`` of the nondecreasing
      functions at the k-th axis point (k >= 1); digital positions ``("a", i)``.
    """
    variant = {"Q": "Theta", "Q0": "Theta0", "Q1": "Theta1", "F1": "ThetaF1"}.get(variant, variant)
    kind = {v: k for k, v in DUAL_VARIANTS.items()}.get(variant)
    if kind is None:
        raise ValueError(f"unknown dual variant {variant!r}")
    grid = payoff.grid
    laws = _laws_for(kind, marginals, envelopes)
    check_dimensions(laws, constraints)
    _check_grid(grid, _grid_laws(kind, marginals, envelopes))
    gi = _GridIndex(grid)
    d = grid.dimension
    ninf = -math.inf

    labels, cost, lower, upper = [], [], [], []

    def var(label, c, lo=0, hi=math.inf):
        labels.append(label)
        cost.append(c)
        lower.append(lo)
        upper.append(hi)
        return len(labels) - 1

    # per grid point: list of (var index, coefficient)
    terms: list[list] = [[] for _ in gi.points]

    if variant in ("Theta", "Theta0"):
        for j in range(d):
            for k, t in enumerate(grid.axes[j]):
                v = var(("f", j, k), marginals[j].mass_at(t), ninf if variant == "Theta" else 0)
                for n in gi.axis_members(j, k):
                    terms[n].append((v, 1))
        for i, c in enumerate(constraints):
            members = [n for n, x in enumerate(gi.orthant(c.corner)) if x]
            if variant == "Theta":
                vp = var(("a+", i), c.pi_upper)
                vm = var(("a-", i), -c.pi_lower)
                for n in members:
                    terms[n] += [(vp, 1), (vm, -1)]
            else:
                v = var(("a", i), c.pi_upper)
                for n in members:
                    terms[n].append((v, 1))
    else:
        base = var(("base",), 1, ninf)
        for n in range(len(gi.points)):
            terms[n].append((base, 1))
        for j in range(d):
            axis = grid.axes[j]
            for k in range(1, len(axis)):
                t = axis[k]
                members = [n for n, idx in enumerate(gi.idx) if idx[j] >= k]
                if variant == "Theta1":
                    vf = var(("df", j, k), envelopes[j].upper.upper_tail(t))
                    for n in members:
                        terms[n].append((vf, 1))
                    g_law = envelopes[j].lower
                else:
                    g_law = marginals[j]
                vg = var(("dg", j, k), -g_law.upper_tail(t))
                for n in members:
                    terms[n].append((vg, -1))
        for i, c in enumerate(constraints):
            members = [n for n, x in enumerate(gi.orthant(c.corner)) if x]
            if variant == "Theta1":
                v = var(("a", i), c.pi_lower, ninf, 0)
            else:
                v = var(("a", i), c.pi_upper)
            for n in members:
                terms[n].append((v, 1))

    nv = len(labels)
    lp = LinearProgram(cost, [], "min", lower, upper, row_labels=[], var_labels=labels)
    for n, (p, value) in enumerate(zip(gi.points, payoff.values)):
        row = [0] * nv
        for v, coef in terms[n]:
            row[v] += coef
        lp.add_row(row, GE, value, ("dominate", p))
    return lp


def decode_hedge(
    variant: str,
    lp: LinearProgram,
    x: Sequence,
    grid: ProductGrid,
    constraints: Sequence[OrthantConstraint],
    price: Number,
) -> HedgePortfolio:
    """Turn a dual LP vector into a :class:`HedgePortfolio`."""
    zero = zero_like(price)
    d = grid.dimension
    f = [[zero] * len(a) for a in grid.axes]
    g = [[zero] * len(a) for a in grid.axes] if variant in ("Theta1", "ThetaF1") else None
    a = [zero] * len(constraints)
    for label, v in zip(lp.var_labels, x):
        tag = label[0]
        if tag == "f":
            f[label[1]][label[2]] = v
        elif tag == "a+":
            a[label[1]] += v
        elif tag == "a-":
            a[label[1]] -= v
        elif tag == "a":
            a[label[1]] = v
        elif tag == "base":
            f[0] = [fv + v for fv in f[0]]
        elif tag == "df":
            j, k = label[1], label[2]
            for kk in range(k, len(f[j])):
                f[j][kk] += v
        elif tag == "dg":
            j, k = label[1], label[2]
            for kk in range(k, len(g[j])):
                g[j][kk] += v
    return HedgePortfolio(
        variant=variant,
        axes=grid.axes,
        f=tuple(tuple(r) for r in f),
        a=tuple(a),
        corners=tuple(c.corner for c in constraints),
        price=price,
        g=None if g is None else tuple(tuple(r) for r in g),
    )


def hedge_price(
    hedge: HedgePortfolio,
    marginals: Sequence[DiscreteMarginal] | None,
    constraints: Sequence[OrthantConstraint],
    envelopes: Sequence[Envelope] | None = None,
) -> Number:
    """Price of a hedge under its variant's pricing rule, computed from scratch."""
    total = zero_like(hedge.price)
    v = hedge.variant

    def integrate(table, j, law):
        s = total * 0
        for t, val in zip(hedge.axes[j], table[j]):
            s = s + val * law.mass_at(t)
        return s

    for j in range(len(hedge.axes)):
        if v in ("Theta", "Theta0"):
            total += integrate(hedge.f, j, marginals[j])
        elif v == "Theta1":
            total += integrate(hedge.f, j, envelopes[j].upper) - integrate(hedge.g, j, envelopes[j].lower)
        else:
            total += integrate(hedge.f, j, marginals[j]) - integrate(hedge.g, j, marginals[j])
    for a, c in zip(hedge.a, constraints):
        if v == "Theta1":
            total += a * c.pi_lower
        elif a >= 0:
            total += a * c.pi_upper
        else:
            total += a * c.pi_lower
    return total


# ---------------------------------------------------------------- pricing


def _clean(values, exact):
    if exact:
        return list(values)
    return [0.0 if abs(v) < 1e-12 else v for v in values]


def price_bound(
    kind: str,
    marginals: Sequence[DiscreteMarginal] | None,
    constraints: Sequence[OrthantConstraint],
    payoff: PayoffGrid,
    envelopes: Sequence[Envelope] | None = None,
    tol: float = TOL,
    gap_tol: float = 1e-8,
) -> PriceResult:
    """Solve the primal and dual problems and return the common value with certificates."""
    kind = canonical_kind(kind)
    variant = DUAL_VARIANTS[kind]
    primal_lp = build_primal(kind, marginals, constraints, payoff, envelopes)
    primal = solve(primal_lp, tol=tol)
    if primal.status == "infeasible":
        raise EmptyClassError(kind)
    if not primal.optimal:
        raise RuntimeError(f"primal LP is {primal.status}")
    dual_lp = build_dual(variant, marginals, constraints, payoff, envelopes)
    dual = solve(dual_lp, tol=tol)
    if not dual.optimal:
        raise RuntimeError(f"dual LP is {dual.status} although the primal is optimal")
    exact = primal_lp.exact and dual_lp.exact
    gap = abs(primal.objective_value - dual.objective_value)
    if (exact and gap != 0) or (not exact and gap > gap_tol):
        raise DualityGapError(f"primal {primal.objective_value} != dual {dual.objective_value}")
    masses = [max(m, m * 0) for m in _clean(primal.primal, exact)]
    plan = JointMeasure(payoff.grid, tuple(masses))
    hedge = decode_hedge(variant, dual_lp, _clean(dual.primal, exact), payoff.grid, constraints, dual.objective_value)
    log.debug("price_bound %s: primal %s dual %s", kind, primal.objective_value, dual.objective_value)
    return PriceResult(kind, primal.objective_value, primal.objective_value, dual.objective_value, plan, hedge)


def check_no_uniform_strong_arbitrage(
    marginals: Sequence[DiscreteMarginal],
    constraints: Sequence[OrthantConstraint],
    tol: float = TOL,
) -> ArbitrageReport:
    """Decide whether ``Q`` is nonempty.

    Returns a witness measure in ``Q`` when it is, and otherwise a hedge of the
    constant payoff 1 whose price is nonpositive.
    """
    check_dimensions(marginals, constraints)
    grid = support_grid(marginals)
    exact = all(m.exact for m in marginals) and all(
        all_exact((*c.corner, c.pi_lower, c.pi_upper)) for c in constraints
    )
    zero = 0 if exact else 0.0
    one = 1 if exact else 1.0
    probe = solve(build_primal("Q", marginals, constraints, PayoffGrid.constant(grid, zero)), tol=tol)
    if probe.optimal:
        masses = [max(m, m * 0) for m in _clean(probe.primal, exact)]
        return ArbitrageReport(True, witness=JointMeasure(grid, tuple(masses)))

    dual_lp = build_dual("Theta", marginals, constraints, PayoffGrid.constant(grid, one))
    sol = solve(dual_lp, tol=tol)
    if sol.status != "unbounded":
        raise RuntimeError(f"expected an unbounded superhedging LP, got {sol.status}")
    point, ray = sol.point, sol.primal
    price_point = dual_lp.objective_value(point)
    price_ray = dual_lp.objective_value(ray)
    step = price_point / -price_ray if price_point > 0 else price_point * 0
    x = [p + step * r for p, r in zip(point, ray)]
    hedge = decode_hedge("Theta", dual_lp, _clean(x, exact), grid, constraints, zero)
    price = hedge_price(hedge, marginals, constraints)
    hedge = HedgePortfolio(hedge.variant, hedge.axes, hedge.f, hedge.a, hedge.corners, price, hedge.g)
    return ArbitrageReport(False, portfolio=hedge)


def max_distribution_constraints(
    nu_max: DiscreteMarginal, d: int, points: Sequence = ()
) -> tuple[OrthantConstraint, ...]:
    """Equality constraints on diagonal orthants encoding the law of ``max(x)``.

    One constraint per atom of ``nu_max``, at corner ``(t, ..., t)`` with value
    ``cdf(nu_max, t)``. Extra ``points`` (typically all coordinates of the grid)
    add constraints there too, which pins the law of the maximum on the whole
    grid instead of only at the atoms of ``nu_max``.
    """
    if d < 1:
        raise ValueError("dimension must be positive")
    ts = sorted(set(nu_max.points) | set(points))
    return tuple(OrthantConstraint.equality((t,) * d, nu_max.cdf(t)) for t in ts)
