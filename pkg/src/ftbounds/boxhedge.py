"""Explicit superhedge of a lower-orthant digital under short-selling constraints.

For ``B = (-inf, corner]`` the cheapest nonnegative hedge over the class
``Q0`` has one of three shapes in dimension two:

* ``vertical_strip``: ``f_1 = 1{x_1 <= B_1}``;
* ``horizontal_strip``: ``f_2 = 1{x_2 <= B_2}``;
* ``box_plus_strips``: one digital ``A^i`` at unit size plus the strips
  ``f_1 = 1{A^i_1 < x_1 <= B_1}`` and ``f_2 = 1{A^i_2 < x_2 <= B_2}``.

:func:`box_hedge` finds it by peeling vertical cells off the right edge of the
box one at a time, settling as soon as a hedge that ignores the first axis is
at least as cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .bounds import OrthantConstraint, check_dimensions
from .measures import DiscreteMarginal, leq
from .numeric import Number, clip_unit, tolerance_for, zero_like
from .transport import HedgePortfolio

VERTICAL, HORIZONTAL, BOX = "vertical_strip", "horizontal_strip", "box_plus_strips"


@dataclass(frozen=True)
class Box:
    corner: tuple

    def __post_init__(self):
        object.__setattr__(self, "corner", tuple(self.corner))

    @property
    def dimension(self) -> int:
        return len(self.corner)


@dataclass(frozen=True)
class BoxHedgeResult:
    value: Number
    form: str
    portfolio: HedgePortfolio
    constraint: int | None = None  # index of the digital used by box_plus_strips
    settled_at: object = None  # right edge where peeling stopped; None when every cell was peeled


def _corner(B):
    return B.corner if isinstance(B, Box) else tuple(B)


def box_value(marginals: Sequence[DiscreteMarginal], constraints: Sequence[OrthantConstraint], B) -> Number:
    """``max mu(B)`` over ``Q0``, in any dimension.

    Each constraint contributes ``pi_upper`` plus the marginal mass of the
    slabs ``(A_j, B_j]`` sticking out of its orthant.
    """
    corner = _corner(B)
    check_dimensions(marginals, constraints, corner)
    best = min(m.cdf(b) for m, b in zip(marginals, corner))
    for c in constraints:
        term = c.pi_upper
        for m, a, b in zip(marginals, c.corner, corner):
            term = term + m.interval_mass(a, b)
        if term < best:
            best = term
    return clip_unit(best)


def _eta_choice(marginals, constraints, corner, edge):
    """Cheapest hedge of the box ``(-inf, edge] x (-inf, corner[1]]`` that holds no vertical strip.

    Returns ``(value, constraint index or None)``; ties go to the digital with
    the lowest index, and any digital beats the plain horizontal strip.
    """
    nu2 = marginals[1]
    b2 = corner[1]
    strip = nu2.cdf(b2)
    best, best_i = None, None
    for i, c in enumerate(constraints):
        if edge <= c.corner[0]:
            term = c.pi_upper + nu2.interval_mass(c.corner[1], b2)
            if best is None or term < best:
                best, best_i = term, i
    if best is not None and best <= strip:
        return best, best_i
    return strip, None


def eta_value(marginals: Sequence[DiscreteMarginal], constraints: Sequence[OrthantConstraint], B) -> Number:
    corner = _corner(B)
    check_dimensions(marginals, constraints, corner)
    if len(corner) != 2:
        raise ValueError("eta_value is defined for d = 2 only")
    value, _ = _eta_choice(marginals, constraints, corner, corner[0])
    return value


def _hedge_axes(marginals, constraints):
    # Measures live on the marginal supports, so domination is only needed there.
    axes = []
    for j, m in enumerate(marginals):
        pts = set(m.points) | {c.corner[j] for c in constraints}
        axes.append(tuple(sorted(pts)))
    return tuple(axes)


def box_hedge(
    marginals: Sequence[DiscreteMarginal], constraints: Sequence[OrthantConstraint], B
) -> BoxHedgeResult:
    """Value and optimal hedge of the digital on ``B`` over ``Q0`` (d = 2)."""
    corner = _corner(B)
    check_dimensions(marginals, constraints, corner)
    if len(corner) != 2:
        raise ValueError("box_hedge decomposes d = 2 only")
    nu1, nu2 = marginals
    b1, b2 = corner

    # Right edges reachable by peeling: constraint first coordinates below B_1.
    edges = sorted({c.corner[0] for c in constraints if c.corner[0] < b1} | {b1})
    # cost[k]: value of the box with right edge edges[k]; s[k] True means peel.
    cost, peel = [], []
    for k, e in enumerate(edges):
        prev = edges[k - 1] if k else None
        cell = nu1.interval_mass(prev, e)
        peeled = cell + (cost[k - 1] if k else cell * 0)
        eta, _ = _eta_choice(marginals, constraints, corner, e)
        if eta <= peeled:
            cost.append(eta)
            peel.append(False)
        else:
            cost.append(peeled)
            peel.append(True)

    k = len(edges) - 1
    while k >= 0 and peel[k]:
        k -= 1
    zero = zero_like(cost[-1])
    axes = _hedge_axes(marginals, constraints)
    f = [[zero] * len(axis) for axis in axes]
    a = [zero] * len(constraints)
    one = zero + 1
    chosen = None
    if k < 0:
        form = VERTICAL
        f[0] = [one if t <= b1 else zero for t in axes[0]]
    else:
        _, chosen = _eta_choice(marginals, constraints, corner, edges[k])
        if chosen is None:
            form = HORIZONTAL
            f[1] = [one if t <= b2 else zero for t in axes[1]]
        else:
            form = BOX
            c = constraints[chosen].corner
            a[chosen] = one
            f[0] = [one if c[0] < t <= b1 else zero for t in axes[0]]
            f[1] = [one if c[1] < t <= b2 else zero for t in axes[1]]

    portfolio = HedgePortfolio(
        variant="Theta0",
        axes=axes,
        f=tuple(tuple(r) for r in f),
        a=tuple(a),
        corners=tuple(c.corner for c in constraints),
        price=zero,
    )
    price = _theta0_price(portfolio, marginals, constraints)
    portfolio = HedgePortfolio("Theta0", axes, portfolio.f, portfolio.a, portfolio.corners, price)
    value = clip_unit(cost[-1])
    tol = tolerance_for(price, value)
    if abs(price - value) > tol:
        raise AssertionError(f"hedge price {price} differs from recursion value {value}")
    return BoxHedgeResult(value, form, portfolio, chosen, edges[k] if k >= 0 else None)


def _theta0_price(portfolio, marginals, constraints):
    total = portfolio.price
    for j, m in enumerate(marginals):
        for t, v in zip(portfolio.axes[j], portfolio.f[j]):
            if v:
                total = total + v * m.mass_at(t)
    for ai, c in zip(portfolio.a, constraints):
        if ai:
            total = total + ai * c.pi_upper
    return total


def covers(portfolio: HedgePortfolio, corner: Sequence) -> bool:
    """Whether the hedge pays at least 1 on every grid point of the box."""
    from itertools import product

    tol = tolerance_for(portfolio.price)
    for p in product(*portfolio.axes):
        if leq(p, corner) and portfolio.value_at(p) < 1 - tol:
            return False
    return True
