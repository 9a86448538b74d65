"""Closed-form Fréchet–Hoeffding bounds, classical and improved.

All functions take one :class:`DiscreteMarginal` per coordinate and a
sequence of :class:`OrthantConstraint`. Results are clipped to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .measures import DiscreteMarginal, leq
from .numeric import Number, clip_unit, positive_part, to_number


@dataclass(frozen=True)
class OrthantConstraint:
    """Bounds ``pi_lower <= mu((-inf, corner]) <= pi_upper`` on a lower orthant."""

    corner: tuple
    pi_lower: Number
    pi_upper: Number

    def __post_init__(self):
        object.__setattr__(self, "corner", tuple(self.corner))
        if not 0 <= self.pi_lower <= self.pi_upper <= 1:
            raise ValueError(
                f"need 0 <= pi_lower <= pi_upper <= 1, got {self.pi_lower}, {self.pi_upper}"
            )

    @classmethod
    def equality(cls, corner, pi) -> "OrthantConstraint":
        return cls(tuple(corner), pi, pi)

    @classmethod
    def parse(cls, corner, pi_lower, pi_upper, exact: bool = True) -> "OrthantConstraint":
        return cls(
            tuple(to_number(c, exact) for c in corner),
            to_number(pi_lower, exact),
            to_number(pi_upper, exact),
        )

    @property
    def dimension(self) -> int:
        return len(self.corner)


ConstraintSet = Sequence[OrthantConstraint]


def check_dimensions(marginals: Sequence[DiscreteMarginal], constraints: ConstraintSet, x=None):
    d = len(marginals)
    if d == 0:
        raise ValueError("need at least one marginal")
    if x is not None and len(x) != d:
        raise ValueError(f"point has dimension {len(x)}, expected {d}")
    for c in constraints:
        if c.dimension != d:
            raise ValueError(f"constraint corner {c.corner} has dimension {c.dimension}, expected {d}")
    return d


def _cdfs(marginals, x):
    return [m.cdf(t) for m, t in zip(marginals, x)]


def classical_fh_bounds(marginals: Sequence[DiscreteMarginal], x: Sequence) -> tuple[Number, Number]:
    d = check_dimensions(marginals, (), x)
    f = _cdfs(marginals, x)
    lower = positive_part(sum(f) - (d - 1))
    return clip_unit(lower), clip_unit(min(f))


def improved_fh_upper(marginals, constraints: ConstraintSet, x) -> Number:
    check_dimensions(marginals, constraints, x)
    fx = _cdfs(marginals, x)
    best = min(fx)
    for c in constraints:
        fs = _cdfs(marginals, c.corner)
        term = c.pi_upper + sum(positive_part(a - b) for a, b in zip(fx, fs))
        if term < best:
            best = term
    return clip_unit(best)


def improved_fh_lower(marginals, constraints: ConstraintSet, x) -> Number:
    d = check_dimensions(marginals, constraints, x)
    fx = _cdfs(marginals, x)
    best = positive_part(sum(fx) - (d - 1))
    for c in constraints:
        fs = _cdfs(marginals, c.corner)
        term = c.pi_lower - sum(positive_part(b - a) for a, b in zip(fx, fs))
        if term > best:
            best = term
    return clip_unit(best)


def sharp_upper_order0(marginals, constraints: ConstraintSet, x) -> Number:
    """Maximum of ``F(x)`` over the 0-th order relaxed class.

    The formula coincides with :func:`improved_fh_upper`; for this class it is
    attained at every point (see ``constructions.attain_order0``).
    """
    return improved_fh_upper(marginals, constraints, x)


def sharp_upper_order1(marginals, constraints: ConstraintSet, x) -> Number:
    """Maximum of ``F(x)`` over the first-order relaxed class.

    Only constraints whose corner dominates ``x`` componentwise matter, and
    they enter with ``pi_upper`` alone.
    """
    check_dimensions(marginals, constraints, x)
    best = min(_cdfs(marginals, x))
    for c in constraints:
        if leq(x, c.corner) and c.pi_upper < best:
            best = c.pi_upper
    return clip_unit(best)
