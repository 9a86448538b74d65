"""JSON instance files and a seeded generator of feasible instances.

An instance file looks like::

    {
      "dimension": 2,
      "marginals": [[["0", "0.1"], ["1", "0.9"]], [["0", "0.5"], ["1", "0.5"]]],
      "constraints": [{"corner": ["0", "0"], "pi": "0.05"},
                      {"corner": ["1", "0"], "pi_lower": "0.4", "pi_upper": "0.6"}],
      "envelopes": [{"lower": [...], "upper": [...]}, ...],
      "payoff": {"kind": "indicator", "corner": ["0", "1"]}
    }

Numbers may be JSON numbers or decimal / ``p/q`` strings. ``envelopes`` and
``payoff`` are optional. Payoff kinds are ``indicator`` (by corner),
``linear`` (``weights`` and ``constant``), ``constant`` (``value``) and
``grid`` (``axes`` plus row-major ``values``).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .bounds import OrthantConstraint
from .measures import DiscreteMarginal, JointMeasure, ProductGrid, marginal_of
from .numeric import to_number
from .transport import Envelope, PayoffGrid

PAYOFF_KINDS = ("indicator", "linear", "constant", "grid")
MAX_GEN_GRID = 12


class InstanceError(ValueError):
    """Malformed instance data."""


def _num(x, exact, what):
    if isinstance(x, (list, dict)) or x is None:
        raise InstanceError(f"{what}: expected a number, got {x!r}")
    try:
        return to_number(x, exact)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InstanceError(f"{what}: {exc}") from None


def _atoms(raw, exact, what, require_probability=False):
    if not isinstance(raw, list):
        raise InstanceError(f"{what}: expected a list of [point, mass] pairs")
    pairs = []
    for k, pair in enumerate(raw):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise InstanceError(f"{what}[{k}]: expected [point, mass]")
        pairs.append((_num(pair[0], exact, what), _num(pair[1], exact, what)))
    try:
        return DiscreteMarginal.from_pairs(pairs, exact=exact, require_probability=require_probability)
    except ValueError as exc:
        raise InstanceError(f"{what}: {exc}") from None


def format_decimal(x) -> str:
    """Exact text for a rational: a terminating decimal when there is one, else ``p/q``."""
    if isinstance(x, float):
        return repr(x)
    x = Fraction(x)
    den = x.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{x.numerator}/{x.denominator}"
    places = max(twos, fives)
    if places == 0:
        return str(x.numerator)
    scaled = x * 10**places
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled.numerator)).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}".rstrip("0").rstrip(".")


@dataclass(frozen=True)
class Instance:
    dimension: int
    marginals: tuple
    constraints: tuple
    envelopes: tuple | None = None
    payoff: dict | None = None
    exact: bool = True

    @classmethod
    def from_json(cls, data: dict, exact: bool = True) -> "Instance":
        if not isinstance(data, dict):
            raise InstanceError("instance must be a JSON object")
        d = data.get("dimension")
        if not isinstance(d, int) or isinstance(d, bool) or d < 1:
            raise InstanceError(f"dimension must be a positive integer, got {d!r}")
        raw_m = data.get("marginals")
        if not isinstance(raw_m, list) or len(raw_m) != d:
            raise InstanceError(f"need exactly {d} marginals")
        marginals = tuple(_atoms(m, exact, f"marginals[{j}]") for j, m in enumerate(raw_m))

        constraints = []
        for i, c in enumerate(data.get("constraints") or []):
            what = f"constraints[{i}]"
            if not isinstance(c, dict) or "corner" not in c:
                raise InstanceError(f"{what}: expected an object with a corner")
            corner = c["corner"]
            if not isinstance(corner, list) or len(corner) != d:
                raise InstanceError(f"{what}: corner must have {d} coordinates")
            corner = tuple(_num(v, exact, what) for v in corner)
            if "pi" in c:
                lo = hi = _num(c["pi"], exact, what)
            else:
                lo = _num(c.get("pi_lower", 0), exact, what)
                hi = _num(c.get("pi_upper", 1), exact, what)
            try:
                constraints.append(OrthantConstraint(corner, lo, hi))
            except ValueError as exc:
                raise InstanceError(f"{what}: {exc}") from None

        envelopes = None
        if data.get("envelopes") is not None:
            raw_e = data["envelopes"]
            if not isinstance(raw_e, list) or len(raw_e) != d:
                raise InstanceError(f"need exactly {d} envelopes")
            envelopes = []
            for j, e in enumerate(raw_e):
                if not isinstance(e, dict):
                    raise InstanceError(f"envelopes[{j}]: expected an object")
                lower = _atoms(e.get("lower"), exact, f"envelopes[{j}].lower", True)
                upper = _atoms(e.get("upper"), exact, f"envelopes[{j}].upper", True)
                try:
                    envelopes.append(Envelope(lower, upper))
                except ValueError as exc:
                    raise InstanceError(f"envelopes[{j}]: {exc}") from None
            envelopes = tuple(envelopes)

        payoff = data.get("payoff")
        if payoff is not None:
            payoff = _check_payoff(payoff, d, exact)
        return cls(d, marginals, tuple(constraints), envelopes, payoff, exact)

    @classmethod
    def load(cls, path: str | Path, exact: bool = True) -> "Instance":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InstanceError(f"cannot read {path}: {exc}") from None
        try:
            data = json.loads(text, parse_float=str, parse_constant=_reject_constant)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_json(data, exact=exact)

    def to_json(self) -> dict:
        out = {
            "dimension": self.dimension,
            "marginals": [_atoms_json(m) for m in self.marginals],
            "constraints": [_constraint_json(c) for c in self.constraints],
        }
        if self.envelopes is not None:
            out["envelopes"] = [
                {"lower": _atoms_json(e.lower), "upper": _atoms_json(e.upper)} for e in self.envelopes
            ]
        if self.payoff is not None:
            out["payoff"] = _payoff_json(self.payoff)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    def payoff_on(self, grid: ProductGrid) -> PayoffGrid:
        """The instance payoff evaluated on ``grid``."""
        if self.payoff is None:
            raise InstanceError("instance has no payoff")
        p = self.payoff
        kind = p["kind"]
        if kind == "indicator":
            return PayoffGrid.indicator(grid, p["corner"], exact=self.exact)
        if kind == "constant":
            return PayoffGrid.constant(grid, p["value"])
        if kind == "linear":
            w, c = p["weights"], p["constant"]
            return PayoffGrid.from_function(grid, lambda x: c + sum(wi * xi for wi, xi in zip(w, x)))
        source = PayoffGrid(ProductGrid(p["axes"]), p["values"])
        try:
            return source.regrid(grid)
        except KeyError as exc:
            raise InstanceError(f"grid payoff does not cover the pricing grid: {exc}") from None


def _reject_constant(name):
    raise InstanceError(f"non-finite number {name} in instance")


def _check_payoff(p, d, exact) -> dict:
    if not isinstance(p, dict) or p.get("kind") not in PAYOFF_KINDS:
        raise InstanceError(f"payoff kind must be one of {PAYOFF_KINDS}")
    kind = p["kind"]

    def vector(key, n):
        v = p.get(key)
        if not isinstance(v, list) or len(v) != n:
            raise InstanceError(f"payoff.{key} must be a list of {n} numbers")
        return tuple(_num(x, exact, f"payoff.{key}") for x in v)

    if kind == "indicator":
        return {"kind": kind, "corner": vector("corner", d)}
    if kind == "constant":
        return {"kind": kind, "value": _num(p.get("value"), exact, "payoff.value")}
    if kind == "linear":
        return {
            "kind": kind,
            "weights": vector("weights", d),
            "constant": _num(p.get("constant", 0), exact, "payoff.constant"),
        }
    axes = p.get("axes")
    if not isinstance(axes, list) or len(axes) != d or not all(isinstance(a, list) for a in axes):
        raise InstanceError(f"payoff.axes must be {d} lists")
    axes = tuple(tuple(_num(x, exact, "payoff.axes") for x in a) for a in axes)
    try:
        grid = ProductGrid(axes)
    except ValueError as exc:
        raise InstanceError(f"payoff.axes: {exc}") from None
    values = vector("values", grid.size)
    return {"kind": kind, "axes": axes, "values": values}


def _atoms_json(m: DiscreteMarginal) -> list:
    return [[format_decimal(p), format_decimal(w)] for p, w in m.atoms]


def _constraint_json(c: OrthantConstraint) -> dict:
    corner = [format_decimal(v) for v in c.corner]
    if c.pi_lower == c.pi_upper:
        return {"corner": corner, "pi": format_decimal(c.pi_upper)}
    return {"corner": corner, "pi_lower": format_decimal(c.pi_lower), "pi_upper": format_decimal(c.pi_upper)}


def _payoff_json(p: dict) -> dict:
    out = {"kind": p["kind"]}
    for key, value in p.items():
        if key == "kind":
            continue
        if key == "axes":
            out[key] = [[format_decimal(v) for v in a] for a in value]
        elif isinstance(value, tuple):
            out[key] = [format_decimal(v) for v in value]
        else:
            out[key] = format_decimal(value)
    return out


# ---------------------------------------------------------------- generator


@dataclass(frozen=True)
class GeneratedInstance:
    instance: Instance
    measure: JointMeasure  # the sampled law; a member of every class the instance defines


def random_instance(
    rng: random.Random,
    dimension: int,
    grid: int,
    n_constraints: int,
    units: int = 100,
    band_fraction: float = 0.5,
    payoff: str = "indicator",
) -> GeneratedInstance:
    """Sample a law on a random integer grid and read an instance off it.

    Masses are multiples of ``1/units``. Each constraint sits at a random grid
    point with the law's orthant mass either as an equality or widened by
    ``1/20`` on each side (probability ``band_fraction``). The envelopes shift
    a tenth of every marginal's mass to the smallest and largest atom. Since
    the sampled law satisfies all of it, every class built from the result is
    nonempty.
    """
    if dimension < 1 or grid < 1 or n_constraints < 0 or units < 1:
        raise ValueError("generator arguments must be positive")
    if grid > MAX_GEN_GRID:
        raise ValueError(f"grid size is capped at {MAX_GEN_GRID} points per axis")
    axes = [sorted(rng.sample(range(3 * grid), grid)) for _ in range(dimension)]
    points = [tuple(p) for p in ProductGrid(tuple(tuple(a) for a in axes)).points()]
    n_support = rng.randint(min(2, len(points)), min(len(points), 2 * grid))
    support = rng.sample(points, n_support)
    counts: dict = {}
    for p in rng.choices(support, k=units):
        counts[p] = counts.get(p, 0) + 1
    measure = JointMeasure.from_dict({p: Fraction(k, units) for p, k in counts.items()}, axes=axes)
    marginals = tuple(
        DiscreteMarginal(tuple((t, w) for t, w in marginal_of(measure, j).atoms if w))
        for j in range(dimension)
    )

    constraints = []
    for _ in range(n_constraints):
        corner = tuple(rng.choice(a) for a in axes)
        pi = measure.cdf(corner)
        if rng.random() < band_fraction:
            width = Fraction(1, 20)
            constraints.append(OrthantConstraint(corner, max(pi - width, Fraction(0)), min(pi + width, Fraction(1))))
        else:
            constraints.append(OrthantConstraint.equality(corner, pi))

    envelopes = tuple(_envelope_around(m) for m in marginals)
    if payoff == "indicator":
        pay = {"kind": "indicator", "corner": tuple(rng.choice(a) for a in axes)}
    elif payoff == "none":
        pay = None
    else:
        raise ValueError(f"unknown payoff kind {payoff!r}")
    inst = Instance(dimension, marginals, tuple(constraints), envelopes, pay, exact=True)
    return GeneratedInstance(inst, measure)


def _envelope_around(m: DiscreteMarginal, share=Fraction(1, 10)) -> Envelope:
    lo_pt, hi_pt = m.points[0], m.points[-1]
    keep = 1 - share

    def shifted(target):
        atoms = {t: w * keep for t, w in m.atoms}
        atoms[target] += share
        return DiscreteMarginal(tuple(sorted(atoms.items())), require_probability=True)

    return Envelope(shifted(lo_pt), shifted(hi_pt))


def random_payoff_values(rng: random.Random, grid: ProductGrid, low: int = -10, high: int = 10, den: int = 10):
    """Random bounded payoff values on ``grid`` as rationals ``k / den``."""
    return tuple(Fraction(rng.randint(low, high), den) for _ in range(grid.size))


def to_float_instance(inst: Instance) -> Instance:
    """The same instance with every number converted to float."""
    return Instance.from_json(inst.to_json(), exact=False)

