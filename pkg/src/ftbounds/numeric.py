"""Number handling shared by every module.

Two numeric modes are supported. In exact mode every quantity is a
:class:`fractions.Fraction` and comparisons are exact; in float mode values are
binary floats and comparisons use an absolute tolerance (``TOL``).
The mode is never stored globally: it is inferred from the values themselves,
so an instance built from Fractions stays exact all the way through the LPs.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Union

Number = Union[int, float, Fraction]

TOL = 1e-9


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def all_exact(values: Iterable) -> bool:
    return all(is_exact(v) for v in values)


def tolerance_for(*values, tol: float = TOL) -> float:
    """Return 0 when every value is rational, ``tol`` otherwise."""
    return 0 if all_exact(values) else tol


def to_number(x, exact: bool) -> Number:
    """Coerce ``x`` (number or decimal string) to the requested mode.

    Floats entering exact mode are read through their shortest decimal repr,
    so ``0.1`` becomes ``1/10`` rather than the nearest binary fraction.
    """
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, str):
        s = x.strip()
        if not s:
            raise ValueError("empty numeric string")
        parsed = Fraction(s)  # rejects nan/inf spellings
        value = parsed if exact else float(parsed)
    elif isinstance(x, (int, Fraction)):
        value = Fraction(x) if exact else float(x)
    elif isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        value = Fraction(repr(x)) if exact else x
    else:
        raise TypeError(f"cannot interpret {x!r} as a number")
    if isinstance(value, float) and not math.isfinite(value):
        raise ValueError(f"non-finite value {x!r}")
    return value


def zero_like(x) -> Number:
    return Fraction(0) if is_exact(x) else 0.0


def positive_part(x):
    return x if x > 0 else x - x


def clip_unit(x):
    """Clip to [0, 1] without changing the numeric type."""
    if x < 0:
        return x - x
    if x > 1:
        return x - x + 1
    return x


def format_number(x) -> str | float:
    """JSON-friendly rendering: exact values as ``"p/q"`` strings, floats as floats."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    return float(x)
