import random
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from ftbounds.bounds import OrthantConstraint
from ftbounds.constructions import counterexample_instance
from ftbounds.measures import DiscreteMarginal

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def separating():
    return counterexample_instance(exact=True)


@pytest.fixture
def uniform4():
    return DiscreteMarginal(tuple((i, Fraction(1, 4)) for i in range(4)))


# ---------------------------------------------------------------- random data


def random_marginal(rng: random.Random, max_atoms: int, span: int = 8, den: int = 20) -> DiscreteMarginal:
    n = rng.randint(1, max_atoms)
    pts = sorted(rng.sample(range(span), n))
    weights = [rng.randint(1, 6) for _ in pts]
    total = sum(weights)
    masses = [Fraction(w, total) for w in weights]
    return DiscreteMarginal(tuple(zip(pts, masses)), require_probability=True)


def random_constraints(rng: random.Random, d: int, k: int, span: int = 8):
    out = []
    for _ in range(k):
        corner = tuple(rng.randint(-1, span) for _ in range(d))
        k_hi = rng.randint(0, 20)
        k_lo = rng.randint(0, k_hi)
        out.append(OrthantConstraint(corner, Fraction(k_lo, 20), Fraction(k_hi, 20)))
    return out


def random_point(rng: random.Random, d: int, span: int = 8):
    return tuple(rng.randint(-1, span) for _ in range(d))


def to_float_marginal(m: DiscreteMarginal) -> DiscreteMarginal:
    return DiscreteMarginal(tuple((float(p), float(w)) for p, w in m.atoms))


def to_float_constraint(c: OrthantConstraint) -> OrthantConstraint:
    return OrthantConstraint(tuple(float(v) for v in c.corner), float(c.pi_lower), float(c.pi_upper))


@st.composite
def marginals_st(draw, max_atoms=5, span=8):
    pts = draw(st.lists(st.integers(0, span), min_size=1, max_size=max_atoms, unique=True))
    pts.sort()
    weights = draw(st.lists(st.integers(1, 9), min_size=len(pts), max_size=len(pts)))
    total = sum(weights)
    return DiscreteMarginal(tuple((p, Fraction(w, total)) for p, w in zip(pts, weights)), require_probability=True)


@st.composite
def constraints_st(draw, d, max_count=3, span=8):
    k = draw(st.integers(0, max_count))
    out = []
    for _ in range(k):
        corner = tuple(draw(st.integers(-1, span)) for _ in range(d))
        hi = Fraction(draw(st.integers(0, 10)), 10)
        lo = Fraction(draw(st.integers(0, 10)), 10)
        out.append(OrthantConstraint(corner, min(lo, hi), hi))
    return out
