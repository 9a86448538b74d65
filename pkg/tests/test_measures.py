import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import marginals_st
from ftbounds.measures import (
    DiscreteMarginal,
    JointMeasure,
    ProductGrid,
    cdf_eval,
    dominates_order0,
    dominates_order1,
    joint_cdf_eval,
    lower_orthant_mass,
    marginal_of,
)

F = Fraction


def test_cdf_values_of_separating_marginal(separating):
    (m, _), _, _ = separating
    assert cdf_eval(m, 0) == F(1, 10)
    assert cdf_eval(m, F(5, 2)) == F(35, 100)
    assert cdf_eval(m, -1) == 0
    assert cdf_eval(m, 3) == 1


def test_joint_cdf_of_table(separating):
    _, _, table = separating
    assert joint_cdf_eval(table, (0, 1)) == F(1, 20)
    assert joint_cdf_eval(table, (0, 2)) == F(1, 10)
    assert joint_cdf_eval(table, (10, 10)) == table.total_mass == 1


def test_lower_orthant_mass(separating):
    _, _, table = separating
    assert lower_orthant_mass(table, (1, 1)) == F(1, 10)
    assert lower_orthant_mass(table, (0, 0)) == 0
    assert lower_orthant_mass(table, (-5, 2)) == 0


def test_marginal_of_table(separating):
    _, _, table = separating
    m = marginal_of(table, 0)
    assert m.atoms == ((0, F(1, 10)), (1, F(2, 10)), (2, F(5, 100)), (3, F(65, 100)))
    assert marginal_of(table, 1).atoms == m.atoms


def test_marginal_of_product():
    a = DiscreteMarginal(((0, F(1, 3)), (2, F(2, 3))))
    b = DiscreteMarginal(((1, F(1, 2)), (5, F(1, 2))))
    prod = JointMeasure.from_dict({(x, y): wa * wb for x, wa in a.atoms for y, wb in b.atoms})
    assert marginal_of(prod, 0) == a
    assert marginal_of(prod, 1) == b


def test_marginal_of_matches_numpy_sums():
    rng = random.Random(7)
    for _ in range(20):
        w = [[rng.randint(0, 9) for _ in range(3)] for _ in range(3)]
        total = sum(map(sum, w)) or 1
        table = [[F(v, total) for v in row] for row in w]
        mu = JointMeasure.from_table(((0, 1, 2), (0, 1, 2)), table)
        arr = np.array(w, dtype=float) / total
        assert [float(v) for v in marginal_of(mu, 0).masses] == pytest.approx(arr.sum(axis=1).tolist())
        assert [float(v) for v in marginal_of(mu, 1).masses] == pytest.approx(arr.sum(axis=0).tolist())


def test_marginal_of_index_error(separating):
    _, _, table = separating
    with pytest.raises(IndexError):
        marginal_of(table, 2)


def test_dominates_order0_examples(separating):
    (m, _), _, _ = separating
    assert dominates_order0(m, m)
    a = DiscreteMarginal(((0, F(1, 2)), (1, F(1, 2))))
    assert not dominates_order0(a, DiscreteMarginal.point_mass(0, F(1)))
    assert dominates_order0(m.scaled(F(1, 2)), m)


def test_dominates_order1_examples():
    a = DiscreteMarginal(((0, F(1, 2)), (1, F(1, 2))))
    d0 = DiscreteMarginal.point_mass(0, F(1))
    assert dominates_order1(a, a)
    assert dominates_order1(a, d0)
    assert not dominates_order1(d0, a)


def test_marginal_validation():
    with pytest.raises(ValueError):
        DiscreteMarginal(((1, F(1, 2)), (0, F(1, 2))))
    with pytest.raises(ValueError):
        DiscreteMarginal(((0, F(-1, 2)),))
    with pytest.raises(ValueError):
        DiscreteMarginal(((0, F(3, 4)), (1, F(1, 2))))
    with pytest.raises(ValueError):
        DiscreteMarginal(((0, F(1, 2)),), require_probability=True)


def test_interval_and_tail_masses(separating):
    (m, _), _, _ = separating
    assert m.interval_mass(0, 2) == F(25, 100)
    assert m.interval_mass(2, 2) == 0
    assert m.interval_mass(None, 1) == F(3, 10)
    assert m.upper_tail(2) == F(70, 100)
    assert m.upper_tail(F(5, 2)) == F(65, 100)


def test_grid_locate_and_joint_validation():
    g = ProductGrid(((0, 1), (0, 2, 3)))
    assert g.size == 6 and g.locate((1, 2)) == 4
    with pytest.raises(KeyError):
        g.locate((1, 1))
    with pytest.raises(ValueError):
        JointMeasure(g, (F(1, 2),) * 6)


@settings(max_examples=60, deadline=None)
@given(marginals_st(), st.lists(st.integers(-2, 10), min_size=2, max_size=6))
def test_cdf_monotone_and_reaches_total(m, ts):
    ts.sort()
    vals = [m.cdf(t) for t in ts]
    assert vals == sorted(vals)
    assert m.cdf(max(m.points)) == m.total_mass


@st.composite
def joint_st(draw):
    shape = (draw(st.integers(1, 3)), draw(st.integers(1, 3)))
    w = draw(st.lists(st.integers(0, 5), min_size=shape[0] * shape[1], max_size=shape[0] * shape[1]))
    total = sum(w) or 1
    grid = ProductGrid((tuple(range(shape[0])), tuple(range(0, 2 * shape[1], 2))))
    return JointMeasure(grid, tuple(F(v, total) for v in w))


@settings(max_examples=60, deadline=None)
@given(joint_st())
def test_joint_cdf_below_marginal_cdfs(mu):
    m0, m1 = marginal_of(mu, 0), marginal_of(mu, 1)
    for x in mu.grid.points():
        assert mu.cdf(x) <= min(m0.cdf(x[0]), m1.cdf(x[1]))
    assert m0.total_mass == m1.total_mass == mu.total_mass


@settings(max_examples=60, deadline=None)
@given(marginals_st(), marginals_st())
def test_order0_at_full_mass_forces_equality(a, b):
    if dominates_order0(a, b):
        charged_a = tuple((p, w) for p, w in a.atoms if w)
        charged_b = tuple((p, w) for p, w in b.atoms if w)
        assert charged_a == charged_b
        assert dominates_order1(a, b)
