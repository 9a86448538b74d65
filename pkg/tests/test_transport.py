import itertools
import random
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from conftest import random_constraints, random_marginal
from ftbounds.bounds import OrthantConstraint
from ftbounds.constructions import comonotone_coupling, verify_membership
from ftbounds.instances import random_instance, random_payoff_values
from ftbounds.lp import solve
from ftbounds.measures import DiscreteMarginal, JointMeasure, ProductGrid
from ftbounds.transport import (
    EmptyClassError,
    Envelope,
    PayoffGrid,
    band_grid,
    build_dual,
    build_primal,
    check_no_uniform_strong_arbitrage,
    hedge_price,
    max_distribution_constraints,
    order1_grid,
    price_bound,
    support_grid,
)

F = Fraction


# ---------------------------------------------------------------- independent formulation


def scipy_value(kind, marginals, constraints, grid_axes, payoff, envelopes=None):
    """Maximise sum(payoff * mu) with constraints written out point by point."""
    pts = list(itertools.product(*grid_axes))
    n = len(pts)
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    d = len(grid_axes)
    for j in range(d):
        for t in grid_axes[j]:
            row_at = np.array([1.0 if p[j] == t else 0.0 for p in pts])
            row_below = np.array([1.0 if p[j] <= t else 0.0 for p in pts])
            if kind == "Q":
                A_eq.append(row_at), b_eq.append(float(marginals[j].mass_at(t)))
            elif kind == "Q0":
                A_ub.append(row_at), b_ub.append(float(marginals[j].mass_at(t)))
            elif kind == "F1":
                A_ub.append(row_below), b_ub.append(float(marginals[j].cdf(t)))
            else:
                A_ub.append(row_below), b_ub.append(float(envelopes[j].lower.cdf(t)))
                A_ub.append(-row_below), b_ub.append(-float(envelopes[j].upper.cdf(t)))
    if kind in ("F1", "Q1"):
        A_eq.append(np.ones(n)), b_eq.append(1.0)
    for c in constraints:
        row = np.array([1.0 if all(a <= b for a, b in zip(p, c.corner)) else 0.0 for p in pts])
        if kind in ("Q", "Q0", "F1"):
            A_ub.append(row), b_ub.append(float(c.pi_upper))
        if kind in ("Q", "Q1"):
            A_ub.append(-row), b_ub.append(-float(c.pi_lower))
    res = linprog(
        -np.array([float(payoff(p)) for p in pts]),
        A_ub=np.array(A_ub) if A_ub else None, b_ub=b_ub or None,
        A_eq=np.array(A_eq) if A_eq else None, b_eq=b_eq or None,
        bounds=[(0, None)] * n, method="highs", options={"presolve": False},
    )
    return None if res.status == 2 else -res.fun


def _grid_fn(payoff: PayoffGrid):
    table = dict(zip(payoff.grid.points(), payoff.values))
    return lambda p: table[p]


# ---------------------------------------------------------------- fixed examples


def test_separating_instance_primal_and_dual(separating):
    ms, cons, _ = separating
    pay = PayoffGrid.indicator(support_grid(ms), (0, 1))
    primal = solve(build_primal("Q", ms, cons, pay))
    dual = solve(build_dual("Theta", ms, cons, pay))
    assert primal.objective_value == dual.objective_value == F(1, 20)


def test_q0_zero_payoff_and_unconstrained_indicator(separating):
    ms, _, _ = separating
    grid = support_grid(ms)
    assert price_bound("Q0", ms, [], PayoffGrid.constant(grid, F(0))).value == 0
    assert price_bound("Q0", ms, [], PayoffGrid.indicator(grid, (0, 1))).value == F(1, 10)


def test_zero_payoff_gives_zero_hedge(separating):
    ms, cons, _ = separating
    res = price_bound("Q0", ms, cons, PayoffGrid.constant(support_grid(ms), F(0)))
    assert res.value == 0 and res.hedge.price == 0
    assert not res.hedge.positions()


def test_theta0_constant_payoff(separating):
    ms, cons, _ = separating
    for m in (F(0), F(1, 3), F(2)):
        lp = build_dual("Theta0", ms, cons, PayoffGrid.constant(support_grid(ms), m))
        assert solve(lp).objective_value == m


def test_theta0_uniform_box(uniform4):
    ms = [uniform4, uniform4]
    cons = [OrthantConstraint((1, 3), 0, F(3, 10))]
    lp = build_dual("Theta0", ms, cons, PayoffGrid.indicator(support_grid(ms), (2, 2)))
    assert solve(lp).objective_value == F(11, 20)


def test_grid_mismatch_rejected(separating):
    ms, cons, _ = separating
    bad = ProductGrid(((0, 1, 2), (0, 1, 2, 3)))
    with pytest.raises(ValueError):
        build_primal("Q", ms, cons, PayoffGrid.constant(bad, 0))
    with pytest.raises(ValueError):
        build_dual("Theta", ms, cons, PayoffGrid.constant(bad, 0))


def test_envelope_order_violation():
    lo = DiscreteMarginal(((0, F(1)),))
    hi = DiscreteMarginal(((0, F(1, 2)), (1, F(1, 2))))
    Envelope(lo, hi)
    with pytest.raises(ValueError):
        Envelope(hi, lo)


def test_unknown_class():
    with pytest.raises(ValueError):
        price_bound("Q7", [], [], None)


# ---------------------------------------------------------------- duality on random instances


def _check_result(kind, res, inst, payoff, envelopes=None):
    ms, cons = inst.marginals, inst.constraints
    assert res.primal_value == res.dual_value
    assert res.hedge.dominates(payoff)
    assert not res.hedge.sign_violations()
    assert hedge_price(res.hedge, ms, cons, envelopes) == res.value
    assert res.plan.integrate(payoff.values) == res.value
    assert verify_membership(res.plan, kind, ms, cons, envelopes=envelopes).passed


@pytest.mark.parametrize("kind", ["Q", "Q0", "Q1", "F1"])
def test_strong_duality_exact(kind):
    rng = random.Random({"Q": 1, "Q0": 2, "Q1": 3, "F1": 4}[kind])
    for _ in range(25):
        gen = random_instance(rng, rng.choice((1, 2, 2, 3)), 3, rng.randint(0, 3))
        inst = gen.instance
        if kind == "Q1":
            grid = band_grid(inst.envelopes)
        elif kind == "F1":
            grid = order1_grid(inst.marginals, inst.constraints)
        else:
            grid = support_grid(inst.marginals)
        payoff = PayoffGrid(grid, random_payoff_values(rng, grid))
        res = price_bound(kind, inst.marginals, inst.constraints, payoff, inst.envelopes)
        _check_result(kind, res, inst, payoff, inst.envelopes if kind == "Q1" else None)
        ref = scipy_value(kind, inst.marginals, inst.constraints, grid.axes, _grid_fn(payoff), inst.envelopes)
        assert float(res.value) == pytest.approx(ref, abs=1e-7)


def test_random_q0_3x3_primal_equals_dual():
    rng = random.Random(33)
    for _ in range(40):
        ms = [random_marginal(rng, 3, span=4) for _ in range(2)]
        cons = random_constraints(rng, 2, rng.randint(0, 3), span=4)
        grid = support_grid(ms)
        payoff = PayoffGrid(grid, random_payoff_values(rng, grid))
        res = price_bound("Q0", ms, cons, payoff)
        assert res.primal_value == res.dual_value
        ref = scipy_value("Q0", ms, cons, grid.axes, _grid_fn(payoff))
        assert float(res.value) == pytest.approx(ref, abs=1e-7)


def test_float_mode_duality():
    rng = random.Random(8)
    for _ in range(20):
        inst = random_instance(rng, 2, 4, 3).instance
        ms = [DiscreteMarginal(tuple((float(p), float(w)) for p, w in m.atoms)) for m in inst.marginals]
        cons = [OrthantConstraint(tuple(float(v) for v in c.corner), float(c.pi_lower), float(c.pi_upper))
                for c in inst.constraints]
        grid = support_grid(ms)
        payoff = PayoffGrid(grid, [float(v) for v in random_payoff_values(rng, grid)])
        res = price_bound("Q", ms, cons, payoff)
        assert abs(res.primal_value - res.dual_value) <= 1e-8
        assert res.hedge.dominates(payoff, 1e-9)


def test_q_monotone_in_constraint_bounds():
    rng = random.Random(21)
    for _ in range(20):
        inst = random_instance(rng, 2, 3, 2).instance
        grid = support_grid(inst.marginals)
        payoff = PayoffGrid(grid, random_payoff_values(rng, grid))
        base = price_bound("Q", inst.marginals, inst.constraints, payoff).value
        widened = [OrthantConstraint(c.corner, c.pi_lower / 2, (1 + c.pi_upper) / 2) for c in inst.constraints]
        assert price_bound("Q", inst.marginals, widened, payoff).value >= base


def test_q1_with_tight_envelopes_is_comonotone_on_supermodular_payoffs():
    rng = random.Random(4)
    for _ in range(20):
        ms = [random_marginal(rng, 4) for _ in range(2)]
        envs = [Envelope(m, m) for m in ms]
        grid = band_grid(envs)
        como = comonotone_coupling(ms)
        for fn in (lambda p: p[0] * p[1], lambda p: min(p), lambda p: F(1) if p[0] >= 3 and p[1] >= 3 else F(0)):
            payoff = PayoffGrid.from_function(grid, fn)
            value = price_bound("Q1", None, [], payoff, envs).value
            assert value == como.integrate([fn(p) for p in como.grid.points()])


# ---------------------------------------------------------------- arbitrage and maximum


def test_point_mass_arbitrage():
    d0 = DiscreteMarginal.point_mass(0, F(1))
    rep = check_no_uniform_strong_arbitrage([d0, d0], [OrthantConstraint((0, 0), 0, F(1, 2))])
    assert not rep.arbitrage_free
    assert rep.portfolio.price <= 0
    assert rep.portfolio.dominates(PayoffGrid.constant(support_grid([d0, d0]), F(1)))


def test_separating_instance_is_arbitrage_free(separating):
    ms, cons, table = separating
    rep = check_no_uniform_strong_arbitrage(ms, cons)
    assert rep.arbitrage_free
    assert verify_membership(rep.witness, "exact", ms, cons).passed
    assert verify_membership(table, "exact", ms, cons).passed


def test_generated_instances_are_arbitrage_free():
    rng = random.Random(12)
    for _ in range(30):
        inst = random_instance(rng, rng.choice((2, 3)), 3, 3).instance
        rep = check_no_uniform_strong_arbitrage(inst.marginals, inst.constraints)
        assert rep.arbitrage_free
        assert verify_membership(rep.witness, "exact", inst.marginals, inst.constraints).passed


def test_empty_q_raises_with_arbitrage_flag():
    d0 = DiscreteMarginal.point_mass(0, F(1))
    cons = [OrthantConstraint((0, 0), 0, F(1, 2))]
    with pytest.raises(EmptyClassError) as info:
        price_bound("Q", [d0, d0], cons, PayoffGrid.constant(support_grid([d0, d0]), F(0)))
    assert info.value.arbitrage
    assert "arbitrage" in str(info.value)


def test_empty_relaxed_class_has_no_arbitrage_label():
    m = DiscreteMarginal(((0, F(1)),))
    env = Envelope(m, m)
    cons = [OrthantConstraint((-1, -1), F(1, 2), 1)]
    with pytest.raises(EmptyClassError) as info:
        price_bound("Q1", None, cons, PayoffGrid.constant(band_grid([env, env]), F(0)), [env, env])
    assert not info.value.arbitrage
    assert "arbitrage" not in str(info.value)


def test_max_constraints_point_mass():
    cons = max_distribution_constraints(DiscreteMarginal.point_mass(3, F(1)), 2)
    assert [(c.corner, c.pi_lower, c.pi_upper) for c in cons] == [((3, 3), 1, 1)]
    more = max_distribution_constraints(DiscreteMarginal.point_mass(3, F(1)), 2, points=(0, 1))
    assert [(c.corner, c.pi_upper) for c in more] == [((0, 0), 0), ((1, 1), 0), ((3, 3), 1)]


def test_max_law_pins_independence():
    u = DiscreteMarginal(((0, F(1, 2)), (1, F(1, 2))))
    nu_max = DiscreteMarginal(((0, F(1, 4)), (1, F(3, 4))))
    cons = max_distribution_constraints(nu_max, 2)
    grid = support_grid([u, u])
    indep = JointMeasure(grid, (F(1, 4),) * 4)
    rng = random.Random(0)
    for _ in range(10):
        vals = random_payoff_values(rng, grid)
        pay = PayoffGrid(grid, vals)
        assert price_bound("Q", [u, u], cons, pay).value == indep.integrate(vals)


def test_max_law_infeasible():
    u = DiscreteMarginal(((0, F(1, 2)), (1, F(1, 2))))
    cons = max_distribution_constraints(DiscreteMarginal.point_mass(0, F(1)), 2)
    assert not check_no_uniform_strong_arbitrage([u, u], cons).arbitrage_free
