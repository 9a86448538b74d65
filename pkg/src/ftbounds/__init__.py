"""Bounds on multivariate distribution functions under marginal and orthant constraints."""

from .bounds import (
    OrthantConstraint,
    classical_fh_bounds,
    improved_fh_lower,
    improved_fh_upper,
    sharp_upper_order0,
    sharp_upper_order1,
)
from .boxhedge import Box, BoxHedgeResult, box_hedge, box_value, eta_value
from .constructions import (
    MembershipReport,
    Violation,
    attain_order0,
    attain_order1,
    comonotone_coupling,
    counterexample_instance,
    verify_membership,
)
from .lp import LinearProgram, LpSolution, solve
from .measures import (
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
from .transport import (
    EmptyClassError,
    Envelope,
    HedgePortfolio,
    PayoffGrid,
    build_dual,
    build_primal,
    check_no_uniform_strong_arbitrage,
    max_distribution_constraints,
    price_bound,
)

__all__ = [name for name in dir() if not name.startswith("_")]
