"""Dense two-phase simplex with Bland's rule.

The solver works over whatever number type the program carries. When every
coefficient is an ``int`` or ``Fraction`` arithmetic is exact and the returned
duality gap is exactly zero; otherwise everything is converted to ``float``
and comparisons use an absolute tolerance.

Programs here are small (a few hundred variables at most), so a dense tableau
with Bland's anti-cycling rule is preferred over anything clever.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .numeric import TOL, all_exact

log = logging.getLogger(__name__)

LE, EQ, GE = "<=", "=", ">="
_RELATIONS = {LE: LE, "<": LE, "le": LE, EQ: EQ, "==": EQ, "eq": EQ, GE: GE, ">": GE, "ge": GE}

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


@dataclass
class LinearProgram:
    """``sense`` c.x subject to rows ``a.x (rel) b`` and per-variable bounds.

    ``lower``/``upper`` default to 0 and +inf. Use ``-math.inf`` for a free
    lower bound. ``row_labels`` and ``var_labels`` are optional and only used
    for reporting.
    """

    objective: list
    rows: list = field(default_factory=list)
    sense: str = "max"
    lower: list | None = None
    upper: list | None = None
    row_labels: list | None = None
    var_labels: list | None = None

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    def add_row(self, coeffs, relation, rhs, label=None):
        self.rows.append((list(coeffs), relation, rhs))
        if label is not None or self.row_labels is not None:
            if self.row_labels is None:
                self.row_labels = [None] * (len(self.rows) - 1)
            self.row_labels.append(label)

    def validate(self):
        n = self.num_vars
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")
        for i, (a, rel, _) in enumerate(self.rows):
            if len(a) != n:
                raise ValueError(f"row {i} has width {len(a)}, objective has {n}")
            if rel not in _RELATIONS:
                raise ValueError(f"row {i}: unknown relation {rel!r}")
        for name, b in (("lower", self.lower), ("upper", self.upper)):
            if b is not None and len(b) != n:
                raise ValueError(f"{name} bounds have length {len(b)}, expected {n}")
        for v in self._finite_entries():
            if isinstance(v, float) and math.isnan(v):
                raise ValueError("NaN in linear program")

    def _finite_entries(self):
        yield from self.objective
        for a, _, b in self.rows:
            yield from a
            yield b
        for bounds in (self.lower, self.upper):
            for v in bounds or ():
                if not (isinstance(v, float) and math.isinf(v)):
                    yield v

    @property
    def exact(self) -> bool:
        return all_exact(self._finite_entries())

    def row_activity(self, x) -> list:
        return [sum(ai * xi for ai, xi in zip(a, x)) for a, _, _ in self.rows]

    def objective_value(self, x):
        return sum(c * xi for c, xi in zip(self.objective, x))


@dataclass
class LpSolution:
    """Solver output.

    For ``optimal`` status ``primal`` is an optimal point and ``dual`` holds one
    multiplier per row such that the objective equals ``sum(dual[i] * b[i])``
    plus the contribution of finite variable bounds. Signs follow the usual
    convention for the problem's sense: for a maximisation ``<=`` rows get
    nonnegative multipliers and ``>=`` rows nonpositive ones (reversed for a
    minimisation). For ``unbounded`` status ``primal`` is an improving ray and
    ``point`` a feasible vertex it starts from.
    """

    status: str
    objective_value: object = None
    primal: list | None = None
    dual: list | None = None
    point: list | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    def __init__(self, rows, rhs, basis, tol, zero, one):
        self.t = rows  # list of lists, one per constraint row
        self.rhs = rhs
        self.basis = basis
        self.tol = tol
        self.zero = zero
        self.one = one
        self.iterations = 0

    def pivot(self, r, c):
        t = self.t
        prow = t[r]
        p = prow[c]
        if p != self.one:
            inv = self.one / p
            t[r] = prow = [v * inv for v in prow]
            self.rhs[r] = self.rhs[r] * inv
        prhs = self.rhs[r]
        nz = [(j, v) for j, v in enumerate(prow) if v != self.zero]
        for i, row in enumerate(t):
            if i == r:
                continue
            f = row[c]
            if f == self.zero:
                continue
            for j, v in nz:
                row[j] = row[j] - f * v
            if self.tol:
                row[c] = self.zero
            self.rhs[i] = self.rhs[i] - f * prhs
        self.basis[r] = c
        self.iterations += 1

    def reduced_costs(self, cost):
        """Reduced costs ``c_j - c_B B^-1 A_j`` for every column."""
        red = list(cost)
        for i, row in enumerate(self.t):
            cb = cost[self.basis[i]]
            if cb == self.zero:
                continue
            for j, v in enumerate(row):
                if v != self.zero:
                    red[j] = red[j] - cb * v
        return red

    def run(self, cost, allowed, max_iter):
        """Minimise ``cost`` over the current basis. Returns ``None`` or an entering column if unbounded."""
        tol = self.tol
        while True:
            if self.iterations > max_iter:
                raise RuntimeError("simplex iteration limit reached")
            red = self.reduced_costs(cost)
            enter = None
            for j in range(len(red)):
                if allowed[j] and red[j] < -tol:
                    enter = j
                    break
            if enter is None:
                return None
            leave = None
            best = None
            for i, row in enumerate(self.t):
                a = row[enter]
                if a > tol:
                    ratio = self.rhs[i] / a
                    if (
                        best is None
                        or ratio < best - tol
                        or (abs(ratio - best) <= tol and self.basis[i] < self.basis[leave])
                    ):
                        best, leave = ratio, i
            if leave is None:
                return enter
            self.pivot(leave, enter)


def solve(lp: LinearProgram, tol: float = TOL, max_iter: int = 100_000) -> LpSolution:
    """Solve ``lp``; infeasibility and unboundedness are reported via ``status``."""
    lp.validate()
    exact = lp.exact
    num = Fraction if exact else float
    tol = 0 if exact else tol
    zero, one = num(0), num(1)
    inf = math.inf
    n = lp.num_vars

    lower = list(lp.lower) if lp.lower is not None else [0] * n
    upper = list(lp.upper) if lp.upper is not None else [inf] * n

    # Internal variables are all >= 0. Each original variable maps to
    # offset + sum(coef * internal).
    var_map = []
    extra_rows = []  # (internal column, bound) meaning column <= bound
    k = 0
    for j in range(n):
        lo, hi = lower[j], upper[j]
        lo_inf = isinstance(lo, float) and math.isinf(lo) and lo < 0
        hi_inf = isinstance(hi, float) and math.isinf(hi) and hi > 0
        if not lo_inf and not hi_inf and hi < lo:
            return LpSolution(INFEASIBLE)
        if not lo_inf:
            var_map.append((num(lo), [(k, one)]))
            if not hi_inf:
                extra_rows.append((k, num(hi) - num(lo)))
            k += 1
        elif not hi_inf:
            var_map.append((num(hi), [(k, -one)]))
            k += 1
        else:
            var_map.append((zero, [(k, one), (k + 1, -one)]))
            k += 2
    n_int = k

    cost = [zero] * n_int
    sign = one if lp.sense == "min" else -one
    const = zero
    for j, c in enumerate(lp.objective):
        c = num(c) * sign
        off, cols = var_map[j]
        const += c * off
        for col, coef in cols:
            cost[col] += c * coef

    rows = []  # (coeffs over internal vars, relation, rhs, flip sign)
    for a, rel, b in lp.rows:
        rel = _RELATIONS[rel]
        coeffs = [zero] * n_int
        rhs = num(b)
        for j, v in enumerate(a):
            if v == 0:
                continue
            v = num(v)
            off, cols = var_map[j]
            rhs -= v * off
            for col, coef in cols:
                coeffs[col] += v * coef
        rows.append([coeffs, rel, rhs])
    n_user_rows = len(rows)
    for col, bound in extra_rows:
        coeffs = [zero] * n_int
        coeffs[col] = one
        rows.append([coeffs, LE, bound])

    flips = []
    for row in rows:
        if row[2] < 0:
            row[0] = [-v for v in row[0]]
            row[2] = -row[2]
            row[1] = {LE: GE, GE: LE, EQ: EQ}[row[1]]
            flips.append(-one)
        else:
            flips.append(one)

    m = len(rows)
    n_slack = sum(1 for r in rows if r[1] != EQ)
    n_art = sum(1 for r in rows if r[1] != LE)
    width = n_int + n_slack + n_art
    table = []
    rhs = []
    basis = []
    ident = []  # column that started as the identity column of each row
    s_col = n_int
    a_col = n_int + n_slack
    art_cols = set()
    for coeffs, rel, b in rows:
        row = coeffs + [zero] * (n_slack + n_art)
        if rel == LE:
            row[s_col] = one
            basis.append(s_col)
            ident.append(s_col)
            s_col += 1
        else:
            if rel == GE:
                row[s_col] = -one
                s_col += 1
            row[a_col] = one
            basis.append(a_col)
            ident.append(a_col)
            art_cols.add(a_col)
            a_col += 1
        table.append(row)
        rhs.append(b)

    tab = _Tableau(table, rhs, basis, tol, zero, one)
    allowed = [True] * width

    if art_cols:
        phase1 = [one if j in art_cols else zero for j in range(width)]
        tab.run(phase1, allowed, max_iter)
        infeas = sum((tab.rhs[i] for i in range(m) if tab.basis[i] in art_cols), zero)
        if infeas > tol * max(1, m):
            log.debug("phase 1 ended with infeasibility %s", infeas)
            return LpSolution(INFEASIBLE, iterations=tab.iterations)
        # Drive remaining artificial variables out of the basis where possible.
        for i in range(m):
            if tab.basis[i] in art_cols:
                for j in range(width):
                    if j not in art_cols and abs(tab.t[i][j]) > tol:
                        tab.pivot(i, j)
                        break
        for j in art_cols:
            allowed[j] = False

    phase2 = cost + [zero] * (n_slack + n_art)
    enter = tab.run(phase2, allowed, max_iter)

    def to_original(internal):
        out = []
        for off, cols in var_map:
            out.append(off + sum((coef * internal[col] for col, coef in cols), zero))
        return out

    x_int = [zero] * width
    for i, bcol in enumerate(tab.basis):
        x_int[bcol] = tab.rhs[i]
    point = to_original(x_int[:n_int])

    if enter is not None:
        ray = [zero] * width
        ray[enter] = one
        for i, bcol in enumerate(tab.basis):
            ray[bcol] = -tab.t[i][enter]
        direction = [
            sum((coef * ray[col] for col, coef in cols), zero) for _, cols in var_map
        ]
        return LpSolution(UNBOUNDED, primal=direction, point=point, iterations=tab.iterations)

    value = const + sum((cost[j] * x_int[j] for j in range(n_int)), zero)
    # y = c_B B^-1, read from the columns that formed the initial identity.
    duals = []
    for r in range(m):
        col = ident[r]
        y = zero
        for i, bcol in enumerate(tab.basis):
            cb = phase2[bcol]
            if cb != zero:
                y += cb * tab.t[i][col]
        duals.append(y * flips[r])
    duals = duals[:n_user_rows]
    if lp.sense == "max":
        value = -value
        duals = [-y for y in duals]
    else:
        duals = list(duals)
    return LpSolution(OPTIMAL, value, point, duals, iterations=tab.iterations)
