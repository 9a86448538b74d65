"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 dimension or unsupported feature,
4 empty class. ``FTB_LOG`` sets log verbosity (error, warn, info, debug).
Options may also come from ``--config FILE`` (a JSON object keyed by option
name); explicit flags take precedence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import random
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import bounds as fh
from .boxhedge import box_hedge, box_value
from .constructions import counterexample_instance, verify_membership
from .instances import MAX_GEN_GRID, Instance, InstanceError, random_instance
from .lp import solve
from .numeric import TOL, format_number, to_number
from .transport import (
    DUAL_VARIANTS,
    EmptyClassError,
    PayoffGrid,
    band_grid,
    build_dual,
    build_primal,
    canonical_kind,
    check_no_uniform_strong_arbitrage,
    decode_hedge,
    order1_grid,
    price_bound,
    support_grid,
)

log = logging.getLogger("ftbounds")

EXIT_OK, EXIT_INPUT, EXIT_FEATURE, EXIT_EMPTY = 0, 2, 3, 4
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
CONFIG_KEYS = {"exact": False, "tol": TOL, "format": "json", "seed": 0, "out": None, "class": None, "side": "both"}


class FeatureError(Exception):
    """Dimension mismatch or a request the instance cannot support."""


def _jsonable(x):
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, (int, float, Fraction)):
        return format_number(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return str(x)


@dataclass
class RunReport:
    """Everything a subcommand produced, already in JSON-ready form.

    Exact numbers are rendered as ``"p/q"`` strings, floats stay floats.
    """

    command: dict
    mode: str
    results: list = field(default_factory=list)
    certificates: dict = field(default_factory=dict)
    timing: float = 0.0

    def __post_init__(self):
        self.command = _jsonable(self.command)
        self.results = _jsonable(self.results)
        self.certificates = _jsonable(self.certificates)
        self.timing = float(self.timing)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "mode": self.mode,
            "results": self.results,
            "certificates": self.certificates,
            "timing": self.timing,
        }

    @classmethod
    def from_json(cls, data: dict) -> "RunReport":
        return cls(data["command"], data["mode"], data["results"], data["certificates"], data["timing"])

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    def to_csv(self) -> str:
        columns: list = []
        for row in self.results:
            for key in row:
                if key not in columns:
                    columns.append(key)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in self.results:
            writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in row.items()})
        return buf.getvalue()


# ---------------------------------------------------------------- helpers


def _parse_vector(text: str, exact: bool, d: int | None = None, what="point") -> tuple:
    try:
        vec = tuple(to_number(v, exact) for v in text.split(","))
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InstanceError(f"bad {what} {text!r}: {exc}") from None
    if d is not None and len(vec) != d:
        raise FeatureError(f"{what} {text!r} has dimension {len(vec)}, instance has {d}")
    return vec


def _load(args) -> Instance:
    if not args.instance:
        raise InstanceError("--instance is required")
    return Instance.load(args.instance, exact=args.exact)


def _mode(exact: bool) -> str:
    return "exact" if exact else "float"


def _plan_rows(mu):
    return [[list(p), m] for p, m in mu.support()]


def _hedge_json(h):
    return {"variant": h.variant, "price": h.price, "positions": h.positions()}


def _class_grid(kind, inst: Instance, points=()):
    if kind == "Q1":
        if inst.envelopes is None:
            raise InstanceError("class Q1 needs envelopes in the instance")
        return band_grid(inst.envelopes)
    if kind == "F1":
        return order1_grid(inst.marginals, inst.constraints, points)
    return support_grid(inst.marginals)


# ---------------------------------------------------------------- commands


def cmd_bounds(args) -> RunReport:
    inst = _load(args)
    if not args.point:
        raise InstanceError("at least one --point is required")
    which = {"order0", "order1"}
    if args.klass:
        kind = canonical_kind(args.klass)
        which = {"Q0": {"order0"}, "F1": {"order1"}}.get(kind, which)
    rows = []
    for text in args.point:
        x = _parse_vector(text, args.exact, inst.dimension)
        lo, hi = fh.classical_fh_bounds(inst.marginals, x)
        row = {
            "point": list(x),
            "classical_lower": lo,
            "classical_upper": hi,
            "improved_lower": fh.improved_fh_lower(inst.marginals, inst.constraints, x),
            "improved_upper": fh.improved_fh_upper(inst.marginals, inst.constraints, x),
        }
        if "order0" in which:
            row["sharp_order0"] = fh.sharp_upper_order0(inst.marginals, inst.constraints, x)
        if "order1" in which:
            row["sharp_order1"] = fh.sharp_upper_order1(inst.marginals, inst.constraints, x)
        rows.append(row)
    return RunReport({"name": "bounds", "points": args.point}, _mode(args.exact), rows)


def cmd_price(args) -> RunReport:
    inst = _load(args)
    kind = canonical_kind(args.klass or "Q")
    grid = _class_grid(kind, inst)
    payoff = inst.payoff_on(grid)
    marginals, envs = inst.marginals, inst.envelopes
    row = {"class": kind, "side": args.side}
    certs: dict = {}
    if args.side == "both":
        res = price_bound(kind, marginals, inst.constraints, payoff, envs, tol=args.tol)
        row.update(value=res.value, primal=res.primal_value, dual=res.dual_value,
                   gap=abs(res.primal_value - res.dual_value))
        member = verify_membership(res.plan, kind, marginals, inst.constraints, tol=args.tol, envelopes=envs)
        certs = {"plan": _plan_rows(res.plan), "plan_member": member.passed, "hedge": _hedge_json(res.hedge),
                 "hedge_dominates": res.hedge.dominates(payoff, args.tol)}
    elif args.side == "primal":
        sol = solve(build_primal(kind, marginals, inst.constraints, payoff, envs), tol=args.tol)
        if sol.status == "infeasible":
            raise EmptyClassError(kind)
        row.update(value=sol.objective_value, primal=sol.objective_value)
        masses = [(p, m) for p, m in zip(grid.points(), sol.primal) if m]
        certs = {"plan": [[list(p), m] for p, m in masses]}
    else:
        variant = DUAL_VARIANTS[kind]
        lp = build_dual(variant, marginals, inst.constraints, payoff, envs)
        sol = solve(lp, tol=args.tol)
        if sol.status == "unbounded":
            raise EmptyClassError(kind)
        hedge = decode_hedge(variant, lp, sol.primal, grid, inst.constraints, sol.objective_value)
        row.update(value=sol.objective_value, dual=sol.objective_value)
        certs = {"hedge": _hedge_json(hedge)}
    return RunReport({"name": "price", "class": kind, "side": args.side}, _mode(inst.exact), [row], certs)


def cmd_hedge_box(args) -> RunReport:
    inst = _load(args)
    if not args.corner:
        raise InstanceError("--corner is required")
    corner = _parse_vector(args.corner, args.exact, inst.dimension, "corner")
    if args.value_only:
        value = box_value(inst.marginals, inst.constraints, corner)
        return RunReport({"name": "hedge-box", "corner": args.corner}, _mode(args.exact),
                         [{"corner": list(corner), "value": value}])
    if inst.dimension != 2:
        raise FeatureError(f"the explicit hedge needs d = 2, instance has d = {inst.dimension}")
    res = box_hedge(inst.marginals, inst.constraints, corner)
    row = {"corner": list(corner), "value": res.value, "form": res.form, "constraint": res.constraint}
    certs = {"hedge": _hedge_json(res.portfolio)}
    return RunReport({"name": "hedge-box", "corner": args.corner}, _mode(args.exact), [row], certs)


def cmd_counterexample(args) -> RunReport:
    marginals, constraints, table = counterexample_instance(exact=True)
    x = (0, 1)
    bound = fh.improved_fh_upper(marginals, constraints, x)
    res = price_bound("Q", marginals, constraints, PayoffGrid.indicator(support_grid(marginals), x))
    member = verify_membership(table, "exact", marginals, constraints)
    rows = [
        {"quantity": "improved_upper", "point": list(x), "value": bound},
        {"quantity": "class_maximum", "point": list(x), "value": res.value},
        {"quantity": "table_cdf", "point": list(x), "value": table.cdf(x)},
    ]
    certs = {
        "table_member": member.passed,
        "table": _plan_rows(table),
        "plan": _plan_rows(res.plan),
        "hedge": _hedge_json(res.hedge),
    }
    return RunReport({"name": "counterexample"}, "exact", rows, certs)


def cmd_arbitrage(args) -> RunReport:
    inst = _load(args)
    rep = check_no_uniform_strong_arbitrage(inst.marginals, inst.constraints, tol=args.tol)
    row = {"arbitrage_free": rep.arbitrage_free}
    if rep.arbitrage_free:
        certs = {"witness": _plan_rows(rep.witness)}
    else:
        certs = {"portfolio": _hedge_json(rep.portfolio)}
    return RunReport({"name": "arbitrage"}, _mode(inst.exact), [row], certs)


def cmd_gen(args) -> str:
    if args.dim < 1 or args.grid < 1 or args.constraints < 0:
        raise InstanceError("--dim and --grid must be positive, --constraints nonnegative")
    if args.grid > MAX_GEN_GRID:
        raise InstanceError(f"--grid is capped at {MAX_GEN_GRID}")
    gen = random_instance(random.Random(args.seed), args.dim, args.grid, args.constraints)
    return gen.instance.dumps()


COMMANDS = {
    "bounds": cmd_bounds,
    "price": cmd_price,
    "hedge-box": cmd_hedge_box,
    "counterexample": cmd_counterexample,
    "arbitrage": cmd_arbitrage,
    "gen": cmd_gen,
}


# ---------------------------------------------------------------- parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", help="instance JSON file")
    common.add_argument("--exact", action="store_const", const=True, default=None,
                        help="parse numbers as exact rationals")
    common.add_argument("--tol", type=float, default=None, help=f"float tolerance (default {TOL})")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--out", default=None, help="write output here instead of stdout")
    common.add_argument("--config", default=None, help="JSON file with default option values")
    common.add_argument("--class", dest="klass", default=None,
                        choices=("exact", "order0", "order1", "Q", "Q0", "Q1", "F1", "Q1_band"))

    parser = argparse.ArgumentParser(prog="ftb", description="Bounds on joint distributions under dependence constraints.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("bounds", parents=[common], help="closed-form bounds at points")
    p.add_argument("--point", action="append", default=[], help="x1,...,xd (repeatable)")
    p = sub.add_parser("price", parents=[common], help="solve the transport LP and its dual")
    p.add_argument("--side", choices=("primal", "dual", "both"), default=None)
    p = sub.add_parser("hedge-box", parents=[common], help="optimal hedge of a lower-orthant digital")
    p.add_argument("--corner", help="B1,...,Bd")
    p.add_argument("--value-only", action="store_true", help="only the value (any dimension)")
    sub.add_parser("counterexample", parents=[common], help="bound versus class maximum on the bundled instance")
    sub.add_parser("arbitrage", parents=[common], help="check the exact class for emptiness")
    p = sub.add_parser("gen", parents=[common], help="write a random feasible instance")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--grid", type=int, default=4)
    p.add_argument("--constraints", type=int, default=2)
    return parser


def _apply_config(args):
    config = {}
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InstanceError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(config, dict):
            raise InstanceError("config must be a JSON object")
        unknown = set(config) - set(CONFIG_KEYS)
        if unknown:
            raise InstanceError(f"unknown config keys: {sorted(unknown)}")
    for key, default in CONFIG_KEYS.items():
        attr = "klass" if key == "class" else key
        if getattr(args, attr, None) is None:
            setattr(args, attr, config.get(key, default))
    if args.klass is not None:
        canonical_kind(args.klass)


def _setup_logging():
    raw = os.environ.get("FTB_LOG", "warn").lower()
    level = LOG_LEVELS.get(raw, logging.WARNING)
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    log.setLevel(level)
    if raw not in LOG_LEVELS:
        log.warning("ignoring FTB_LOG=%r; expected one of %s", raw, ", ".join(LOG_LEVELS))


def _emit(text: str, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        log.info("running %s", args.command)
        start = time.perf_counter()
        result = COMMANDS[args.command](args)
        if isinstance(result, RunReport):
            result.timing = time.perf_counter() - start
            text = result.to_csv() if args.format == "csv" else result.dumps()
        else:
            text = result
        _emit(text, args.out)
        return EXIT_OK
    except EmptyClassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except FeatureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FEATURE
    except (InstanceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
