"""Batch command line: payout curves, product comparison, simulation, checks.

Every command can read a JSON scenario file; command-line flags override
file values, which override built-in defaults.  Output is CSV with a header
row, ``\\n`` line endings and numbers in ``{:.6g}`` form.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 a property
suite failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from typing import Any, Optional

from . import products, scenarios, simulator, verify
from .errors import ConvergenceError, DivergenceError, DomainError
from .mortality import MortalityBasis
from .pool_math import PoolSpec
from .quadrature import DEFAULT_REL_TOL, EconomicBasis, QuadratureRule

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_INVARIANT = 4

SEED_ENV = "TONTINE_SEED"

SCENARIO_KEYS = {
    "id": str,
    "mortality": dict,
    "subjective": dict,
    "pool": dict,
    "economy": dict,
    "grid": dict,
    "simulation": dict,
    "seed": int,
    "tol": float,
    "scheme": str,
    "horizon": float,
    "percentiles": list,
    "envelope": str,
}
SECTION_KEYS = {
    "pool": {"n", "gamma"},
    "economy": {"r", "loading"},
    "grid": {"step"},
    "simulation": {
        "n", "w", "schedule", "product", "annuity_rate", "valuation_rate",
        "omega", "runs", "stop_at", "workers",
    },
}

DEFAULTS = {
    "mortality": {"m": 88.72, "b": 10.0, "l": 0.0, "x": 65.0},
    "pool": {"n": 25, "gamma": 1.0},
    "economy": {"r": 0.04, "loading": 0.0},
    "grid": {"step": products.DEFAULT_STEP},
    "simulation": {
        "n": 1000, "w": 100.0, "schedule": [[1, 0.10], [8, 0.07]], "product": "tontine",
        "annuity_rate": 0.14, "valuation_rate": 0.06, "omega": 105, "runs": 10_000,
        "stop_at": None, "workers": 1,
    },
    "tol": DEFAULT_REL_TOL,
    "scheme": "simpson",
    "horizon": None,
    "percentiles": [0.1, 0.9],
    "envelope": "optimal",
    "seed": scenarios.DEFAULT_SEED,
}


class InputError(DomainError):
    """Malformed scenario file or flag value."""


def fmt(value: Any) -> str:
    """CSV cell text: six significant digits for floats."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return "{:.6g}".format(value)
    return str(value)


def write_csv(header: list[str], rows: list[list[Any]], out: str) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)


def diag(message: str) -> None:
    print(message, file=sys.stderr)


def load_scenario(path: Optional[str]) -> dict:
    """Read and shape-check a scenario file; unknown keys are rejected."""
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"scenario {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError("scenario must be a JSON object")
    unknown = set(data) - set(SCENARIO_KEYS)
    if unknown:
        raise InputError(f"unknown scenario keys: {sorted(unknown)}")
    for key, value in data.items():
        expected = SCENARIO_KEYS[key]
        if expected is float and isinstance(value, int) and not isinstance(value, bool):
            continue
        if key == "horizon" and value is None:
            continue
        if not isinstance(value, expected) or isinstance(value, bool):
            raise InputError(f"scenario key {key!r} must be {expected.__name__}")
    for section, allowed in SECTION_KEYS.items():
        extra = set(data.get(section, {})) - allowed
        if extra:
            raise InputError(f"unknown keys in {section!r}: {sorted(extra)}")
    for section in ("mortality", "subjective"):
        if section in data:
            extra = set(data[section]) - {"m", "b", "l", "x"}
            if extra:
                raise InputError(f"unknown keys in {section!r}: {sorted(extra)}")
    return data


class Settings:
    """Merged view of defaults, scenario file and flags (flag > file > default)."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file = load_scenario(getattr(args, "scenario", None))

    def _flag(self, name: str):
        return getattr(self.args, name, None)

    def get(self, key: str, flag: Optional[str] = None):
        value = self._flag(flag or key)
        if value is not None:
            return value
        if key in self.file:
            return self.file[key]
        return DEFAULTS[key]

    def section(self, section: str, key: str, flag: Optional[str] = None):
        value = self._flag(flag or key)
        if value is not None:
            return value
        if key in self.file.get(section, {}):
            return self.file[section][key]
        return DEFAULTS[section][key]

    def mortality(self) -> MortalityBasis:
        data = dict(DEFAULTS["mortality"])
        data.update(self.file.get("mortality", {}))
        for key in ("m", "b", "l", "x"):
            value = self._flag(key)
            if value is not None:
                data[key] = value
        return MortalityBasis.from_dict(data)

    def subjective(self) -> Optional[MortalityBasis]:
        data = dict(self.file.get("subjective", {}))
        if self._flag("subjective_m") is not None:
            data["m"] = self._flag("subjective_m")
        if not data:
            return None
        base = self.mortality()
        merged = base.to_dict()
        merged.update(data)
        return MortalityBasis.from_dict(merged)

    def economy(self) -> EconomicBasis:
        return EconomicBasis(float(self.section("economy", "r")), float(self.section("economy", "loading")))

    def rule(self) -> QuadratureRule:
        horizon = self.get("horizon")
        return QuadratureRule(
            rel_tol=float(self.get("tol")),
            scheme=self.get("scheme"),
            horizon=None if horizon is None else float(horizon),
        )

    def seed(self) -> int:
        if self._flag("seed") is not None:
            return self._flag("seed")
        if "seed" in self.file:
            return self.file["seed"]
        env = os.environ.get(SEED_ENV)
        if env is not None:
            try:
                return int(env)
            except ValueError as exc:
                raise InputError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
        return DEFAULTS["seed"]


def _as_list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _pool(n, gamma) -> PoolSpec:
    if isinstance(n, float) and n.is_integer():
        n = int(n)
    return PoolSpec(n, float(gamma))


def parse_schedule(value) -> list[tuple[int, float]]:
    """Step schedule ``[[from_year, rate], ...]`` or the flag form ``"1:0.10,8:0.07"``."""
    if isinstance(value, str):
        try:
            steps = [tuple(part.split(":")) for part in value.split(",") if part.strip()]
            steps = [(int(a), float(b)) for a, b in steps]
        except ValueError as exc:
            raise InputError(f"bad schedule {value!r}; expected 'year:rate,...'") from exc
    else:
        try:
            steps = [(int(a), float(b)) for a, b in value]
        except (TypeError, ValueError) as exc:
            raise InputError("schedule must be a list of [from_year, rate] pairs") from exc
    if not steps or steps[0][0] != 1 or any(b[0] <= a[0] for a, b in zip(steps, steps[1:])):
        raise InputError("schedule steps must start at year 1 and increase")
    return steps


def schedule_rates(steps: list[tuple[int, float]], years: int) -> list[float]:
    rates = []
    for t in range(1, years + 1):
        rate = steps[0][1]
        for start, r in steps:
            if t >= start:
                rate = r
        rates.append(rate)
    return rates


def simulation_config(settings: Settings) -> simulator.SimulationConfig:
    basis = settings.mortality()
    omega = settings.section("simulation", "omega")
    steps = parse_schedule(settings.section("simulation", "schedule"))
    years = int(omega - basis.x) if omega > basis.x else 1
    stop_at = settings.section("simulation", "stop_at")
    return simulator.SimulationConfig(
        basis=basis,
        n=settings.section("simulation", "n", "sim_n"),
        w=float(settings.section("simulation", "w")),
        payout_schedule=schedule_rates(steps, years),
        product=settings.section("simulation", "product"),
        annuity_rate=float(settings.section("simulation", "annuity_rate")),
        valuation_rate=float(settings.section("simulation", "valuation_rate")),
        omega=omega,
        runs=settings.section("simulation", "runs"),
        seed=settings.seed(),
        stop_at=stop_at,
    )


# Commands -------------------------------------------------------------------


def cmd_payout(args: argparse.Namespace) -> int:
    settings = Settings(args)
    basis = settings.mortality()
    econ = settings.economy()
    rule = settings.rule()
    pool = _pool(settings.section("pool", "n"), settings.section("pool", "gamma"))
    step = float(settings.section("grid", "step"))
    if not step > 0:
        raise InputError("grid step must be positive")
    grid = products.default_grid(basis, step)
    curves = {
        "optimal": products.tontine_payout_curve("optimal", pool, basis, econ, grid, rule),
        "natural": products.tontine_payout_curve("natural", None, basis, econ, grid, rule),
        "flat": products.tontine_payout_curve("flat", None, basis, econ, grid, rule),
    }
    subjective = settings.subjective()
    if subjective is not None:
        curves["subjective_optimal"] = products.subjective_tontine_payout(pool, basis, subjective, econ, grid, rule)
    which = settings.get("envelope")
    if which not in curves:
        raise InputError(f"envelope must name one of {sorted(curves)}, got {which!r}")
    lo, hi = settings.get("percentiles")
    band = simulator.payout_envelope(pool, curves[which], (float(lo), float(hi)))
    for kind, curve in curves.items():
        budget = curve.budget(rule)
        status = "ok" if abs(budget - 1.0) <= 1e-6 else "FAILED"
        diag(f"budget {kind}: {budget:.10f} ({status})")
    header = ["t", "age", "survival", "d_optimal", "d_natural", "d_flat", "envelope_lo", "envelope_hi"]
    if subjective is not None:
        header.append("d_subjective_optimal")
    rows = []
    for i, t in enumerate(grid):
        row = [float(t), float(basis.x + t), float(curves["optimal"].survival[i]),
               float(curves["optimal"].rates[i]), float(curves["natural"].rates[i]),
               float(curves["flat"].rates[i]), float(band.lower[i]), float(band.upper[i])]
        if subjective is not None:
            row.append(float(curves["subjective_optimal"].rates[i]))
        rows.append(row)
    write_csv(header, rows, args.out)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    settings = Settings(args)
    basis = settings.mortality()
    econ = settings.economy()
    rule = settings.rule()
    sizes = _as_list(settings.section("pool", "n"))
    gammas = _as_list(settings.section("pool", "gamma"))
    header = ["n", "gamma", "u_annuity", "u_loaded_annuity", "u_optimal_tontine",
              "u_natural_tontine", "delta_bp", "certainty_equivalent"]
    rows = []
    for n in sizes:
        for g in gammas:
            pool = _pool(n, g)
            report = products.utility_report(pool, basis, econ, rule)
            delta = products.indifference_loading(pool, basis, econ, rule)
            try:
                ce: Any = products.certainty_equivalent_ratio(pool, basis, econ, rule)
            except DivergenceError:
                ce = "diverges"
            u_nat = "diverges" if report.u_natural_tontine is None else report.u_natural_tontine
            rows.append([pool.n, float(g), report.u_annuity, report.u_loaded_annuity,
                         report.u_optimal_tontine, u_nat, 1e4 * delta, ce])
    write_csv(header, rows, args.out)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    settings = Settings(args)
    cfg = simulation_config(settings)
    workers = int(settings.section("simulation", "workers"))
    res = simulator.simulate_present_value(cfg, workers=max(1, workers))
    name = settings.get("id") if "id" in settings.file else "scenario"
    diag(f"standard error of APV: {res.standard_error:.6g} ({res.runs} runs, seed {res.seed})")
    header = ["scenario", "apv", "sd", "skewness", "kurtosis", "runs", "seed", "apv_stderr"]
    rows = [[name, res.apv, res.sd, res.skewness, res.kurtosis, res.runs, res.seed, res.standard_error]]
    write_csv(header, rows, args.out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    results = verify.run_suites(args.grid, args.inject_fault)
    for res in results:
        print(res.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        diag(f"failed: {', '.join(failed)}")
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_tables(args: argparse.Namespace) -> int:
    settings = Settings(args)
    rule = QuadratureRule(rel_tol=float(settings.get("tol")))
    wanted = args.table or ["payout", "loading", "scaled_loading", "certainty", "historical"]
    cells = []
    for name in wanted:
        if name == "historical":
            runs = args.runs if args.runs is not None else 10_000
            cells.extend(scenarios.reproduce_historical(settings.seed(), runs, max(1, args.workers)))
        else:
            cells.extend(scenarios.TABLES[name](rule))
    rows = [[c.table, c.row, c.column, c.value, c.reference] for c in cells]
    write_csv(["table", "row", "column", "value", "reference"], rows, args.out)
    return EXIT_OK


# Parser ---------------------------------------------------------------------


def _nonneg_seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _number_list(text: str):
    parts = [p for p in text.split(",") if p.strip()]
    values = [float(p) for p in parts]
    return values if len(values) > 1 else values[0]


def _percentiles(text: str):
    lo, hi = (float(p) for p in text.split(","))
    return [lo, hi]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", help="JSON scenario file")
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--tol", type=float, help="relative tolerance of the quadrature")
    p.add_argument("--seed", type=_nonneg_seed, help=f"random seed (falls back to ${SEED_ENV})")


def _mortality_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("mortality")
    g.add_argument("--m", type=float, help="modal age at death")
    g.add_argument("--b", type=float, help="dispersion in years")
    g.add_argument("--l", type=float, help="Makeham constant hazard")
    g.add_argument("--x", type=float, help="entry age")


def _product_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pool and economy")
    g.add_argument("--n", type=_number_list, help="pool size (comma list allowed for compare)")
    g.add_argument("--gamma", type=_number_list, help="risk aversion (comma list allowed for compare)")
    g.add_argument("--r", type=float, help="interest and discount rate")
    g.add_argument("--loading", type=float, help="annuity loading fraction")
    g.add_argument("--scheme", choices=("simpson", "annual"), help="integration scheme")
    g.add_argument("--horizon", type=float, help="integration horizon in years")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tontine", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("payout", help="optimal, natural and flat payout curves")
    _common(p)
    _mortality_flags(p)
    _product_flags(p)
    p.add_argument("--step", type=float, help="grid step in years")
    p.add_argument("--percentiles", type=_percentiles, help="envelope quantiles 'lo,hi'")
    p.add_argument("--envelope", help="curve used for the dividend envelope")
    p.add_argument("--subjective-m", dest="subjective_m", type=float, help="subjective modal age")
    p.set_defaults(func=cmd_payout)

    p = sub.add_parser("compare", help="utilities, indifference loading and certainty equivalents")
    _common(p)
    _mortality_flags(p)
    _product_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="Monte Carlo present value of tontine or annuity")
    _common(p)
    _mortality_flags(p)
    g = p.add_argument_group("simulation")
    g.add_argument("--sim-n", dest="sim_n", type=int, help="pool size")
    g.add_argument("--w", type=float, help="contribution per share")
    g.add_argument("--schedule", help="dividend steps 'year:rate,...'")
    g.add_argument("--product", choices=simulator.PRODUCTS)
    g.add_argument("--annuity-rate", dest="annuity_rate", type=float)
    g.add_argument("--valuation-rate", dest="valuation_rate", type=float)
    g.add_argument("--omega", type=int, help="maximum age")
    g.add_argument("--runs", type=int, help="number of Monte Carlo runs")
    g.add_argument("--stop-at", dest="stop_at", type=int, help="stop dividends at this many survivors")
    g.add_argument("--workers", type=int, help="worker processes")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the property suites")
    p.add_argument("--grid", choices=verify.GRIDS, default="small")
    p.add_argument("--inject-fault", dest="inject_fault", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("tables", help="recompute the reference tables")
    _common(p)
    p.add_argument("--table", action="append", choices=sorted(scenarios.TABLES) + ["historical"],
                   help="restrict to one table (repeatable)")
    p.add_argument("--runs", type=int, help="Monte Carlo runs for the historical table")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_tables)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        diag(f"error: {exc}")
        return EXIT_INPUT
    except (ConvergenceError, DivergenceError, OverflowError, FloatingPointError) as exc:
        diag(f"numerical failure: {exc}")
        return EXIT_NUMERIC
    except (TypeError, ValueError) as exc:
        diag(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
