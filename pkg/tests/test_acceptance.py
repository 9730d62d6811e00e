"""Acceptance criteria: one PASS/FAIL line per criterion with its tolerance."""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from tontine import cli, products, scenarios, simulator, verify
from tontine.mortality import MortalityBasis, annual_death_probs, survival_probability
from tontine.pool_math import PoolSpec
from tontine.quadrature import EconomicBasis

SEED = scenarios.DEFAULT_SEED


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
        assert ok, detail

    return emit


def test_criterion_1_payout_table(report):
    start = time.perf_counter()
    cells = scenarios.reproduce_payout_table()
    elapsed = time.perf_counter() - start
    worst = max(abs(c.value - c.reference) for c in cells)
    ok = len(cells) == 18 and worst <= 0.01 and elapsed < 5.0
    report(1, ok, f"18 payout rates, max |diff| {worst:.4f} pp (tol 0.01 pp), {elapsed:.2f} s (< 5 s)")


def test_criterion_2_survival_anchors(report):
    table_basis = MortalityBasis(m=88.72, b=10.0, x=65.0)
    anchors = [
        ("15p65", survival_probability(table_basis, 15), 0.722),
        ("30p65", survival_probability(table_basis, 30), 0.168),
        ("35p65 (m=88.721)", survival_probability(MortalityBasis(m=88.721, b=10.0, x=65.0), 35), 0.05),
    ]
    misses = [f"{name}={v:.5f} vs {ref}" for name, v, ref in anchors if abs(v - ref) > 5e-4]
    detail = ", ".join(f"{name}={v:.5f}" for name, v, _ in anchors) + " (tol 5e-4)"
    if misses:
        detail += "; outside: " + "; ".join(misses)
    report(2, not misses, detail)


def test_criterion_3_loading_table(report):
    start = time.perf_counter()
    cells = scenarios.reproduce_loading_table()
    elapsed = time.perf_counter() - start
    bad = [c for c in cells if abs(c.value - c.reference) > max(0.01 * c.reference, 0.2)]
    worst = max(abs(c.value / c.reference - 1) for c in cells)
    ok = len(cells) == 30 and not bad and elapsed < 60.0
    report(3, ok, f"30 loadings, {len(bad)} outside max(1%, 0.2 bp), worst rel {worst:.2%}, {elapsed:.1f} s (< 60 s)")


def test_criterion_4_scaled_loading(report):
    cells = scenarios.reproduce_scaled_loading()
    seq, limit = cells[:3], cells[3]
    ok = all(abs(c.value - c.reference) <= 0.002 for c in seq) and abs(limit.value - limit.reference) <= 0.001
    values = ", ".join(f"{c.value:.4f}" for c in seq)
    report(4, ok, f"n*delta = {values} (tol 0.002), limit {limit.value:.4f} vs 0.6593 (tol 0.001)")


def test_criterion_5_certainty_table(report):
    cells = scenarios.reproduce_certainty_table()
    log_exact = all(c.value == 1.0 for c in cells if c.column == "gamma=1")
    worst = max(abs(c.value - c.reference) for c in cells)
    ok = len(cells) == 18 and worst <= 1e-5 and log_exact
    report(5, ok, f"18 ratios, max |diff| {worst:.2e} (tol 1e-5), gamma=1 column exactly 1: {log_exact}")


def test_criterion_6_historical_simulation(report):
    start = time.perf_counter()
    lines, bad = [], []
    for name, cfg in scenarios.historical_configs(SEED, 10_000):
        res = simulator.simulate_present_value(cfg)
        apv, _, skew = scenarios.HISTORICAL_TABLE[(cfg.product, cfg.valuation_rate, name.rsplit("-", 1)[1])]
        z = (res.apv - apv) / res.standard_error
        if abs(z) > 3:
            bad.append(f"{name} apv z={z:.2f}")
        if cfg.product == "annuity" and not res.skewness < 0:
            bad.append(f"{name} skew {res.skewness:.2f} not negative")
        if cfg.product == "tontine" and skew > 0 and not res.skewness > 0:
            bad.append(f"{name} skew {res.skewness:.2f} not positive")
        lines.append(f"{name} {res.apv:.2f}/{apv} z={z:+.2f}")
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 120.0
    detail = f"12 APVs within 3 SE, skew signs; seed {SEED}, M=10000, {elapsed:.1f} s (< 120 s); " + "; ".join(lines)
    if bad:
        detail += " | failures: " + "; ".join(bad)
    report(6, ok, detail)


def test_criterion_7_property_suites(report, capsys):
    results = verify.run_suites("full")
    code = cli.main(["verify"])
    capsys.readouterr()
    failed = [r.name for r in results if not r.passed]
    cases = sum(r.cases for r in results)
    ok = not failed and code == 0
    report(7, ok, f"{len(results)} suites, {cases} cases on the full grid, failed {failed or 'none'}; verify exit {code}")


def test_criterion_8_simulation_matches_expectation(report):
    basis = MortalityBasis(m=88.72, b=10.0, x=65.0)
    econ = EconomicBasis(0.04)
    pool = PoolSpec(100, 2.0)
    curve = products.tontine_payout_curve("optimal", pool, basis, econ, grid=[0.0])
    years = int(130 - basis.x)
    # Shift so that year t is reached with probability tpx.
    q = np.concatenate([[0.0], annual_death_probs(basis, years)])
    cfg = simulator.SimulationConfig(
        basis=basis, n=pool.n, w=100.0, payout_schedule=curve.rate_at,
        valuation_rate=math.expm1(econ.r), omega=130, runs=100_000, seed=SEED, death_probs=q,
    )
    res = simulator.simulate_present_value(cfg)
    expected = simulator.expected_present_value(cfg)
    rel = res.apv / expected - 1
    report(8, abs(rel) <= 0.005,
           f"optimal-curve tontine APV {res.apv:.4f} vs discrete expectation {expected:.4f}, rel {rel:+.4%} (tol 0.5%)")


def test_criterion_9_deterministic_csv(report, tmp_path):
    outputs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        cmd = [sys.executable, "-m", "tontine", "simulate", "--runs", "2000", "--seed", "12345", "--out", str(path)]
        subprocess.run(cmd, check=True, capture_output=True)
        outputs.append(path.read_bytes())
    report(9, outputs[0] == outputs[1] and len(outputs[0]) > 0,
           f"two simulate runs with seed 12345 byte-identical ({len(outputs[0])} bytes)")
