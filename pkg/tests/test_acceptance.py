"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`.  The suite is seeded and
deterministic.  Two parts are expected to fail and are kept failing on
purpose: the Monte Carlo oracles of criterion 2 are checked against the
recursive evaluators, but exhaustive enumeration (see
test_adversaries.py) proves those evaluators misstate the implemented
optimal adversaries from n=3 (relay) and n=2 (early-reply).  The companion
check against the exact adversary law passes with the same simulations.
"""

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from dbound import analytics as an
from dbound.experiments import (
    complementary_noise_points,
    figure_rows,
    optimize,
    tradeoff_chart,
)
from dbound.noise import NoiseModel, count_noisy_errors, switched_rounds
from dbound.simkit import (
    ExperimentConfig,
    estimate_availability,
    estimate_security,
    result_record,
)

TRIALS = 1_000_000
NS = range(1, 17)


def _sigma(p: float, trials: int = TRIALS) -> float:
    return math.sqrt(max(p * (1.0 - p), 1e-15) / trials)


def _report(name: str, ok: bool, detail: str = "") -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}" + (f" — {detail}" if detail else ""))


@pytest.fixture(scope="module")
def mc_oracle():
    """One million noiseless trials per (family, n), shared by criterion 2."""
    out = {}
    for family, protocol, adversary in (
        ("ours-mafia", "ours", "mafia-preask"),
        ("ours-distance", "ours", "distance-earlyreply"),
        ("hk-mafia", "hk", "mafia-preask"),
        ("hk-distance", "hk", "distance-earlyreply"),
    ):
        means = {}
        for n in NS:
            cfg = ExperimentConfig(
                protocol=protocol, n=n, x=0, dl=1, trials=TRIALS,
                master_seed=900_000 + n, adversary=adversary, workers=2,
            )
            means[n] = estimate_security(cfg).mean
        out[family] = means
    return out


def test_criterion1_exact_recursion_values():
    checks = [
        abs(an.mafia_success(1) - 0.75) <= 1e-12,
        abs(an.mafia_success(2) - 0.5) <= 1e-12,
        abs(an.distance_success(1) - 0.75) <= 1e-12,
        abs(an.distance_success(2) - 31 / 64) <= 1e-12,
        an.mafia_success_exact(1) == Fraction(3, 4),
        an.mafia_success_exact(2) == Fraction(1, 2),
        an.distance_success_exact(1) == Fraction(3, 4),
        an.distance_success_exact(2) == Fraction(31, 64),
    ]
    _report("1 (recursion values at n=1,2)", all(checks))
    assert all(checks)


def _oracle_deviations(mc: dict, reference) -> list:
    bad = []
    for n in NS:
        ref = reference(n)
        dev = abs(mc[n] - ref) / _sigma(ref)
        if dev > 3.0:
            bad.append((n, round(dev, 1)))
    return bad


def test_criterion2a_relay_mc_vs_recursive_evaluator(mc_oracle):
    """Relay Monte Carlo vs the recursive evaluator.

    Expected to fail for n >= 3: the evaluator provably misstates the law
    of the strategy it describes (exhaustively certified elsewhere).
    """
    bad = _oracle_deviations(mc_oracle["ours-mafia"], an.mafia_success)
    _report("2a (relay MC vs recursive evaluator)", not bad, f"deviations(n, sigmas)={bad}")
    assert not bad, (
        "known evaluator defect: the recursive relay evaluator diverges from "
        f"the simulated optimal adversary at {bad}; see the exact-law companion check"
    )


def test_criterion2b_earlyreply_mc_vs_recursive_evaluator(mc_oracle):
    """Early-reply Monte Carlo vs the recursive evaluator.

    Expected to fail for n >= 2 (exact value 1/2 vs recursive 31/64 at n=2).
    """
    bad = _oracle_deviations(mc_oracle["ours-distance"], an.distance_success)
    _report("2b (early-reply MC vs recursive evaluator)", not bad, f"deviations={bad}")
    assert not bad, (
        "known evaluator defect: the recursive early-reply evaluator diverges from "
        f"the simulated optimal adversary at {bad}; see the exact-law companion check"
    )


def test_criterion2c_hk_mc_vs_closed_form(mc_oracle):
    bad_m = _oracle_deviations(mc_oracle["hk-mafia"], an.hk_mafia)
    bad_d = _oracle_deviations(mc_oracle["hk-distance"], an.hk_distance)
    _report("2c (register-pair MC vs (3/4)^n)", not (bad_m or bad_d),
            f"mafia={bad_m} distance={bad_d}")
    assert not bad_m and not bad_d


def test_criterion2_companion_exact_adversary_law(mc_oracle):
    """Same simulations against the exact two-state law: the evidence that
    the simulator, not the recursion, is the faithful side."""
    bad_m = _oracle_deviations(mc_oracle["ours-mafia"], an.mafia_adversary_exact)
    bad_d = _oracle_deviations(mc_oracle["ours-distance"], an.distance_adversary_exact)
    _report("2 companion (MC vs exact adversary law)", not (bad_m or bad_d),
            f"mafia={bad_m} distance={bad_d}")
    assert not bad_m and not bad_d


def test_criterion3_dominance_and_naive_floor():
    distance = an.distance_success_curve(64)
    mafia = an.mafia_success_curve(64)
    ok = True
    for n in range(1, 65):
        if n >= 2 and not distance[n - 1] < an.hk_distance(n):
            ok = False
        if not (distance[n - 1] >= an.naive_bound(n) and mafia[n - 1] >= an.naive_bound(n)):
            ok = False
    _report("3 (dominance and naive floor over n=1..64)", ok)
    assert ok


def test_criterion4_hk_availability_matches_simulation():
    bad = []
    for p_f, p_b in ((0.01, 0.01), (0.02, 0.03)):
        for x in (0, 3, 5):
            cfg = ExperimentConfig(
                protocol="hk", n=48, x=x, noise=NoiseModel(p_f, p_b),
                trials=TRIALS, master_seed=777 + x, workers=2,
            )
            sim = estimate_availability(cfg).mean
            ref = an.hk_frr(48, x, p_f, p_b)
            dev = abs(sim - ref) / _sigma(ref)
            if dev > 3.0:
                bad.append((p_f, p_b, x, round(dev, 1)))
    zero = estimate_availability(
        ExperimentConfig(protocol="hk", n=48, x=3, trials=50_000, master_seed=7)
    ).mean
    ok = not bad and zero == 0.0
    _report("4 (honest register-pair FRR vs closed form)", ok,
            f"deviations={bad} zero-noise FRR={zero}")
    assert ok


def test_criterion5_noise_resilience_feasibility():
    levels = [round(0.005 * k, 3) for k in range(1, 11)]
    failures = []
    for p in levels:
        result = optimize(
            "ours", 48, NoiseModel.symmetric(p), 0.05,
            trials=200_000, master_seed=4200, workers=2,
        )
        if not (result.feasible and result.frr_mean <= 0.05):
            failures.append(p)
    _report("5 (FRR <= 5% feasible at every noise level)", not failures,
            f"levels={levels} failures={failures}")
    assert not failures


@pytest.fixture(scope="module")
def fig5a_optima():
    out = {}
    for p in (0.01, 0.02, 0.03, 0.04, 0.05):
        noise = NoiseModel.symmetric(p)
        out[p] = (
            optimize("ours", 48, noise, 0.05, trials=TRIALS, master_seed=1000, workers=2),
            optimize("hk", 48, noise, 0.05, trials=TRIALS, master_seed=1000, workers=2),
        )
    return out


def test_criterion6a_ours_beats_hk_under_equal_noise(fig5a_optima):
    """Optimized security comparison on the p_f = p_b sweep.

    The availability constraint forces ever larger tolerances on the
    switch-detecting decision as noise grows; whether the round-dependent
    design stays ahead of the register pair at the top of the sweep is
    decided empirically here.
    """
    rows = []
    bad = []
    for p, (ours, hk) in fig5a_optima.items():
        separated = (
            ours.feasible and hk.feasible
            and ours.security.mean + 3 * ours.security.stderr
            < hk.security.mean - 3 * hk.security.stderr
        )
        rows.append(f"p={p}: ours={ours.security.mean:.3e} hk={hk.security.mean:.3e} sep={separated}")
        if not separated:
            bad.append(p)
    _report("6a (ours strictly below hk, CI-separated)", not bad, "; ".join(rows))
    assert not bad, f"no CI separation at noise levels {bad}"


def test_criterion6b_hk_improves_with_forward_noise():
    """The register-pair sweep under p_f + p_b = 0.05.

    The true curve is sawtooth-shaped: within a fixed-tolerance plateau the
    relay channel gets cleaner as p_b falls, nudging adversary success up,
    while every plateau transition (smaller feasible x) drops it sharply.
    Pointwise comparisons therefore carry a 3-sigma Monte Carlo allowance,
    and the end-to-end decline is asserted with full CI separation.
    """
    results = []
    for p_f, p_b in complementary_noise_points():
        results.append(
            optimize("hk", 48, NoiseModel(p_f, p_b), 0.05,
                     trials=TRIALS, master_seed=31337, workers=2)
        )
    bad = []
    for a, b in zip(results, results[1:]):
        slack = 3 * (a.security.stderr + b.security.stderr)
        if b.security.mean > a.security.mean + slack:
            bad.append((a.noise.p_f, b.noise.p_f))
    first, last = results[0].security, results[-1].security
    overall = last.mean + 3 * last.stderr < first.mean - 3 * first.stderr
    seq = [f"{r.security.mean:.2e}" for r in results]
    _report("6b (hk optimized security non-increasing in p_f)", not bad and overall,
            f"sweep={seq} violations={bad} end-to-end-decline={overall}")
    assert overall, "security at p_f=0.05 must sit clearly below p_f=0"
    assert not bad


def test_criterion7_tradeoff_diagonal():
    uncapped = tradeoff_chart(a_max=32, b_max=32, n_max=64, seed=0)
    capped = tradeoff_chart(a_max=32, b_max=32, n_max=64, memory_cap_per_round=5.0, seed=0)
    bad = []
    for chart, label in ((uncapped, "uncapped"), (capped, "capped")):
        cellmap = {(c.a, c.b): c for c in chart}
        for k in range(4, 33):
            if cellmap[(k, k)].winner != "ours":
                bad.append((label, k, cellmap[(k, k)].winner))
    _report("7 (balanced-target winner is ours, both charts)", not bad, f"violations={bad}")
    assert not bad


def test_criterion8_detector_golden_suite():
    golden = json.loads(
        (Path(__file__).parent / "data" / "detector_golden.json").read_text()
    )
    mismatches = []
    for case in golden:
        events = [list(e) for e in switched_rounds(case["d"], case["q"], case["dl"])]
        if events != case["expected"]:
            mismatches.append(case["d"])
    # noiseless-accept and alternating-mismatch decision traces
    assert count_noisy_errors("0" * 24, "10" * 12, 1) == 0
    alternating = "01" * 12
    trace_ok = all(count_noisy_errors(alternating, "1" * 24, dl) == 12 for dl in (2, 3, 4))
    # randomized invariants
    rng = np.random.default_rng(88)
    fuzz_ok = True
    for _ in range(10_000):
        n = int(rng.integers(1, 49))
        d = tuple(rng.integers(0, 2, n))
        q = tuple((rng.random(n) < 0.4).astype(int))
        dl = int(rng.integers(1, n + 1))
        events = switched_rounds(d, q, dl)
        rounds = [r for r, _ in events]
        dirs = [s for _, s in events]
        if events != switched_rounds(d, q, dl):
            fuzz_ok = False
        if rounds != sorted(set(rounds)) or any(q[r - 1] != 1 for r in rounds):
            fuzz_ok = False
        if any(x == y for x, y in zip(dirs, dirs[1:])):
            fuzz_ok = False
    ok = not mismatches and trace_ok and fuzz_ok
    _report("8 (detector goldens, traces, fuzz invariants)", ok,
            f"golden mismatches={mismatches}")
    assert ok


def test_criterion9_worker_count_determinism():
    texts = set()
    for workers in (1, 4):
        cfg = ExperimentConfig(
            protocol="ours", n=16, noise=NoiseModel.symmetric(0.02), x=3, dl=4,
            trials=50_000, master_seed=555, workers=workers,
        )
        rec = result_record(cfg, "security", estimate_security(cfg))
        rec["config"]["workers"] = None  # the knob itself is not part of the result
        texts.add(json.dumps(rec, sort_keys=True))
    csv_texts = set()
    for workers in (1, 2):
        header, rows = figure_rows("fig5b", n_noisy=8, trials=4_000,
                                   master_seed=9, workers=workers)
        csv_texts.add("\n".join(",".join(r) for r in [header] + rows))
    ok = len(texts) == 1 and len(csv_texts) == 1
    _report("9 (byte-identical outputs across worker counts)", ok)
    assert ok
