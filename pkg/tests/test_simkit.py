"""Monte Carlo engine: reproducibility, oracle agreement, estimators."""

import json
import math

import pytest

from dbound import analytics as an
from dbound.experiments import at_mafia_exact
from dbound.noise import NoiseModel
from dbound.simkit import (
    Estimate,
    ExperimentConfig,
    derive_trial_seed,
    estimate_availability,
    estimate_security,
    result_record,
    run_histograms,
)

TRIALS = 100_000


def _sigma(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 1e-12) / trials)


def test_derive_trial_seed_contract():
    assert derive_trial_seed(7, 3) == derive_trial_seed(7, 3)
    assert derive_trial_seed(7, 3) != derive_trial_seed(7, 4)
    assert derive_trial_seed(7, 3) != derive_trial_seed(8, 3)
    with pytest.raises(ValueError):
        derive_trial_seed(7, -1)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(protocol="ours", n=8, x=9)
    with pytest.raises(ValueError):
        ExperimentConfig(protocol="ours", n=8, adversary="post-ask")
    with pytest.raises(ValueError):
        ExperimentConfig(protocol="ours", n=8, predefined=3)


def test_estimate_intervals():
    est = Estimate.from_binomial(50_000, 100_000)
    assert est.ci95[0] < est.mean < est.ci95[1]
    rare = Estimate.from_binomial(2, 100_000)
    assert rare.ci95[0] <= rare.mean <= rare.ci95[1]
    assert rare.ci95[1] > rare.mean  # Wilson keeps headroom near zero
    assert Estimate.from_binomial(0, 10).mean == 0.0


def test_worker_count_does_not_change_results():
    base = None
    for workers in (1, 2, 5):
        cfg = ExperimentConfig(
            protocol="ours", n=16, noise=NoiseModel.symmetric(0.02),
            x=2, dl=4, trials=60_000, master_seed=99, workers=workers,
        )
        rec = result_record(cfg, "security", estimate_security(cfg))
        text = json.dumps(rec, sort_keys=True)
        if base is None:
            base = text
        assert text == base


def test_same_seed_reproduces():
    cfg = ExperimentConfig(protocol="hk", n=12, trials=30_000, master_seed=4)
    assert estimate_security(cfg) == estimate_security(cfg)


def test_oracle_agreement_noiseless_ours():
    # the anti-drift gate: simulation must track the exact adversary law
    for adversary in ("mafia-preask", "distance-earlyreply"):
        for n in (1, 2, 3, 5, 8, 12):
            cfg = ExperimentConfig(
                protocol="ours", n=n, x=0, dl=1, trials=TRIALS,
                master_seed=1000 + n, adversary=adversary,
            )
            est = estimate_security(cfg)
            exact = an.mafia_adversary_exact(n)
            assert abs(est.mean - exact) < 4 * _sigma(exact, TRIALS), (adversary, n)


def test_oracle_agreement_hk():
    for n in (1, 4, 10, 20):
        cfg = ExperimentConfig(protocol="hk", n=n, x=0, trials=TRIALS, master_seed=n)
        est = estimate_security(cfg)
        assert abs(est.mean - an.hk_mafia(n)) < 4 * _sigma(an.hk_mafia(n), TRIALS)
        cfg = ExperimentConfig(
            protocol="hk", n=n, x=0, trials=TRIALS, master_seed=n,
            adversary="distance-earlyreply",
        )
        est = estimate_security(cfg)
        assert abs(est.mean - an.hk_distance(n)) < 4 * _sigma(an.hk_distance(n), TRIALS)


def test_naive_adversary_rate():
    cfg = ExperimentConfig(protocol="ours", n=10, x=0, dl=1, trials=TRIALS,
                           master_seed=5, adversary="naive-random")
    est = estimate_security(cfg)
    assert abs(est.mean - 2.0**-10) < 4 * _sigma(2.0**-10, TRIALS)


def test_vacuous_threshold_accepts_everything():
    cfg = ExperimentConfig(protocol="ours", n=8, x=8, dl=3, trials=5_000,
                           master_seed=2, noise=NoiseModel.symmetric(0.05))
    assert estimate_security(cfg).mean == 1.0


def test_availability_zero_noise_is_exactly_zero():
    for protocol in ("ours", "hk"):
        for x in (0, 3):
            cfg = ExperimentConfig(protocol=protocol, n=16, x=x, dl=2,
                                   trials=20_000, master_seed=3)
            assert estimate_availability(cfg).mean == 0.0


def test_hk_availability_matches_closed_form():
    noise = NoiseModel(0.01, 0.01)
    cfg = ExperimentConfig(protocol="hk", n=48, x=5, noise=noise,
                           trials=TRIALS, master_seed=8)
    est = estimate_availability(cfg)
    frr = an.hk_frr(48, 5, 0.01, 0.01)
    assert abs(est.mean - frr) < 4 * _sigma(frr, TRIALS)


def test_ours_availability_saturates_with_tiny_tolerance():
    cfg = ExperimentConfig(protocol="ours", n=48, x=0, dl=1,
                           noise=NoiseModel.symmetric(0.05),
                           trials=20_000, master_seed=9)
    assert estimate_availability(cfg).mean > 0.9


def test_at_mafia_simulation_matches_exact_law():
    for protocol, depth, trees, n in (("at:d=2", 2, 2, 4), ("at3", 3, 2, 6), ("at", 5, 1, 5)):
        cfg = ExperimentConfig(protocol=protocol, n=n, x=0, trials=TRIALS, master_seed=n)
        est = estimate_security(cfg)
        exact = at_mafia_exact(depth, trees)
        assert abs(est.mean - exact) < 4 * _sigma(exact, TRIALS), protocol


def test_at_honest_noiseless_and_noisy():
    cfg = ExperimentConfig(protocol="at:d=4", n=8, x=0, trials=10_000, master_seed=6)
    assert estimate_availability(cfg).mean == 0.0
    noisy = ExperimentConfig(protocol="at:d=4", n=8, x=0, trials=50_000,
                             master_seed=6, noise=NoiseModel(0.05, 0.0))
    # forward flips corrupt whole tree blocks; FRR must be clearly positive
    assert estimate_availability(noisy).mean > 0.05


def test_at_distance_mode_is_explicitly_unrouted():
    cfg = ExperimentConfig(protocol="at", n=6, trials=100, master_seed=1,
                           adversary="distance-earlyreply")
    with pytest.raises(ValueError):
        estimate_security(cfg)


def test_grid_pass_matches_single_cell():
    noise = NoiseModel.symmetric(0.02)
    grid = run_histograms("ours", "honest", 12, noise, 40_000, 77, dls=(1, 3, 6))
    for dl in (1, 3, 6):
        for x in (0, 2, 6):
            cfg = ExperimentConfig(protocol="ours", n=12, noise=noise, x=x, dl=dl,
                                   trials=40_000, master_seed=77)
            est = estimate_availability(cfg)
            assert est.successes == 40_000 - grid.accept_count(x, dl)


def test_record_shape():
    cfg = ExperimentConfig(protocol="ours", n=4, trials=1000, master_seed=12)
    rec = result_record(cfg, "security", estimate_security(cfg))
    assert set(rec) == {"config", "mean", "stderr", "trials", "successes", "ci95", "seed"}
    assert rec["config"]["protocol"] == "ours"
