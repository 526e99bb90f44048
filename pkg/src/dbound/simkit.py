"""Seeded Monte Carlo engine for security and availability estimates.

Sessions are simulated in fixed-size chunks of trials, vectorized across
the chunk.  Chunk i draws its randomness from a counter-based Philox stream
keyed by (master_seed, first trial index of the chunk), so results are
bit-identical for a given master seed regardless of worker count, and
worker reduction is a plain integer sum of per-chunk histograms.

Register material is drawn uniformly per trial rather than through the
keyed PRF: the security model treats PRF output as uniform, and the PRF
itself is unit-tested separately.  Baseline tree states are never
materialized; answers from unvisited nodes are marginalized as fresh fair
coins, which is exact because distinct nodes carry independent uniform
labels.

The error count of a trial is decision-parameter-free, so one pass yields
the whole (tolerance x, threshold dl) grid for the optimizer: histograms of
error counts are accumulated per dl and acceptance at (x, dl) is the mass
at errors <= x.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from ._kernels import detector_error_grid
from .noise import NO_NOISE, NoiseModel

CHUNK_TRIALS = 1 << 14
_MASK64 = (1 << 64) - 1

ADVERSARIES = ("mafia-preask", "distance-earlyreply", "naive-random")
MODES = ("honest",) + ADVERSARIES


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """Counter-based stream split: a collision-free 128-bit Philox key."""
    if trial_index < 0:
        raise ValueError("trial index must be >= 0")
    return ((master_seed & _MASK64) << 64) | (trial_index & _MASK64)


def _chunk_rng(master_seed: int, first_trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=derive_trial_seed(master_seed, first_trial)))


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment: protocol, adversary or honest prover,
    channel noise, decision parameters, and reproducibility inputs.

    The predefined field is reserved for challenge-predefining designs and
    must stay 0 for the implemented protocols.
    """

    protocol: str
    n: int
    noise: NoiseModel = NO_NOISE
    x: int = 0
    dl: int = 1
    trials: int = 1_000_000
    master_seed: int = 0
    adversary: str = "mafia-preask"
    noise_legs: str = "both"  # where relay noise acts: both | prover | verifier
    workers: int = 1
    predefined: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.x <= self.n:
            raise ValueError("tolerance x must lie in 0..n")
        if not 1 <= self.dl:
            raise ValueError("dl must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.adversary not in ADVERSARIES:
            raise ValueError(f"unknown adversary {self.adversary!r}")
        if self.noise_legs not in ("both", "prover", "verifier"):
            raise ValueError(f"unknown noise_legs {self.noise_legs!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.predefined:
            raise ValueError("predefined challenges are reserved for future protocol ids")


@dataclass(frozen=True)
class Estimate:
    """Binomial proportion with its standard error and 95% interval."""

    mean: float
    stderr: float
    trials: int
    ci95: Tuple[float, float]
    successes: int

    @classmethod
    def from_binomial(cls, successes: int, trials: int) -> "Estimate":
        p = successes / trials
        stderr = math.sqrt(p * (1.0 - p) / trials)
        few = min(successes, trials - successes) < 10
        if few:
            # Wilson interval: stable when the proportion sits near 0 or 1
            z = 1.959963984540054
            denom = 1.0 + z * z / trials
            center = (p + z * z / (2 * trials)) / denom
            half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4 * trials * trials)) / denom
            lo, hi = max(0.0, center - half), min(1.0, center + half)
        else:
            lo = max(0.0, p - 1.959963984540054 * stderr)
            hi = min(1.0, p + 1.959963984540054 * stderr)
        return cls(mean=p, stderr=stderr, trials=trials, ci95=(lo, hi), successes=successes)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "trials": self.trials,
            "ci95": [self.ci95[0], self.ci95[1]],
            "successes": self.successes,
        }


@dataclass(frozen=True)
class GridResult:
    """Error-count histograms from one simulation pass.

    For the running-parity protocol hist has shape (len(dls), n+1): one
    error histogram per detector threshold.  For thresholdless protocols
    hist has shape (n+1,) and dls is None.
    """

    protocol: str
    mode: str
    n: int
    trials: int
    dls: Optional[Tuple[int, ...]]
    hist: np.ndarray

    def _row(self, dl: Optional[int]) -> np.ndarray:
        if self.dls is None:
            return self.hist
        if dl is None:
            raise ValueError("dl required for this protocol")
        return self.hist[self.dls.index(dl)]

    def accept_count(self, x: int, dl: Optional[int] = None) -> int:
        row = self._row(dl)
        return int(row[: x + 1].sum())

    def acceptance(self, x: int, dl: Optional[int] = None) -> float:
        return self.accept_count(x, dl) / self.trials

    def acceptance_matrix(self) -> np.ndarray:
        """P(errors <= x) for every grid cell; shape (len(dls), n+1) or (n+1,)."""
        return np.cumsum(self.hist, axis=-1) / self.trials


def _bern(rng, p: float, shape) -> np.ndarray:
    if p <= 0.0:
        return np.zeros(shape, np.uint8)
    return (rng.random(shape) < p).astype(np.uint8)


def _ubits(rng, shape) -> np.ndarray:
    return rng.integers(0, 2, size=shape, dtype=np.uint8)


def _xacc(a: np.ndarray) -> np.ndarray:
    return np.bitwise_xor.accumulate(a, axis=1)


def _pick(c: np.ndarray, r1: np.ndarray, r0: np.ndarray) -> np.ndarray:
    return np.where(c == 1, r1, r0)


def _leg_noise(noise: NoiseModel, legs: str) -> tuple[NoiseModel, NoiseModel]:
    """Noise models for the prover leg and the verifier leg of a relay."""
    prover = noise if legs in ("both", "prover") else NO_NOISE
    verifier = noise if legs in ("both", "verifier") else NO_NOISE
    return prover, verifier


# --- per-chunk session builders ------------------------------------------
# Each returns (d_rows, q_rows) for detector-based protocols, or an error
# count vector for per-round-checked protocols.  Draw order within a chunk
# is part of the reproducibility contract; do not reorder draws.


def _ours_expected_mismatch(c, q, r0, r1, received):
    return received ^ _pick(c, r1, r0) ^ _xacc(c & q)


def _ours_honest_chunk(rng, count: int, n: int, noise: NoiseModel):
    q, r0, r1 = _ubits(rng, (count, n)), _ubits(rng, (count, n)), _ubits(rng, (count, n))
    c = _ubits(rng, (count, n))
    c_recv = c ^ _bern(rng, noise.p_f, (count, n))
    resp = _pick(c_recv, r1, r0) ^ _xacc(c_recv & q)
    r_recv = resp ^ _bern(rng, noise.p_b, (count, n))
    return _ours_expected_mismatch(c, q, r0, r1, r_recv), q


def _ours_mafia_chunk(rng, count: int, n: int, noise: NoiseModel, legs: str):
    pn, vn = _leg_noise(noise, legs)
    q, r0, r1 = _ubits(rng, (count, n)), _ubits(rng, (count, n)), _ubits(rng, (count, n))
    ct = _ubits(rng, (count, n))  # pre-ask challenges, adversary's choice
    ct_recv = ct ^ _bern(rng, pn.p_f, (count, n))
    rt = _pick(ct_recv, r1, r0) ^ _xacc(ct_recv & q)
    rt_recv = rt ^ _bern(rng, pn.p_b, (count, n))
    c = _ubits(rng, (count, n))
    c_recv = c ^ _bern(rng, vn.p_f, (count, n))
    guess = np.zeros(count, np.uint8)
    ans = np.empty((count, n), np.uint8)
    for i in range(n):
        matched = c_recv[:, i] == ct[:, i]
        coin_answer = _ubits(rng, count)
        coin_guess = _ubits(rng, count)
        ans[:, i] = np.where(matched, guess ^ rt_recv[:, i], coin_answer)
        guess ^= np.where(matched, 0, coin_guess).astype(np.uint8)
    r_recv = ans ^ _bern(rng, vn.p_b, (count, n))
    return _ours_expected_mismatch(c, q, r0, r1, r_recv), q


def _ours_distance_chunk(rng, count: int, n: int, noise: NoiseModel):
    # forward noise never reaches an early-reply adversary: commits are made
    # before challenges and the verifier checks against what it sent
    q, r0, r1 = _ubits(rng, (count, n)), _ubits(rng, (count, n)), _ubits(rng, (count, n))
    c = _ubits(rng, (count, n))
    est = np.zeros(count, np.uint8)
    commit = np.empty((count, n), np.uint8)
    for i in range(n):
        a0 = r0[:, i] ^ est
        a1 = r1[:, i] ^ est ^ q[:, i]
        coin = _ubits(rng, count)
        commit[:, i] = np.where(a0 == a1, a0, np.where(coin == 1, a1, a0))
        est ^= q[:, i] & coin
    r_recv = commit ^ _bern(rng, noise.p_b, (count, n))
    return _ours_expected_mismatch(c, q, r0, r1, r_recv), q


def _ours_naive_chunk(rng, count: int, n: int, noise: NoiseModel):
    q, r0, r1 = _ubits(rng, (count, n)), _ubits(rng, (count, n)), _ubits(rng, (count, n))
    c = _ubits(rng, (count, n))
    ans = _ubits(rng, (count, n))
    r_recv = ans ^ _bern(rng, noise.p_b, (count, n))
    return _ours_expected_mismatch(c, q, r0, r1, r_recv), q


def _hk_honest_chunk(rng, count: int, n: int, noise: NoiseModel):
    r0, r1 = _ubits(rng, (count, n)), _ubits(rng, (count, n))
    c = _ubits(rng, (count, n))
    c_recv = c ^ _bern(rng, noise.p_f, (count, n))
    resp = _pick(c_recv, r1, r0)
    r_recv = resp ^ _bern(rng, noise.p_b, (count, n))
    return (r_recv != _pick(c, r1, r0)).sum(axis=1)


def _hk_mafia_chunk(rng, count: int, n: int, noise: NoiseModel, legs: str):
    pn, vn = _leg_noise(noise, legs)
    r0, r1 = _ubits(rng, (count, n)), _ubits(rng, (count, n))
    ct = _ubits(rng, (count, n))
    ct_recv = ct ^ _bern(rng, pn.p_f, (count, n))
    rt_recv = _pick(ct_recv, r1, r0) ^ _bern(rng, pn.p_b, (count, n))
    c = _ubits(rng, (count, n))
    c_recv = c ^ _bern(rng, vn.p_f, (count, n))
    coins = _ubits(rng, (count, n))
    ans = np.where(c_recv == ct, rt_recv, coins)
    r_recv = ans ^ _bern(rng, vn.p_b, (count, n))
    return (r_recv != _pick(c, r1, r0)).sum(axis=1)


def _hk_distance_chunk(rng, count: int, n: int, noise: NoiseModel):
    r0, r1 = _ubits(rng, (count, n)), _ubits(rng, (count, n))
    coins = _ubits(rng, (count, n))
    commit = np.where(r0 == r1, r0, np.where(coins == 1, r1, r0))
    c = _ubits(rng, (count, n))
    r_recv = commit ^ _bern(rng, noise.p_b, (count, n))
    return (r_recv != _pick(c, r1, r0)).sum(axis=1)


def _hk_naive_chunk(rng, count: int, n: int, noise: NoiseModel):
    r0, r1 = _ubits(rng, (count, n)), _ubits(rng, (count, n))
    c = _ubits(rng, (count, n))
    ans = _ubits(rng, (count, n))
    r_recv = ans ^ _bern(rng, noise.p_b, (count, n))
    return (r_recv != _pick(c, r1, r0)).sum(axis=1)


def _block_prefix_match(a: np.ndarray, b: np.ndarray, depth: int) -> np.ndarray:
    """match[:, i] = bits of a and b agree over the whole current tree block."""
    match = a == b
    out = np.empty_like(match)
    for i in range(a.shape[1]):
        if i % depth == 0:
            out[:, i] = match[:, i]
        else:
            out[:, i] = out[:, i - 1] & match[:, i]
    return out


def _at_honest_chunk(rng, count: int, n: int, noise: NoiseModel, depth: int):
    # Distinct tree nodes carry independent uniform labels, so a response
    # from the wrong node mismatches the expected one with probability 1/2,
    # independently per round; labels themselves need never materialize.
    c = _ubits(rng, (count, n))
    c_recv = c ^ _bern(rng, noise.p_f, (count, n))
    same_node = _block_prefix_match(c, c_recv, depth)
    coins = _ubits(rng, (count, n))
    base = np.where(same_node, 0, coins).astype(np.uint8)
    mism = base ^ _bern(rng, noise.p_b, (count, n))
    return mism.sum(axis=1)


def _at_mafia_chunk(rng, count: int, n: int, noise: NoiseModel, legs: str, depth: int):
    pn, vn = _leg_noise(noise, legs)
    ct = _ubits(rng, (count, n))
    ct_recv = ct ^ _bern(rng, pn.p_f, (count, n))
    b1 = _bern(rng, pn.p_b, (count, n))
    c = _ubits(rng, (count, n))
    c_recv = c ^ _bern(rng, vn.p_f, (count, n))
    relays = _block_prefix_match(c_recv, ct, depth)      # adversary's own check
    same_node = _block_prefix_match(c, ct_recv, depth)   # prover walked the verifier's path
    coins = _ubits(rng, (count, n))
    base = np.where(relays & same_node, b1, coins).astype(np.uint8)
    mism = base ^ _bern(rng, vn.p_b, (count, n))
    return mism.sum(axis=1)


def _at_naive_chunk(rng, count: int, n: int, noise: NoiseModel):
    ans = _ubits(rng, (count, n))
    mism = (ans ^ _bern(rng, noise.p_b, (count, n))) ^ _ubits(rng, (count, n))
    return mism.sum(axis=1)


def _chunk_fn(protocol: str, mode: str, n: int, noise: NoiseModel, legs: str) -> Callable:
    from .protocols import parse_protocol_id

    spec = parse_protocol_id(protocol, n)
    kind = spec.protocol
    if kind == "ours":
        if mode == "honest":
            return lambda rng, count: _ours_honest_chunk(rng, count, n, noise)
        if mode == "mafia-preask":
            return lambda rng, count: _ours_mafia_chunk(rng, count, n, noise, legs)
        if mode == "distance-earlyreply":
            return lambda rng, count: _ours_distance_chunk(rng, count, n, noise)
        return lambda rng, count: _ours_naive_chunk(rng, count, n, noise)
    if kind == "hk":
        if mode == "honest":
            return lambda rng, count: _hk_honest_chunk(rng, count, n, noise)
        if mode == "mafia-preask":
            return lambda rng, count: _hk_mafia_chunk(rng, count, n, noise, legs)
        if mode == "distance-earlyreply":
            return lambda rng, count: _hk_distance_chunk(rng, count, n, noise)
        return lambda rng, count: _hk_naive_chunk(rng, count, n, noise)
    # tree protocol
    if mode == "honest":
        return lambda rng, count: _at_honest_chunk(rng, count, n, noise, spec.depth)
    if mode == "mafia-preask":
        return lambda rng, count: _at_mafia_chunk(rng, count, n, noise, legs, spec.depth)
    if mode == "distance-earlyreply":
        raise ValueError("early-reply simulation for the tree protocol uses the "
                         "per-tree dynamic program (see experiments.at_distance_curve)")
    return lambda rng, count: _at_naive_chunk(rng, count, n, noise)


def run_histograms(
    protocol: str,
    mode: str,
    n: int,
    noise: NoiseModel,
    trials: int,
    master_seed: int,
    dls: Optional[Sequence[int]] = None,
    noise_legs: str = "both",
    workers: int = 1,
) -> GridResult:
    """One simulation pass; error-count histograms per decision cell."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    from .protocols import parse_protocol_id

    spec = parse_protocol_id(protocol, n)
    detector = spec.protocol == "ours"
    if detector:
        dls = tuple(int(v) for v in (dls if dls is not None else range(1, n + 1)))
        if not dls or any(v < 1 for v in dls):
            raise ValueError("dls must be non-empty, all >= 1")
        dls_arr = np.asarray(dls, dtype=np.int64)
    chunk = _chunk_fn(protocol, mode, n, noise, noise_legs)

    def run_one(chunk_index: int) -> np.ndarray:
        first = chunk_index * CHUNK_TRIALS
        count = min(CHUNK_TRIALS, trials - first)
        rng = _chunk_rng(master_seed, first)
        if detector:
            d_rows, q_rows = chunk(rng, count)
            err = np.empty((count, len(dls)), np.int16)
            detector_error_grid(
                np.ascontiguousarray(d_rows), np.ascontiguousarray(q_rows), dls_arr, err
            )
            hist = np.zeros((len(dls), n + 1), np.int64)
            for k in range(len(dls)):
                hist[k] = np.bincount(err[:, k], minlength=n + 1)
            return hist
        errors = chunk(rng, count)
        return np.bincount(errors, minlength=n + 1).astype(np.int64)

    n_chunks = (trials + CHUNK_TRIALS - 1) // CHUNK_TRIALS
    if workers <= 1 or n_chunks == 1:
        parts = [run_one(i) for i in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_one, range(n_chunks)))
    hist = np.sum(parts, axis=0)
    return GridResult(
        protocol=protocol,
        mode=mode,
        n=n,
        trials=trials,
        dls=dls if detector else None,
        hist=hist,
    )


def _grid_for(cfg: ExperimentConfig, mode: str) -> GridResult:
    from .protocols import parse_protocol_id

    spec = parse_protocol_id(cfg.protocol, cfg.n)
    dls = (cfg.dl,) if spec.protocol == "ours" else None
    return run_histograms(
        cfg.protocol,
        mode,
        cfg.n,
        cfg.noise,
        cfg.trials,
        cfg.master_seed,
        dls=dls,
        noise_legs=cfg.noise_legs,
        workers=cfg.workers,
    )


def estimate_security(cfg: ExperimentConfig) -> Estimate:
    """Adversary acceptance probability under the configured decision rule."""
    from .protocols import parse_protocol_id

    spec = parse_protocol_id(cfg.protocol, cfg.n)
    grid = _grid_for(cfg, cfg.adversary)
    dl = cfg.dl if spec.protocol == "ours" else None
    return Estimate.from_binomial(grid.accept_count(cfg.x, dl), cfg.trials)


def estimate_availability(cfg: ExperimentConfig) -> Estimate:
    """False rejection ratio of the honest prover under noise."""
    from .protocols import parse_protocol_id

    spec = parse_protocol_id(cfg.protocol, cfg.n)
    grid = _grid_for(cfg, "honest")
    dl = cfg.dl if spec.protocol == "ours" else None
    rejected = cfg.trials - grid.accept_count(cfg.x, dl)
    return Estimate.from_binomial(rejected, cfg.trials)


def result_record(cfg: ExperimentConfig, kind: str, estimate: Estimate) -> dict:
    """JSON-ready record: config, estimate, and the seed that reproduces it."""
    return {
        "config": {
            "protocol": cfg.protocol,
            "n": cfg.n,
            "p_f": cfg.noise.p_f,
            "p_b": cfg.noise.p_b,
            "x": cfg.x,
            "dl": cfg.dl,
            "trials": cfg.trials,
            "adversary": cfg.adversary,
            "noise_legs": cfg.noise_legs,
            "kind": kind,
        },
        "mean": estimate.mean,
        "stderr": estimate.stderr,
        "trials": estimate.trials,
        "successes": estimate.successes,
        "ci95": [estimate.ci95[0], estimate.ci95[1]],
        "seed": cfg.master_seed,
    }
