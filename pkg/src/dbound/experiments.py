"""Experiment harness: security curves, the round/memory trade-off chart,
and the constrained noise-tolerance optimizer.

Curve sources differ by protocol.  The running-parity and register-pair
curves are analytic.  Tree-protocol curves are evaluated from the
implemented adversaries: the relay curve has a closed per-tree law
(validated against simulation in the tests), and the early-reply curve
uses the exact per-tree distribution for shallow trees plus a seeded
resampling estimator for deep ones, carrying confidence halfwidths.  A
protocol only "achieves" a target when the upper edge of its interval
clears it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import analytics
from .noise import NoiseModel
from .protocols import ResponderSpec, memory_bits, parse_protocol_id
from .simkit import Estimate, run_histograms

CHART_PROTOCOLS = ("ours", "hk", "at", "at3")


def at_mafia_exact(depth: int, trees: int) -> float:
    """Relay success against the tree design: the pre-asked path is reused
    until the first in-block divergence, every later round is a coin.

    Per tree: sum over common-prefix lengths j of 2^-(j+1) * 2^-(d-j) plus
    the all-matched term, i.e. (1/2)^d (d/2 + 1); trees are independent.
    """
    per_tree = (0.5**depth) * (depth / 2.0 + 1.0)
    return per_tree**trees


@lru_cache(maxsize=None)
def _at_value_distribution(depth: int) -> Tuple[Tuple[Fraction, Fraction], ...]:
    """Exact distribution of the per-tree early-reply value over uniform
    labelings.  V(leaf) = 1; one level combines two independent subtree
    values as (V+V')/2 when the child labels agree (probability 1/2) and
    max(V,V')/2 when they differ."""
    dist: Dict[Fraction, Fraction] = {Fraction(1): Fraction(1)}
    for _ in range(depth):
        new: Dict[Fraction, Fraction] = {}
        items = list(dist.items())
        for v1, p1 in items:
            for v2, p2 in items:
                w = p1 * p2
                mean_v = (v1 + v2) / 2
                max_v = max(v1, v2) / 2
                new[mean_v] = new.get(mean_v, Fraction(0)) + w / 2
                new[max_v] = new.get(max_v, Fraction(0)) + w / 2
        dist = new
    return tuple(sorted(dist.items()))

AT_EXACT_DEPTH = 8   # value-distribution support is 2^depth; exact up to here
AT_POOL_DEPTH = 64   # resampling table is always built out to this depth


def at_distance_per_tree_exact(depth: int) -> Fraction:
    """Exact mean early-reply value of one depth-d tree (d <= AT_EXACT_DEPTH)."""
    if depth > AT_EXACT_DEPTH:
        raise ValueError(f"exact evaluation limited to depth <= {AT_EXACT_DEPTH}")
    return sum(v * p for v, p in _at_value_distribution(depth))


@lru_cache(maxsize=8)
def _at_distance_pool_table(
    d_max: int, seed: int, pool_size: int, replicates: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-tree early-reply means for depths 1..d_max by pool resampling.

    Each replicate evolves a pool of subtree values one level at a time,
    pairing uniformly with replacement; the recorded mean at level d
    estimates the depth-d tree value.  stderr comes from the spread across
    independent replicates, which captures the resampling correlation.
    """
    rng = np.random.Generator(np.random.Philox(key=(seed & ((1 << 64) - 1)) << 64 | 0xA7))
    means = np.empty((replicates, d_max))
    for rep in range(replicates):
        pool = np.ones(pool_size)
        for d in range(d_max):
            left = pool[rng.integers(0, pool_size, size=pool_size)]
            right = pool[rng.integers(0, pool_size, size=pool_size)]
            agree = rng.random(pool_size) < 0.5
            pool = np.where(agree, (left + right) / 2.0, np.maximum(left, right) / 2.0)
            means[rep, d] = pool.mean()
    mean = means.mean(axis=0)
    stderr = means.std(axis=0, ddof=1) / math.sqrt(replicates)
    return mean, stderr


def at_distance_per_tree(
    depth: int, seed: int = 0, pool_size: int = 1 << 15, replicates: int = 12
) -> Tuple[float, float]:
    """(mean, stderr) of the per-tree early-reply value; exact for shallow trees."""
    if depth <= AT_EXACT_DEPTH:
        return float(at_distance_per_tree_exact(depth)), 0.0
    if depth > AT_POOL_DEPTH:
        raise ValueError(f"tree depth limited to {AT_POOL_DEPTH}")
    mean, stderr = _at_distance_pool_table(AT_POOL_DEPTH, seed, pool_size, replicates)
    return float(mean[depth - 1]), float(stderr[depth - 1])


@dataclass(frozen=True)
class Curve:
    """Success probability per round count, with a one-sided CI halfwidth.

    values[i] is the probability at n = i+1; NaN marks round counts where
    the protocol has no valid configuration (e.g. tree blocks not dividing
    n).  halfwidth is zero for exact curves.
    """

    label: str
    values: np.ndarray
    halfwidth: np.ndarray

    def achieves(self, n: int, target: float) -> bool:
        v = self.values[n - 1]
        if math.isnan(v):
            return False
        return v + self.halfwidth[n - 1] <= target


def _exact_curve(label: str, vals: Sequence[float]) -> Curve:
    arr = np.asarray(vals, dtype=float)
    return Curve(label, arr, np.zeros_like(arr))


def mafia_curve(protocol: str, n_max: int, seed: int = 0) -> Curve:
    """Relay-fraud success for n = 1..n_max."""
    if protocol == "ours":
        return _exact_curve("ours", analytics.mafia_success_curve(n_max))
    if protocol == "hk":
        return _exact_curve("hk", [analytics.hk_mafia(n) for n in range(1, n_max + 1)])
    if protocol == "at":
        return _exact_curve("at", [at_mafia_exact(n, 1) for n in range(1, n_max + 1)])
    if protocol == "at3":
        vals = [at_mafia_exact(3, n // 3) if n % 3 == 0 else math.nan for n in range(1, n_max + 1)]
        return _exact_curve("at3", vals)
    raise ValueError(f"unknown protocol {protocol!r}")


def distance_curve(protocol: str, n_max: int, seed: int = 0) -> Curve:
    """Early-reply fraud success for n = 1..n_max."""
    if protocol == "ours":
        return _exact_curve("ours", analytics.distance_success_curve(n_max))
    if protocol == "hk":
        return _exact_curve("hk", [analytics.hk_distance(n) for n in range(1, n_max + 1)])
    if protocol == "at":
        vals, half = [], []
        for n in range(1, n_max + 1):
            mean, stderr = at_distance_per_tree(n, seed=seed)
            vals.append(mean)
            half.append(3.0 * stderr)
        return Curve("at", np.asarray(vals), np.asarray(half))
    if protocol == "at3":
        per_tree = float(at_distance_per_tree_exact(3))
        vals = [per_tree ** (n // 3) if n % 3 == 0 else math.nan for n in range(1, n_max + 1)]
        return _exact_curve("at3", vals)
    raise ValueError(f"unknown protocol {protocol!r}")


@dataclass(frozen=True)
class TradeoffCell:
    """Winner for one (relay, early-reply) target pair: probabilities
    2^-a and 2^-b."""

    a: int
    b: int
    winner: Optional[str]
    rounds: Optional[int]
    memory_bits: Optional[int]


def _spec_at(protocol: str, n: int) -> Optional[ResponderSpec]:
    try:
        return parse_protocol_id(protocol, n)
    except ValueError:
        return None


def tradeoff_chart(
    protocols: Sequence[str] = CHART_PROTOCOLS,
    a_max: int = 64,
    b_max: int = 64,
    n_max: int = 64,
    memory_cap_per_round: Optional[float] = None,
    seed: int = 0,
) -> List[TradeoffCell]:
    """Winner grid over discretized target pairs (2^-a, 2^-b).

    For every pair, each protocol's minimal round count achieving both
    targets (interval upper edges below the targets) is found; the winner
    needs the fewest rounds, ties broken by state size, then by protocol
    name for determinism.  memory_cap_per_round filters out configurations
    whose state exceeds cap*n bits.
    """
    m_curves = {p: mafia_curve(p, n_max, seed) for p in protocols}
    d_curves = {p: distance_curve(p, n_max, seed) for p in protocols}
    memory: Dict[str, List[Optional[int]]] = {}
    for p in protocols:
        per_n: List[Optional[int]] = []
        for n in range(1, n_max + 1):
            spec = _spec_at(p, n)
            if spec is None:
                per_n.append(None)
                continue
            bits = memory_bits(spec)
            if memory_cap_per_round is not None and bits > memory_cap_per_round * n:
                per_n.append(None)
            else:
                per_n.append(bits)
        memory[p] = per_n

    cells: List[TradeoffCell] = []
    for a in range(1, a_max + 1):
        x_target = 0.5**a
        for b in range(1, b_max + 1):
            y_target = 0.5**b
            candidates: List[Tuple[int, int, str]] = []
            for p in protocols:
                for n in range(1, n_max + 1):
                    if memory[p][n - 1] is None:
                        continue
                    if m_curves[p].achieves(n, x_target) and d_curves[p].achieves(n, y_target):
                        candidates.append((n, memory[p][n - 1], p))
                        break
            if candidates:
                rounds, bits, winner = min(candidates)
                cells.append(TradeoffCell(a, b, winner, rounds, bits))
            else:
                cells.append(TradeoffCell(a, b, None, None, None))
    return cells


@dataclass(frozen=True)
class GridSpec:
    """Search grid for the noisy-decision parameters."""

    xs: Tuple[int, ...]
    dls: Tuple[int, ...]

    @classmethod
    def full(cls, n: int) -> "GridSpec":
        return cls(xs=tuple(range(0, n + 1)), dls=tuple(range(1, n + 1)))

    def __post_init__(self):
        if not self.xs or not self.dls:
            raise ValueError("grid must contain at least one x and one dl")


@dataclass(frozen=True)
class OptimizationResult:
    """Outcome of the constrained grid search.

    Minimizes simulated adversary success subject to the simulated (or,
    for the register-pair design, analytic) false rejection ratio staying
    under delta with a z_margin * stderr safety margin.
    """

    protocol: str
    n: int
    noise: NoiseModel
    delta: float
    feasible: bool
    x: Optional[int] = None
    dl: Optional[int] = None
    security: Optional[Estimate] = None
    frr_mean: Optional[float] = None
    frr_stderr: Optional[float] = None
    trials: int = 0
    master_seed: int = 0

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "n": self.n,
            "p_f": self.noise.p_f,
            "p_b": self.noise.p_b,
            "delta": self.delta,
            "feasible": self.feasible,
            "x": self.x,
            "dl": self.dl,
            "security_mean": None if self.security is None else self.security.mean,
            "security_stderr": None if self.security is None else self.security.stderr,
            "frr_mean": self.frr_mean,
            "frr_stderr": self.frr_stderr,
            "trials": self.trials,
            "seed": self.master_seed,
        }


def optimize(
    protocol: str,
    n: int,
    noise: NoiseModel,
    delta: float,
    grid: Optional[GridSpec] = None,
    trials: int = 100_000,
    master_seed: int = 0,
    adversary: str = "mafia-preask",
    noise_legs: str = "both",
    workers: int = 1,
    z_margin: float = 3.0,
) -> OptimizationResult:
    """Exhaustive grid search: availability prunes, then security ranks.

    One honest pass yields the FRR of every candidate cell (common random
    numbers across cells); cells whose FRR plus margin exceed delta are
    pruned, and one adversary pass ranks the survivors.  Ties prefer the
    smaller tolerance, then the smaller threshold.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    spec = parse_protocol_id(protocol, n)
    if grid is None:
        grid = GridSpec.full(n)
    detector = spec.protocol == "ours"
    dls = grid.dls if detector else (1,)

    if spec.protocol == "hk":
        frr_of = {x: analytics.hk_frr(n, x, noise.p_f, noise.p_b) for x in grid.xs}
        frr_err = {x: 0.0 for x in grid.xs}
        feasible = [(x, 1) for x in grid.xs if frr_of[x] <= delta]
    else:
        honest = run_histograms(
            protocol, "honest", n, noise, trials, master_seed,
            dls=dls if detector else None, noise_legs=noise_legs, workers=workers,
        )
        frr_of, frr_err = {}, {}
        feasible = []
        for dl in dls:
            for x in grid.xs:
                rej = trials - honest.accept_count(x, dl if detector else None)
                est = Estimate.from_binomial(rej, trials)
                frr_of[(x, dl)] = est.mean
                frr_err[(x, dl)] = est.stderr
                if est.mean + z_margin * est.stderr <= delta:
                    feasible.append((x, dl))

    if not feasible:
        return OptimizationResult(
            protocol=protocol, n=n, noise=noise, delta=delta, feasible=False,
            trials=trials, master_seed=master_seed,
        )

    feas_dls = tuple(sorted({dl for _, dl in feasible})) if detector else None
    attack = run_histograms(
        protocol, adversary, n, noise, trials, master_seed + 1,
        dls=feas_dls, noise_legs=noise_legs, workers=workers,
    )
    best = None
    for x, dl in feasible:
        wins = attack.accept_count(x, dl if detector else None)
        key = (wins, x, dl)
        if best is None or key < best[0]:
            best = (key, x, dl, wins)
    _, x, dl, wins = best
    frr_key = x if spec.protocol == "hk" else (x, dl)
    return OptimizationResult(
        protocol=protocol,
        n=n,
        noise=noise,
        delta=delta,
        feasible=True,
        x=x,
        dl=dl if detector else None,
        security=Estimate.from_binomial(wins, trials),
        frr_mean=frr_of[frr_key],
        frr_stderr=frr_err[frr_key],
        trials=trials,
        master_seed=master_seed,
    )


def noise_sweep(
    protocols: Sequence[str],
    n: int,
    points: Sequence[Tuple[float, float]],
    delta: float,
    grid: Optional[GridSpec] = None,
    trials: int = 100_000,
    master_seed: int = 0,
    workers: int = 1,
) -> List[OptimizationResult]:
    """Optimize each protocol at each (p_f, p_b) point; common seeds across
    points keep the sweep smooth for trend checks."""
    results = []
    for p_f, p_b in points:
        noise = NoiseModel(p_f=p_f, p_b=p_b)
        for proto in protocols:
            results.append(
                optimize(
                    proto, n, noise, delta, grid=grid, trials=trials,
                    master_seed=master_seed, workers=workers,
                )
            )
    return results


def equal_noise_points(step: float = 0.005, top: float = 0.05) -> List[Tuple[float, float]]:
    """(p, p) for p in {0, step, ..., top}."""
    count = round(top / step)
    return [(round(i * step, 10), round(i * step, 10)) for i in range(count + 1)]


def complementary_noise_points(total: float = 0.05, step: float = 0.005) -> List[Tuple[float, float]]:
    """(p_f, total - p_f) for p_f in {0, step, ..., total}."""
    count = round(total / step)
    return [(round(i * step, 10), round(total - i * step, 10)) for i in range(count + 1)]


# --- figure data -----------------------------------------------------------

FIGURES = ("fig2a", "fig2b", "fig3a", "fig3b", "fig5a", "fig5b")


def _fmt(p: float) -> str:
    """Probability cell: scientific notation, six significant digits."""
    return "" if (p is None or (isinstance(p, float) and math.isnan(p))) else f"{p:.5e}"


def figure_rows(
    which: str,
    n_max: int = 64,
    n_noisy: int = 48,
    delta: float = 0.05,
    trials: int = 100_000,
    master_seed: int = 0,
    workers: int = 1,
) -> Tuple[List[str], List[List[str]]]:
    """Header and rows of the CSV behind one comparison figure."""
    if which in ("fig2a", "fig2b"):
        build = mafia_curve if which == "fig2a" else distance_curve
        curves = {p: build(p, n_max, master_seed) for p in CHART_PROTOCOLS}
        header = ["n", "ours", "hk", "at", "at_halfwidth", "at3", "naive"]
        rows = []
        for n in range(1, n_max + 1):
            rows.append([
                str(n),
                _fmt(curves["ours"].values[n - 1]),
                _fmt(curves["hk"].values[n - 1]),
                _fmt(curves["at"].values[n - 1]),
                _fmt(curves["at"].halfwidth[n - 1]),
                _fmt(curves["at3"].values[n - 1]),
                _fmt(analytics.naive_bound(n)),
            ])
        return header, rows
    if which in ("fig3a", "fig3b"):
        cap = None if which == "fig3a" else 5.0
        cells = tradeoff_chart(
            CHART_PROTOCOLS, a_max=n_max, b_max=n_max, n_max=n_max,
            memory_cap_per_round=cap, seed=master_seed,
        )
        header = ["a", "b", "winner", "rounds", "memory_bits"]
        rows = [
            [str(c.a), str(c.b), c.winner or "", "" if c.rounds is None else str(c.rounds),
             "" if c.memory_bits is None else str(c.memory_bits)]
            for c in cells
        ]
        return header, rows
    if which in ("fig5a", "fig5b"):
        points = equal_noise_points() if which == "fig5a" else complementary_noise_points()
        results = noise_sweep(
            ("ours", "hk"), n_noisy, points, delta,
            trials=trials, master_seed=master_seed, workers=workers,
        )
        header = ["p_f", "p_b", "protocol", "x", "dl", "security", "security_stderr",
                  "frr", "frr_stderr", "feasible"]
        rows = []
        for r in results:
            rows.append([
                f"{r.noise.p_f:.3f}", f"{r.noise.p_b:.3f}", r.protocol,
                "" if r.x is None else str(r.x), "" if r.dl is None else str(r.dl),
                "" if r.security is None else _fmt(r.security.mean),
                "" if r.security is None else _fmt(r.security.stderr),
                _fmt(r.frr_mean) if r.frr_mean is not None else "",
                _fmt(r.frr_stderr) if r.frr_stderr is not None else "",
                "1" if r.feasible else "0",
            ])
        return header, rows
    raise ValueError(f"unknown figure id {which!r}; expected one of {FIGURES}")
