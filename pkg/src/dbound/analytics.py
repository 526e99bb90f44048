"""Closed-form and recursive security evaluators.

Two families live here:

* ``mafia_success`` / ``distance_success`` evaluate the classical recursive
  expressions for the optimal relay (pre-ask) and lying-prover (early-reply)
  adversaries.  They drive the comparison charts.

* ``mafia_adversary_exact`` / ``distance_adversary_exact`` evaluate the exact
  law of the adversaries this package actually simulates, via a two-state
  synchronization-parity chain.  Exhaustive enumeration (see the adversary
  tests) shows the recursive expressions drift slightly from that law — the
  first disagreements are n=3 for the relay adversary (21/64 exact vs
  149/448 recursive) and n=2 for the early-reply adversary (1/2 exact vs
  31/64 recursive).  Monte Carlo estimates converge to the exact law.

Every evaluator has a double-precision path and, where noted, an exact
rational cross-check used by the tests to rule out transcription errors.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import List, Union

Number = Union[float, Fraction]


def _check_rounds(n: int) -> None:
    if n < 1:
        raise ValueError("round count must be >= 1")


def _mafia_table(n: int, one: Number) -> List[Number]:
    """Success probabilities for rounds 1..n under the recursive relay model.

    Four coupled quantities are advanced in dependency order for each round:
    the conditional round win probability, the success probability given
    diverged challenge prefixes, the conditional guess-correctness, and the
    unconditional success probability.
    """
    half = one / 2
    pm_neq = half          # Pr(win rounds 1..i | prefixes differ)
    ps = half              # Pr(parity guess correct | prefixes differ, won so far)
    table: List[Number] = [half + pm_neq * (one - half)]
    for i in range(2, n + 1):
        pow_i = one / 2**i
        p_last_neq = one * 2 ** (i - 1) / (2**i - 1)  # Pr(c_i differs | prefixes differ)
        win_i = ps * (one - p_last_neq) + half * p_last_neq
        pm_neq_next = win_i * (one / (2**i - 1) + pm_neq * (one - one / (2**i - 1)))
        ps = half + half * ps * pm_neq * (half - pow_i) / (pm_neq_next * (one - pow_i))
        pm_neq = pm_neq_next
        table.append(pow_i + pm_neq * (one - pow_i))
    return table


def mafia_success(n: int) -> float:
    """Relay-adversary success probability after n rounds (recursive model)."""
    _check_rounds(n)
    return _mafia_table(n, 1.0)[-1]


def mafia_success_exact(n: int) -> Fraction:
    """Rational-arithmetic twin of mafia_success.

    The reduced numerators roughly double in bit length per round (the
    guess-correctness update divides by the running success probability),
    so this is practical only for small n: ~20ms at n=16, seconds at n=20.
    """
    _check_rounds(n)
    return _mafia_table(n, Fraction(1))[-1]


def _distance_table(n: int, one: Number) -> List[Number]:
    # The convolution term satisfies T_i = T_{i-1}/2 + P_{i-1}/2, keeping the
    # whole table O(n).
    table: List[Number] = [one]  # index 0: empty session succeeds
    conv = one * 0
    for i in range(1, n + 1):
        if i > 1:
            conv = conv / 2 + table[-1] / 2
        table.append(table[-1] / 4 + one / 2**i + conv / 8)
    return table[1:]


def distance_success(n: int) -> float:
    """Early-reply adversary success probability after n rounds (recursive model)."""
    _check_rounds(n)
    return _distance_table(n, 1.0)[-1]


def distance_success_exact(n: int) -> Fraction:
    """Rational-arithmetic twin of distance_success."""
    _check_rounds(n)
    return _distance_table(n, Fraction(1))[-1]


def _parity_chain_table(n: int, one: Number) -> List[Number]:
    """Exact law shared by both implemented optimal adversaries.

    State tracks whether the adversary's running parity estimate is correct.
    Weighted transition matrix per round (weights include the round win):

        correct   -> correct 5/8,  wrong 1/8
        wrong     -> correct 1/8,  wrong 1/8

    Validated against exhaustive enumeration of every random bit of the
    session for small n.
    """
    v_ok, v_bad = one, one * 0
    out: List[Number] = []
    for _ in range(n):
        v_ok, v_bad = (5 * v_ok + v_bad) / 8, (v_ok + v_bad) / 8
        out.append(v_ok + v_bad)
    return out


def mafia_adversary_exact(n: int) -> float:
    """Exact success law of the implemented pre-ask relay adversary."""
    _check_rounds(n)
    return _parity_chain_table(n, 1.0)[-1]


def distance_adversary_exact(n: int) -> float:
    """Exact success law of the implemented early-reply adversary."""
    _check_rounds(n)
    return _parity_chain_table(n, 1.0)[-1]


def adversary_exact_rational(n: int) -> Fraction:
    """Rational twin of the shared exact adversary law."""
    _check_rounds(n)
    return _parity_chain_table(n, Fraction(1))[-1]


def hk_mafia(n: int) -> float:
    """Two-register baseline: relay success (3/4)^n."""
    _check_rounds(n)
    return 0.75**n


def hk_distance(n: int) -> float:
    """Two-register baseline: early-reply success (3/4)^n."""
    _check_rounds(n)
    return 0.75**n


def hk_round_ok(p_f: float, p_b: float) -> float:
    """Probability one honest two-register round survives channel noise."""
    for p in (p_f, p_b):
        if not 0.0 <= p <= 1.0:
            raise ValueError("flip probabilities must lie in [0, 1]")
    return 1.0 - p_f / 2.0 - p_b + p_f * p_b


def hk_acceptance(n: int, x: int, p_f: float, p_b: float) -> float:
    """Probability an honest two-register prover passes with tolerance x.

    Sums the binomial upper tail of at least n-x noise-surviving rounds.
    """
    _check_rounds(n)
    if not 0 <= x <= n:
        raise ValueError("tolerance x must lie in 0..n")
    if x == n:
        return 1.0
    w = hk_round_ok(p_f, p_b)
    return sum(math.comb(n, i) * w**i * (1.0 - w) ** (n - i) for i in range(n - x, n + 1))


def hk_frr(n: int, x: int, p_f: float, p_b: float) -> float:
    """False rejection ratio of the honest two-register prover."""
    return 1.0 - hk_acceptance(n, x, p_f, p_b)


def naive_bound(n: int) -> float:
    """(1/2)^n: success of an adversary answering uniformly at random."""
    if n < 0:
        raise ValueError("round count must be >= 0")
    return 0.5**n


def mafia_success_curve(n_max: int) -> List[float]:
    """mafia_success for n = 1..n_max in one pass."""
    _check_rounds(n_max)
    return _mafia_table(n_max, 1.0)


def distance_success_curve(n_max: int) -> List[float]:
    """distance_success for n = 1..n_max in one pass."""
    _check_rounds(n_max)
    return _distance_table(n_max, 1.0)


def adversary_exact_curve(n_max: int) -> List[float]:
    """Shared exact adversary law for n = 1..n_max."""
    _check_rounds(n_max)
    return _parity_chain_table(n_max, 1.0)
