"""Memoryless binary channels, the switched-round detector, and the noisy
accept/reject rule.

Forward noise desynchronizes the two parties' running parities, which makes
every later response look wrong to the verifier; backward noise corrupts
single responses.  The detector scans the mismatch vector for long runs of
agreement flips and attributes each one to the nearest round that can
actually toggle the parity (a round with q_r = 1).  The noisy decision then
counts residual mismatches plus detected switches against a tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

from .bits import Bits, BitsLike, as_bits, random_bits, xor
from .core import RegisterSet, Transcript
from .protocols import Responder

SwitchEvent = Tuple[int, int]  # (round, direction): 1 = to desynchronized


@dataclass(frozen=True)
class NoiseModel:
    """Independent per-round bit-flip probabilities for the two channels."""

    p_f: float = 0.0  # forward: challenges
    p_b: float = 0.0  # backward: responses

    def __post_init__(self):
        for p in (self.p_f, self.p_b):
            if not 0.0 <= p <= 1.0:
                raise ValueError("flip probabilities must lie in [0, 1]")

    @property
    def is_noiseless(self) -> bool:
        return self.p_f == 0.0 and self.p_b == 0.0

    @classmethod
    def symmetric(cls, p: float) -> "NoiseModel":
        return cls(p_f=p, p_b=p)


NO_NOISE = NoiseModel()


def _flips(rng, p: float, n: int) -> Bits:
    if p == 0.0:
        return (0,) * n
    return tuple(int(b) for b in (rng.random(n) < p))


def apply_noise(responder: Responder, noise: NoiseModel, rng) -> Transcript:
    """One honest session over noisy channels.

    Per round the prover sees the (possibly flipped) challenge, extends its
    own received history with it, and answers from that history; the
    verifier then receives a possibly flipped response.
    """
    n = responder.n
    challenges = random_bits(rng, n)
    received_challenges = xor(challenges, _flips(rng, noise.p_f, n))
    responses = tuple(
        responder.respond(received_challenges[: i + 1]) for i in range(n)
    )
    received_responses = xor(responses, _flips(rng, noise.p_b, n))
    return Transcript(
        sent_challenges=challenges,
        received_challenges=received_challenges,
        sent_responses=responses,
        received_responses=received_responses,
    )


def mismatch_vector(regs: RegisterSet, sent_challenges: BitsLike, received_responses: BitsLike) -> Bits:
    """d_i = received_i XOR expected_i, evaluated on the verifier's view."""
    c = as_bits(sent_challenges)
    r = as_bits(received_responses)
    if len(c) != regs.n or len(r) != regs.n:
        raise ValueError("challenge/response vectors must have length n")
    out = []
    acc = 0
    for i in range(regs.n):
        acc ^= c[i] & regs.q[i]
        out.append(r[i] ^ regs.response_register(i + 1, c[i]) ^ acc)
    return tuple(out)


def switched_rounds(d: BitsLike, q: BitsLike, dl: int) -> Tuple[SwitchEvent, ...]:
    """Detect rounds where the parties plausibly switched (de)synchronization.

    Recursive longest-run analysis of the mismatch vector d.  A maximal run
    of identical symbols is a switch candidate unless it is a run of zeros
    at the start of the (sub)sequence, which is what the verifier expects.
    The longest candidate run fires when it is longer than dl; its event
    round is the q_r = 1 round nearest the run boundary, its direction is
    the run symbol.  The remainder on each side is analyzed recursively and
    the events are merged in increasing round order with alternating
    directions (earliest event wins any conflict).

    Conventions frozen by the golden tests:

    * a run of k symbols fires iff k >= dl + 1;
    * the matched region includes the single context symbol on either side
      when present, and the recursion excludes the matched region;
    * the nearest-q_r search targets the second index of the matched region
      and prefers the smaller round on distance ties;
    * if q has no ones at all, no switch is possible and the result is empty.
    """
    db, qb = as_bits(d), as_bits(q)
    if len(db) != len(qb):
        raise ValueError("d and q must have equal length")
    if dl < 1:
        raise ValueError("dl must be >= 1")
    q_rounds = [i + 1 for i, bit in enumerate(qb) if bit]
    if not q_rounds:
        return ()

    def nearest_q_round(target: int) -> int:
        return min(q_rounds, key=lambda r: (abs(r - target), r))

    def analyze(lo: int, hi: int) -> List[SwitchEvent]:
        if hi - lo < 1:
            return []
        runs = []  # (start, length, symbol), start 0-based
        pos = lo
        while pos < hi:
            end = pos
            while end < hi and db[end] == db[pos]:
                end += 1
            runs.append((pos, end - pos, db[pos]))
            pos = end
        best = None
        for start, length, symbol in runs:
            if symbol == 0 and start == lo:
                continue  # leading zeros are the expected state, not a switch
            if best is None or length > best[1]:
                best = (start, length, symbol)
        if best is None:
            return []
        start, length, symbol = best
        if length < dl + 1:
            return []
        match_lo = start - 1 if start > lo else start
        match_hi = min(start + length + 1, hi)
        event = (nearest_q_round(match_lo + 2), symbol)
        return _merge(analyze(lo, match_lo), event, analyze(match_hi, hi))

    return tuple(analyze(0, len(db)))


def _merge(left: List[SwitchEvent], pivot: SwitchEvent, right: List[SwitchEvent]) -> List[SwitchEvent]:
    combined: List[SwitchEvent] = []
    for event in [*left, pivot, *right]:
        if event not in combined:
            combined.append(event)
    combined.sort(key=lambda ev: ev[0])  # stable: list order breaks round ties
    merged: List[SwitchEvent] = []
    for event in combined:
        if merged and (merged[-1][0] == event[0] or merged[-1][1] == event[1]):
            continue  # keep the earliest of any conflicting pair
        merged.append(event)
    return merged


def count_noisy_errors(d: BitsLike, q: BitsLike, dl: int) -> int:
    """Errors counted by the noisy decision: switches plus off-state mismatches."""
    db = as_bits(d)
    events = dict(switched_rounds(db, q, dl))
    state = 0
    errors = 0
    for i, bit in enumerate(db, start=1):
        if i in events:
            state = events[i]
            errors += 1
        elif bit != state:
            errors += 1
    return errors


def decide_noisy(
    regs: RegisterSet,
    sent_challenges: BitsLike,
    received_responses: BitsLike,
    x: int,
    dl: int,
) -> bool:
    """Accept iff the detector-adjusted error count stays within tolerance x."""
    if not 0 <= x <= regs.n:
        raise ValueError("tolerance x must lie in 0..n")
    d = mismatch_vector(regs, sent_challenges, received_responses)
    return count_noisy_errors(d, regs.q, dl) <= x
