"""Core protocol: registers, the running-parity response function, honest
sessions, and the noiseless accept/reject rule.

A session runs n timed rounds.  Both parties hold three n-bit registers
(q, r0, r1) derived from a keyed PRF over the exchanged nonces.  The
response to the i-th challenge is r_i = R_i^{c_i} XOR f(q, c_1..c_i),
where f is the cumulative parity of (challenge AND q) bits, so every
answer depends on the full challenge history.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .bits import Bits, BitsLike, as_bits, bits_to_str, random_bits
from .prf import expand_registers

MIN_KEY_BYTES = 16


@dataclass(frozen=True)
class RegisterSet:
    """The three fast-phase registers, all of identical length n >= 1."""

    q: Bits
    r0: Bits
    r1: Bits

    def __post_init__(self):
        object.__setattr__(self, "q", as_bits(self.q))
        object.__setattr__(self, "r0", as_bits(self.r0))
        object.__setattr__(self, "r1", as_bits(self.r1))
        n = len(self.q)
        if n < 1:
            raise ValueError("registers must hold at least one bit")
        if len(self.r0) != n or len(self.r1) != n:
            raise ValueError("q, r0, r1 must have identical length")

    @property
    def n(self) -> int:
        return len(self.q)

    def response_register(self, i: int, challenge_bit: int) -> int:
        """R_i^{c} for 1-based round i."""
        if not 1 <= i <= self.n:
            raise IndexError(f"round {i} out of range 1..{self.n}")
        return self.r1[i - 1] if challenge_bit else self.r0[i - 1]

    def to_json(self) -> str:
        return json.dumps(
            {"q": bits_to_str(self.q), "r0": bits_to_str(self.r0), "r1": bits_to_str(self.r1)},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "RegisterSet":
        obj = json.loads(text)
        return cls(q=obj["q"], r0=obj["r0"], r1=obj["r1"])


@dataclass(frozen=True)
class SessionConfig:
    """Session parameters: round count and shared secret key.

    The timing bound of the real protocol is deliberately not modelled;
    fraud strategies are constrained structurally (an early reply commits
    before the challenge, a relayed answer never sees the verifier's
    challenge first).
    """

    n: int
    key: bytes

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if len(self.key) < MIN_KEY_BYTES:
            raise ValueError(f"key must be at least {MIN_KEY_BYTES} bytes")


@dataclass(frozen=True)
class Transcript:
    """Per-round record of what each side sent and received.

    For a noiseless honest run, sent equals received on both channels.
    """

    sent_challenges: Bits
    received_challenges: Bits
    sent_responses: Bits
    received_responses: Bits

    def __post_init__(self):
        object.__setattr__(self, "sent_challenges", as_bits(self.sent_challenges))
        object.__setattr__(self, "received_challenges", as_bits(self.received_challenges))
        object.__setattr__(self, "sent_responses", as_bits(self.sent_responses))
        object.__setattr__(self, "received_responses", as_bits(self.received_responses))
        n = len(self.sent_challenges)
        if not (len(self.received_challenges) == len(self.sent_responses) == len(self.received_responses) == n):
            raise ValueError("all transcript vectors must have the same length")

    @property
    def n(self) -> int:
        return len(self.sent_challenges)

    def to_json(self) -> str:
        return json.dumps(
            {
                "sent_challenges": bits_to_str(self.sent_challenges),
                "received_challenges": bits_to_str(self.received_challenges),
                "sent_responses": bits_to_str(self.sent_responses),
                "received_responses": bits_to_str(self.received_responses),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Transcript":
        obj = json.loads(text)
        return cls(**obj)


def f_q(q: BitsLike, prefix: BitsLike) -> int:
    """Cumulative parity XOR_j (prefix_j AND q_j); 0 on the empty prefix."""
    qb, pb = as_bits(q), as_bits(prefix)
    if len(pb) > len(qb):
        raise ValueError(f"prefix length {len(pb)} exceeds register length {len(qb)}")
    acc = 0
    for cj, qj in zip(pb, qb):
        acc ^= cj & qj
    return acc


def derive_registers(key: bytes, nonce_p: BitsLike, nonce_v: BitsLike, n: int) -> RegisterSet:
    """Expand (key, nonces) into the session RegisterSet via the keyed PRF."""
    q, r0, r1 = expand_registers(key, nonce_p, nonce_v, n)
    return RegisterSet(q=q, r0=r0, r1=r1)


def prover_respond(regs: RegisterSet, received_prefix: BitsLike) -> int:
    """Response for the latest round given every challenge bit received so far."""
    prefix = as_bits(received_prefix)
    if not prefix:
        raise ValueError("received prefix must contain at least the current challenge")
    i = len(prefix)
    return regs.response_register(i, prefix[-1]) ^ f_q(regs.q, prefix)


def verifier_expected(regs: RegisterSet, sent_prefix: BitsLike) -> int:
    """Expected response at the latest round; same rule evaluated on the sent prefix."""
    return prover_respond(regs, sent_prefix)


def run_honest_session(cfg: SessionConfig, rng) -> tuple[RegisterSet, Transcript]:
    """One noiseless honest session: nonce exchange, PRF, n clean rounds."""
    nonce_p = random_bits(rng, cfg.n)
    nonce_v = random_bits(rng, cfg.n)
    regs = derive_registers(cfg.key, nonce_p, nonce_v, cfg.n)
    challenges = random_bits(rng, cfg.n)
    responses = []
    acc = 0
    for i in range(cfg.n):
        # incremental f update keeps the round loop O(1) per round
        acc ^= challenges[i] & regs.q[i]
        responses.append(regs.response_register(i + 1, challenges[i]) ^ acc)
    responses = tuple(responses)
    return regs, Transcript(
        sent_challenges=challenges,
        received_challenges=challenges,
        sent_responses=responses,
        received_responses=responses,
    )


def decide_noiseless(regs: RegisterSet, transcript: Transcript) -> bool:
    """Accept iff every received response matches the expected one."""
    if transcript.n != regs.n:
        raise ValueError("transcript and registers disagree on n")
    acc = 0
    for i in range(transcript.n):
        acc ^= transcript.sent_challenges[i] & regs.q[i]
        expected = regs.response_register(i + 1, transcript.sent_challenges[i]) ^ acc
        if transcript.received_responses[i] != expected:
            return False
    return True
