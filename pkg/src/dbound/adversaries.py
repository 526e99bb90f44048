"""Executable optimal adversary behaviours.

Two fraud families, each as a small per-session state object plus a
per-round answer function:

* pre-ask relay ("mafia"): query the honest prover with guessed challenges
  first, then replay against the verifier, holding a running guess of the
  parity offset between the two challenge histories;

* early-reply ("distance"): a dishonest prover that knows the registers
  commits each response before the challenge arrives, tracking an estimate
  of the running parity over the verifier's challenges.

The per-round functions draw coins in a frozen order so that exhaustive
enumeration over scripted coin streams reproduces the Monte Carlo law
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

from .bits import Bits, BitsLike, as_bits
from .core import RegisterSet
from .protocols import AtTreeState


def _coin(rng) -> int:
    return int(rng.integers(0, 2))


@dataclass
class MafiaState:
    """Pre-ask relay state against the running-parity protocol.

    xor_guess tracks the adversary's guess of the parity offset between the
    verifier's challenge history and the pre-asked one.  It starts at 0,
    which is exactly correct while the histories agree, and is re-randomised
    by one fresh coin every time the current challenges diverge (the
    divergence adds one unknown q-bit to the offset).
    """

    preask_challenges: Bits
    preask_responses: Bits  # as received by the adversary
    xor_guess: int = 0

    def __post_init__(self):
        self.preask_challenges = as_bits(self.preask_challenges)
        self.preask_responses = as_bits(self.preask_responses)
        if len(self.preask_challenges) != len(self.preask_responses):
            raise ValueError("pre-ask vectors must have equal length")


def mafia_preask_answer(state: MafiaState, i: int, c_i: int, rng) -> int:
    """Answer round i of the verifier phase; updates the parity guess in place."""
    if not 1 <= i <= len(state.preask_challenges):
        raise IndexError(f"round {i} out of range")
    if c_i == state.preask_challenges[i - 1]:
        return state.xor_guess ^ state.preask_responses[i - 1]
    answer = _coin(rng)
    state.xor_guess ^= _coin(rng)
    return answer


@dataclass
class HkMafiaState:
    """Pre-ask relay state against the plain register-pair design."""

    preask_challenges: Bits
    preask_responses: Bits

    def __post_init__(self):
        self.preask_challenges = as_bits(self.preask_challenges)
        self.preask_responses = as_bits(self.preask_responses)


def mafia_preask_answer_hk(state: HkMafiaState, i: int, c_i: int, rng) -> int:
    """Replay the pre-asked answer when the challenge matches, else guess."""
    if c_i == state.preask_challenges[i - 1]:
        return state.preask_responses[i - 1]
    return _coin(rng)


@dataclass
class AtMafiaState:
    """Pre-ask relay state against the tree design.

    A pre-asked answer is valid while the verifier's challenges agree with
    the pre-asked ones over the whole current tree block; after an in-block
    divergence the walked nodes differ and the adversary guesses.
    """

    depth: int
    preask_challenges: Bits
    preask_responses: Bits
    block_matched: bool = True

    def __post_init__(self):
        self.preask_challenges = as_bits(self.preask_challenges)
        self.preask_responses = as_bits(self.preask_responses)


def mafia_preask_answer_at(state: AtMafiaState, i: int, c_i: int, rng) -> int:
    if (i - 1) % state.depth == 0:
        state.block_matched = True
    state.block_matched = state.block_matched and c_i == state.preask_challenges[i - 1]
    if state.block_matched:
        return state.preask_responses[i - 1]
    return _coin(rng)


@dataclass
class DistanceState:
    """Early-reply state: the cheating prover knows the registers.

    f_estimate guesses the running parity over the verifier's challenges;
    it starts at 0 (the parity of the empty history) and is advanced with
    the assumed challenge bit whenever q_i = 1.
    """

    regs: RegisterSet
    f_estimate: int = 0
    assumed_challenges: List[int] = field(default_factory=list)


def distance_earlyreply_answer(state: DistanceState, i: int, rng) -> tuple[int, int]:
    """Commit the round-i response before the challenge is revealed.

    Computes both candidate answers under the current parity estimate.  If
    they coincide the committed bit wins for either challenge; otherwise the
    commitment amounts to betting on one challenge value, so the assumed
    challenge must be the chosen branch.  Exactly one coin is drawn per
    round.  Returns (committed_bit, assumed_challenge).
    """
    regs = state.regs
    if not 1 <= i <= regs.n:
        raise IndexError(f"round {i} out of range 1..{regs.n}")
    q_i = regs.q[i - 1]
    a0 = regs.r0[i - 1] ^ state.f_estimate
    a1 = regs.r1[i - 1] ^ state.f_estimate ^ q_i
    if a0 == a1:
        committed = a0
        assumed = _coin(rng)
    else:
        assumed = _coin(rng)
        committed = a1 if assumed else a0
    if q_i:
        state.f_estimate ^= assumed
    state.assumed_challenges.append(assumed)
    return committed, assumed


def distance_earlyreply_answer_hk(r0: BitsLike, r1: BitsLike, i: int, rng) -> int:
    """Early reply against the register pair: commit the sure bit when the
    registers agree, otherwise bet on one of them."""
    r0b, r1b = as_bits(r0), as_bits(r1)
    if r0b[i - 1] == r1b[i - 1]:
        return r0b[i - 1]
    return r1b[i - 1] if _coin(rng) else r0b[i - 1]


def at_tree_values(state: AtTreeState) -> list:
    """Per-node optimal early-reply values for every tree.

    V(leaf) = 1 and V(v) = max over commit bit b of the half-weighted sum of
    [b == label(child)] * V(child), the exact dynamic program for committing
    before each challenge.  Returns one heap-indexed list per tree.
    """
    d = state.depth
    size = 2 ** (d + 1)
    out = []
    for t in range(state.trees):
        v = [0.0] * size
        for node in range(size // 2, size):  # leaves
            v[node] = 1.0
        for node in range(size // 2 - 1, 0, -1):
            left, right = 2 * node, 2 * node + 1
            val0 = 0.5 * ((state.label(t, left) == 0) * v[left] + (state.label(t, right) == 0) * v[right])
            val1 = 0.5 * ((state.label(t, left) == 1) * v[left] + (state.label(t, right) == 1) * v[right])
            v[node] = max(val0, val1)
        out.append(v)
    return out


def distance_at_optimal(state: AtTreeState) -> float:
    """Exact early-reply success probability for one labelled tree state:
    the product of the root values of the per-tree dynamic program."""
    prob = 1.0
    for values in at_tree_values(state):
        prob *= values[1]
    return prob


def at_earlyreply_commit(state: AtTreeState, values: list, tree: int, node: int) -> int:
    """Commit bit at a node, following the dynamic program's argmax."""
    left, right = 2 * node, 2 * node + 1
    v = values[tree]
    val0 = 0.5 * ((state.label(tree, left) == 0) * v[left] + (state.label(tree, right) == 0) * v[right])
    val1 = 0.5 * ((state.label(tree, left) == 1) * v[left] + (state.label(tree, right) == 1) * v[right])
    return 1 if val1 > val0 else 0


def run_at_earlyreply_session(state: AtTreeState, challenges: BitsLike) -> bool:
    """Simulate the committing adversary over one challenge sequence."""
    bits = as_bits(challenges)
    if len(bits) != state.n:
        raise ValueError("challenge count must equal n")
    values = at_tree_values(state)
    d = state.depth
    for t in range(state.trees):
        node = 1
        for k in range(d):
            commit = at_earlyreply_commit(state, values, t, node)
            c = bits[t * d + k]
            node = 2 * node + c
            if commit != state.label(t, node):
                return False
    return True
