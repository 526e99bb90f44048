"""Responder implementations behind a common interface.

Three fast-phase designs are implemented:

* ``ours``  — the register-pair design with the running-parity twist
              (state 3n bits),
* ``hk``    — plain register pair, answer picked by the current challenge
              alone (state 2n bits),
* ``at``    — l labelled binary trees of depth d with d*l = n; the
              challenges of a block walk root-to-leaf and the answer is the
              label of the node reached (state l*(2^(d+1)-1) bits).

A responder is a pure function of the challenge prefix it has received, so
one object can be shared freely across trials and threads.  The protocol
registry is string-keyed ("ours", "hk", "at3", "at:d=<d>") so further
designs can be added without touching the experiment code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

from .bits import Bits, BitsLike, as_bits
from .core import RegisterSet, f_q


class Responder(Protocol):
    """Anything that can answer fast-phase challenges."""

    n: int

    def respond(self, received_prefix: BitsLike) -> int:
        """Answer for round len(prefix), given all challenge bits received."""
        ...


@dataclass(frozen=True)
class ResponderSpec:
    """Protocol id plus shape parameters; carries the memory accounting."""

    protocol: str  # "ours" | "hk" | "at"
    n: int
    depth: int = 0  # at only
    trees: int = 0  # at only

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.protocol not in ("ours", "hk", "at"):
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.protocol == "at":
            if self.depth < 1 or self.trees < 1:
                raise ValueError("tree protocol needs depth >= 1 and trees >= 1")
            if self.depth * self.trees != self.n:
                raise ValueError(f"depth*trees must equal n ({self.depth}*{self.trees} != {self.n})")

    @property
    def state_bits(self) -> int:
        return memory_bits(self)


def parse_protocol_id(protocol_id: str, n: int) -> ResponderSpec:
    """Resolve a CLI protocol string into a ResponderSpec.

    "at" means one tree of depth n; "at3" means n/3 trees of depth 3;
    "at:d=<d>" means n/d trees of depth d.
    """
    pid = protocol_id.strip().lower()
    if pid in ("ours", "hk"):
        return ResponderSpec(pid, n)
    if pid == "at":
        return ResponderSpec("at", n, depth=n, trees=1)
    if pid == "at3":
        if n % 3:
            raise ValueError(f"at3 requires n divisible by 3, got {n}")
        return ResponderSpec("at", n, depth=3, trees=n // 3)
    if pid.startswith("at:d="):
        depth = int(pid[5:])
        if depth < 1 or n % depth:
            raise ValueError(f"at:d={depth} requires n divisible by d, got n={n}")
        return ResponderSpec("at", n, depth=depth, trees=n // depth)
    raise ValueError(f"unknown protocol id {protocol_id!r}")


def memory_bits(spec: ResponderSpec) -> int:
    """Fast-phase state size in bits for a protocol configuration."""
    if spec.protocol == "ours":
        return 3 * spec.n
    if spec.protocol == "hk":
        return 2 * spec.n
    return spec.trees * (2 ** (spec.depth + 1) - 1)


def hk_respond(r0: BitsLike, r1: BitsLike, i: int, c_i: int) -> int:
    """Register-pair answer: the i-th bit of the register the challenge picks."""
    r0b, r1b = as_bits(r0), as_bits(r1)
    if not 1 <= i <= len(r0b):
        raise IndexError(f"round {i} out of range 1..{len(r0b)}")
    return r1b[i - 1] if c_i else r0b[i - 1]


@dataclass(frozen=True)
class OursResponder:
    regs: RegisterSet

    @property
    def n(self) -> int:
        return self.regs.n

    def respond(self, received_prefix: BitsLike) -> int:
        prefix = as_bits(received_prefix)
        i = len(prefix)
        return self.regs.response_register(i, prefix[-1]) ^ f_q(self.regs.q, prefix)


@dataclass(frozen=True)
class HkResponder:
    r0: Bits
    r1: Bits

    def __post_init__(self):
        object.__setattr__(self, "r0", as_bits(self.r0))
        object.__setattr__(self, "r1", as_bits(self.r1))
        if len(self.r0) != len(self.r1) or not self.r0:
            raise ValueError("r0 and r1 must be equal-length, non-empty")

    @property
    def n(self) -> int:
        return len(self.r0)

    def respond(self, received_prefix: BitsLike) -> int:
        prefix = as_bits(received_prefix)
        return hk_respond(self.r0, self.r1, len(prefix), prefix[-1])


@dataclass(frozen=True)
class AtTreeState:
    """l full binary trees of depth d, non-root nodes labelled with one bit.

    Each tree's labels use heap indexing: node 1 is the (unlabelled) root,
    node v has children 2v and 2v+1, so breadth-first order is index order.
    labels[t][v] is the bit at node v of tree t; entries 0 and 1 are unused.
    """

    depth: int
    labels: tuple  # tuple[tuple[int, ...], ...], each of length 2^(depth+1)

    def __post_init__(self):
        if self.depth < 1 or not self.labels:
            raise ValueError("need depth >= 1 and at least one tree")
        want = 2 ** (self.depth + 1)
        for tree in self.labels:
            if len(tree) != want:
                raise ValueError(f"each tree needs {want} label slots")

    @property
    def trees(self) -> int:
        return len(self.labels)

    @property
    def n(self) -> int:
        return self.depth * self.trees

    def label(self, tree: int, node: int) -> int:
        if node < 2:
            raise IndexError("the root carries no label")
        return self.labels[tree][node]


def at_tree_state_from_stream(depth: int, trees: int, bitstream: Sequence[int]) -> AtTreeState:
    """Label trees breadth-first from a flat bit stream (root unlabelled)."""
    per_tree = 2 ** (depth + 1) - 2
    if len(bitstream) < trees * per_tree:
        raise ValueError(f"need {trees * per_tree} bits, got {len(bitstream)}")
    all_labels = []
    pos = 0
    for _ in range(trees):
        tree = [0, 0] + [int(b) for b in bitstream[pos : pos + per_tree]]
        all_labels.append(tuple(tree))
        pos += per_tree
    return AtTreeState(depth=depth, labels=tuple(all_labels))


def at_respond(state: AtTreeState, i: int, challenges_so_far: BitsLike) -> int:
    """Walk the current tree along this block's challenge bits; answer its label.

    Round i belongs to tree (i-1)//d; the walk uses the last
    ((i-1) mod d) + 1 challenge bits, i.e. the bits of that tree's block.
    """
    prefix = as_bits(challenges_so_far)
    if len(prefix) != i:
        raise ValueError(f"challenge prefix must have length {i}, got {len(prefix)}")
    if not 1 <= i <= state.n:
        raise IndexError(f"round {i} out of range 1..{state.n}")
    d = state.depth
    tree = (i - 1) // d
    node = 1
    for bit in prefix[tree * d : i]:
        node = 2 * node + bit
    return state.label(tree, node)


@dataclass(frozen=True)
class AtResponder:
    state: AtTreeState

    @property
    def n(self) -> int:
        return self.state.n

    def respond(self, received_prefix: BitsLike) -> int:
        prefix = as_bits(received_prefix)
        return at_respond(self.state, len(prefix), prefix)


def build_responder(spec: ResponderSpec, rng) -> Responder:
    """Instantiate a responder with uniform random state drawn from rng."""
    if spec.protocol == "ours":
        flat = rng.integers(0, 2, size=3 * spec.n)
        bits = tuple(int(b) for b in flat)
        return OursResponder(RegisterSet(bits[: spec.n], bits[spec.n : 2 * spec.n], bits[2 * spec.n :]))
    if spec.protocol == "hk":
        flat = rng.integers(0, 2, size=2 * spec.n)
        bits = tuple(int(b) for b in flat)
        return HkResponder(bits[: spec.n], bits[spec.n :])
    per_tree = 2 ** (spec.depth + 1) - 2
    stream = tuple(int(b) for b in rng.integers(0, 2, size=spec.trees * per_tree))
    return AtResponder(at_tree_state_from_stream(spec.depth, spec.trees, stream))
