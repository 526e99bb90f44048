"""Baseline responders and memory accounting."""

import itertools

import numpy as np
import pytest

from dbound.core import RegisterSet
from dbound.protocols import (
    AtResponder,
    AtTreeState,
    HkResponder,
    OursResponder,
    ResponderSpec,
    at_respond,
    at_tree_state_from_stream,
    build_responder,
    hk_respond,
    memory_bits,
    parse_protocol_id,
)


def test_hk_respond_examples():
    assert hk_respond("0110", "1001", 2, 0) == 1
    r = "0110"
    for i in range(1, 5):
        assert hk_respond(r, r, i, 0) == hk_respond(r, r, i, 1)
    with pytest.raises(IndexError):
        hk_respond("01", "10", 3, 0)


def test_hk_respond_depends_only_on_current_challenge():
    resp = HkResponder("0110", "1001")
    for bits in itertools.product((0, 1), repeat=4):
        for alt in itertools.product((0, 1), repeat=3):
            changed = tuple(alt) + (bits[3],)
            assert resp.respond(bits) == resp.respond(changed)


def test_memory_bits():
    assert memory_bits(ResponderSpec("at", 8, depth=8, trees=1)) == 2**9 - 1
    assert memory_bits(parse_protocol_id("at3", 48)) == 240  # == 5n
    assert memory_bits(ResponderSpec("ours", 64)) == 192
    assert memory_bits(ResponderSpec("hk", 64)) == 128


def test_parse_protocol_id():
    assert parse_protocol_id("ours", 10).protocol == "ours"
    spec = parse_protocol_id("at", 16)
    assert (spec.depth, spec.trees) == (16, 1)
    spec = parse_protocol_id("at:d=4", 16)
    assert (spec.depth, spec.trees) == (4, 4)
    with pytest.raises(ValueError):
        parse_protocol_id("at3", 10)
    with pytest.raises(ValueError):
        parse_protocol_id("at:d=5", 16)
    with pytest.raises(ValueError):
        parse_protocol_id("poulidor", 16)


def test_at_tree_hand_walk():
    # depth 2, one tree; labels indexed heap-style (root at 1, unlabelled)
    state = AtTreeState(depth=2, labels=((0, 0, 1, 0, 1, 1, 0, 1),))
    assert at_respond(state, 1, "1") == 0   # node 3
    assert at_respond(state, 2, "10") == 0  # node 3 -> 6
    assert at_respond(state, 2, "11") == 1  # node 3 -> 7
    assert at_respond(state, 2, "01") == 1  # node 2 -> 5


def test_at_depth_one_degenerates_to_register_pair():
    rng = np.random.default_rng(4)
    n = 6
    stream = tuple(rng.integers(0, 2, 2 * n))
    state = at_tree_state_from_stream(1, n, stream)
    r0 = tuple(state.label(t, 2) for t in range(n))
    r1 = tuple(state.label(t, 3) for t in range(n))
    resp = AtResponder(state)
    for bits in itertools.product((0, 1), repeat=n):
        for i in range(1, n + 1):
            assert resp.respond(bits[:i]) == hk_respond(r0, r1, i, bits[i - 1])


def test_at_blocks_are_independent():
    # flipping a challenge in an earlier block never changes later answers
    rng = np.random.default_rng(8)
    stream = tuple(rng.integers(0, 2, 2 * (2**3 - 2) + 2 * 6))
    state = at_tree_state_from_stream(2, 2, stream[:12])
    resp = AtResponder(state)
    for bits in itertools.product((0, 1), repeat=4):
        for j in (0, 1):  # block-0 rounds
            flipped = list(bits)
            flipped[j] ^= 1
            for i in (3, 4):  # block-1 rounds
                assert resp.respond(bits[:i]) == resp.respond(tuple(flipped)[:i])


def test_at_respond_validation():
    state = AtTreeState(depth=2, labels=((0,) * 8,))
    with pytest.raises(ValueError):
        at_respond(state, 2, "1")
    with pytest.raises(IndexError):
        at_respond(state, 3, "111")


def test_ours_responder_consistency():
    from dbound.core import prover_respond
    from dbound.prf import seeded_registers

    rng = np.random.default_rng(5)
    regs = RegisterSet(*seeded_registers(rng, 9))
    resp = OursResponder(regs)
    for _ in range(50):
        k = int(rng.integers(1, 10))
        prefix = tuple(rng.integers(0, 2, k))
        assert resp.respond(prefix) == prover_respond(regs, prefix)


def test_build_responder_shapes():
    rng = np.random.default_rng(1)
    assert build_responder(parse_protocol_id("ours", 5), rng).n == 5
    assert build_responder(parse_protocol_id("hk", 5), rng).n == 5
    at = build_responder(parse_protocol_id("at:d=2", 6), rng)
    assert at.n == 6 and at.state.trees == 3


def test_spec_validation():
    with pytest.raises(ValueError):
        ResponderSpec("at", 6, depth=4, trees=1)
    with pytest.raises(ValueError):
        ResponderSpec("ours", 0)
