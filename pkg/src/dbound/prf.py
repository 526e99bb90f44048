"""Keyed pseudorandom bitstream and register derivation.

Both sides of a session expand (key, prover nonce, verifier nonce) into the
three n-bit fast-phase registers.  The expansion is an HMAC-SHA256 stream
with an explicit domain tag and a length-prefixed encoding of every input,
so distinct (key, nonces, n) can never collide.  Tests and fixtures that
need register material without a key use seeded_registers instead.
"""

from __future__ import annotations

import hashlib
import hmac

from .bits import Bits, BitsLike, as_bits

_DOMAIN = b"dbound.registers.v1"


def keyed_bitstream(key: bytes, message: bytes, nbits: int) -> Bits:
    """First nbits of the HMAC-SHA256(key, message || counter) stream."""
    if nbits < 0:
        raise ValueError("nbits must be non-negative")
    out = bytearray()
    counter = 0
    while 8 * len(out) < nbits:
        block = hmac.new(key, message + counter.to_bytes(4, "big"), hashlib.sha256).digest()
        out.extend(block)
        counter += 1
    bits = []
    for byte in out:
        for shift in range(7, -1, -1):
            bits.append((byte >> shift) & 1)
            if len(bits) == nbits:
                return tuple(bits)
    return tuple(bits)


def _encode(*parts: bytes) -> bytes:
    chunks = [_DOMAIN]
    for part in parts:
        chunks.append(len(part).to_bytes(4, "big"))
        chunks.append(part)
    return b"".join(chunks)


def expand_registers(key: bytes, nonce_p: BitsLike, nonce_v: BitsLike, n: int) -> tuple[Bits, Bits, Bits]:
    """Derive the (q, r0, r1) register bits for an n-round session.

    Deterministic in all inputs; the 3n-bit stream is split in order
    q, then r0, then r1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not key:
        raise ValueError("key must be non-empty")
    np_, nv = as_bits(nonce_p), as_bits(nonce_v)
    if len(np_) != n or len(nv) != n:
        raise ValueError("nonces must be n bits long")
    message = _encode(
        n.to_bytes(4, "big"),
        bytes(np_),
        bytes(nv),
    )
    stream = keyed_bitstream(key, message, 3 * n)
    return stream[:n], stream[n : 2 * n], stream[2 * n :]


def seeded_registers(rng, n: int) -> tuple[Bits, Bits, Bits]:
    """Uniform random registers from a numpy Generator; the test double."""
    flat = rng.integers(0, 2, size=3 * n)
    bits = tuple(int(b) for b in flat)
    return bits[:n], bits[n : 2 * n], bits[2 * n :]
