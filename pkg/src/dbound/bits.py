"""Bit-vector helpers shared across the package.

Bit vectors are immutable tuples of 0/1 ints, indexed in round order
(round i of the fast phase lives at tuple index i-1).  On the wire and in
JSON fixtures they are '0'/'1' strings in the same order.
"""

from __future__ import annotations

from typing import Iterable, Sequence, Union

Bits = tuple # tuple[int, ...]
BitsLike = Union[str, Sequence[int]]


def as_bits(value: BitsLike) -> Bits:
    """Coerce a '0101' string or an int sequence into a canonical bit tuple."""
    if isinstance(value, str):
        if not all(ch in "01" for ch in value):
            raise ValueError(f"bit string must contain only 0/1, got {value!r}")
        return tuple(1 if ch == "1" else 0 for ch in value)
    out = tuple(int(b) for b in value)
    if not all(b in (0, 1) for b in out):
        raise ValueError("bit values must be 0 or 1")
    return out


def bits_to_str(bits: Iterable[int]) -> str:
    return "".join("1" if b else "0" for b in bits)


def random_bits(rng, n: int) -> Bits:
    """n uniform bits from a numpy Generator."""
    return tuple(int(b) for b in rng.integers(0, 2, size=n))


def xor(a: Sequence[int], b: Sequence[int]) -> Bits:
    if len(a) != len(b):
        raise ValueError("length mismatch")
    return tuple(x ^ y for x, y in zip(a, b))


def popcount(bits: Iterable[int]) -> int:
    return sum(bits)
