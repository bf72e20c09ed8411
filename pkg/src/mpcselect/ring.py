"""Arithmetic in Z_{2^64} and the fixed-point encoding of reals into it.

A ring element is a residue modulo 2**64. Scalars are plain Python ints in
[0, 2**64); bulk values are numpy uint64 arrays, whose native wrap-around
gives exact ring arithmetic. Residues at or above 2**63 are interpreted as
negative (two's complement) wherever a signed reading is needed.

Real-valued data enters the ring as round(x * 2**f) for a configured number
of fractional bits f. Everything downstream assumes this convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EncodingRangeError

RING_BITS = 64
RING_MODULUS = 1 << RING_BITS
MASK = RING_MODULUS - 1
SIGN_BIT = 1 << (RING_BITS - 1)

# A RingElement is just an int residue; no wrapper class, to keep bulk paths
# on numpy and scalar paths allocation-free.
RingElement = int


def ring_add(a: int, b: int) -> int:
    return (a + b) & MASK


def ring_sub(a: int, b: int) -> int:
    return (a - b) & MASK


def ring_mul(a: int, b: int) -> int:
    return (a * b) & MASK


def ring_neg(a: int) -> int:
    return (-a) & MASK


def to_signed(a: int) -> int:
    """Two's-complement reading of a residue."""
    a &= MASK
    return a - RING_MODULUS if a >= SIGN_BIT else a


def as_residue(a: int) -> int:
    """Map any Python int (possibly negative) onto its residue."""
    return a & MASK


@dataclass(frozen=True)
class FixedPointParams:
    """Fixed-point layout: f fractional bits and the admissible input range.

    The magnitude bound is capped at 2**(62 - frac_bits) so that column sums
    and comparison intermediates stay clear of the sign bit.
    """

    frac_bits: int = 16
    magnitude_bound: float = float(1 << 20)

    def __post_init__(self) -> None:
        if not 0 < self.frac_bits < 32:
            raise ValueError(f"frac_bits must be in (0, 32), got {self.frac_bits}")
        if self.magnitude_bound <= 0:
            raise ValueError("magnitude_bound must be positive")
        if self.magnitude_bound > float(1 << (62 - self.frac_bits)):
            raise ValueError(
                f"magnitude_bound {self.magnitude_bound} exceeds "
                f"2**{62 - self.frac_bits} for frac_bits={self.frac_bits}"
            )

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits


def encode(x: float, params: FixedPointParams) -> int:
    """Encode a real as round(x * 2**f) mod 2**64, rounding half away from zero."""
    if not abs(x) <= params.magnitude_bound:
        raise EncodingRangeError(
            f"value {x!r} outside magnitude bound {params.magnitude_bound}"
        )
    scaled = x * params.scale
    q = int(abs(scaled) + 0.5)
    if scaled < 0:
        q = -q
    return q & MASK


def decode(e: int, params: FixedPointParams) -> float:
    return to_signed(e) / params.scale


def encode_array(x: np.ndarray, params: FixedPointParams) -> np.ndarray:
    """Vectorized encode; raises on any out-of-range entry."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise EncodingRangeError("non-finite value cannot be encoded")
    if np.any(np.abs(x) > params.magnitude_bound):
        bad = float(x.flat[int(np.argmax(np.abs(x)))])
        raise EncodingRangeError(
            f"value {bad!r} outside magnitude bound {params.magnitude_bound}"
        )
    scaled = x * params.scale
    q = np.floor(np.abs(scaled) + 0.5)
    q = np.where(scaled < 0, -q, q)
    # int64 round-trip is safe: |q| <= 2**62.
    return q.astype(np.int64).astype(np.uint64)


def decode_array(e: np.ndarray, params: FixedPointParams) -> np.ndarray:
    return signed_array(e) / float(params.scale)


def signed_array(e: np.ndarray) -> np.ndarray:
    """uint64 residues -> float64 signed values (exact below 2**53 magnitude)."""
    return np.asarray(e, dtype=np.uint64).astype(np.int64).astype(np.float64)


def signed_int_array(e: np.ndarray) -> np.ndarray:
    """uint64 residues -> int64 two's-complement view (exact)."""
    return np.asarray(e, dtype=np.uint64).astype(np.int64)


def const_array(value: int, shape: tuple[int, ...] | int = ()) -> np.ndarray:
    """uint64 array filled with a residue; accepts negative Python ints."""
    return np.full(shape, value & MASK, dtype=np.uint64)


def u64_to_bytes(arr: np.ndarray) -> bytes:
    """Serialize ring elements as 8-byte little-endian words (wire and file format)."""
    return np.ascontiguousarray(arr, dtype=np.uint64).astype("<u8").tobytes()


def u64_from_bytes(data: bytes, count: int | None = None) -> np.ndarray:
    arr = np.frombuffer(data, dtype="<u8")
    if count is not None and arr.size != count:
        raise ValueError(f"expected {count} ring elements, got {arr.size}")
    return arr.astype(np.uint64)
