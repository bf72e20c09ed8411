"""Replicated secret sharing among three parties over Z_{2^64}.

A secret x is split as x = x1 + x2 + x3 mod 2**64 with x1, x2 uniform.
Party 1 holds (x1, x2), party 2 holds (x2, x3), party 3 holds (x3, x1):
every party holds the pair (x_i, x_{i+1}) for its own index i, any two
parties can reconstruct, and a single party's view is uniform noise.

Linear operations are local. Addition of a public constant folds the
constant into the x1 slot only, i.e. party 1 adjusts its first component
and party 3 its second. Multiplication needs one interactive resharing and
lives in the session module; this module is purely local state plus the
pseudorandom zero-sharing that resharing consumes.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IntegrityError, UsageError
from .ring import MASK

PARTIES = (1, 2, 3)

# Scale tags: "int" for unscaled integers (bits, counts, indices),
# "fixed" for fixed-point encoded reals.
SCALE_INT = "int"
SCALE_FIXED = "fixed"


def next_party(p: int) -> int:
    return p % 3 + 1


def prev_party(p: int) -> int:
    return (p - 2) % 3 + 1


def _as_u64(c) -> np.ndarray | np.uint64:
    """Coerce a constant (possibly negative int, or array) to uint64 residues."""
    if isinstance(c, np.ndarray):
        if c.dtype == np.uint64:
            return c
        return c.astype(np.int64).astype(np.uint64)
    return np.uint64(int(c) & MASK)


@dataclass
class SharedArray:
    """One party's replicated shares for an array of secrets.

    ``first`` holds this party's x_i component, ``second`` holds x_{i+1},
    elementwise over an arbitrary numpy shape. Values are treated as
    immutable; operations return new instances.
    """

    first: np.ndarray
    second: np.ndarray
    owner: int
    scale: str = SCALE_INT

    def __post_init__(self) -> None:
        if self.owner not in PARTIES:
            raise UsageError(f"owner must be 1..3, got {self.owner}")
        # Normalize to ndarray: numpy returns scalars from 0-d operations,
        # and scalar uint64 arithmetic warns on the wraparound we rely on.
        if not isinstance(self.first, np.ndarray):
            self.first = np.asarray(self.first, dtype=np.uint64)
        if not isinstance(self.second, np.ndarray):
            self.second = np.asarray(self.second, dtype=np.uint64)
        if self.first.shape != self.second.shape:
            raise UsageError("share components must have equal shapes")

    @property
    def shape(self) -> tuple:
        return self.first.shape

    @property
    def ndim(self) -> int:
        return self.first.ndim

    @property
    def size(self) -> int:
        return self.first.size

    def _check_peer(self, other: "SharedArray") -> None:
        if self.owner != other.owner:
            raise UsageError(
                f"share owner mismatch: {self.owner} vs {other.owner}"
            )
        if self.scale != other.scale:
            raise UsageError(f"scale mismatch: {self.scale} vs {other.scale}")

    def __add__(self, other: "SharedArray") -> "SharedArray":
        self._check_peer(other)
        return SharedArray(self.first + other.first, self.second + other.second,
                           self.owner, self.scale)

    def __sub__(self, other: "SharedArray") -> "SharedArray":
        self._check_peer(other)
        return SharedArray(self.first - other.first, self.second - other.second,
                           self.owner, self.scale)

    def neg(self) -> "SharedArray":
        return SharedArray(-self.first, -self.second, self.owner, self.scale)

    def add_const(self, c) -> "SharedArray":
        """Add a public constant: only the x1 slot absorbs it."""
        cu = _as_u64(c)
        shape = np.broadcast_shapes(self.shape, np.shape(cu))
        first = np.broadcast_to(self.first, shape)
        second = np.broadcast_to(self.second, shape)
        if self.owner == 1:
            first = first + cu
        elif self.owner == 3:
            second = second + cu
        return SharedArray(first, second, self.owner, self.scale)

    def mul_const(self, c) -> "SharedArray":
        cu = _as_u64(c)
        return SharedArray(self.first * cu, self.second * cu, self.owner, self.scale)

    def sum(self, axis=None) -> "SharedArray":
        return SharedArray(self.first.sum(axis=axis, dtype=np.uint64),
                           self.second.sum(axis=axis, dtype=np.uint64),
                           self.owner, self.scale)

    def reshape(self, *shape) -> "SharedArray":
        return SharedArray(self.first.reshape(*shape), self.second.reshape(*shape),
                           self.owner, self.scale)

    def broadcast_to(self, shape) -> "SharedArray":
        return SharedArray(np.broadcast_to(self.first, shape),
                           np.broadcast_to(self.second, shape),
                           self.owner, self.scale)

    def __getitem__(self, idx) -> "SharedArray":
        return SharedArray(self.first[idx], self.second[idx], self.owner, self.scale)

    def with_scale(self, scale: str) -> "SharedArray":
        return SharedArray(self.first, self.second, self.owner, scale)

    def ravel(self) -> "SharedArray":
        return SharedArray(self.first.ravel(), self.second.ravel(), self.owner, self.scale)

    @property
    def T(self) -> "SharedArray":
        return SharedArray(self.first.T, self.second.T, self.owner, self.scale)


def stack_shares(shares: Sequence[SharedArray], axis: int = 0) -> SharedArray:
    owner, scale = shares[0].owner, shares[0].scale
    return SharedArray(np.stack([s.first for s in shares], axis=axis),
                       np.stack([s.second for s in shares], axis=axis),
                       owner, scale)


def concat_shares(shares: Sequence[SharedArray], axis: int = 0) -> SharedArray:
    owner, scale = shares[0].owner, shares[0].scale
    return SharedArray(np.concatenate([s.first for s in shares], axis=axis),
                       np.concatenate([s.second for s in shares], axis=axis),
                       owner, scale)


def share_array(values: np.ndarray, rng, scale: str = SCALE_INT
                ) -> tuple[SharedArray, SharedArray, SharedArray]:
    """Split an array of residues into three replicated share sets.

    ``rng`` must provide ``integers(low, high, size, dtype)``; x1 and x2 are
    drawn from it in that order, x3 = x - x1 - x2.
    """
    values = np.asarray(values, dtype=np.uint64)
    x1 = rng.integers(0, 1 << 64, size=values.shape, dtype=np.uint64)
    x2 = rng.integers(0, 1 << 64, size=values.shape, dtype=np.uint64)
    x3 = values - x1 - x2
    return (SharedArray(x1, x2, 1, scale),
            SharedArray(x2, x3, 2, scale),
            SharedArray(x3, x1, 3, scale))


def public_share_array(values, shape=None, scale: str = SCALE_INT, owner: int | None = None):
    """Deterministic sharing of a public value: x1 = v, x2 = x3 = 0.

    With ``owner`` given, returns that party's share only; otherwise all three.
    """
    v = _as_u64(values)
    if shape is None:
        shape = np.shape(v)
    v = np.broadcast_to(np.asarray(v, dtype=np.uint64), shape)
    z = np.zeros(shape, dtype=np.uint64)
    parts = {
        1: SharedArray(v.copy(), z, 1, scale),
        2: SharedArray(z, z, 2, scale),
        3: SharedArray(z, v.copy(), 3, scale),
    }
    if owner is not None:
        return parts[owner]
    return parts[1], parts[2], parts[3]


def reconstruct_array(*shares: SharedArray) -> np.ndarray:
    """Combine two or three parties' shares back into residues.

    Overlapping components must agree exactly; disagreement raises
    IntegrityError (corrupted or misrouted shares).
    """
    if len(shares) < 2:
        raise UsageError("reconstruction needs shares from at least two parties")
    slots: dict[int, np.ndarray] = {}
    for sh in shares:
        for slot, comp in ((sh.owner, sh.first), (next_party(sh.owner), sh.second)):
            if slot in slots:
                if not np.array_equal(slots[slot], comp):
                    raise IntegrityError(
                        f"share slot {slot} disagrees between parties"
                    )
            else:
                slots[slot] = comp
    if set(slots) != {1, 2, 3}:
        raise UsageError("shares do not cover all three slots")
    return slots[1] + slots[2] + slots[3]


def reconstruct_value(*shares: SharedArray) -> int:
    return int(reconstruct_array(*shares))


@dataclass(frozen=True)
class PairwiseSeeds:
    """One party's two correlated-randomness seeds.

    ``with_next`` is shared with the cyclic successor, ``with_prev`` with the
    predecessor. Across parties the three underlying seeds are s12, s23, s31:
    party i's with_next equals party (i+1)'s with_prev.
    """

    with_next: int
    with_prev: int


def derive_pairwise_seeds(s12: int, s23: int, s31: int) -> dict[int, PairwiseSeeds]:
    return {
        1: PairwiseSeeds(with_next=s12, with_prev=s31),
        2: PairwiseSeeds(with_next=s23, with_prev=s12),
        3: PairwiseSeeds(with_next=s31, with_prev=s23),
    }


@dataclass
class ZeroSharingKeys:
    """The three pairwise seeds plus a monotone invocation counter."""

    s12: int
    s23: int
    s31: int
    counter: int = 0

    def seeds_for(self, party: int) -> PairwiseSeeds:
        return derive_pairwise_seeds(self.s12, self.s23, self.s31)[party]

    def next_counter(self) -> int:
        c = self.counter
        self.counter += 1
        return c


def prf_words(seed: int, domain: bytes, counter: int, n: int) -> np.ndarray:
    """Counter-addressable PRF: n ring elements from (seed, domain, counter).

    Pure function of its arguments; both holders of a pairwise seed evaluate
    it identically without interaction.
    """
    key = hashlib.blake2b(
        seed.to_bytes(16, "little", signed=False) + domain, digest_size=32
    ).digest()
    out = np.empty(n, dtype=np.uint64)
    blocks = (n + 7) // 8
    buf = bytearray()
    for b in range(blocks):
        buf += hashlib.blake2b(
            struct.pack("<QQ", counter, b), key=key, digest_size=64
        ).digest()
    out[:] = np.frombuffer(bytes(buf), dtype="<u8")[:n]
    return out


ZERO_DOMAIN = b"zero-sharing/v1"


def zero_share(seeds: PairwiseSeeds, counter: int, n: int = 1) -> np.ndarray:
    """This party's additive share of zero for one invocation counter.

    alpha_i = PRF(seed with next) - PRF(seed with prev); summed over the three
    parties every seed appears once positively and once negatively.
    """
    return (prf_words(seeds.with_next, ZERO_DOMAIN, counter, n)
            - prf_words(seeds.with_prev, ZERO_DOMAIN, counter, n))
