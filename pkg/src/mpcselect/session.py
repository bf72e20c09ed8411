"""Per-party protocol state: channels, correlated randomness, and the
interactive core operations (multiply, dot, matmul, open).

A multiplication exploits the replication: from pairs (x_i, x_{i+1}) and
(y_i, y_{i+1}) each party locally computes the cross-term sum
z_i = x_i*y_i + x_i*y_{i+1} + x_{i+1}*y_i, so that z_1+z_2+z_3 = x*y.
It then masks z_i with its additive share of zero and sends the masked
value to its cyclic successor: one ring element per party, one round.
Relabeling the (received, own) pair restores the replicated layout.

Dot products and matrix products aggregate all cross terms locally before
the single resharing, so their communication is that of one multiplication
per *output* element, independent of the contracted length.

All pseudorandomness is drawn from counter-mode streams keyed by the
pairwise seeds and the session id, so runs are replayable bit-for-bit.
"""

from __future__ import annotations

import hashlib

import numpy as np
from numpy.random import Generator, Philox

from .errors import IntegrityError, RandomnessError, UsageError
from .ring import FixedPointParams
from .sharing import (SCALE_FIXED, SCALE_INT, PairwiseSeeds, SharedArray,
                      next_party, prev_party, public_share_array)
from .transport import Mesh


def _stream_key(seed: int, session_id: int, domain: bytes) -> list[int]:
    h = hashlib.blake2b(
        seed.to_bytes(16, "little") + session_id.to_bytes(8, "little") + domain,
        digest_size=16,
    ).digest()
    return [int.from_bytes(h[:8], "little"), int.from_bytes(h[8:], "little")]


def _stream(seed: int, session_id: int, domain: bytes) -> Generator:
    return Generator(Philox(key=_stream_key(seed, session_id, domain)))


class ProtocolSession:
    """One party's execution context for a protocol run."""

    def __init__(self, party: int, mesh: Mesh, fp: FixedPointParams,
                 seeds: PairwiseSeeds, session_id: int = 0,
                 max_batch: int = 32768):
        if party not in (1, 2, 3):
            raise UsageError(f"party must be 1..3, got {party}")
        self.party = party
        self.mesh = mesh
        self.fp = fp
        self.seeds = seeds
        self.session_id = session_id
        self.max_batch = max_batch
        # Zero-sharing streams: both holders of a pairwise seed draw from the
        # same stream in lockstep, one invocation per resharing phase.
        self._zs_next = _stream(seeds.with_next, session_id, b"zero")
        self._zs_prev = _stream(seeds.with_prev, session_id, b"zero")
        # Independent streams for the pairwise random bits.
        self._bits_next = _stream(seeds.with_next, session_id, b"bits")
        self._bits_prev = _stream(seeds.with_prev, session_id, b"bits")
        self.zero_counter = 0

    # -- accounting ---------------------------------------------------------

    @property
    def counters(self):
        return self.mesh.counters

    def bump(self, op: str, n: int = 1) -> None:
        self.counters.bump_op(op, n)

    # -- randomness ---------------------------------------------------------

    def _zero_words(self, shape) -> np.ndarray:
        """Additive share of zero, one fresh counter per call."""
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        if self.zero_counter >= (1 << 62):
            raise RandomnessError("zero-sharing counter exhausted")
        self.zero_counter += 1
        a = self._zs_next.integers(0, 1 << 64, n, dtype=np.uint64)
        b = self._zs_prev.integers(0, 1 << 64, n, dtype=np.uint64)
        return (a - b).reshape(shape)

    def _pair_bits(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """n pseudorandom bits from each pairwise stream (prev-seed, next-seed)."""
        words = (n + 63) // 64
        wp = self._bits_prev.integers(0, 1 << 64, words, dtype=np.uint64)
        wn = self._bits_next.integers(0, 1 << 64, words, dtype=np.uint64)
        shifts = np.arange(64, dtype=np.uint64)
        bp = ((wp[:, None] >> shifts) & np.uint64(1)).reshape(-1)[:n]
        bn = ((wn[:, None] >> shifts) & np.uint64(1)).reshape(-1)[:n]
        return bp, bn

    # -- communication phases ------------------------------------------------

    def exchange_ring(self, arr: np.ndarray) -> np.ndarray:
        """Send to successor, receive from predecessor; one round."""
        arr = np.asarray(arr, dtype=np.uint64)
        self.mesh.send_elems(next_party(self.party), arr.ravel())
        recv = self.mesh.recv_elems(prev_party(self.party), arr.size)
        self.mesh.barrier_round()
        return recv.reshape(arr.shape)

    # -- core secure operations ----------------------------------------------

    @staticmethod
    def _result_scale(a: SharedArray, b: SharedArray) -> str:
        return SCALE_INT if a.scale == SCALE_INT and b.scale == SCALE_INT else SCALE_FIXED

    def _reshare(self, z_local: np.ndarray, scale: str) -> SharedArray:
        z_local = np.asarray(z_local, dtype=np.uint64)
        s = z_local + self._zero_words(z_local.shape)
        recv = self.exchange_ring(s)
        return SharedArray(recv, s, self.party, scale)

    def mul(self, a: SharedArray, b: SharedArray) -> SharedArray:
        """Elementwise secure product; broadcasts like numpy.

        A product of two fixed-point operands carries a doubled scale and
        must be truncated by the caller (see primitives.mul_fixed).
        """
        if a.owner != b.owner:
            raise UsageError("operands owned by different parties")
        with np.errstate(over="ignore"):
            z = a.first * b.first + a.first * b.second + a.second * b.first
        self.bump("mul", int(np.size(z)))
        return self._reshare(z, self._result_scale(a, b))

    def mul_batch(self, pairs) -> list[SharedArray]:
        """Several independent products fused into one resharing phase.

        Operand pairs may differ in shape and scale; the phase still counts
        as a single round.
        """
        zs = []
        with np.errstate(over="ignore"):
            for a, b in pairs:
                if a.owner != b.owner:
                    raise UsageError("operands owned by different parties")
                zs.append(np.asarray(
                    a.first * b.first + a.first * b.second + a.second * b.first,
                    dtype=np.uint64))
        flat = np.concatenate([np.ravel(z) for z in zs])
        self.bump("mul", int(flat.size))
        joint = self._reshare(flat, SCALE_INT)
        out = []
        pos = 0
        for (a, b), z in zip(pairs, zs):
            n = z.size
            piece = SharedArray(joint.first[pos:pos + n].reshape(z.shape),
                                joint.second[pos:pos + n].reshape(z.shape),
                                self.party, self._result_scale(a, b))
            out.append(piece)
            pos += n
        return out

    def dot(self, a: SharedArray, b: SharedArray, axis: int = -1) -> SharedArray:
        """Inner product over one axis with a single resharing.

        Communication equals one multiplication per output element no matter
        the contracted length.
        """
        if a.owner != b.owner:
            raise UsageError("operands owned by different parties")
        if a.shape[axis] != b.shape[axis]:
            raise UsageError(
                f"dot length mismatch: {a.shape[axis]} vs {b.shape[axis]}"
            )
        with np.errstate(over="ignore"):
            z = (a.first * b.first + a.first * b.second + a.second * b.first
                 ).sum(axis=axis, dtype=np.uint64)
        self.bump("dot", int(np.size(z)) or 1)
        return self._reshare(np.asarray(z, dtype=np.uint64),
                             self._result_scale(a, b))

    def matmul(self, a: SharedArray, b: SharedArray) -> SharedArray:
        if a.owner != b.owner:
            raise UsageError("operands owned by different parties")
        if a.shape[-1] != b.shape[0]:
            raise UsageError(
                f"matmul inner dims disagree: {a.shape} x {b.shape}"
            )
        with np.errstate(over="ignore"):
            z = a.first @ b.first + a.first @ b.second + a.second @ b.first
        self.bump("matmul", 1)
        return self._reshare(z, self._result_scale(a, b))

    def open_fast(self, a: SharedArray) -> np.ndarray:
        """Reveal to all parties: each sends its first component onward.

        Used inside masked primitives where the opened value is uniform by
        construction. No cross-checking of the received share.
        """
        self.mesh.send_elems(next_party(self.party),
                             np.ascontiguousarray(a.first, dtype=np.uint64).ravel())
        missing = self.mesh.recv_elems(prev_party(self.party), a.size)
        self.mesh.barrier_round()
        self.bump("open", int(a.size))
        with np.errstate(over="ignore"):
            return np.asarray(a.first + a.second + missing.reshape(a.shape),
                              dtype=np.uint64)

    def open_checked(self, a: SharedArray) -> np.ndarray:
        """Reveal with redundancy: the missing share arrives from both peers
        and must agree, else IntegrityError."""
        first = np.ascontiguousarray(a.first, dtype=np.uint64).ravel()
        second = np.ascontiguousarray(a.second, dtype=np.uint64).ravel()
        self.mesh.send_elems(next_party(self.party), first)
        self.mesh.send_elems(prev_party(self.party), second)
        from_prev = self.mesh.recv_elems(prev_party(self.party), a.size)
        from_next = self.mesh.recv_elems(next_party(self.party), a.size)
        self.mesh.barrier_round()
        self.bump("open", int(a.size))
        if not np.array_equal(from_prev, from_next):
            raise IntegrityError("revealed share copies disagree")
        with np.errstate(over="ignore"):
            return np.asarray(a.first + a.second + from_prev.reshape(a.shape),
                              dtype=np.uint64)

    def const_share(self, value, shape=(), scale: str = SCALE_INT) -> SharedArray:
        """This party's deterministic share of a public constant."""
        return public_share_array(value, shape=shape, scale=scale, owner=self.party)

    def rand_bits(self, n: int) -> SharedArray:
        """n shared uniform bits, secret from every single party.

        XOR of three pairwise-seeded bit vectors, canonically ordered by seed
        index so all parties combine the same global sharings; each XOR costs
        one multiplication, two rounds total.
        """
        bp, bn = self._pair_bits(n)
        zeros = np.zeros(n, dtype=np.uint64)
        p = self.party
        # Global sharing of the bit vector from seed i places it in slot i+1.
        comps = {}
        for i in (1, 2, 3):
            if p == i % 3 + 1:
                comps[i] = (bp, zeros)       # we are the successor: first slot
            elif p == i:
                comps[i] = (zeros, bn)       # we are the owner side: second slot
            else:
                comps[i] = (zeros, zeros)
        u1, u2, u3 = (SharedArray(c[0], c[1], p, SCALE_INT) for i, c in
                      sorted(comps.items()))
        t = u1 + u2 - self.mul(u1, u2).mul_const(2)
        out = t + u3 - self.mul(t, u3).mul_const(2)
        self.bump("rand_bits", n)
        return out
