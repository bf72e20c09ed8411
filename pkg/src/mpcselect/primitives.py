"""Secure building blocks over replicated shares.

Comparison, equality, truncation and division all follow one pattern: mask
the operand with a jointly generated random value whose bit decomposition is
shared, open the masked sum (uniform, so it reveals nothing), and finish
with local bit algebra plus a shallow tree of secure multiplications over
the shared mask bits. Every message count and size depends only on shapes,
never on data.

Borrow propagation uses (generate, propagate) pairs: for public minuend bit
c_j and shared subtrahend bit r_j, a borrow is generated when r_j > c_j and
propagated when c_j == r_j, i.e. g_j = r_j*(1-c_j), p_j = 1-(c_j XOR r_j).
Pairs compose associatively, so a balanced tree yields the final borrow in
ceil(log2(n)) rounds and a Hillis-Steele scan yields all prefixes when full
bit decompositions are needed.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import UsageError
from .ring import SIGN_BIT
from .sharing import SCALE_FIXED, SCALE_INT, SharedArray, concat_shares
from .session import ProtocolSession

RING_BITS = 64
# Division accepts integer denominators below 2**DIV_DENOM_BITS.
DIV_DENOM_BITS = 21
# Internal fixed-point scale for the reciprocal iteration.
DIV_SCALE = 30
# Linear initial estimate for 1/v on v in [0.5, 1): z0 = ALPHA - 2v.
_DIV_ALPHA = 2.9142


def u64_bits(c: np.ndarray, nbits: int = RING_BITS) -> np.ndarray:
    """Public residues -> 0/1 bit planes, bit axis last, ascending."""
    c = np.asarray(c, dtype=np.uint64)
    shifts = np.arange(nbits, dtype=np.uint64)
    return (c[..., None] >> shifts) & np.uint64(1)


def weighted_bit_sum(bits: SharedArray, weights: np.ndarray) -> SharedArray:
    """Local linear combination sum_j bits_j * weights_j over the last axis."""
    w = np.asarray(weights, dtype=np.uint64)
    return SharedArray((bits.first * w).sum(-1, dtype=np.uint64),
                       (bits.second * w).sum(-1, dtype=np.uint64),
                       bits.owner, SCALE_INT)


def _pow2(exponents: np.ndarray) -> np.ndarray:
    return (np.uint64(1) << np.asarray(exponents, dtype=np.uint64))


def _borrow_leaves(c_bits: np.ndarray, r_bits: SharedArray
                   ) -> tuple[SharedArray, SharedArray]:
    """(generate, propagate) pairs for the subtraction c - r, c public."""
    one_minus_c = (np.uint64(1) - c_bits).astype(np.uint64)
    two_c_minus_1 = (2 * c_bits.astype(np.int64) - 1).astype(np.uint64)
    g = r_bits.mul_const(one_minus_c)
    p = r_bits.mul_const(two_c_minus_1).add_const(one_minus_c)
    return g, p


def _combine_pairs(session: ProtocolSession, g: SharedArray, p: SharedArray,
                   lo, hi) -> tuple[SharedArray, SharedArray]:
    """One tree level: (g,p)[hi] o (g,p)[lo] in a single phase."""
    hp = p[..., hi]
    prod_g, prod_p = session.mul_batch([(hp, g[..., lo]), (hp, p[..., lo])])
    return g[..., hi] + prod_g, prod_p


def borrow_out(session: ProtocolSession, g: SharedArray, p: SharedArray
               ) -> SharedArray:
    """Tree-reduce all (g,p) pairs to the single borrow out of the top bit."""
    n = g.shape[-1]
    while n > 1:
        k = n // 2
        lo = slice(0, 2 * k, 2)
        hi = slice(1, 2 * k, 2)
        ng, np_ = _combine_pairs(session, g, p, lo, hi)
        if n % 2:
            ng = concat_shares([ng, g[..., -1:]], axis=-1)
            np_ = concat_shares([np_, p[..., -1:]], axis=-1)
        g, p, n = ng, np_, (n + 1) // 2
    return g[..., 0]


def borrow_prefixes(session: ProtocolSession, g: SharedArray, p: SharedArray
                    ) -> SharedArray:
    """Inclusive scan: position j becomes the borrow out of bits 0..j."""
    n = g.shape[-1]
    d = 1
    while d < n:
        hp = p[..., d:]
        prod_g, prod_p = session.mul_batch([(hp, g[..., :-d]), (hp, p[..., :-d])])
        g = concat_shares([g[..., :d], g[..., d:] + prod_g], axis=-1)
        p = concat_shares([p[..., :d], prod_p], axis=-1)
        d *= 2
    return g


def and_tree(session: ProtocolSession, bits: SharedArray) -> SharedArray:
    """AND of all bits along the last axis via a balanced product tree."""
    n = bits.shape[-1]
    while n > 1:
        k = n // 2
        prod = session.mul(bits[..., 0:2 * k:2], bits[..., 1:2 * k:2])
        if n % 2:
            prod = concat_shares([prod, bits[..., -1:]], axis=-1)
        bits, n = prod, (n + 1) // 2
    return bits[..., 0]


def suffix_or(session: ProtocolSession, bits: SharedArray) -> SharedArray:
    """s_j = OR of bits j..n-1, last axis; log-depth scan."""
    x = bits[..., ::-1]
    n = x.shape[-1]
    d = 1
    while d < n:
        a, b = x[..., d:], x[..., :-d]
        prod = session.mul(a, b)
        merged = a + b - prod  # OR
        x = concat_shares([x[..., :d], merged], axis=-1)
        d *= 2
    return x[..., ::-1]


def xor_shared(session: ProtocolSession, a: SharedArray, b: SharedArray
               ) -> SharedArray:
    return a + b - session.mul(a, b).mul_const(2)


def _masked_open(session: ProtocolSession, d: SharedArray
                 ) -> tuple[np.ndarray, SharedArray]:
    """Draw shared mask bits, open d + mask; returns (public sum, mask bits)."""
    bits = session.rand_bits(d.size * RING_BITS).reshape(d.shape + (RING_BITS,))
    r = weighted_bit_sum(bits, _pow2(np.arange(RING_BITS)))
    c = session.open_fast(d.with_scale(SCALE_INT) + r)
    return c, bits


def _lt_core(session: ProtocolSession, x: SharedArray, y: SharedArray,
             bits: SharedArray | None) -> SharedArray:
    # x < y  iff  y - x - 1 >= 0  iff  the sign bit of y - x - 1 is clear.
    d = (y - x).add_const(-1)
    if bits is None:
        c, bits = _masked_open(session, d)
    else:
        r = weighted_bit_sum(bits, _pow2(np.arange(RING_BITS)))
        c = session.open_fast(d.with_scale(SCALE_INT) + r)
    c_bits = u64_bits(c)
    # sign bit of d = c_63 XOR r_63 XOR (borrow into bit 63 of c - r)
    g, p = _borrow_leaves(c_bits[..., :63], bits[..., :63])
    b63 = borrow_out(session, g, p)
    t = xor_shared(session, bits[..., 63], b63)
    sign_flip = (1 - 2 * c_bits[..., 63].astype(np.int64)).astype(np.uint64)
    msb = t.mul_const(sign_flip).add_const(c_bits[..., 63])
    return msb.neg().add_const(1).with_scale(SCALE_INT)


def less_than(session: ProtocolSession, x: SharedArray, y: SharedArray,
              bits: SharedArray | None = None) -> SharedArray:
    """Shared bit: 1 iff x < y under the signed reading. Strict.

    Operands must carry the same scale. Batches larger than
    session.max_batch are processed in deterministic chunks.
    """
    if x.scale != y.scale:
        raise UsageError("comparing values of different scales")
    shape = np.broadcast_shapes(x.shape, y.shape)
    x = x.broadcast_to(shape)
    y = y.broadcast_to(shape)
    session.bump("less_than", int(np.prod(shape, dtype=np.int64)) if shape else 1)
    total = x.size
    if bits is not None or total <= session.max_batch:
        return _lt_core(session, x, y, bits)
    xf, yf = x.ravel(), y.ravel()
    parts = []
    for lo in range(0, total, session.max_batch):
        hi = min(lo + session.max_batch, total)
        parts.append(_lt_core(session, xf[lo:hi], yf[lo:hi], None))
    return concat_shares(parts, axis=0).reshape(shape)


def equal(session: ProtocolSession, x: SharedArray, y) -> SharedArray:
    """Shared bit: 1 iff x == y; y may be shared or a public int/array.

    A zero test of the difference: open the masked difference and AND the
    64 bitwise agreements between the public sum and the shared mask.
    """
    if isinstance(y, SharedArray):
        if x.scale != y.scale:
            raise UsageError("comparing values of different scales")
        d = x - y
    else:
        d = x.add_const(-np.asarray(y, dtype=np.int64) if isinstance(y, np.ndarray)
                        else -int(y))
    session.bump("equal", int(d.size))
    c, bits = _masked_open(session, d)
    c_bits = u64_bits(c)
    # agreement bit per position: 1 - (c_j XOR r_j); d == 0 iff c == r.
    _, agree = _borrow_leaves(c_bits, bits)
    return and_tree(session, agree).with_scale(SCALE_INT)


def truncate(session: ProtocolSession, a: SharedArray,
             shift: int | None = None, scale: str = SCALE_FIXED) -> SharedArray:
    """Arithmetic shift right by ``shift`` bits, at most one unit of error.

    Works for any signed magnitude: the value is biased into [0, 2**64),
    the masked sum is opened, and the wrap of the mask is corrected exactly
    with one borrow computation. The residual error is a single +1 ulp
    carried in from the discarded fraction, and exact multiples of 2**shift
    truncate exactly.
    """
    shift = session.fp.frac_bits if shift is None else shift
    if not 0 < shift < 64:
        raise UsageError(f"shift must be in (0, 64), got {shift}")
    session.bump("truncate", int(a.size) or 1)
    biased = a.add_const(SIGN_BIT)
    c, bits = _masked_open(session, biased)
    g, p = _borrow_leaves(u64_bits(c), bits)
    wrap = borrow_out(session, g, p)  # 1 iff the mask exceeded the masked sum
    r_hi = weighted_bit_sum(bits[..., shift:],
                            _pow2(np.arange(RING_BITS - shift)))
    out = wrap.mul_const(1 << (RING_BITS - shift)) - r_hi
    out = out.add_const((c >> np.uint64(shift)).astype(np.uint64))
    out = out.add_const(-(1 << (63 - shift)))
    return out.with_scale(scale)


def mul_fixed(session: ProtocolSession, a: SharedArray, b: SharedArray
              ) -> SharedArray:
    """Fixed-point product: secure multiply then truncate by the scale."""
    if not (a.scale == SCALE_FIXED and b.scale == SCALE_FIXED):
        raise UsageError("mul_fixed needs two fixed-point operands")
    return truncate(session, session.mul(a, b))


def dot_product(session: ProtocolSession, a: SharedArray, b: SharedArray,
                axis: int = -1) -> SharedArray:
    """Secure inner product with the scale rules of the protocol suite:
    integer*integer stays integer, fixed*fixed truncates once at the end."""
    out = session.dot(a, b, axis=axis)
    if a.scale == SCALE_FIXED and b.scale == SCALE_FIXED:
        out = truncate(session, out)
    return out


def mat_mul(session: ProtocolSession, a: SharedArray, b: SharedArray
            ) -> SharedArray:
    """Secure matrix product; fixed*fixed truncates once per entry at the end."""
    out = session.matmul(a, b)
    if a.scale == SCALE_FIXED and b.scale == SCALE_FIXED:
        out = truncate(session, out)
    return out


def argmin(session: ProtocolSession, v: SharedArray) -> SharedArray:
    """Shared 1-based index of the first minimum of a shared vector.

    Linear oblivious scan: the running (min, index) pair is updated with
    conditional assignments a <- a + c*(b - a), where c comes from a strict
    comparison, so later ties never displace the incumbent.
    """
    if v.ndim != 1 or v.size == 0:
        raise UsageError("argmin needs a non-empty vector")
    session.bump("argmin", 1)
    n = v.size
    idx = session.const_share(1, (), SCALE_INT)
    if n == 1:
        return idx
    # Mask bits for the whole scan are input-independent: draw them upfront.
    bits = session.rand_bits((n - 1) * RING_BITS).reshape(n - 1, RING_BITS)
    current = v[0]
    for i in range(2, n + 1):
        vi = v[i - 1]
        c = less_than(session, vi, current, bits=bits[i - 2])
        d_min = vi - current
        d_idx = idx.neg().add_const(i)
        upd_min, upd_idx = session.mul_batch([(c, d_min), (c, d_idx)])
        current = current + upd_min.with_scale(current.scale)
        idx = idx + upd_idx.with_scale(SCALE_INT)
    return idx


def reciprocal(session: ProtocolSession, y: SharedArray) -> SharedArray:
    """Fixed-point 1/y for shared integers y in [1, 2**21).

    The denominator is bit-decomposed from a masked opening, normalized into
    [0.5, 1) by a secretly selected power of two, refined by Newton-Raphson
    at an internal 30-bit scale, and rescaled by the same hidden power. A
    zero denominator yields exactly zero (the one-hot normalizer vanishes),
    which callers exploit as 0 * garbage == 0.
    """
    session.bump("reciprocal", int(y.size) or 1)
    nb = DIV_DENOM_BITS
    c, bits = _masked_open(session, y)
    c_bits = u64_bits(c)
    # bits of y = c_j XOR r_j XOR borrow_j over the low nb positions
    g, p = _borrow_leaves(c_bits[..., :nb - 1], bits[..., :nb - 1])
    prefix = borrow_prefixes(session, g, p)
    t = xor_shared(session, bits[..., 1:nb], prefix[..., :nb - 1])
    low = _public_xor(bits[..., 0], c_bits[..., 0])
    y_bits = concat_shares([low.reshape(low.shape + (1,)),
                            _public_xor(t, c_bits[..., 1:nb])], axis=-1)
    s = suffix_or(session, y_bits)
    # one-hot top-bit indicator -> normalizer w = 2^(nb-1-j) (scale nb)
    top = s - concat_shares([s[..., 1:], _zero_like(s[..., :1])], axis=-1)
    w = weighted_bit_sum(top, _pow2(nb - 1 - np.arange(nb)))
    y_norm = session.mul(y, w)  # value in [0.5, 1) at scale nb, exact
    y30 = y_norm.mul_const(1 << (DIV_SCALE - nb))
    z = y30.mul_const(-2).add_const(round(_DIV_ALPHA * (1 << DIV_SCALE)))
    iters = 2 + max(0, math.ceil(math.log2(session.fp.frac_bits / 3.5)))
    two = 2 << DIV_SCALE
    for _ in range(iters):
        e = truncate(session, session.mul(z, y30), DIV_SCALE)
        z = truncate(session, session.mul(z, e.neg().add_const(two)), DIV_SCALE)
    # undo normalization: 1/y = z * 2^-(j+1), at scale DIV_SCALE + nb
    return session.mul(z, w).with_scale(SCALE_FIXED)


def divide(session: ProtocolSession, x, y: SharedArray) -> SharedArray:
    """Fixed-point x / y; x public int (or int array) or a shared integer.

    Accuracy: within 2**-(f-2) of the true quotient for |x| <= 2**11 and
    integer denominators in [1, 2**20]; y == 0 returns exactly 0.
    """
    session.bump("divide", int(y.size) or 1)
    u = reciprocal(session, y)
    if isinstance(x, SharedArray):
        u = session.mul(u, x)
    elif not (np.ndim(x) == 0 and int(x) == 1):
        u = u.mul_const(np.asarray(x, dtype=np.int64).astype(np.uint64)
                        if np.ndim(x) else x)
    return truncate(session, u, DIV_SCALE + DIV_DENOM_BITS - session.fp.frac_bits)


def _public_xor(shared_bit: SharedArray, public_bit: np.ndarray) -> SharedArray:
    flip = (1 - 2 * public_bit.astype(np.int64)).astype(np.uint64)
    return shared_bit.mul_const(flip).add_const(public_bit.astype(np.uint64))


def _zero_like(a: SharedArray) -> SharedArray:
    z = np.zeros(a.shape, dtype=np.uint64)
    return SharedArray(z, z.copy(), a.owner, a.scale)
