"""Oblivious feature selection and mean-split Gini scoring over shares.

Selection keeps the chosen column identities secret end to end: the k
lowest-scoring feature indices are located by repeated secure argmin, each
found score is obliviously overwritten with a public upper bound so it
cannot win again, the indices are expanded into one-hot selector columns
with secure equality tests, and a single secure matrix product extracts the
columns. The message pattern depends only on (m, p, k, n).

The per-feature score is the Gini impurity of the two-way split of the
feature at its own mean, left side inclusive (values equal to the mean fall
below the threshold). Writing a = |below|, b = |above| and A, B for the
per-class counts of each side, the score is

    a - (A.A)/a  +  b - (B.B)/b

which is m times the mean-weighted impurity; the constant 1/m factor is
dropped since it never changes the ranking, and the selection bound is m
accordingly. Empty sides contribute exactly zero because their count
vectors are identically zero and the reciprocal of zero is finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .primitives import (DIV_DENOM_BITS, argmin, divide, equal, less_than,
                         mat_mul, truncate)
from .sharing import (SCALE_FIXED, SCALE_INT, SharedArray, concat_shares,
                      stack_shares)
from .session import ProtocolSession


@dataclass
class SelectionResult:
    """One party's shares of a completed selection.

    ``indices`` holds the 1-based chosen feature indices in selection order
    (ascending score); ``selector`` is the p-by-k one-hot matrix whose i-th
    column encodes indices[i]; ``selected`` is data * selector, i.e. the
    chosen columns in selection order. ``scores`` is present when the scores
    were computed rather than supplied.
    """

    indices: SharedArray
    selector: SharedArray
    selected: SharedArray
    score_bound: int
    scores: SharedArray | None = None
    final_scores: SharedArray | None = None


def filter_selection(session: ProtocolSession, data: SharedArray,
                     scores: SharedArray, k: int, bound: int
                     ) -> SelectionResult:
    """Select the k lowest-scoring columns of ``data`` obliviously.

    ``bound`` is a public residue strictly above every possible score, in
    the same scale as ``scores``. If that contract is violated a column can
    be selected twice; it is the caller's to uphold.
    """
    m, p = data.shape
    if scores.shape != (p,):
        raise UsageError(f"scores must have shape ({p},), got {scores.shape}")
    if not 1 <= k <= p:
        raise UsageError(f"k must satisfy 1 <= k <= p, got k={k}, p={p}")
    session.bump("filter_selection", 1)
    column_ids = np.arange(1, p + 1, dtype=np.uint64)
    working = scores
    index_shares = []
    selector_cols = []
    for _ in range(k):
        idx = argmin(session, working)
        flags = equal(session, idx.broadcast_to((p,)), column_ids)
        # oblivious overwrite: score of the winner jumps to the bound
        bump_to_bound = session.mul(flags, working.neg().add_const(bound))
        working = working + bump_to_bound.with_scale(working.scale)
        index_shares.append(idx)
        selector_cols.append(flags)
    indices = stack_shares(index_shares, axis=0)
    selector = stack_shares(selector_cols, axis=1)
    selected = mat_mul(session, data, selector)
    return SelectionResult(indices, selector, selected, bound,
                           final_scores=working)


def mean_split_gini_scores(session: ProtocolSession, data: SharedArray,
                           labels: SharedArray) -> SharedArray:
    """Unnormalized mean-split Gini score of every column of ``data``.

    ``data`` is m-by-p fixed-point; ``labels`` is the m-by-(n-1) one-hot
    class matrix (the n-th class is the implicit all-zero row, so its
    bookkeeping is local). All p features are scored in shared vectorized
    rounds. Returns a length-p fixed-point vector with entries in [0, m].
    """
    if data.ndim != 2 or labels.ndim != 2 or data.shape[0] != labels.shape[0]:
        raise UsageError(
            f"data {data.shape} and labels {labels.shape} rows must agree"
        )
    if data.scale != SCALE_FIXED or labels.scale != SCALE_INT:
        raise UsageError("data must be fixed-point, labels integer one-hot")
    m, p = data.shape
    if m < 2:
        raise UsageError("scoring needs at least two instances")
    if m >= 1 << (DIV_DENOM_BITS - 1):
        raise UsageError(f"at most {(1 << (DIV_DENOM_BITS - 1)) - 1} instances supported")
    session.bump("gini_scores", p)
    f = session.fp.frac_bits

    # threshold per feature: column mean, one public multiply + truncation.
    # The public 1/m constant carries as many extra fractional bits as the
    # overflow headroom allows, so the threshold lands within one ulp of the
    # true mean instead of inheriting a coarse reciprocal rounding.
    extra = max(0, 62 - 2 * f - max(1, math.ceil(math.log2(session.fp.magnitude_bound))))
    inv_m = round((1 << (f + extra)) / m)
    theta = truncate(session, data.sum(axis=0).mul_const(inv_m), shift=f + extra)
    theta = theta.with_scale(SCALE_FIXED)

    # strict comparison against the mean: 1 iff value is above the threshold
    above = less_than(session, theta.reshape(1, p).broadcast_to((m, p)), data)
    b = above.sum(axis=0)                       # (p,) instances above
    a = b.neg().add_const(m)                    # (p,) instances at or below

    # per-class membership of the above side, aggregated as one product
    above_counts = session.matmul(above.T, labels)          # (p, n-1)
    class_totals = labels.sum(axis=0).reshape(1, -1)        # (1, n-1)
    below_counts = class_totals - above_counts              # (p, n-1)

    below_full = concat_shares(
        [below_counts, (a - below_counts.sum(axis=1)).reshape(p, 1)], axis=1)
    above_full = concat_shares(
        [above_counts, (b - above_counts.sum(axis=1)).reshape(p, 1)], axis=1)

    # squared class masses and reciprocals for both sides in shared phases
    counts = concat_shares([below_full, above_full], axis=0)     # (2p, n)
    squared_mass = session.dot(counts, counts, axis=1)           # (2p,) ints
    recip = divide(session, 1, concat_shares([a, b], axis=0))    # (2p,) fixed
    impurity_drop = session.mul(squared_mass, recip)             # (2p,) fixed

    sides = concat_shares([a, b], axis=0).mul_const(1 << f).with_scale(SCALE_FIXED)
    g = sides - impurity_drop
    return (g[:p] + g[p:]).with_scale(SCALE_FIXED)


def gini_feature_selection(session: ProtocolSession, data: SharedArray,
                           labels: SharedArray, k: int) -> SelectionResult:
    """Score every feature with the mean-split Gini and keep the k lowest.

    The selection bound is m (encoded): the unnormalized score of any
    feature is at most the instance count.
    """
    scores = mean_split_gini_scores(session, data, labels)
    m = data.shape[0]
    bound = m << session.fp.frac_bits
    result = filter_selection(session, data, scores, k, bound)
    result.scores = scores
    return result


# -- plaintext oracles -------------------------------------------------------


def plaintext_mean_split_gini(values: np.ndarray, labels: np.ndarray,
                              n_classes: int | None = None) -> float:
    """Reference mean-split Gini score of one feature, 1/m factor included.

    Same conventions as the secure protocol: split at the arithmetic mean,
    values equal to the mean fall in the lower side, an empty side
    contributes zero.
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    m = values.size
    n = n_classes or int(labels.max())
    theta = values.mean()
    below = values <= theta
    total = 0.0
    for side in (below, ~below):
        cnt = int(side.sum())
        if cnt == 0:
            continue
        class_counts = np.bincount(labels[side], minlength=n + 1)[1:n + 1]
        total += cnt - float((class_counts.astype(np.float64) ** 2).sum()) / cnt
    return total / m


def plaintext_score_matrix(X: np.ndarray, y: np.ndarray,
                           n_classes: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.array([plaintext_mean_split_gini(X[:, j], y, n_classes)
                     for j in range(X.shape[1])])


def plaintext_filter_lowest(scores: np.ndarray, k: int) -> list[int]:
    """1-based indices of the k lowest scores in selection order.

    Ties resolve to the earliest index, matching the secure argmin.
    """
    order = np.argsort(np.asarray(scores), kind="stable")
    return [int(j) + 1 for j in order[:k]]


# -- analytic communication model ---------------------------------------------


def newton_iterations(frac_bits: int) -> int:
    return 2 + max(0, math.ceil(math.log2(frac_bits / 3.5)))


def expected_rounds(m: int, p: int, k: int, frac_bits: int = 16,
                    max_batch: int = 32768) -> int:
    """Closed-form round count of a full selection run.

    Derived from the protocol structure: every bit-decomposition primitive
    costs 2 rounds of mask-bit generation, 1 opening, and a log-depth tree;
    comparisons add one final combination round. The count is independent of
    the data and, apart from comparison chunking, of m.
    """
    tree = 6                        # balanced (g,p) or AND tree over <=64 leaves
    scan = 5                        # log-depth prefix over the 20-21 denominator bits
    lt_bare = 1 + tree + 1          # open + borrow tree + sign combination
    lt = 2 + lt_bare                # with inline mask-bit generation
    eq = 2 + 1 + tree               # bits + open + agreement AND-tree
    trunc = 2 + 1 + tree            # bits + open + wrap borrow
    div = (2 + 1 + scan + 1 + scan + 1       # bits, open, borrows, xor, top-bit scan, normalize
           + newton_iterations(frac_bits) * 2 * (1 + trunc)
           + 1 + trunc)                      # rescale by the hidden power, final truncation
    scoring = (trunc                          # threshold
               + math.ceil(m * p / max_batch) * lt
               + 1                            # class aggregation product
               + 1                            # squared masses
               + div
               + 1)                           # impurity product
    arg = 0 if p == 1 else 2 + (lt_bare + 1) * (p - 1)
    selection = k * (arg + eq + 1) + 1
    return scoring + selection
