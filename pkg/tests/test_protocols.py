import numpy as np
import pytest

from mpcselect import protocols as pt
from mpcselect.errors import UsageError
from mpcselect.ring import decode_array, encode, encode_array
from mpcselect.runner import loopback_sessions, run_parties
from mpcselect.sharing import (SCALE_FIXED, SCALE_INT, reconstruct_array,
                               share_array)
from mpcselect.shareio import one_hot_labels

EXAMPLE_DATA = np.arange(1, 21, dtype=np.float64).reshape(5, 4)
EXAMPLE_SCORES = np.array([65.0, 26.0, 83.0, 14.0])


def _shares(values, scale, seed=7):
    return share_array(np.asarray(values, dtype=np.uint64),
                       np.random.default_rng(seed), scale)


def _open(results, attr=None):
    parts = [getattr(results[p], attr) if attr else results[p] for p in (1, 2, 3)]
    return reconstruct_array(*parts)


def _run_selection(trio, fp, data, scores, k, bound_real):
    dsh = _shares(encode_array(data, fp), SCALE_FIXED, 11)
    gsh = _shares(encode_array(scores, fp), SCALE_FIXED, 12)
    bound = encode(bound_real, fp)
    results, sessions = trio(
        lambda s: pt.filter_selection(s, dsh[s.party - 1], gsh[s.party - 1],
                                      k, bound))
    return results, sessions, bound


def test_worked_selection_example(trio, fp):
    results, _, _ = _run_selection(trio, fp, EXAMPLE_DATA, EXAMPLE_SCORES,
                                   k=2, bound_real=100.0)
    assert _open(results, "indices").tolist() == [4, 2]
    T = _open(results, "selector")
    assert np.array_equal(T, np.array([[0, 0], [0, 1], [0, 0], [1, 0]],
                                      dtype=np.uint64))
    got = decode_array(_open(results, "selected"), fp)
    assert np.array_equal(got, np.array([[4, 2], [8, 6], [12, 10],
                                         [16, 14], [20, 18]], dtype=float))


def test_selected_scores_overwritten_with_bound(trio, fp):
    results, _, bound = _run_selection(trio, fp, EXAMPLE_DATA, EXAMPLE_SCORES,
                                       k=3, bound_real=100.0)
    final = _open(results, "final_scores")
    idx = _open(results, "indices")
    for i in idx:
        assert final[int(i) - 1] == bound  # ring-exact overwrite


def test_selector_columns_are_one_hot(trio, fp, rng):
    scores = rng.uniform(0, 1, 9)
    data = rng.normal(0, 1, (6, 9))
    results, _, _ = _run_selection(trio, fp, data, scores, k=4, bound_real=2.0)
    T = _open(results, "selector")
    assert np.array_equal(T.sum(axis=0), np.ones(4, dtype=np.uint64))
    assert set(np.unique(T)) <= {0, 1}


def test_single_feature_selects_itself(trio, fp):
    data = EXAMPLE_DATA[:, :1]
    results, _, _ = _run_selection(trio, fp, data, np.array([0.7]), k=1,
                                   bound_real=2.0)
    got = decode_array(_open(results, "selected"), fp)
    assert np.array_equal(got, data)


def test_selection_matches_plaintext_filter(trio, fp):
    scores = np.array([0.2, 0.1, 0.3])
    data = np.arange(12, dtype=float).reshape(4, 3)
    results, _, _ = _run_selection(trio, fp, data, scores, k=1, bound_real=1.0)
    want = pt.plaintext_filter_lowest(scores, 1)
    assert _open(results, "indices").tolist() == want == [2]
    got = decode_array(_open(results, "selected"), fp)
    assert np.array_equal(got, data[:, [1]])


def test_bad_k_rejected(trio, fp):
    with pytest.raises(UsageError):
        _run_selection(trio, fp, EXAMPLE_DATA, EXAMPLE_SCORES, k=5,
                       bound_real=100.0)
    with pytest.raises(UsageError):
        _run_selection(trio, fp, EXAMPLE_DATA, EXAMPLE_SCORES, k=0,
                       bound_real=100.0)


# -- scoring ------------------------------------------------------------------


def _run_scores(trio, fp, X, y, n):
    dsh = _shares(encode_array(X, fp), SCALE_FIXED, 21)
    lsh = _shares(one_hot_labels(y, n), SCALE_INT, 22)
    results, sessions = trio(
        lambda s: pt.mean_split_gini_scores(s, dsh[s.party - 1],
                                            lsh[s.party - 1]))
    return decode_array(_open(results), fp), sessions


def test_score_examples(trio, fp):
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([1, 1, 2, 2])
    got, _ = _run_scores(trio, fp, X, y, 2)
    assert got[0] == pytest.approx(0.0, abs=0.01)   # perfect split
    assert got[1] == pytest.approx(2.0, abs=0.02)   # 0.5 * m


def test_score_single_class_is_zero(trio, fp):
    X = np.array([[0.1], [0.6], [0.3], [0.9]])
    y = np.array([1, 1, 1, 1])
    got, _ = _run_scores(trio, fp, X, y, 2)
    assert got[0] == pytest.approx(0.0, abs=0.01)


def test_score_constant_feature_degenerate_side(trio, fp):
    X = np.array([[3.0, 0.1], [3.0, 0.9], [3.0, 0.2], [3.0, 0.8]])
    y = np.array([1, 2, 1, 2])
    got, _ = _run_scores(trio, fp, X, y, 2)
    # constant feature: everything on one side, impurity of the full set
    assert got[0] / 4 == pytest.approx(0.5, abs=0.01)
    plain = pt.plaintext_mean_split_gini(X[:, 0], y, 2)
    assert got[0] / 4 == pytest.approx(plain, abs=0.01)


def test_scores_match_oracle_randomized(trio, fp, rng):
    for trial in range(12):
        m = int(rng.integers(4, 40))
        p = int(rng.integers(1, 6))
        n = int(rng.integers(2, 4))
        X = np.round(rng.normal(0, 3, (m, p)), 4)
        y = rng.integers(1, n + 1, m)
        got, _ = _run_scores(trio, fp, X, y, n)
        plain = pt.plaintext_score_matrix(X, y, n)
        assert np.abs(got / m - plain).max() <= 0.02, (m, p, n, trial)
        assert (got >= -0.01).all() and (got <= m + 0.01).all()


def test_score_rejects_wrong_scales(trio, fp):
    X = _shares(np.zeros((4, 2)), SCALE_INT, 23)
    L = _shares(np.zeros((4, 1)), SCALE_INT, 24)
    with pytest.raises(UsageError):
        trio(lambda s: pt.mean_split_gini_scores(s, X[s.party - 1],
                                                 L[s.party - 1]))


# -- composition ---------------------------------------------------------------


def test_perfect_feature_wins(trio, fp, rng):
    m, n = 24, 2
    y = rng.integers(1, n + 1, m)
    X = rng.normal(0, 1, (m, 3))
    X = np.hstack([X, (y == 2).astype(float).reshape(-1, 1) + rng.normal(0, 0.01, (m, 1))])
    dsh = _shares(encode_array(X, fp), SCALE_FIXED, 31)
    lsh = _shares(one_hot_labels(y, n), SCALE_INT, 32)
    results, _ = trio(lambda s: pt.gini_feature_selection(
        s, dsh[s.party - 1], lsh[s.party - 1], 1))
    assert _open(results, "indices").tolist() == [4]
    got = decode_array(_open(results, "selected"), fp)
    assert np.abs(got - X[:, [3]]).max() <= 2.0 ** -16


def separated_instance(rng, m, p, n, k, min_gap=0.02):
    """Random instance whose top k+1 plaintext scores are pairwise clear.

    Secure scores carry small fixed-point noise, so ranking agreement is
    only testable when adjacent plaintext scores are separated by more than
    the noise budget.
    """
    while True:
        X = np.round(rng.normal(0, 2, (m, p)), 4)
        y = rng.integers(1, n + 1, m)
        if len(np.unique(y)) < n:
            continue
        if np.abs(X - X.mean(axis=0)).min() < 5e-5:
            continue
        plain = pt.plaintext_score_matrix(X, y, n)
        top = np.sort(plain)[:min(k + 1, p)]
        if np.diff(top).min(initial=np.inf) > min_gap:
            return X, y, plain


def test_pipeline_matches_plaintext_filter(trio, fp, rng):
    m, p, n, k = 20, 6, 2, 5
    X, y, plain = separated_instance(rng, m, p, n, k)
    dsh = _shares(encode_array(X, fp), SCALE_FIXED, 41)
    lsh = _shares(one_hot_labels(y, n), SCALE_INT, 42)
    results, sessions = trio(lambda s: pt.gini_feature_selection(
        s, dsh[s.party - 1], lsh[s.party - 1], k))
    want = pt.plaintext_filter_lowest(plain, k)
    assert _open(results, "indices").tolist() == want
    # measured rounds obey the analytic model
    assert sessions[1].counters.rounds == pt.expected_rounds(
        m, p, k, fp.frac_bits, sessions[1].max_batch)


def test_full_pipeline_transcript_oblivious(fp):
    """Two same-shape datasets produce identical message-size sequences."""

    def run(seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(0, 1, (10, 4))
        y = rng.integers(1, 3, 10)
        dsh = _shares(encode_array(X, fp), SCALE_FIXED, seed)
        lsh = _shares(one_hot_labels(y, 2), SCALE_INT, seed + 1)
        sessions = loopback_sessions(fp, record_transcript=True)
        run_parties(lambda s: pt.gini_feature_selection(
            s, dsh[s.party - 1], lsh[s.party - 1], 2), sessions)
        return [[(d, peer, len(payload)) for d, peer, payload in
                 sessions[p].mesh.transcript] for p in (1, 2, 3)]

    assert run(51) == run(52)


# -- plaintext oracles ----------------------------------------------------------


def test_plaintext_gini_hand_values():
    assert pt.plaintext_mean_split_gini([0, 0, 1, 1], [1, 1, 2, 2]) == 0.0
    assert pt.plaintext_mean_split_gini([0, 1, 0, 1], [1, 1, 2, 2]) == 0.5
    # constant feature, balanced labels: all mass below the mean
    assert pt.plaintext_mean_split_gini([2, 2, 2, 2], [1, 2, 1, 2]) == 0.5


def test_plaintext_filter_rules():
    assert pt.plaintext_filter_lowest([65, 26, 83, 14], 2) == [4, 2]
    assert pt.plaintext_filter_lowest([1, 1, 2], 1) == [1]
    assert pt.plaintext_filter_lowest([0.3, 0.1, 0.2], 3) == [2, 3, 1]


def test_cogload_shaped_output_dims(trio, fp, rng):
    """Selection on a 632 x 120 synthetic keeps m x k shape end to end."""
    m, p, k = 632, 120, 12
    X = rng.normal(0, 1, (m, p))
    y = rng.integers(1, 3, m)
    dsh = _shares(encode_array(X, fp), SCALE_FIXED, 61)
    lsh = _shares(one_hot_labels(y, 2), SCALE_INT, 62)
    results, _ = trio(lambda s: pt.gini_feature_selection(
        s, dsh[s.party - 1], lsh[s.party - 1], k))
    assert _open(results, "selected").shape == (m, k)
    assert len(set(_open(results, "indices").tolist())) == k


def test_expected_rounds_shapes(trio, fp):
    # doubling p doubles the per-feature score work, k loops scale the scan
    base = pt.expected_rounds(16, 4, 2)
    assert pt.expected_rounds(16, 4, 4) > base
    assert pt.expected_rounds(16, 8, 2) > base
    # m only enters through comparison chunking
    assert pt.expected_rounds(16, 4, 2) == pt.expected_rounds(64, 4, 2)
