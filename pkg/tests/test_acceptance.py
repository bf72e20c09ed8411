"""Acceptance suite: every release criterion with its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL line
per criterion. The suite is self-contained on the loopback backend; the
scale benchmark and the randomized oracle-equivalence batch dominate the
runtime (a few minutes together).
"""

import csv
import json
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner
from scipy import stats

from mpcselect import primitives as pr
from mpcselect import protocols as pt
from mpcselect.cli import main as cli_main
from mpcselect.ring import FixedPointParams, decode_array, encode_array
from mpcselect.runner import loopback_sessions, run_parties
from mpcselect.sharing import (SCALE_FIXED, SCALE_INT, reconstruct_array,
                               share_array)
from mpcselect.shareio import one_hot_labels

FP = FixedPointParams()
FIXTURE_DIR = Path(__file__).resolve().parent.parent / "frontend" / "fixtures"


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"\n[FAIL] {name}")
        raise
    print(f"\n[PASS] {name}")


def _shares(values, scale, seed):
    return share_array(np.asarray(values, dtype=np.uint64),
                       np.random.default_rng(seed), scale)


def _open(results, attr=None):
    parts = [getattr(results[p], attr) if attr else results[p]
             for p in (1, 2, 3)]
    return reconstruct_array(*parts)


def test_example1_bit_exactness(tmp_path):
    """split -> serve(loopback) -> reconstruct reproduces the worked example."""
    with criterion("example-1 bit-exactness (selection on injected scores)"):
        started = time.perf_counter()
        runner = CliRunner()
        data = tmp_path / "data.csv"
        with open(data, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["f1", "f2", "f3", "f4", "label"])
            for i, row in enumerate(np.arange(1, 21).reshape(5, 4)):
                w.writerow(list(row) + [1 + i % 2])
        res = runner.invoke(cli_main, ["split", "--dataset", str(data),
                                       "--out", str(tmp_path / "sh")])
        assert res.exit_code == 0, res.output
        seeds = {1: (11, 33), 2: (22, 11), 3: (33, 22)}
        cfgs = []
        for p in (1, 2, 3):
            cfg = {"party": p,
                   "peers": [{"party": q, "address": f"127.0.0.1:{28000 + q}"}
                             for q in (1, 2, 3)],
                   "frac_bits": 16,
                   "seeds": {"next": seeds[p][0], "prev": seeds[p][1]},
                   "session": 1, "k": 2, "n_classes": 2,
                   "inject_scores": [65.0, 26.0, 83.0, 14.0]}
            path = tmp_path / f"p{p}.json"
            path.write_text(json.dumps(cfg))
            cfgs += ["--config", str(path)]
        res = runner.invoke(cli_main, ["serve", *cfgs, "--in", str(tmp_path / "sh"),
                                       "--out", str(tmp_path / "out"),
                                       "--backend", "loopback"])
        assert res.exit_code == 0, res.output
        outs = [str(tmp_path / f"out/selected-p{p}.mpcfs") for p in (1, 2, 3)]
        res = runner.invoke(cli_main, ["reconstruct", *outs, "--out",
                                       str(tmp_path / "result.csv")])
        assert res.exit_code == 0, res.output
        rows = (tmp_path / "result.csv").read_text().strip().splitlines()[1:]
        got = np.array([[float(v) for v in r.split(",")] for r in rows])
        assert np.array_equal(got, np.array(
            [[4, 2], [8, 6], [12, 10], [16, 14], [20, 18]], dtype=float))

        # internal index vector opens to [4, 2]
        gsh = _shares(encode_array(np.array([65.0, 26.0, 83.0, 14.0]), FP),
                      SCALE_FIXED, 5)
        dsh = _shares(encode_array(np.arange(1, 21, dtype=float).reshape(5, 4),
                                   FP), SCALE_FIXED, 6)
        results = run_parties(
            lambda s: pt.filter_selection(s, dsh[s.party - 1], gsh[s.party - 1],
                                          2, 100 << FP.frac_bits),
            loopback_sessions(FP))
        assert _open(results, "indices").tolist() == [4, 2]
        elapsed = time.perf_counter() - started
        assert elapsed < 5.0, f"took {elapsed:.1f}s, budget 5s"


def test_oracle_equivalence_200_instances():
    """200 random well-separated instances: selected sets and scores match."""
    with criterion("oracle equivalence (200/200 selections, scores +-0.02)"):
        started = time.perf_counter()
        rng = np.random.default_rng(2024)
        failures = []
        for trial in range(200):
            m = int(rng.integers(8, 65))
            p = int(rng.integers(2, 11))
            n = int(rng.integers(2, 4))
            k = int(rng.integers(1, p))
            # regime: normalized gap between k-th and (k+1)-th above 0.02,
            # and no instance inside the fixed-point ambiguity band of its
            # column mean (the thresholds are exact only to about one ulp)
            for _ in range(500):
                X = np.round(rng.normal(0, 2, (m, p)), 4)
                y = rng.integers(1, n + 1, m)
                if len(np.unique(y)) < n:
                    continue
                if np.abs(X - X.mean(axis=0)).min() < 5e-5:
                    continue
                plain = pt.plaintext_score_matrix(X, y, n)
                ordered = np.sort(plain)
                if ordered[k] - ordered[k - 1] > 0.02:
                    break
            dsh = _shares(encode_array(X, FP), SCALE_FIXED, 100 + trial)
            lsh = _shares(one_hot_labels(y, n), SCALE_INT, 300 + trial)
            results = run_parties(
                lambda s: pt.gini_feature_selection(s, dsh[s.party - 1],
                                                    lsh[s.party - 1], k),
                loopback_sessions(FP))
            got_idx = _open(results, "indices")
            want_idx = pt.plaintext_filter_lowest(plain, k)
            sec_scores = decode_array(_open(results, "scores"), FP) / m
            if set(got_idx.tolist()) != set(want_idx):
                failures.append((trial, "indices", m, p, n, k))
            if np.abs(sec_scores - plain).max() > 0.02:
                failures.append((trial, "scores", m, p, n, k))
            # selected columns equal the data columns at the secure indices
            sel = _open(results, "selected")
            if not np.array_equal(sel, encode_array(X, FP)[:, got_idx - 1]):
                failures.append((trial, "columns", m, p, n, k))
        assert not failures, failures[:10]
        elapsed = time.perf_counter() - started
        assert elapsed < 600, f"took {elapsed:.0f}s, budget 600s"
        print(f"  (200 instances in {elapsed:.0f}s)", end="")


def test_building_block_exactness():
    """Comparison, equality, argmin, reciprocal at their stated tolerances."""
    with criterion("building blocks: comparison grid, argmin ties, division"):
        # exhaustive signed comparison grid spanning the admitted range
        pts = np.concatenate([
            [-FP.magnitude_bound, FP.magnitude_bound],
            np.linspace(-FP.magnitude_bound, FP.magnitude_bound, 14),
            np.linspace(-5, 5, 40),
            [0.0, 2.0 ** -16, -2.0 ** -16, 1.0, -1.0, 0.5, -0.5, 3.0]])
        assert pts.size == 64
        enc = encode_array(pts, FP)
        xs, ys = np.repeat(enc, 64), np.tile(enc, 64)
        sx, sy = _shares(xs, SCALE_FIXED, 1), _shares(ys, SCALE_FIXED, 2)
        res = run_parties(lambda s: pr.less_than(s, sx[s.party - 1],
                                                 sy[s.party - 1]),
                          loopback_sessions(FP))
        want = (xs.astype(np.int64) < ys.astype(np.int64)).astype(np.uint64)
        assert np.array_equal(_open(res), want), "comparison grid"

        vals16 = np.arange(16, dtype=np.uint64)
        ex, ey = np.repeat(vals16, 16), np.tile(vals16, 16)
        sx, sy = _shares(ex, SCALE_INT, 3), _shares(ey, SCALE_INT, 4)
        res = run_parties(lambda s: pr.equal(s, sx[s.party - 1], sy[s.party - 1]),
                          loopback_sessions(FP))
        assert np.array_equal(_open(res), (ex == ey).astype(np.uint64)), "equality grid"

        # 1000 argmin scans with planted ties, lengths 1..64
        rng = np.random.default_rng(77)
        vectors = []
        for _ in range(1000):
            ln = int(rng.integers(1, 65))
            vectors.append(rng.integers(0, 6, ln).astype(float))
        shared_vecs = [_shares(encode_array(v, FP), SCALE_FIXED, 1000 + i)
                       for i, v in enumerate(vectors)]

        def argmin_batch(s):
            return [pr.argmin(s, sv[s.party - 1]) for sv in shared_vecs]

        started = time.perf_counter()
        res = run_parties(argmin_batch, loopback_sessions(FP))
        wrong = 0
        for i, v in enumerate(vectors):
            got = int(reconstruct_array(res[1][i], res[2][i]))
            if got != int(np.argmin(v)) + 1:
                wrong += 1
        assert wrong == 0, f"{wrong}/1000 argmin disagreements"
        argmin_secs = time.perf_counter() - started

        # reciprocal accuracy across every denominator 1..1024, at the
        # tolerance of the worked examples: within 2^-(f-2) of the true
        # quotient. (A *relative* 2^-(f-2) bound is unattainable at scale f
        # once 1/y nears the grid: quantization alone exceeds it for
        # y > 8 and the contractual one-ulp truncation error for y > 4.)
        dens = np.arange(1, 1025, dtype=np.uint64)
        sd = _shares(dens, SCALE_INT, 9)
        res = run_parties(lambda s: pr.divide(s, 1, sd[s.party - 1]),
                          loopback_sessions(FP))
        got = decode_array(_open(res), FP)
        err = np.abs(got - 1.0 / dens)
        tol = 2.0 ** -(FP.frac_bits - 2)
        assert err.max() <= tol, "reciprocal accuracy"

        rng = np.random.default_rng(5)
        nums = rng.integers(1, 1025, 50, dtype=np.uint64)
        dset = rng.integers(1, 1025, 50, dtype=np.uint64)
        sn = _shares(nums, SCALE_INT, 10)
        sd = _shares(dset, SCALE_INT, 11)
        res = run_parties(lambda s: pr.divide(s, sn[s.party - 1],
                                              sd[s.party - 1]),
                          loopback_sessions(FP))
        got = decode_array(_open(res), FP)
        true = nums.astype(float) / dset.astype(float)
        tol = 2.0 ** -(FP.frac_bits - 2) * np.maximum(1.0, true)
        assert (np.abs(got - true) <= tol).all(), "division with numerators"
        print(f"  (argmin batch {argmin_secs:.0f}s)", end="")


def test_communication_claims():
    """One multiplication: 3 ring elements, 1 round; dot cost length-free."""
    with criterion("communication: 3 elements / 1 round per multiplication"):
        a = _shares([6], SCALE_INT, 1)
        b = _shares([7], SCALE_INT, 2)
        sessions = loopback_sessions(FP)
        res = run_parties(lambda s: s.mul(a[s.party - 1], b[s.party - 1]),
                          sessions)
        assert reconstruct_array(res[1], res[2])[0] == 42
        assert sum(sessions[p].counters.elems_sent for p in (1, 2, 3)) == 3
        assert all(sessions[p].counters.rounds == 1 for p in (1, 2, 3))
        assert all(sessions[p].counters.bytes_sent -
                   sessions[p].counters.elems_sent * 8 > 0 for p in (1, 2, 3))

        # k sequential multiplications cost k rounds
        sessions = loopback_sessions(FP)

        def chain(s):
            x = a[s.party - 1]
            for _ in range(5):
                x = s.mul(x, b[s.party - 1])
            return x

        run_parties(chain, sessions)
        assert sessions[1].counters.rounds == 5

        # dot products: one multiplication's traffic regardless of length
        def dot_cost(n):
            v = _shares(np.arange(n), SCALE_INT, n)
            ses = loopback_sessions(FP)
            run_parties(lambda s: pr.dot_product(s, v[s.party - 1],
                                                 v[s.party - 1]), ses)
            return (sum(ses[p].counters.elems_sent for p in (1, 2, 3)),
                    ses[1].counters.rounds)

        assert dot_cost(10) == dot_cost(1000) == (3, 1)


def test_privacy_properties():
    """Share views are uniform; transcripts depend only on shapes."""
    with criterion("privacy: uniform single-party views, oblivious transcripts"):
        for party in (1, 2, 3):
            rng = np.random.default_rng(party)
            shares = share_array(np.full(10_000, 42, dtype=np.uint64),
                                 rng)[party - 1]
            f = (shares.first >> np.uint64(60)).astype(np.int64)
            s = (shares.second >> np.uint64(60)).astype(np.int64)
            hist = np.bincount(f * 16 + s, minlength=256)
            assert stats.chisquare(hist).pvalue > 0.001, f"party {party}"

        # two different fixed secrets: views indistinguishable
        h = []
        for seed, secret in ((1, 5), (2, 987654321)):
            rng = np.random.default_rng(seed)
            sh = share_array(np.full(10_000, secret, dtype=np.uint64), rng)[1]
            f = (sh.first >> np.uint64(60)).astype(np.int64)
            s2 = (sh.second >> np.uint64(60)).astype(np.int64)
            h.append(np.bincount(f * 16 + s2, minlength=256))
        assert stats.chi2_contingency(np.stack(h))[1] > 0.001

        def transcript(seed):
            rng = np.random.default_rng(seed)
            X = rng.normal(0, 1, (12, 5))
            y = rng.integers(1, 3, 12)
            dsh = _shares(encode_array(X, FP), SCALE_FIXED, seed)
            lsh = _shares(one_hot_labels(y, 2), SCALE_INT, seed + 1)
            ses = loopback_sessions(FP, record_transcript=True)
            run_parties(lambda s: pt.gini_feature_selection(
                s, dsh[s.party - 1], lsh[s.party - 1], 2), ses)
            return [[(d, peer, len(pl)) for d, peer, pl in
                     ses[p].mesh.transcript] for p in (1, 2, 3)]

        assert transcript(11) == transcript(22)


def test_degenerate_inputs():
    """Constant features and single-class labels run clean, score zero."""
    with criterion("degenerate inputs: empty split sides contribute zero"):
        X = np.array([[2.5, 0.1], [2.5, 0.8], [2.5, 0.4], [2.5, 0.9]])
        y1 = np.array([1, 1, 1, 1])
        dsh = _shares(encode_array(X, FP), SCALE_FIXED, 1)
        lsh = _shares(one_hot_labels(y1, 2), SCALE_INT, 2)
        res = run_parties(lambda s: pt.mean_split_gini_scores(
            s, dsh[s.party - 1], lsh[s.party - 1]), loopback_sessions(FP))
        scores = decode_array(_open(res), FP)
        assert np.abs(scores).max() <= 0.01  # single class: both features pure

        y2 = np.array([1, 2, 1, 2])
        lsh = _shares(one_hot_labels(y2, 2), SCALE_INT, 3)
        res = run_parties(lambda s: pt.mean_split_gini_scores(
            s, dsh[s.party - 1], lsh[s.party - 1]), loopback_sessions(FP))
        scores = decode_array(_open(res), FP)
        # constant feature: empty side contributes zero, full-set impurity stays
        assert scores[0] / 4 == pytest.approx(0.5, abs=0.01)
        plain = pt.plaintext_score_matrix(X, y2, 2)
        assert np.abs(scores / 4 - plain).max() <= 0.02


def test_scale_benchmark_lsvt_shape():
    """126 x 310, k=103 completes on loopback inside ten minutes."""
    with criterion("scale benchmark: 126x310 k=103 under 10 minutes"):
        rng = np.random.default_rng(9)
        m, p, k = 126, 310, 103
        X = rng.normal(0, 1, (m, p))
        y = rng.integers(1, 3, m)
        dsh = _shares(encode_array(X, FP), SCALE_FIXED, 4)
        lsh = _shares(one_hot_labels(y, 2), SCALE_INT, 5)
        sessions = loopback_sessions(FP)
        started = time.perf_counter()
        res = run_parties(lambda s: pt.gini_feature_selection(
            s, dsh[s.party - 1], lsh[s.party - 1], k), sessions)
        elapsed = time.perf_counter() - started
        sel = _open(res, "selected")
        assert sel.shape == (m, k)
        assert sessions[1].counters.rounds == pt.expected_rounds(
            m, p, k, FP.frac_bits, sessions[1].max_batch)
        assert elapsed < 600, f"took {elapsed:.0f}s, budget 600s"
        print(f"  ({elapsed:.0f}s, {sessions[1].counters.rounds} rounds, "
              f"{sessions[1].counters.bytes_sent} bytes/party)", end="")


def test_fixture_replay_cross_component():
    """Fixtures exported by the evaluation harness replay to the same selections."""
    fixtures = sorted(FIXTURE_DIR.glob("*.csv")) if FIXTURE_DIR.exists() else []
    if not fixtures:
        pytest.skip("no exported fixtures found under frontend/fixtures/")
    with criterion(f"cross-component fixture replay ({len(fixtures)} fixtures)"):
        for path in fixtures:
            meta, X, y, exp_scores, exp_idx = _load_fixture(path)
            m, p, k, n = meta["m"], meta["p"], meta["k"], meta["n"]
            plain = pt.plaintext_score_matrix(X, y, n)
            assert np.abs(plain - exp_scores).max() <= 1e-9, path.name
            dsh = _shares(encode_array(X, FP), SCALE_FIXED, meta["seed"])
            lsh = _shares(one_hot_labels(y, n), SCALE_INT, meta["seed"] + 1)
            res = run_parties(lambda s: pt.gini_feature_selection(
                s, dsh[s.party - 1], lsh[s.party - 1], k),
                loopback_sessions(FP))
            got = _open(res, "indices").tolist()
            assert got == exp_idx, f"{path.name}: {got} != {exp_idx}"


def _load_fixture(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = dict(zip(rows[0], (int(v) for v in rows[1])))
    m, p = header["m"], header["p"]
    X = np.array([[float(v) for v in row] for row in rows[2:2 + m]])
    y = np.array([int(v) for v in rows[2 + m]])
    scores = np.array([float(v) for v in rows[3 + m]])
    idx = [int(v) for v in rows[4 + m]]
    assert X.shape == (m, p)
    return header, X, y, scores, idx
