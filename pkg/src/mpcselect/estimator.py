"""Scikit-learn estimator facade over the secure selection pipeline.

The transformer runs the full three-party protocol on an in-process
loopback mesh: the data is secret-shared, scored and selected under MPC,
and only then are the selected indices opened to the caller. This is a
single-machine convenience wrapper; it necessarily learns the selection
(the caller holds the plaintext data anyway). Deployments that must keep
the selection hidden use the split / serve / reconstruct workflow instead.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .protocols import gini_feature_selection
from .ring import FixedPointParams, decode_array
from .runner import loopback_sessions, run_parties
from .sharing import SCALE_FIXED, SCALE_INT, reconstruct_array, share_array
from .shareio import encode_dataset, one_hot_labels


class SecureGiniSelector(BaseEstimator, TransformerMixin):
    """Select the k features with the lowest mean-split Gini score.

    The score of a feature is the Gini impurity of its two-way split at the
    feature mean, so no sorting of feature values is ever required. Scoring
    and selection are executed as a three-party secure computation over
    replicated secret shares; with this estimator all parties are simulated
    locally.

    Parameters
    ----------
    k : int
        Number of features to keep.
    frac_bits : int, default 16
        Fixed-point fractional bits used inside the secure computation.
    random_state : int, default 0
        Seed for the dealer randomness and the parties' correlated streams.

    Attributes
    ----------
    selected_indices_ : ndarray of shape (k,)
        0-based column indices in selection order (ascending score).
    scores_ : ndarray of shape (n_features,)
        Normalized mean-split Gini score of every feature, in [0, 1].
    support_ : ndarray of shape (n_features,), dtype bool
        Mask of selected features.

    Examples
    --------
    >>> import numpy as np
    >>> X = np.array([[0, 0.1], [0, 0.9], [1, 0.2], [1, 0.8]])
    >>> y = np.array([0, 0, 1, 1])
    >>> SecureGiniSelector(k=1).fit_transform(X, y)
    array([[0.],
           [0.],
           [1.],
           [1.]])
    """

    def __init__(self, k: int = 1, frac_bits: int = 16, random_state: int = 0,
                 magnitude_bound: float = float(1 << 20)):
        self.k = k
        self.frac_bits = frac_bits
        self.random_state = random_state
        self.magnitude_bound = magnitude_bound

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        m, p = X.shape
        if not 1 <= self.k <= p:
            raise ValueError(f"k={self.k} not in 1..{p}")
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        n = len(self.classes_)
        if n < 2:
            raise ValueError("need at least two classes")
        fp = FixedPointParams(self.frac_bits, self.magnitude_bound)
        rng = np.random.default_rng(self.random_state)
        data = share_array(encode_dataset(X, fp), rng, SCALE_FIXED)
        labels = share_array(one_hot_labels(y_idx + 1, n), rng, SCALE_INT)
        seeds = tuple(int(v) for v in rng.integers(0, 1 << 62, 3))
        sessions = loopback_sessions(fp, seeds=seeds)
        results = run_parties(
            lambda s: gini_feature_selection(s, data[s.party - 1],
                                             labels[s.party - 1], self.k),
            sessions)
        indices = reconstruct_array(results[1].indices, results[2].indices)
        scores = reconstruct_array(results[1].scores, results[2].scores)
        self.selected_indices_ = indices.astype(np.int64) - 1
        self.scores_ = decode_array(scores, fp) / m
        self.support_ = np.zeros(p, dtype=bool)
        self.support_[self.selected_indices_] = True
        self.n_features_in_ = p
        return self

    def transform(self, X):
        check_is_fitted(self, "selected_indices_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        # selection order (ascending score), matching the secure output
        return X[:, self.selected_indices_]

    def get_support(self, indices: bool = False):
        check_is_fitted(self, "selected_indices_")
        return self.selected_indices_.copy() if indices else self.support_.copy()
