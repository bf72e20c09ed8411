"""On-disk formats: share files, dataset CSVs, and job configuration.

Share files carry one party's replicated shares of a single matrix, either
owner-to-server inputs or server-to-receiver outputs:

    magic "MPCFS1" | u32 version | u8 party | u8 slot | u32 frac_bits
    | u64 rows | u64 cols | rows*cols*2 ring elements, little endian,
    row-major, (first, second) interleaved per entry.

The slot byte names the payload: 0 feature matrix, 1 one-hot label matrix,
2 selected output matrix. Label files use frac_bits = 0 (unscaled).

Dataset CSVs have a header of feature names plus a final label column and
one row per instance: decimal feature values, then an integer class label
in 1..n. Reconstructed outputs are written with anonymous column names
c1..ck, since the selected identities must stay hidden.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IngestionError, IntegrityError, UsageError
from .ring import FixedPointParams, encode_array
from .sharing import SCALE_FIXED, SCALE_INT, SharedArray
from .transport import PartyEndpoint

SHARE_MAGIC = b"MPCFS1"
SHARE_VERSION = 1
_HEADER = struct.Struct("<6sIBBIQQ")

SLOT_FEATURES = 0
SLOT_LABELS = 1
SLOT_SELECTED = 2


def write_share_file(path: str | Path, shared: SharedArray, slot: int,
                     frac_bits: int) -> None:
    if shared.ndim != 2:
        raise UsageError("share files carry 2-D matrices")
    rows, cols = shared.shape
    inter = np.empty((rows * cols, 2), dtype=np.uint64)
    inter[:, 0] = shared.first.ravel()
    inter[:, 1] = shared.second.ravel()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SHARE_MAGIC, SHARE_VERSION, shared.owner, slot,
                              frac_bits, rows, cols))
        fh.write(inter.astype("<u8").tobytes())


def read_share_file(path: str | Path) -> tuple[SharedArray, int, int]:
    """Returns (shares, slot, frac_bits)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise IntegrityError(f"{path}: truncated share file header")
    magic, version, party, slot, frac_bits, rows, cols = _HEADER.unpack_from(raw)
    if magic != SHARE_MAGIC:
        raise IntegrityError(f"{path}: bad magic {magic!r}")
    if version != SHARE_VERSION:
        raise IntegrityError(f"{path}: unsupported version {version}")
    body = raw[_HEADER.size:]
    if len(body) != rows * cols * 16:
        raise IntegrityError(
            f"{path}: payload is {len(body)} bytes, expected {rows * cols * 16}"
        )
    inter = np.frombuffer(body, dtype="<u8").astype(np.uint64).reshape(-1, 2)
    scale = SCALE_INT if slot == SLOT_LABELS else SCALE_FIXED
    shares = SharedArray(inter[:, 0].reshape(rows, cols).copy(),
                         inter[:, 1].reshape(rows, cols).copy(),
                         party, scale)
    return shares, slot, frac_bits


def read_dataset_csv(path: str | Path, n_classes: int | None = None
                     ) -> tuple[np.ndarray, np.ndarray, list[str], int]:
    """Parse a labeled dataset; returns (X, y, feature_names, n_classes)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: empty file") from None
        if len(header) < 2:
            raise IngestionError(f"{path}: need at least one feature and a label column")
        names = [h.strip() for h in header[:-1]]
        width = len(header)
        feats: list[list[float]] = []
        labels: list[int] = []
        for r, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise IngestionError(
                    f"{path}: row {r} has {len(row)} fields, expected {width}"
                )
            vals = []
            for c, cell in enumerate(row[:-1], start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise IngestionError(
                        f"{path}: row {r}, column {c}: not a number: {cell!r}"
                    ) from None
            try:
                lab = int(row[-1])
            except ValueError:
                raise IngestionError(
                    f"{path}: row {r}, label column: not an integer: {row[-1]!r}"
                ) from None
            feats.append(vals)
            labels.append(lab)
    if not feats:
        raise IngestionError(f"{path}: no data rows")
    X = np.asarray(feats, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    n = n_classes if n_classes is not None else int(y.max())
    for r, lab in enumerate(labels, start=2):
        if not 1 <= lab <= n:
            raise IngestionError(
                f"{path}: row {r}: label {lab} outside 1..{n}"
            )
    return X, y, names, n


def one_hot_labels(y: np.ndarray, n_classes: int) -> np.ndarray:
    """m x (n-1) one-hot matrix; class n is the implicit all-zero row."""
    y = np.asarray(y, dtype=np.int64)
    return (y[:, None] == np.arange(1, n_classes)[None, :]).astype(np.uint64)


def encode_dataset(X: np.ndarray, fp: FixedPointParams) -> np.ndarray:
    """Fixed-point encode with range and column-sum overflow checks."""
    X = np.asarray(X, dtype=np.float64)
    bad = ~np.isfinite(X) | (np.abs(X) > fp.magnitude_bound)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise IngestionError(
            f"row {r + 1}, column {c + 1}: value {X[r, c]!r} outside "
            f"magnitude bound {fp.magnitude_bound}"
        )
    m = X.shape[0]
    worst = float(np.abs(X).max(initial=0.0))
    if m * worst * fp.scale >= float(1 << 62):
        raise IngestionError(
            f"column sums may overflow: {m} rows of magnitude {worst} "
            f"at {fp.frac_bits} fractional bits"
        )
    return encode_array(X, fp)


def write_matrix_csv(path: str | Path, X: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"c{j + 1}" for j in range(X.shape[1])])
        for row in X:
            writer.writerow([f"{v:.10g}" for v in row])


@dataclass
class JobConfig:
    """One party's configuration for a selection job.

    The public fields (everything except seeds) must agree across the three
    parties; serve verifies this during the handshake.
    """

    party: int
    peers: list[PartyEndpoint]
    frac_bits: int
    seeds: dict
    session: int
    k: int
    n_classes: int
    mode: str = "single"  # single | horizontal | vertical
    reveal_scores: bool = False
    inject_scores: list[float] | None = None
    magnitude_bound: float = float(1 << 20)
    max_batch: int = 32768

    @property
    def fp(self) -> FixedPointParams:
        return FixedPointParams(self.frac_bits, self.magnitude_bound)

    def public_fields(self) -> dict:
        return {
            "frac_bits": self.frac_bits,
            "session": self.session,
            "k": self.k,
            "n_classes": self.n_classes,
            "mode": self.mode,
            "reveal_scores": self.reveal_scores,
            "inject_scores": self.inject_scores,
            "magnitude_bound": self.magnitude_bound,
            "max_batch": self.max_batch,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JobConfig":
        peers = [PartyEndpoint(p["party"], p["address"])
                 for p in d.get("peers", [])]
        return cls(
            party=d["party"],
            peers=peers,
            frac_bits=d.get("frac_bits", 16),
            seeds=d["seeds"],
            session=d.get("session", 0),
            k=d["k"],
            n_classes=d["n_classes"],
            mode=d.get("mode", "single"),
            reveal_scores=d.get("reveal_scores", False),
            inject_scores=d.get("inject_scores"),
            magnitude_bound=d.get("magnitude_bound", float(1 << 20)),
            max_batch=d.get("max_batch", 32768),
        )

    @classmethod
    def load(cls, path: str | Path) -> "JobConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

