"""Command-line workflow: owners split, servers serve, a receiver reconstructs.

split        encode a labeled CSV and write per-party share files
serve        run the secure selection as one of the three computing parties
reconstruct  combine two or three parties' output shares into a CSV
bench        synthesize a dataset of a given shape and report costs

serve supports two backends. With --backend tcp each invocation is one
party (one process per party, possibly on different hosts), configured with
its own JSON file. With --backend loopback a single invocation runs all
three parties on threads and expects three --config files; this is the
deterministic single-machine mode used for tests and demos.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import click
import numpy as np

from .errors import HandshakeError, UsageError
from .protocols import (expected_rounds, filter_selection,
                        gini_feature_selection)
from .ring import FixedPointParams, decode_array, encode, encode_array
from .runner import run_parties
from .session import ProtocolSession
from .sharing import SCALE_FIXED, SCALE_INT, SharedArray, concat_shares, share_array
from .shareio import (SLOT_FEATURES, SLOT_LABELS, SLOT_SELECTED, JobConfig,
                      encode_dataset, one_hot_labels, read_dataset_csv,
                      read_share_file, write_matrix_csv, write_share_file)
from .transport import (PROTOCOL_VERSION, connect_tcp_mesh,
                        exchange_config_blob, loopback_mesh)


@click.group()
def main() -> None:
    """Privacy-preserving filter feature selection on three servers."""


def _owner_rng(seed: int, owner: int) -> np.random.Generator:
    return np.random.default_rng([seed, owner])


def _parse_boundaries(total: int, spec: str | None) -> list[tuple[int, int]]:
    if not spec:
        return [(0, total)]
    cuts = [int(x) for x in spec.split(",") if x.strip()]
    edges = [0, *cuts, total]
    if any(a >= b for a, b in zip(edges, edges[1:])):
        raise UsageError(f"boundaries {spec!r} do not partition 0..{total}")
    return list(zip(edges, edges[1:]))


@main.command()
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--frac-bits", default=16, show_default=True)
@click.option("--n-classes", type=int, default=None,
              help="Class count; defaults to the maximum label.")
@click.option("--seed", default=1, show_default=True,
              help="Owner randomness seed; owner i derives stream (seed, i).")
@click.option("--mode", type=click.Choice(["single", "horizontal", "vertical"]),
              default="single", show_default=True)
@click.option("--boundaries", default=None,
              help="Comma-separated row (horizontal) or column (vertical) cut points.")
@click.option("--label-owner", default=0, show_default=True,
              help="Vertical mode: owner index that contributes the labels.")
def split(dataset, out_dir, frac_bits, n_classes, seed, mode, boundaries,
          label_owner) -> None:
    """Secret-share a dataset into per-owner, per-party share files."""
    fp = FixedPointParams(frac_bits)
    X, y, _names, n = read_dataset_csv(dataset, n_classes)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    enc = encode_dataset(X, fp)
    onehot = one_hot_labels(y, n)

    if mode == "horizontal" or mode == "single":
        ranges = _parse_boundaries(X.shape[0], boundaries if mode != "single" else None)
        for o, (lo, hi) in enumerate(ranges):
            rng = _owner_rng(seed, o)
            feat = share_array(enc[lo:hi], rng, SCALE_FIXED)
            lab = share_array(onehot[lo:hi], rng, SCALE_INT)
            for p in (1, 2, 3):
                write_share_file(out / f"features-o{o}-p{p}.mpcfs",
                                 feat[p - 1], SLOT_FEATURES, frac_bits)
                write_share_file(out / f"labels-o{o}-p{p}.mpcfs",
                                 lab[p - 1], SLOT_LABELS, 0)
    else:
        ranges = _parse_boundaries(X.shape[1], boundaries)
        if not 0 <= label_owner < len(ranges):
            raise UsageError(f"label owner {label_owner} out of range")
        for o, (lo, hi) in enumerate(ranges):
            rng = _owner_rng(seed, o)
            feat = share_array(enc[:, lo:hi], rng, SCALE_FIXED)
            for p in (1, 2, 3):
                write_share_file(out / f"features-o{o}-p{p}.mpcfs",
                                 feat[p - 1], SLOT_FEATURES, frac_bits)
            if o == label_owner:
                lab = share_array(onehot, rng, SCALE_INT)
                for p in (1, 2, 3):
                    write_share_file(out / f"labels-o{o}-p{p}.mpcfs",
                                     lab[p - 1], SLOT_LABELS, 0)
    meta = {"mode": mode, "n_classes": n, "frac_bits": frac_bits,
            "rows": int(X.shape[0]), "cols": int(X.shape[1]),
            "owners": len(ranges)}
    (out / "split.json").write_text(json.dumps(meta, indent=2))
    click.echo(json.dumps(meta))


def _load_party_inputs(in_dir: Path, party: int, mode: str
                       ) -> tuple[SharedArray, SharedArray]:
    feat_files = sorted(in_dir.glob(f"features-o*-p{party}.mpcfs"))
    lab_files = sorted(in_dir.glob(f"labels-o*-p{party}.mpcfs"))
    if not feat_files or not lab_files:
        raise UsageError(f"no share files for party {party} under {in_dir}")
    feats = [read_share_file(f)[0] for f in feat_files]
    labs = [read_share_file(f)[0] for f in lab_files]
    axis = 1 if mode == "vertical" else 0
    data = feats[0] if len(feats) == 1 else concat_shares(feats, axis=axis)
    labels = labs[0] if len(labs) == 1 else concat_shares(labs, axis=0)
    return data, labels


def _serve_party(session: ProtocolSession, cfg: JobConfig,
                 data: SharedArray, labels: SharedArray, out_dir: Path) -> dict:
    public = {**cfg.public_fields(), "version": PROTOCOL_VERSION,
              "m": data.shape[0], "p": data.shape[1]}
    exchange_config_blob(session.mesh, public)
    m, p = data.shape
    started = time.perf_counter()
    if cfg.inject_scores is not None:
        if len(cfg.inject_scores) != p:
            raise UsageError(
                f"{len(cfg.inject_scores)} injected scores for {p} features"
            )
        scores = session.const_share(
            encode_array(np.asarray(cfg.inject_scores), session.fp),
            shape=(p,), scale=SCALE_FIXED)
        bound = encode(max(cfg.inject_scores) + 1.0, session.fp)
        result = filter_selection(session, data, scores, cfg.k, bound)
        result.scores = scores
    else:
        result = gini_feature_selection(session, data, labels, cfg.k)
    wall_ms = (time.perf_counter() - started) * 1e3

    write_share_file(out_dir / f"selected-p{session.party}.mpcfs",
                     result.selected, SLOT_SELECTED, cfg.frac_bits)
    report = {"party": session.party, "wall_ms": wall_ms,
              **session.counters.report()}
    (out_dir / f"costs-p{session.party}.json").write_text(
        json.dumps(report, indent=2))
    if cfg.reveal_scores:
        opened = session.open_checked(result.scores)
        decoded = decode_array(opened, session.fp)
        (out_dir / f"scores-p{session.party}.json").write_text(json.dumps({
            "scores": decoded.tolist(),
            "normalized": (decoded / m).tolist(),
        }, indent=2))
    return report


@main.command()
@click.option("--config", "config_paths", type=click.Path(exists=True),
              multiple=True, required=True,
              help="One config for tcp; all three for loopback.")
@click.option("--in", "in_dir", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--backend", type=click.Choice(["loopback", "tcp"]),
              default="loopback", show_default=True)
@click.option("--reveal-scores", is_flag=True, default=False)
def serve(config_paths, in_dir, out_dir, backend, reveal_scores) -> None:
    """Run the secure selection as computing party (or parties)."""
    in_dir, out_dir = Path(in_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    configs = [JobConfig.load(p) for p in config_paths]
    if reveal_scores:
        for c in configs:
            c.reveal_scores = True

    if backend == "tcp":
        if len(configs) != 1:
            raise UsageError("tcp backend takes exactly one --config")
        cfg = configs[0]
        me = next(pe for pe in cfg.peers if pe.party == cfg.party)
        others = [pe for pe in cfg.peers if pe.party != cfg.party]
        mesh = connect_tcp_mesh(me, others, cfg.session)
        seeds = _seeds_from_config(cfg)
        session = ProtocolSession(cfg.party, mesh, cfg.fp, seeds,
                                  cfg.session, cfg.max_batch)
        data, labels = _load_party_inputs(in_dir, cfg.party, cfg.mode)
        report = _serve_party(session, cfg, data, labels, out_dir)
        click.echo(json.dumps(report))
        return

    if len(configs) != 3 or sorted(c.party for c in configs) != [1, 2, 3]:
        raise UsageError("loopback backend needs configs for parties 1, 2, 3")
    by_party = {c.party: c for c in configs}
    for c in configs[1:]:
        if c.public_fields() != configs[0].public_fields():
            raise HandshakeError("party configs disagree on public fields")
    meshes = loopback_mesh(configs[0].session)
    sessions = {
        p: ProtocolSession(p, meshes[p], by_party[p].fp,
                           _seeds_from_config(by_party[p]),
                           by_party[p].session, by_party[p].max_batch)
        for p in (1, 2, 3)
    }
    inputs = {p: _load_party_inputs(in_dir, p, by_party[p].mode)
              for p in (1, 2, 3)}
    reports = run_parties(
        lambda s: _serve_party(s, by_party[s.party], *inputs[s.party], out_dir),
        sessions)
    click.echo(json.dumps(list(reports.values())))


def _seeds_from_config(cfg: JobConfig):
    from .sharing import PairwiseSeeds
    return PairwiseSeeds(with_next=int(cfg.seeds["next"]),
                         with_prev=int(cfg.seeds["prev"]))


@main.command()
@click.argument("share_files", nargs=-1, required=True,
                type=click.Path(exists=True))
@click.option("--out", "out_csv", type=click.Path(), required=True)
def reconstruct(share_files, out_csv) -> None:
    """Combine selected-output share files (two or more parties) into a CSV."""
    from .sharing import reconstruct_array
    loaded = []
    frac = None
    for f in share_files:
        shares, slot, fb = read_share_file(f)
        if slot != SLOT_SELECTED:
            raise UsageError(f"{f}: not a selected-output share file")
        if frac is None:
            frac = fb
        elif fb != frac:
            raise UsageError(f"{f}: frac_bits {fb} disagrees with {frac}")
        loaded.append(shares)
    combined = reconstruct_array(*loaded)
    fp = FixedPointParams(frac)
    write_matrix_csv(out_csv, decode_array(combined, fp))
    click.echo(f"wrote {out_csv}")


@main.command()
@click.option("--m", "m", type=int, required=True)
@click.option("--p", "p", type=int, required=True)
@click.option("--k", "k", type=int, required=True)
@click.option("--n", "n", type=int, default=2, show_default=True)
@click.option("--frac-bits", default=16, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--backend", type=click.Choice(["loopback", "tcp"]),
              default="loopback", show_default=True)
@click.option("--report", "report_path", type=click.Path(), default=None)
def bench(m, p, k, n, frac_bits, seed, backend, report_path) -> None:
    """Synthesize a shaped dataset, run the pipeline, report costs."""
    from .runner import loopback_sessions, tcp_sessions
    fp = FixedPointParams(frac_bits)
    rng = np.random.default_rng(seed)
    X = rng.normal(0.0, 1.0, (m, p))
    y = rng.integers(1, n + 1, m)
    data = share_array(encode_dataset(X, fp), rng, SCALE_FIXED)
    labels = share_array(one_hot_labels(y, n), rng, SCALE_INT)

    if backend == "tcp":
        base = 23000 + (seed % 1000)
        sessions = tcp_sessions([base, base + 1, base + 2], fp)
    else:
        sessions = loopback_sessions(fp)

    started = time.perf_counter()
    run_parties(
        lambda s: gini_feature_selection(s, data[s.party - 1],
                                         labels[s.party - 1], k),
        sessions)
    wall_ms = (time.perf_counter() - started) * 1e3
    report = {
        "shape": {"m": m, "p": p, "k": k, "n": n},
        "wall_ms": wall_ms,
        "rounds": sessions[1].counters.rounds,
        "expected_rounds": expected_rounds(m, p, k, frac_bits,
                                           sessions[1].max_batch),
        "bytes_per_party": {q: sessions[q].counters.bytes_sent
                            for q in (1, 2, 3)},
        "elems_per_party": {q: sessions[q].counters.elems_sent
                            for q in (1, 2, 3)},
        "op_histogram": sessions[1].counters.report()["op_histogram"],
    }
    blob = json.dumps(report, indent=2)
    if report_path:
        Path(report_path).write_text(blob)
    click.echo(blob)


if __name__ == "__main__":
    main()
