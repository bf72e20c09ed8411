"""Run the same protocol function at all three parties.

Protocols are written SPMD-style: one function taking a ProtocolSession
(plus that party's inputs) runs identically at every party. The loopback
runner executes the three parties on threads wired by queues; the TCP
variant wires them through real sockets on localhost, which is only useful
for exercising the socket backend since real deployments run one process
per party via the CLI.
"""

from __future__ import annotations

import threading
from typing import Callable, Sequence

from .ring import FixedPointParams
from .sharing import derive_pairwise_seeds
from .session import ProtocolSession
from .transport import PartyEndpoint, connect_tcp_mesh, loopback_mesh

DEFAULT_SEEDS = (0x5EED0001, 0x5EED0002, 0x5EED0003)


def loopback_sessions(fp: FixedPointParams | None = None,
                      seeds: tuple[int, int, int] = DEFAULT_SEEDS,
                      session_id: int = 0,
                      record_transcript: bool = False,
                      max_batch: int = 32768) -> dict[int, ProtocolSession]:
    fp = fp or FixedPointParams()
    meshes = loopback_mesh(session_id, record_transcript)
    per_party = derive_pairwise_seeds(*seeds)
    return {
        p: ProtocolSession(p, meshes[p], fp, per_party[p], session_id, max_batch)
        for p in (1, 2, 3)
    }


def tcp_sessions(ports: Sequence[int], fp: FixedPointParams | None = None,
                 seeds: tuple[int, int, int] = DEFAULT_SEEDS,
                 session_id: int = 0,
                 record_transcript: bool = False) -> dict[int, ProtocolSession]:
    """Three sessions over localhost TCP; meshes are dialed on threads."""
    fp = fp or FixedPointParams()
    endpoints = {p: PartyEndpoint(p, f"127.0.0.1:{ports[p - 1]}") for p in (1, 2, 3)}
    meshes: dict[int, object] = {}
    errors: dict[int, BaseException] = {}

    def build(p: int) -> None:
        try:
            peers = [endpoints[q] for q in (1, 2, 3) if q != p]
            meshes[p] = connect_tcp_mesh(endpoints[p], peers, session_id,
                                         record_transcript=record_transcript)
        except BaseException as exc:  # noqa: BLE001 - propagated below
            errors[p] = exc

    threads = [threading.Thread(target=build, args=(p,)) for p in (1, 2, 3)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise next(iter(errors.values()))
    per_party = derive_pairwise_seeds(*seeds)
    return {
        p: ProtocolSession(p, meshes[p], fp, per_party[p], session_id)
        for p in (1, 2, 3)
    }


def run_parties(worker: Callable, sessions: dict[int, ProtocolSession],
                args: dict[int, tuple] | None = None) -> dict[int, object]:
    """Execute worker(session, *args[party]) on one thread per party.

    The first exception raised by any party is re-raised in the caller after
    all threads have stopped.
    """
    results: dict[int, object] = {}
    errors: list[BaseException] = []
    lock = threading.Lock()

    def body(p: int) -> None:
        try:
            extra = args.get(p, ()) if args else ()
            results[p] = worker(sessions[p], *extra)
        except BaseException as exc:  # noqa: BLE001 - propagated below
            with lock:
                errors.append(exc)
            # unblock peers waiting on us
            sessions[p].mesh.close()

    threads = [threading.Thread(target=body, args=(p,), daemon=True)
               for p in sessions]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    return results
