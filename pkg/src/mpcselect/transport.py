"""Point-to-point channels among the three parties.

Two interchangeable backends: in-process queues (loopback) for tests and
single-machine runs, and TCP sockets for deployment. Both present the same
ordered, exact-delivery interface and both account bytes identically, so a
protocol run produces byte-identical transcripts on either backend given the
same seeds.

Wire format per message: u32 little-endian payload length, u64 session id,
u64 sequence number, then the payload (ring elements as 8-byte LE words).
Sequences are per (sender, receiver, session) and must be gapless.

Connection setup for TCP follows "lowest party id dials": for every directed
pair there is one dedicated connection, both directions of a pair dialed by
the lower-numbered party. No encryption is applied on the wire; shares leak
nothing individually, but deployments should run the mesh over a secured
network since two parties' combined traffic reveals secrets.
"""

from __future__ import annotations

import json
import queue
import socket
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import HandshakeError, TransportError
from .ring import u64_from_bytes, u64_to_bytes

PROTOCOL_VERSION = 1
FRAME_HEADER = struct.Struct("<IQQ")
FRAME_OVERHEAD = FRAME_HEADER.size  # 20 bytes: length + session + sequence
HELLO = struct.Struct("<8sIQBB")  # magic, version, session, sender, receiver
HELLO_MAGIC = b"MPCMESH1"


@dataclass
class PartyEndpoint:
    party: int
    address: str  # "host:port"

    @property
    def host_port(self) -> tuple[str, int]:
        host, port = self.address.rsplit(":", 1)
        return host, int(port)


@dataclass
class CostCounters:
    """Monotone communication accounting for one party."""

    rounds: int = 0
    bytes_sent: int = 0
    elems_sent: int = 0
    op_hist: dict = field(default_factory=dict)

    def bump_op(self, name: str, n: int = 1) -> None:
        self.op_hist[name] = self.op_hist.get(name, 0) + n

    def report(self) -> dict:
        return {
            "rounds": self.rounds,
            "bytes_sent": self.bytes_sent,
            "elems_sent": self.elems_sent,
            "op_histogram": dict(sorted(self.op_hist.items())),
        }


class Channel:
    """One direction of a link: either send or recv side is used."""

    def send(self, frame: bytes) -> None:
        raise NotImplementedError

    def recv(self) -> bytes:
        raise NotImplementedError

    def close(self) -> None:
        pass


_CLOSED = object()


class QueueChannel(Channel):
    def __init__(self, q: "queue.SimpleQueue | None" = None):
        self.q = q if q is not None else queue.SimpleQueue()
        self._closed = False

    def send(self, frame: bytes) -> None:
        if self._closed:
            raise TransportError("send on closed channel")
        self.q.put(frame)

    def recv(self) -> bytes:
        item = self.q.get()
        if item is _CLOSED:
            # keep the sentinel visible for any later recv
            self.q.put(_CLOSED)
            raise TransportError("channel closed by peer")
        return item

    def close(self) -> None:
        self._closed = True
        self.q.put(_CLOSED)


class SocketChannel(Channel):
    def __init__(self, sock: socket.socket):
        self.sock = sock

    def send(self, frame: bytes) -> None:
        try:
            self.sock.sendall(frame)
        except OSError as exc:
            raise TransportError(f"socket send failed: {exc}") from exc

    def _recv_exact(self, n: int) -> bytes:
        buf = bytearray(n)
        view = memoryview(buf)
        got = 0
        while got < n:
            try:
                k = self.sock.recv_into(view[got:], n - got)
            except OSError as exc:
                raise TransportError(f"socket recv failed: {exc}") from exc
            if k == 0:
                raise TransportError("channel closed by peer (short read)")
            got += k
        return bytes(buf)

    def recv(self) -> bytes:
        head = self._recv_exact(4)
        (length,) = struct.unpack("<I", head)
        return head + self._recv_exact(16 + length)

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class Mesh:
    """One party's channels to both peers, with framing and accounting."""

    def __init__(self, party: int, session_id: int,
                 send_channels: dict[int, Channel],
                 recv_channels: dict[int, Channel],
                 record_transcript: bool = False):
        self.party = party
        self.session_id = session_id
        self._send = send_channels
        self._recv = recv_channels
        self._send_seq = {p: 0 for p in send_channels}
        self._recv_seq = {p: 0 for p in recv_channels}
        self.counters = CostCounters()
        self.transcript: list[tuple[str, int, bytes]] | None = (
            [] if record_transcript else None
        )

    def peers(self) -> list[int]:
        return sorted(self._send)

    def send_bytes(self, peer: int, payload: bytes) -> None:
        seq = self._send_seq[peer]
        self._send_seq[peer] = seq + 1
        frame = FRAME_HEADER.pack(len(payload), self.session_id, seq) + payload
        self.counters.bytes_sent += len(frame)
        if self.transcript is not None:
            self.transcript.append(("send", peer, payload))
        self._send[peer].send(frame)

    def recv_bytes(self, peer: int) -> bytes:
        frame = self._recv[peer].recv()
        length, session, seq = FRAME_HEADER.unpack_from(frame)
        payload = frame[FRAME_OVERHEAD:]
        if len(payload) != length:
            raise TransportError(
                f"frame length mismatch from party {peer}: "
                f"header {length}, got {len(payload)}"
            )
        if session != self.session_id:
            raise TransportError(
                f"session mismatch from party {peer}: {session} != {self.session_id}"
            )
        expect = self._recv_seq[peer]
        if seq != expect:
            raise TransportError(
                f"sequence gap from party {peer}: got {seq}, expected {expect}"
            )
        self._recv_seq[peer] = expect + 1
        if self.transcript is not None:
            self.transcript.append(("recv", peer, payload))
        return payload

    def send_elems(self, peer: int, arr: np.ndarray) -> None:
        self.counters.elems_sent += int(np.size(arr))
        self.send_bytes(peer, u64_to_bytes(arr))

    def recv_elems(self, peer: int, count: int) -> np.ndarray:
        payload = self.recv_bytes(peer)
        if len(payload) != 8 * count:
            raise TransportError(
                f"expected {count} ring elements from party {peer}, "
                f"got {len(payload)} bytes"
            )
        return u64_from_bytes(payload, count)

    def barrier_round(self) -> None:
        """Mark the end of one matched send/receive phase."""
        self.counters.rounds += 1

    def close(self) -> None:
        for ch in self._send.values():
            ch.close()


def loopback_mesh(session_id: int = 0, record_transcript: bool = False
                  ) -> dict[int, Mesh]:
    """Three co-resident parties wired by queues: 6 directed channels."""
    parties = (1, 2, 3)
    q = {(a, b): QueueChannel() for a in parties for b in parties if a != b}
    meshes = {}
    for p in parties:
        send = {b: q[(p, b)] for b in parties if b != p}
        recv = {a: q[(a, p)] for a in parties if a != p}
        meshes[p] = Mesh(p, session_id, send, recv, record_transcript)
    return meshes


def _dial(addr: tuple[str, int], peer_party: int, timeout: float) -> socket.socket:
    deadline = time.monotonic() + timeout
    last: Exception | None = None
    while time.monotonic() < deadline:
        try:
            sock = socket.create_connection(addr, timeout=timeout)
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            return sock
        except OSError as exc:
            last = exc
            time.sleep(0.05)
    raise TransportError(
        f"cannot reach party {peer_party} at {addr[0]}:{addr[1]}: {last}"
    )


def _hello(sock: socket.socket, version: int, session: int,
           sender: int, receiver: int) -> None:
    sock.sendall(HELLO.pack(HELLO_MAGIC, version, session, sender, receiver))


def _read_hello(sock: socket.socket) -> tuple[int, int, int, int]:
    buf = b""
    while len(buf) < HELLO.size:
        try:
            chunk = sock.recv(HELLO.size - len(buf))
        except OSError as exc:
            raise TransportError(f"handshake read failed: {exc}") from exc
        if not chunk:
            raise TransportError("peer closed during handshake")
        buf += chunk
    magic, version, session, sender, receiver = HELLO.unpack(buf)
    if magic != HELLO_MAGIC:
        raise HandshakeError(f"bad handshake magic {magic!r}")
    return version, session, sender, receiver


def connect_tcp_mesh(me: PartyEndpoint, peers: list[PartyEndpoint],
                     session_id: int, timeout: float = 10.0,
                     version: int = PROTOCOL_VERSION,
                     record_transcript: bool = False) -> Mesh:
    """Establish the full TCP mesh for one party.

    For every directed pair there is one connection; both connections of an
    unordered pair are dialed by the lower-numbered party. The dialer sends a
    hello naming (version, session, sender-of-data, receiver-of-data); the
    acceptor validates and echoes its own hello back.
    """
    by_party = {p.party: p for p in peers}
    if me.party in by_party or len(by_party) != 2:
        raise HandshakeError("mesh needs exactly two distinct peers")
    lower = [p for p in by_party if p < me.party]
    higher = [p for p in by_party if p > me.party]

    send_channels: dict[int, Channel] = {}
    recv_channels: dict[int, Channel] = {}

    listener = None
    if lower:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind(me.host_port)
        listener.listen(2 * len(lower))
        listener.settimeout(timeout)

    # Dial both directions for every higher-numbered peer.
    for p in higher:
        for sender, receiver in ((me.party, p), (p, me.party)):
            sock = _dial(by_party[p].host_port, p, timeout)
            _hello(sock, version, session_id, sender, receiver)
            v, s, snd, rcv = _read_hello(sock)
            if v != version:
                raise HandshakeError(
                    f"protocol version mismatch with party {p}: {v} != {version}"
                )
            if s != session_id:
                raise HandshakeError(
                    f"session mismatch with party {p}: {s} != {session_id}"
                )
            ch = SocketChannel(sock)
            if sender == me.party:
                send_channels[p] = ch
            else:
                recv_channels[p] = ch

    # Accept both directions from every lower-numbered peer.
    expected = 2 * len(lower)
    accepted = 0
    while accepted < expected:
        try:
            sock, _ = listener.accept()
        except socket.timeout as exc:
            missing = [p for p in lower
                       if p not in send_channels or p not in recv_channels]
            raise TransportError(
                f"timed out waiting for party {missing[0]} to connect"
            ) from exc
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        v, s, snd, rcv = _read_hello(sock)
        _hello(sock, version, session_id, rcv, snd)
        if v != version:
            raise HandshakeError(
                f"protocol version mismatch with party {snd}: {v} != {version}"
            )
        if s != session_id:
            raise HandshakeError(
                f"session mismatch with party {snd}: {s} != {session_id}"
            )
        ch = SocketChannel(sock)
        peer = snd if snd != me.party else rcv
        if snd == me.party:
            send_channels[peer] = ch
        else:
            recv_channels[peer] = ch
        accepted += 1
    if listener is not None:
        listener.close()

    return Mesh(me.party, session_id, send_channels, recv_channels,
                record_transcript)


def exchange_config_blob(mesh: Mesh, public_fields: dict) -> None:
    """Broadcast the public job parameters and fail on any disagreement."""
    blob = json.dumps(public_fields, sort_keys=True).encode()
    for peer in mesh.peers():
        mesh.send_bytes(peer, blob)
    for peer in mesh.peers():
        other = mesh.recv_bytes(peer)
        if other != blob:
            raise HandshakeError(
                f"public job config disagrees with party {peer}: "
                f"{other.decode(errors='replace')} != {blob.decode()}"
            )
    mesh.barrier_round()
