"""Hub-topology message bus: naming, peer-to-peer and broadcast delivery.

The in-process bus is the primary transport; :class:`TcpBridge` exposes the
same line protocol over TCP (one encoded message per line, first line must
be a ``register`` message).  Sends are serialized under one lock, so the
trace is a total order consistent with every per-pair FIFO order.
"""

from __future__ import annotations

import json
import socket
import socketserver
import threading
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable

from .kqml import (
    BROADCAST,
    KqmlError,
    KqmlMessage,
    Performative,
    decode,
    encode,
    reply_to,
)
from .terms import Atom, Compound

FACILITATOR = "facilitator"


class Disposition(Enum):
    DELIVERED = "delivered"
    BROADCAST = "broadcast"
    DEAD_LETTER = "dead_letter"


@dataclass(frozen=True)
class AgentRegistration:
    name: str
    registered_at: int


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    tick: int
    message: KqmlMessage
    disposition: Disposition

    def to_json_obj(self) -> dict:
        return {
            "seq": self.seq,
            "tick": self.tick,
            "disposition": self.disposition.value,
            "message": encode(self.message),
        }


class DuplicateAgentError(KqmlError):
    pass


class Bus:
    """Single-hub router.  All methods are safe to call from any thread."""

    def __init__(self, on_event: Callable[[TraceEvent], None] | None = None):
        self._lock = threading.RLock()
        self._mailboxes: dict[str, deque[KqmlMessage]] = {}
        self._registrations: dict[str, AgentRegistration] = {}
        self.trace: list[TraceEvent] = []
        self.clock = 0
        self.deliveries = 0
        self.dead_letters = 0
        self._seq = 0
        self._on_event = on_event

    def register(self, name: str) -> AgentRegistration:
        with self._lock:
            if name in self._registrations:
                raise DuplicateAgentError(f"agent {name!r} already registered")
            reg = AgentRegistration(name, self.clock)
            self._registrations[name] = reg
            self._mailboxes[name] = deque()
            return reg

    def unregister(self, name: str) -> bool:
        with self._lock:
            if name not in self._registrations:
                return False
            del self._registrations[name]
            del self._mailboxes[name]
            return True

    def agents(self) -> list[str]:
        with self._lock:
            return list(self._registrations)

    def is_registered(self, name: str) -> bool:
        with self._lock:
            return name in self._registrations

    def send(self, m: KqmlMessage) -> Disposition:
        if not isinstance(m, KqmlMessage):
            raise KqmlError("bus only accepts KqmlMessage values")
        with self._lock:
            if m.receiver == BROADCAST:
                for name, box in self._mailboxes.items():
                    if name != m.sender:
                        box.append(m)
                        self.deliveries += 1
                self._trace(m, Disposition.BROADCAST)
                return Disposition.BROADCAST
            box = self._mailboxes.get(m.receiver)
            if box is not None:
                box.append(m)
                self.deliveries += 1
                self._trace(m, Disposition.DELIVERED)
                return Disposition.DELIVERED
            self.dead_letters += 1
            self._trace(m, Disposition.DEAD_LETTER)
            if m.sender in self._mailboxes and m.sender != FACILITATOR:
                self.send(reply_to(
                    m, Performative.SORRY, FACILITATOR,
                    Compound("unknown_receiver", (Atom(m.receiver),)),
                ))
            return Disposition.DEAD_LETTER

    def _trace(self, m: KqmlMessage, disposition: Disposition) -> None:
        self._seq += 1
        event = TraceEvent(self._seq, self.clock, m, disposition)
        self.trace.append(event)
        if self._on_event is not None:
            self._on_event(event)

    def dequeue(self, name: str) -> KqmlMessage | None:
        with self._lock:
            box = self._mailboxes.get(name)
            if not box:
                return None
            return box.popleft()

    def drain(self, name: str) -> list[KqmlMessage]:
        """All pending messages for name, in arrival order."""
        with self._lock:
            box = self._mailboxes.get(name)
            if box is None:
                return []
            out = list(box)
            box.clear()
            return out

    def pending(self, name: str) -> int:
        with self._lock:
            box = self._mailboxes.get(name)
            return len(box) if box else 0

    def any_pending(self) -> bool:
        with self._lock:
            return any(self._mailboxes.values())

    def trace_jsonl(self) -> Iterable[str]:
        for event in self.trace:
            yield json.dumps(event.to_json_obj(), separators=(",", ":"))

    def export_trace(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fp:
            for line in self.trace_jsonl():
                fp.write(line + "\n")


class _BridgeHandler(socketserver.StreamRequestHandler):
    timeout = 0.05

    def handle(self) -> None:
        bus: Bus = self.server.bus  # type: ignore[attr-defined]
        first = self.rfile.readline()
        if not first:
            return
        try:
            hello = decode(first.decode("utf-8"))
        except KqmlError:
            self.wfile.write(b"(error :sender facilitator :receiver * "
                             b":in-reply-to nil :content bad_register)\n")
            return
        if hello.performative is not Performative.REGISTER:
            self.wfile.write(b"(error :sender facilitator :receiver * "
                             b":in-reply-to nil :content expected_register)\n")
            return
        name = hello.sender
        try:
            bus.register(name)
        except DuplicateAgentError:
            self.wfile.write(b"(error :sender facilitator :receiver * "
                             b":in-reply-to nil :content duplicate_name)\n")
            return
        self.connection.settimeout(self.timeout)
        try:
            buf = b""
            while not self.server.stopping:  # type: ignore[attr-defined]
                for m in bus.drain(name):
                    self.wfile.write(encode(m).encode("utf-8") + b"\n")
                    self.wfile.flush()
                try:
                    chunk = self.connection.recv(4096)
                    if not chunk:
                        break
                    buf += chunk
                except socket.timeout:
                    continue
                while b"\n" in buf:
                    line, buf = buf.split(b"\n", 1)
                    if line.strip():
                        bus.send(decode(line.decode("utf-8")))
        finally:
            bus.unregister(name)


class TcpBridge:
    """Serves the bus line protocol on a TCP port (one agent per connection)."""

    def __init__(self, bus: Bus, host: str = "127.0.0.1", port: int = 0):
        self._server = socketserver.ThreadingTCPServer(
            (host, port), _BridgeHandler, bind_and_activate=True
        )
        self._server.daemon_threads = True
        self._server.bus = bus  # type: ignore[attr-defined]
        self._server.stopping = False  # type: ignore[attr-defined]
        self._thread = threading.Thread(
            target=self._server.serve_forever, kwargs={"poll_interval": 0.05},
            daemon=True,
        )

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address  # type: ignore[return-value]

    def start(self) -> "TcpBridge":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.stopping = True  # type: ignore[attr-defined]
        self._server.shutdown()
        self._server.server_close()
