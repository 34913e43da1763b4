"""Bridge event stream: one multiplexed feed for trace sinks and the console UI.

Every event is one JSON object with a ``type`` discriminator:

- ``trace``: a bus trace event (seq, tick, disposition, encoded message)
- ``state``: an information-state snapshot (qud, common_ground, last_move, agenda)
- ``nbest``: the ranked hypotheses for the last interpreted utterance
- ``system_move``: one outbound system act, as canonical term text

The stream is append-only; subscribers get a replay of everything emitted so
far and then live events.  The WebSocket endpoint ``/bridge`` serves the same
stream and accepts ``{"type": "utterance", "text": ...}`` and
``{"type": "get_state"}`` commands.
"""

from __future__ import annotations

import json
import queue
import threading
from typing import Callable, IO

from .bus import TraceEvent


def dumps(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"))


class EventStream:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.events: list[dict] = []
        self._subscribers: list[queue.SimpleQueue] = []
        self._sinks: list[Callable[[dict], None]] = []

    def add_sink(self, sink: Callable[[dict], None], replay: bool = False) -> None:
        with self._lock:
            backlog = list(self.events) if replay else []
            self._sinks.append(sink)
        for event in backlog:
            sink(event)

    def subscribe(self) -> tuple[list[dict], queue.SimpleQueue]:
        """Replay of past events plus a live queue."""
        with self._lock:
            q: queue.SimpleQueue = queue.SimpleQueue()
            self._subscribers.append(q)
            return list(self.events), q

    def unsubscribe(self, q: queue.SimpleQueue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def emit(self, event: dict) -> None:
        with self._lock:
            self.events.append(event)
            sinks = list(self._sinks)
            subscribers = list(self._subscribers)
        for sink in sinks:
            sink(event)
        for q in subscribers:
            q.put(event)

    def emit_trace(self, trace_event: TraceEvent) -> None:
        self.emit({"type": "trace", **trace_event.to_json_obj()})

    def emit_state(self, snapshot: dict) -> None:
        self.emit({"type": "state", **snapshot})

    def emit_nbest(self, utterance: str, hypotheses: list[dict]) -> None:
        self.emit({"type": "nbest", "utterance": utterance,
                   "hypotheses": hypotheses})

    def emit_system_move(self, act_text: str) -> None:
        self.emit({"type": "system_move", "act": act_text})


def file_sink(fp: IO[str]) -> Callable[[dict], None]:
    lock = threading.Lock()

    def sink(event: dict) -> None:
        with lock:
            fp.write(dumps(event) + "\n")
            fp.flush()

    return sink


class BridgeServer:
    """WebSocket /bridge endpoint over the event stream.

    ``submit`` is called (from the connection's thread) for each utterance
    command; ``get_state`` must return a current snapshot dict.
    """

    def __init__(self, events: EventStream, submit: Callable[[str], None],
                 get_state: Callable[[], dict], host: str = "127.0.0.1",
                 port: int = 0):
        from websockets.sync.server import serve

        self.events = events
        self._submit = submit
        self._get_state = get_state
        self._server = serve(self._handle, host, port)
        self._thread = threading.Thread(
            target=self._server.serve_forever, daemon=True
        )

    @property
    def port(self) -> int:
        return self._server.socket.getsockname()[1]

    def start(self) -> "BridgeServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()

    def _handle(self, connection) -> None:
        path = getattr(getattr(connection, "request", None), "path", "/bridge")
        if path != "/bridge":
            connection.close(code=1008, reason="unknown endpoint")
            return
        replay, live = self.events.subscribe()
        stop = threading.Event()

        def pump() -> None:
            try:
                for event in replay:
                    connection.send(dumps(event))
                while not stop.is_set():
                    try:
                        event = live.get(timeout=0.1)
                    except queue.Empty:
                        continue
                    connection.send(dumps(event))
            except Exception:
                stop.set()

        sender = threading.Thread(target=pump, daemon=True)
        sender.start()
        try:
            while True:
                raw = connection.recv()
                try:
                    command = json.loads(raw)
                except json.JSONDecodeError:
                    connection.send(dumps({"type": "error",
                                           "reason": "not json"}))
                    continue
                kind = command.get("type")
                if kind == "utterance" and isinstance(command.get("text"), str):
                    self._submit(command["text"])
                elif kind == "get_state":
                    self.events.emit_state(self._get_state())
                else:
                    connection.send(dumps({"type": "error",
                                           "reason": "unknown command"}))
        except Exception:
            pass
        finally:
            stop.set()
            sender.join(timeout=1.0)
            self.events.unsubscribe(live)
