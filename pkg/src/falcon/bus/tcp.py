"""TCP bus realization: NDJSON envelopes over long-lived connections.

The broker relays envelopes between connected clients: one envelope object
per line, fields {"subject","correlation_id","reply_to","timestamp_ms",
"payload"} with the payload embedded as a JSON value. Clients announce
subscriptions with control envelopes on the reserved ``ctl.*`` subjects,
which the broker consumes rather than forwards. Malformed lines are dropped;
half-closing the socket ends the session.
"""

from __future__ import annotations

import socket
import threading
from queue import SimpleQueue
from typing import Optional

from falcon.bus.client import BusClientBase, Subscription
from falcon.bus.envelope import Envelope, subject_matches
from falcon.bus.errors import BusClosed, BusError
from falcon.core.types import InvariantViolation

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 4501

_SUBSCRIBE = "ctl.subscribe"
_UNSUBSCRIBE = "ctl.unsubscribe"

_STOP = object()


class _BrokerConnection:
    """Server-side state for one connected client."""

    def __init__(self, broker: "TcpBroker", sock: socket.socket) -> None:
        self._broker = broker
        self._sock = sock
        self._patterns: dict[str, int] = {}
        self._patterns_lock = threading.Lock()
        self._outbound: SimpleQueue = SimpleQueue()
        self._closed = False
        self._reader = threading.Thread(
            target=self._read_loop, name="bus-broker-read", daemon=True
        )
        self._writer = threading.Thread(
            target=self._write_loop, name="bus-broker-write", daemon=True
        )

    def start(self) -> None:
        self._reader.start()
        self._writer.start()

    def wants(self, subject: str) -> bool:
        with self._patterns_lock:
            return any(
                subject_matches(pattern, subject) for pattern in self._patterns
            )

    def enqueue(self, line: bytes) -> None:
        self._outbound.put(line)

    def _read_loop(self) -> None:
        try:
            with self._sock.makefile("rb") as stream:
                for line in stream:
                    if not line.strip():
                        continue
                    try:
                        envelope = Envelope.from_line(line)
                    except InvariantViolation:
                        continue
                    self._handle(envelope, line)
        except (OSError, ValueError):
            pass
        finally:
            self.close()

    def _handle(self, envelope: Envelope, line: bytes) -> None:
        if envelope.subject == _SUBSCRIBE or envelope.subject == _UNSUBSCRIBE:
            payload = envelope.payload
            pattern = payload.get("pattern") if isinstance(payload, dict) else None
            if not isinstance(pattern, str):
                return
            with self._patterns_lock:
                count = self._patterns.get(pattern, 0)
                if envelope.subject == _SUBSCRIBE:
                    self._patterns[pattern] = count + 1
                elif count > 1:
                    self._patterns[pattern] = count - 1
                elif count == 1:
                    del self._patterns[pattern]
            return
        self._broker._route(envelope.subject, line)

    def _write_loop(self) -> None:
        while True:
            item = self._outbound.get()
            if item is _STOP:
                return
            try:
                self._sock.sendall(item)
            except OSError:
                self.close()
                return

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        self._broker._drop(self)
        self._outbound.put(_STOP)
        try:
            self._sock.close()
        except OSError:
            pass


class TcpBroker:
    """Accepts client connections and relays envelopes between them."""

    def __init__(self, host: str = DEFAULT_HOST, port: int = DEFAULT_PORT) -> None:
        self._server = socket.create_server((host, port))
        self.host, self.port = self._server.getsockname()[:2]
        self._connections: list[_BrokerConnection] = []
        self._lock = threading.Lock()
        self._closed = False
        self._acceptor = threading.Thread(
            target=self._accept_loop, name="bus-broker-accept", daemon=True
        )
        self._acceptor.start()

    @property
    def address(self) -> tuple[str, int]:
        return (self.host, self.port)

    def _accept_loop(self) -> None:
        while True:
            try:
                sock, _ = self._server.accept()
            except OSError:
                return
            connection = _BrokerConnection(self, sock)
            with self._lock:
                if self._closed:
                    connection.close()
                    continue
                self._connections.append(connection)
            connection.start()

    def _route(self, subject: str, line: bytes) -> None:
        # A sender's lines are routed serially by its reader thread, and each
        # receiver drains its queue in order, so per-connection FIFO holds.
        with self._lock:
            targets = [c for c in self._connections if c.wants(subject)]
        for connection in targets:
            connection.enqueue(line)

    def _drop(self, connection: _BrokerConnection) -> None:
        with self._lock:
            if connection in self._connections:
                self._connections.remove(connection)

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
            connections = list(self._connections)
        try:
            self._server.close()
        except OSError:
            pass
        for connection in connections:
            connection.close()


class TcpClient(BusClientBase):
    """Client connection to a TCP broker."""

    def __init__(
        self,
        host: str = DEFAULT_HOST,
        port: int = DEFAULT_PORT,
        connect_timeout: float = 5.0,
    ) -> None:
        super().__init__()
        try:
            self._sock = socket.create_connection((host, port), timeout=connect_timeout)
        except OSError as exc:
            raise BusError(f"cannot connect to bus at {host}:{port}: {exc}")
        self._sock.settimeout(None)
        self._write_lock = threading.Lock()
        self._reader = threading.Thread(
            target=self._read_loop, name="bus-client-read", daemon=True
        )
        self._reader.start()

    def _send_line(self, line: bytes) -> None:
        try:
            with self._write_lock:
                self._sock.sendall(line)
        except OSError as exc:
            raise BusClosed(f"bus connection lost: {exc}")

    def _send(self, envelope: Envelope) -> None:
        self._send_line(envelope.to_line())

    def _control(self, subject: str, pattern: str) -> None:
        envelope = Envelope(
            subject=subject,
            correlation_id="control",
            reply_to=None,
            timestamp_ms=0,
            payload={"pattern": pattern},
        )
        self._send_line(envelope.to_line())

    def _register(self, subscription: Subscription) -> None:
        self._control(_SUBSCRIBE, subscription.pattern)

    def _deregister(self, subscription: Subscription) -> None:
        try:
            self._control(_UNSUBSCRIBE, subscription.pattern)
        except BusClosed:
            pass

    def _read_loop(self) -> None:
        try:
            with self._sock.makefile("rb") as stream:
                for line in stream:
                    if not line.strip():
                        continue
                    try:
                        envelope = Envelope.from_line(line)
                    except InvariantViolation:
                        continue
                    self._dispatch_local(envelope)
        except (OSError, ValueError):
            pass
        finally:
            self.close()

    def close(self) -> None:
        if self._closed:
            return
        super().close()
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self._sock.close()
        except OSError:
            pass
