"""In-process bus realization for tests and single-process deployments."""

from __future__ import annotations

import threading

from falcon.bus.client import BusClientBase, Subscription
from falcon.bus.envelope import Envelope
from falcon.bus.errors import BusClosed


class LoopbackBroker:
    """Routes envelopes between in-process connections."""

    def __init__(self) -> None:
        self._connections: list["LoopbackConnection"] = []
        self._lock = threading.Lock()
        self._closed = False

    def connect(self) -> "LoopbackConnection":
        with self._lock:
            if self._closed:
                raise BusClosed("broker is closed")
            connection = LoopbackConnection(self)
            self._connections.append(connection)
            return connection

    def _route(self, envelope: Envelope) -> None:
        # publish() enqueues synchronously on the caller's thread, so one
        # publisher's envelopes reach each subscriber in publish-call order.
        with self._lock:
            if self._closed:
                raise BusClosed("broker is closed")
            targets = list(self._connections)
        for connection in targets:
            connection._dispatch_local(envelope)

    def _drop(self, connection: "LoopbackConnection") -> None:
        with self._lock:
            if connection in self._connections:
                self._connections.remove(connection)

    def close(self) -> None:
        with self._lock:
            self._closed = True
            connections = list(self._connections)
            self._connections.clear()
        for connection in connections:
            connection.close()


class LoopbackConnection(BusClientBase):
    """One client identity on a loopback broker."""

    def __init__(self, broker: LoopbackBroker) -> None:
        super().__init__()
        self._broker = broker

    def _send(self, envelope: Envelope) -> None:
        self._broker._route(envelope)

    def close(self) -> None:
        if not self._closed:
            self._broker._drop(self)
        super().close()
