"""Client core shared by the loopback and TCP realizations.

A subscription owns a FIFO queue drained by its own dispatcher thread, so
handlers for one subscription run serially in delivery order while distinct
subscriptions run in parallel. ``request``/``serve`` are built purely on
``publish``/``subscribe``, so both realizations inherit identical
request/reply semantics.
"""

from __future__ import annotations

import logging
import threading
from queue import SimpleQueue
from typing import Callable, Optional

from falcon.bus.envelope import (
    Envelope,
    RESERVED_PREFIX,
    make_envelope,
    new_correlation_id,
    subject_matches,
    validate_pattern,
    validate_subject,
)
from falcon.bus.errors import BusClosed, BusTimeout
from falcon.core.types import InvariantViolation

_LOG = logging.getLogger("falcon.bus")

_STOP = object()

Handler = Callable[[Envelope], None]
Responder = Callable[[object], object]


def _reject_reserved(subject: str) -> None:
    if subject.split(".", 1)[0] == RESERVED_PREFIX:
        raise InvariantViolation(
            f"subject {subject!r} is reserved for transport control"
        )


class Subscription:
    """An active pattern registration with a serial dispatcher."""

    def __init__(self, client: "BusClientBase", pattern: str, handler: Handler) -> None:
        self.pattern = pattern
        self._client = client
        self._handler = handler
        self._queue: SimpleQueue = SimpleQueue()
        self._cancelled = False
        self._thread = threading.Thread(
            target=self._run, name=f"bus-sub {pattern}", daemon=True
        )

    def matches(self, subject: str) -> bool:
        return subject_matches(self.pattern, subject)

    def deliver(self, envelope: Envelope) -> None:
        self._queue.put(envelope)

    def _run(self) -> None:
        while True:
            item = self._queue.get()
            if item is _STOP:
                return
            try:
                self._handler(item)
            except Exception:
                _LOG.warning(
                    "subscription handler for %r raised", self.pattern, exc_info=True
                )

    def cancel(self) -> None:
        if self._cancelled:
            return
        self._cancelled = True
        self._client._unregister(self)
        self._queue.put(_STOP)


class BusClientBase:
    """Publish/subscribe plus derived request/reply."""

    def __init__(self) -> None:
        self._subscriptions: list[Subscription] = []
        self._subs_lock = threading.Lock()
        self._closed = False

    # -- transport hooks, one per realization --------------------------------

    def _send(self, envelope: Envelope) -> None:
        raise NotImplementedError

    def _register(self, subscription: Subscription) -> None:
        pass

    def _deregister(self, subscription: Subscription) -> None:
        pass

    # -- public API ----------------------------------------------------------

    def publish(
        self,
        subject: str,
        payload: object,
        *,
        reply_to: Optional[str] = None,
        correlation_id: Optional[str] = None,
    ) -> None:
        if self._closed:
            raise BusClosed("bus connection is closed")
        validate_subject(subject)
        _reject_reserved(subject)
        envelope = make_envelope(
            subject, payload, reply_to=reply_to, correlation_id=correlation_id
        )
        self._send(envelope)

    def subscribe(self, pattern: str, handler: Handler) -> Subscription:
        if self._closed:
            raise BusClosed("bus connection is closed")
        validate_pattern(pattern)
        _reject_reserved(pattern)
        subscription = Subscription(self, pattern, handler)
        with self._subs_lock:
            self._subscriptions.append(subscription)
        self._register(subscription)
        subscription._thread.start()
        return subscription

    def request(self, subject: str, payload: object, timeout_ms: int) -> object:
        """Send one request and return the first matching reply's payload."""
        if timeout_ms <= 0:
            raise InvariantViolation("timeout_ms must be positive")
        correlation_id = new_correlation_id()
        reply_subject = f"inbox.{correlation_id}"
        arrived = threading.Event()
        slot: list = []

        def on_reply(envelope: Envelope) -> None:
            if envelope.correlation_id != correlation_id:
                return
            if slot:
                return
            slot.append(envelope.payload)
            arrived.set()

        subscription = self.subscribe(reply_subject, on_reply)
        try:
            self.publish(
                subject,
                payload,
                reply_to=reply_subject,
                correlation_id=correlation_id,
            )
            if not arrived.wait(timeout_ms / 1000.0):
                raise BusTimeout(subject, timeout_ms)
            return slot[0]
        finally:
            subscription.cancel()

    def flush(self, timeout_ms: int = 5000) -> None:
        """Block until every subscription made so far is live at the broker.

        Control frames and publishes from one connection are processed in
        order, so a self-addressed probe delivered back proves all earlier
        registrations took effect. On the loopback realization this returns
        immediately.
        """
        subject = f"flush.{new_correlation_id()}"
        arrived = threading.Event()
        subscription = self.subscribe(subject, lambda envelope: arrived.set())
        try:
            self.publish(subject, {})
            if not arrived.wait(timeout_ms / 1000.0):
                raise BusTimeout(subject, timeout_ms)
        finally:
            subscription.cancel()

    def serve(self, subject: str, responder: Responder) -> Subscription:
        """Answer each request on ``subject`` with the responder's return.

        A responder fault becomes an ``{"error": message}`` reply rather than
        silence, so clients fail fast instead of timing out.
        """

        def on_request(envelope: Envelope) -> None:
            try:
                reply = responder(envelope.payload)
            except Exception as exc:
                reply = {"error": str(exc)}
            if envelope.reply_to is not None:
                try:
                    self.publish(
                        envelope.reply_to,
                        reply,
                        correlation_id=envelope.correlation_id,
                    )
                except BusClosed:
                    pass

        return self.subscribe(subject, on_request)

    # -- shared plumbing -----------------------------------------------------

    def _unregister(self, subscription: Subscription) -> None:
        with self._subs_lock:
            if subscription in self._subscriptions:
                self._subscriptions.remove(subscription)
        self._deregister(subscription)

    def _snapshot_subscriptions(self) -> list[Subscription]:
        with self._subs_lock:
            return list(self._subscriptions)

    def _dispatch_local(self, envelope: Envelope) -> None:
        for subscription in self._snapshot_subscriptions():
            if subscription.matches(envelope.subject):
                subscription.deliver(envelope)

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        for subscription in self._snapshot_subscriptions():
            subscription.cancel()
