"""Subject-addressed pub/sub and request/reply message layer."""

from falcon.bus import subjects
from falcon.bus.client import BusClientBase, Subscription
from falcon.bus.envelope import (
    Envelope,
    make_envelope,
    new_correlation_id,
    subject_matches,
    validate_pattern,
    validate_subject,
)
from falcon.bus.errors import BusClosed, BusError, BusTimeout
from falcon.bus.loopback import LoopbackBroker, LoopbackConnection
from falcon.bus.tcp import DEFAULT_HOST, DEFAULT_PORT, TcpBroker, TcpClient

__all__ = [
    "BusClientBase",
    "BusClosed",
    "BusError",
    "BusTimeout",
    "DEFAULT_HOST",
    "DEFAULT_PORT",
    "Envelope",
    "LoopbackBroker",
    "LoopbackConnection",
    "Subscription",
    "TcpBroker",
    "TcpClient",
    "make_envelope",
    "new_correlation_id",
    "subject_matches",
    "subjects",
    "validate_pattern",
    "validate_subject",
]
