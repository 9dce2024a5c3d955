"""Envelopes and subject grammar for the message layer.

A subject is dot-separated lowercase tokens; a subscription pattern may use
``*`` to match exactly one token. The first token ``ctl`` is reserved for
transport control frames, so application subjects never collide with them.
"""

from __future__ import annotations

import json
import re
import time
import uuid
from dataclasses import dataclass
from typing import Optional

from falcon.core.types import InvariantViolation

_TOKEN = re.compile(r"^[a-z0-9_]+$")

#: First subject token reserved for transport-internal control frames.
RESERVED_PREFIX = "ctl"


def new_correlation_id() -> str:
    """Random 128-bit id rendered as 32 hex characters."""
    return uuid.uuid4().hex


def now_ms() -> int:
    return time.time_ns() // 1_000_000


def validate_subject(subject: str) -> None:
    if not isinstance(subject, str) or not subject:
        raise InvariantViolation("subject must be a nonempty string")
    for token in subject.split("."):
        if not _TOKEN.match(token):
            raise InvariantViolation(
                f"subject token {token!r} must match [a-z0-9_]+ in {subject!r}"
            )


def validate_pattern(pattern: str) -> None:
    if not isinstance(pattern, str) or not pattern:
        raise InvariantViolation("pattern must be a nonempty string")
    for token in pattern.split("."):
        if token != "*" and not _TOKEN.match(token):
            raise InvariantViolation(
                f"pattern token {token!r} must match [a-z0-9_]+ or '*' in {pattern!r}"
            )


def subject_matches(pattern: str, subject: str) -> bool:
    """True when the pattern covers the subject, token by token."""
    pattern_tokens = pattern.split(".")
    subject_tokens = subject.split(".")
    if len(pattern_tokens) != len(subject_tokens):
        return False
    return all(
        p == "*" or p == s for p, s in zip(pattern_tokens, subject_tokens)
    )


@dataclass(frozen=True)
class Envelope:
    """One message: addressed payload plus correlation metadata."""

    subject: str
    correlation_id: str
    reply_to: Optional[str]
    timestamp_ms: int
    payload: object

    def __post_init__(self) -> None:
        validate_subject(self.subject)
        if self.reply_to is not None:
            validate_subject(self.reply_to)
        if not isinstance(self.correlation_id, str) or not self.correlation_id:
            raise InvariantViolation("correlation_id must be a nonempty string")
        if not isinstance(self.timestamp_ms, int) or isinstance(self.timestamp_ms, bool):
            raise InvariantViolation("timestamp_ms must be an integer")

    def to_wire_dict(self) -> dict:
        return {
            "subject": self.subject,
            "correlation_id": self.correlation_id,
            "reply_to": self.reply_to,
            "timestamp_ms": self.timestamp_ms,
            "payload": self.payload,
        }

    def to_line(self) -> bytes:
        """One NDJSON line: the envelope object plus the newline."""
        text = json.dumps(
            self.to_wire_dict(), separators=(",", ":"), allow_nan=False
        )
        return text.encode("utf-8") + b"\n"

    @classmethod
    def from_wire_dict(cls, document: dict) -> "Envelope":
        if not isinstance(document, dict):
            raise InvariantViolation("envelope must be a JSON object")
        try:
            return cls(
                subject=document["subject"],
                correlation_id=document["correlation_id"],
                reply_to=document.get("reply_to"),
                timestamp_ms=document["timestamp_ms"],
                payload=document.get("payload"),
            )
        except KeyError as exc:
            raise InvariantViolation(f"envelope missing field {exc}")

    @classmethod
    def from_line(cls, line: bytes) -> "Envelope":
        try:
            document = json.loads(line.decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            raise InvariantViolation(f"envelope line is not valid JSON: {exc}")
        return cls.from_wire_dict(document)


def make_envelope(
    subject: str,
    payload: object,
    *,
    reply_to: Optional[str] = None,
    correlation_id: Optional[str] = None,
) -> Envelope:
    """Build an envelope with a normalized, JSON-clean payload.

    The payload is round-tripped through JSON so both bus realizations hand
    subscribers exactly what the wire would carry (tuples become lists, keys
    become strings) and non-serializable payloads fail at the publisher.
    """
    try:
        payload = json.loads(
            json.dumps(payload, separators=(",", ":"), allow_nan=False)
        )
    except (TypeError, ValueError) as exc:
        raise InvariantViolation(f"payload is not a JSON document: {exc}")
    return Envelope(
        subject=subject,
        correlation_id=correlation_id or new_correlation_id(),
        reply_to=reply_to,
        timestamp_ms=now_ms(),
        payload=payload,
    )
