"""Flat, handle-based export surface for foreign-language wrappers.

This module plays the role a C shared library would play in a larger
deployment: a narrow waist between the core domain types and any wrapper
written in another language. Everything crossing the boundary is a scalar.
Values live in a process-wide handle table owned by this side; callers hold
opaque nonzero integer tokens and must release each allocation-category
return exactly once through its destroy function.

Conventions, since a flat API has no exception channel:

* Failure is signalled by a sentinel return (zero handle, ``False``, or
  ``None`` for text reads) and the reason is readable via ``LastError_read``.
  Every call except ``LastError_read`` clears the thread-local error slot on
  entry, so a falsy return with an empty last error is a genuine result, not
  a failure.
* Strings cross as handles. ``String_create`` and ``String_read`` are the
  only functions that touch raw text.
* Destroyed handles are never reused. The table keeps a poisoned tombstone
  so use-after-destroy is reported as such rather than as an unknown handle.

The exported symbol list, with a category annotation per symbol, is
available from :func:`manifest` and is emitted as ``capi-manifest.json`` so
wrappers can verify themselves against it. Running this module
(``python -m falcon.capi``) serves the same API over newline-delimited JSON
on stdin/stdout for wrappers that live in a separate process; the protocol
transports calls verbatim, so domain failures still come back as sentinel
values rather than protocol errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import threading
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Optional, TextIO

from falcon.core import (
    Connection,
    InvariantViolation,
    SerializationError,
    from_json_string,
    to_json_string,
)

__all__ = [
    "Connection_create_barrier_gate",
    "Connection_name",
    "Connection_type",
    "Connection_is_barrier_gate",
    "Connection_to_json_string",
    "Connection_from_json_string",
    "Connection_destroy",
    "String_create",
    "String_read",
    "String_destroy",
    "LastError_read",
    "Debug_handle_count",
    "manifest",
    "serve",
    "main",
]


# --------------------------------------------------------------------------
# Thread-local last error


_last_error = threading.local()


def _clear_error() -> None:
    _last_error.text = ""


def _fail(message: str) -> None:
    _last_error.text = message


def LastError_read() -> str:
    """Return the calling thread's last error text, empty when none."""
    return getattr(_last_error, "text", "")


# --------------------------------------------------------------------------
# Handle table


@dataclass
class _Slot:
    kind: str
    value: Optional[object]
    alive: bool


_handles: dict[int, _Slot] = {}
_handles_lock = threading.Lock()
_next_handle = 0


def _allocate(kind: str, value: object) -> int:
    global _next_handle
    with _handles_lock:
        _next_handle += 1
        _handles[_next_handle] = _Slot(kind, value, True)
        return _next_handle


def _resolve(handle: object, kind: str) -> Optional[object]:
    """Return the live value behind ``handle``, or None after setting the error."""
    if not isinstance(handle, int) or isinstance(handle, bool) or handle == 0:
        _fail(f"null or malformed handle: {handle!r}")
        return None
    with _handles_lock:
        slot = _handles.get(handle)
    if slot is None:
        _fail(f"unknown handle {handle}")
        return None
    if not slot.alive:
        _fail(f"use after destroy on {slot.kind} handle {handle}")
        return None
    if slot.kind != kind:
        _fail(f"handle {handle} is a {slot.kind} handle, not a {kind} handle")
        return None
    return slot.value


def _destroy(handle: object, kind: str) -> bool:
    _clear_error()
    if not isinstance(handle, int) or isinstance(handle, bool) or handle == 0:
        _fail(f"null or malformed handle: {handle!r}")
        return False
    with _handles_lock:
        slot = _handles.get(handle)
        if slot is None:
            _fail(f"unknown handle {handle}")
            return False
        if not slot.alive:
            _fail(f"use after destroy on {slot.kind} handle {handle}")
            return False
        if slot.kind != kind:
            _fail(f"handle {handle} is a {slot.kind} handle, not a {kind} handle")
            return False
        slot.alive = False
        slot.value = None
    return True


def Debug_handle_count() -> int:
    """Number of live handles in the table, for leak checks in tests."""
    with _handles_lock:
        return sum(1 for slot in _handles.values() if slot.alive)


# --------------------------------------------------------------------------
# Connection family


def Connection_create_barrier_gate(name_handle: object) -> int:
    """Allocate a barrier-gate connection named by a string handle."""
    _clear_error()
    name = _resolve(name_handle, "string")
    if name is None:
        return 0
    try:
        connection = Connection.barrier_gate(name)
    except InvariantViolation as exc:
        _fail(str(exc))
        return 0
    return _allocate("connection", connection)


def Connection_name(handle: object) -> int:
    """Return a fresh string handle holding the connection's name."""
    _clear_error()
    connection = _resolve(handle, "connection")
    if connection is None:
        return 0
    return _allocate("string", connection.name)


def Connection_type(handle: object) -> int:
    """Return a fresh string handle holding the feature name, e.g. BarrierGate."""
    _clear_error()
    connection = _resolve(handle, "connection")
    if connection is None:
        return 0
    return _allocate("string", connection.feature.value)


def Connection_is_barrier_gate(handle: object) -> bool:
    _clear_error()
    connection = _resolve(handle, "connection")
    if connection is None:
        return False
    return connection.is_barrier_gate


def Connection_to_json_string(handle: object) -> int:
    """Serialize the connection to canonical JSON, returned as a string handle."""
    _clear_error()
    connection = _resolve(handle, "connection")
    if connection is None:
        return 0
    return _allocate("string", to_json_string(connection))


def Connection_from_json_string(string_handle: object) -> int:
    """Parse a serialized connection document held in a string handle.

    Any parse or validation failure, including a document that describes some
    other core type, yields a zero handle with the reason in the last error.
    """
    _clear_error()
    text = _resolve(string_handle, "string")
    if text is None:
        return 0
    try:
        value = from_json_string(text)
    except (SerializationError, InvariantViolation) as exc:
        _fail(str(exc))
        return 0
    if not isinstance(value, Connection):
        _fail(f"expected a Connection document, got {type(value).__name__}")
        return 0
    return _allocate("connection", value)


def Connection_destroy(handle: object) -> bool:
    return _destroy(handle, "connection")


# --------------------------------------------------------------------------
# String family


def String_create(text: object) -> int:
    """Copy text into the table and return its string handle."""
    _clear_error()
    if not isinstance(text, str):
        _fail(f"String_create expects text, got {type(text).__name__}")
        return 0
    return _allocate("string", text)


def String_read(handle: object) -> Optional[str]:
    """Copy the text behind a string handle back out, None on failure."""
    _clear_error()
    value = _resolve(handle, "string")
    if value is None:
        return None
    return value  # type: ignore[return-value]


def String_destroy(handle: object) -> bool:
    return _destroy(handle, "string")


# --------------------------------------------------------------------------
# Manifest


@dataclass(frozen=True)
class _Export:
    fn: Callable[..., object]
    category: str
    params: tuple[str, ...]
    result: str


_EXPORTS: dict[str, _Export] = {
    "Connection_create_barrier_gate": _Export(
        Connection_create_barrier_gate, "allocation", ("handle",), "handle"
    ),
    "Connection_name": _Export(Connection_name, "allocation", ("handle",), "handle"),
    "Connection_type": _Export(Connection_type, "allocation", ("handle",), "handle"),
    "Connection_is_barrier_gate": _Export(
        Connection_is_barrier_gate, "read", ("handle",), "bool"
    ),
    "Connection_to_json_string": _Export(
        Connection_to_json_string, "allocation", ("handle",), "handle"
    ),
    "Connection_from_json_string": _Export(
        Connection_from_json_string, "allocation", ("handle",), "handle"
    ),
    "Connection_destroy": _Export(Connection_destroy, "deallocation", ("handle",), "bool"),
    "String_create": _Export(String_create, "allocation", ("text",), "handle"),
    "String_read": _Export(String_read, "read", ("handle",), "text"),
    "String_destroy": _Export(String_destroy, "deallocation", ("handle",), "bool"),
    "LastError_read": _Export(LastError_read, "read", (), "text"),
    "Debug_handle_count": _Export(Debug_handle_count, "debug", (), "count"),
}


def manifest() -> list[dict[str, str]]:
    """The exported symbol list as {symbol, category} pairs."""
    return [
        {"symbol": symbol, "category": export.category}
        for symbol, export in _EXPORTS.items()
    ]


# --------------------------------------------------------------------------
# Line protocol


def _protocol_error(request_id: object, message: str) -> dict[str, Any]:
    return {"id": request_id, "ok": False, "error": message}


def _dispatch_call(request_id: object, request: dict[str, Any]) -> dict[str, Any]:
    symbol = request.get("symbol")
    if not isinstance(symbol, str) or symbol not in _EXPORTS:
        return _protocol_error(request_id, f"unknown symbol: {symbol!r}")
    export = _EXPORTS[symbol]
    args = request.get("args", [])
    if not isinstance(args, list):
        return _protocol_error(request_id, f"args for {symbol} must be an array")
    if len(args) != len(export.params):
        return _protocol_error(
            request_id,
            f"{symbol} takes {len(export.params)} argument(s), got {len(args)}",
        )
    for index, (param, arg) in enumerate(zip(export.params, args)):
        if param == "handle":
            if not isinstance(arg, int) or isinstance(arg, bool):
                return _protocol_error(
                    request_id,
                    f"argument {index} of {symbol} must be an integer handle",
                )
        elif param == "text":
            if not isinstance(arg, str):
                return _protocol_error(
                    request_id, f"argument {index} of {symbol} must be a string"
                )
    value = export.fn(*args)
    response: dict[str, Any] = {"id": request_id, "ok": True, "value": value}
    if export.result == "text" and isinstance(value, str):
        response["byteLength"] = len(value.encode("utf-8"))
    return response


def _handle_line(text: str) -> dict[str, Any]:
    try:
        request = json.loads(text)
    except json.JSONDecodeError as exc:
        return _protocol_error(None, f"invalid JSON request: {exc}")
    if not isinstance(request, dict):
        return _protocol_error(None, "request must be a JSON object")
    request_id = request.get("id")
    op = request.get("op", "call")
    if op == "manifest":
        return {"id": request_id, "ok": True, "value": manifest()}
    if op == "call":
        return _dispatch_call(request_id, request)
    return _protocol_error(request_id, f"unknown op: {op!r}")


def serve(stdin: Optional[Iterable[str]] = None, stdout: Optional[TextIO] = None) -> None:
    """Serve the flat API as newline-delimited JSON until stdin closes.

    One request per line, one response per line, in order. Only malformed
    requests produce protocol-level failures; a failing API call returns its
    sentinel value with ``ok`` true, exactly as an in-process caller sees it.
    """
    source = stdin if stdin is not None else sys.stdin
    sink = stdout if stdout is not None else sys.stdout
    for line in source:
        text = line.strip()
        if not text:
            continue
        response = _handle_line(text)
        sink.write(json.dumps(response, separators=(",", ":")) + "\n")
        sink.flush()


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="falcon-capi",
        description="Serve the flat handle-based API over stdin/stdout.",
    )
    parser.add_argument(
        "--manifest",
        action="store_true",
        help="print the symbol manifest as JSON and exit",
    )
    options = parser.parse_args(argv)
    if options.manifest:
        print(json.dumps(manifest(), indent=2))
        return 0
    serve()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
