"""Client-side facade over the hub and device-state bus subjects.

Used by the tuning stack and the command line to submit jobs, watch their
result streams, and snapshot the device without touching hub internals.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from typing import Any, Mapping, Optional

from falcon.bus import BusClientBase, Envelope, subjects
from falcon.core.serialize import from_json_string, to_json_string
from falcon.core.types import DeviceStates
from falcon.hub import wire
from falcon.hub.core import HubError
from falcon.hub.records import JobStatus
from falcon.schemas import MeasurementResponse


@dataclass(frozen=True)
class JobOutcome:
    """Terminal state of one awaited job plus everything it streamed."""

    job_id: str
    status: JobStatus
    reason: Optional[str]
    responses: tuple[MeasurementResponse, ...]

    @property
    def finished(self) -> bool:
        return self.status is JobStatus.FINISHED


class HubClient:
    """Request/reply wrapper around the hub's bus subjects."""

    def __init__(
        self, client: BusClientBase, *, default_timeout_ms: int = 30_000
    ) -> None:
        self.client = client
        self.default_timeout_ms = default_timeout_ms

    def register_instrument(self, document: Mapping[str, Any]) -> tuple[str, ...]:
        reply = self._request(subjects.HUB_REGISTER, dict(document))
        if reply.get("ok"):
            return ()
        return tuple(reply.get("diagnostics", ("registration rejected",)))

    def resolve(self, target: str) -> Optional[dict[str, Any]]:
        reply = self._request(subjects.HUB_RESOLVE, {"target": target})
        if reply.get("found"):
            record = reply.get("record")
            return dict(record) if isinstance(record, Mapping) else None
        return None

    def submit_job(
        self, schema_id: str, request: object
    ) -> tuple[Optional[str], tuple[str, ...]]:
        """Submit without waiting; returns (job_id, diagnostics)."""
        reply = self._submit(schema_id, request)
        if not reply.get("ok"):
            return None, tuple(reply.get("diagnostics", ("submission rejected",)))
        return reply["job_id"], ()

    def run_job(
        self, schema_id: str, request: object, timeout_ms: Optional[int] = None
    ) -> JobOutcome:
        """Submit a job and block until its result stream concludes.

        The result subscription is active before the submission leaves, and
        batches that arrive before the job id is known are buffered, so no
        ordering between the submit reply and the stream is assumed.
        """
        timeout_ms = timeout_ms if timeout_ms is not None else self.default_timeout_ms
        lock = threading.Lock()
        done = threading.Event()
        state: dict[str, Any] = {
            "job_id": None,
            "responses": [],
            "error": None,
            "pending": [],
        }

        def apply(payload: Mapping[str, Any]) -> None:
            if payload.get("job_id") != state["job_id"]:
                return
            if payload.get("done"):
                error = payload.get("error")
                state["error"] = error if isinstance(error, str) else None
                done.set()
                return
            state["responses"].extend(wire.parse_responses(payload))

        def on_result(envelope: Envelope) -> None:
            payload = envelope.payload
            if not isinstance(payload, Mapping):
                return
            with lock:
                if state["job_id"] is None:
                    state["pending"].append(payload)
                else:
                    apply(payload)

        subscription = self.client.subscribe(subjects.MEASURE_RESULT, on_result)
        try:
            reply = self._submit(schema_id, request)
            if not reply.get("ok"):
                raise HubError(
                    "submission rejected: "
                    + "; ".join(reply.get("diagnostics", ("unknown",)))
                )
            job_id = reply["job_id"]
            if reply.get("status") == JobStatus.FAILED.value:
                return JobOutcome(
                    job_id=job_id,
                    status=JobStatus.FAILED,
                    reason=reply.get("reason"),
                    responses=(),
                )
            with lock:
                state["job_id"] = job_id
                for payload in state["pending"]:
                    apply(payload)
                state["pending"] = []
            if not done.wait(timeout_ms / 1000.0):
                raise TimeoutError(
                    f"job {job_id} did not conclude within {timeout_ms} ms"
                )
            with lock:
                error = state["error"]
                responses = tuple(state["responses"])
            if error is not None:
                return JobOutcome(
                    job_id=job_id,
                    status=JobStatus.FAILED,
                    reason=error,
                    responses=responses,
                )
            return JobOutcome(
                job_id=job_id,
                status=JobStatus.FINISHED,
                reason=None,
                responses=responses,
            )
        finally:
            subscription.cancel()

    def collect_device_state(self) -> DeviceStates:
        """Snapshot every source setpoint as a DeviceStates value."""
        reply = self._request(subjects.DEVICE_STATE, {})
        states = from_json_string(json.dumps(reply))
        if not isinstance(states, DeviceStates):
            raise HubError("device state reply does not describe DeviceStates")
        return states

    # ------------------------------------------------------------------

    def _submit(self, schema_id: str, request: object) -> dict[str, Any]:
        return self._request(
            subjects.HUB_SUBMIT, {"schema_id": schema_id, "request": request}
        )

    def _request(self, subject: str, payload: object) -> dict[str, Any]:
        reply = self.client.request(subject, payload, self.default_timeout_ms)
        if not isinstance(reply, dict):
            raise HubError(f"malformed reply on {subject}: {reply!r}")
        if set(reply) == {"error"}:
            raise HubError(str(reply["error"]))
        return reply


def device_states_payload(states: DeviceStates) -> dict[str, Any]:
    """Encode a DeviceStates value as a bus payload."""
    return json.loads(to_json_string(states))
