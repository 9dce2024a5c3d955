"""Bus frontage for the instrument hub.

Serves registration, resolution, and submission as request/reply; consumes the
measurement result stream; emits advisory job-status events. Terminal job
transitions ride the result stream's done marker, which arrives behind every
batch on the same ordered subscription, so no status race can outrun data.
"""

from __future__ import annotations

from typing import Any, Mapping, Optional

from falcon.bus import BusClientBase, Envelope, subjects
from falcon.hub import wire
from falcon.hub.core import InstrumentHub
from falcon.hub.records import JobRecord, JobStatus


class HubService:
    """Binds one InstrumentHub to one bus connection."""

    def __init__(self, hub: InstrumentHub, client: BusClientBase) -> None:
        self.hub = hub
        self.client = client
        hub.status_listener = self._emit_status
        self._subscriptions = [
            client.serve(subjects.HUB_REGISTER, self._on_register),
            client.serve(subjects.HUB_RESOLVE, self._on_resolve),
            client.serve(subjects.HUB_SUBMIT, self._on_submit),
            client.subscribe(subjects.MEASURE_RESULT, self._on_result),
            client.subscribe(subjects.JOB_STATUS, self._on_status),
        ]
        client.flush()

    def close(self) -> None:
        for subscription in self._subscriptions:
            subscription.cancel()
        self.hub.status_listener = None

    # ------------------------------------------------------------------
    # Request/reply handlers

    def _on_register(self, payload: object) -> dict[str, Any]:
        diagnostics = self.hub.register_instrument(payload)
        if diagnostics:
            return {"ok": False, "diagnostics": list(diagnostics)}
        return {"ok": True}

    def _on_resolve(self, payload: object) -> dict[str, Any]:
        target = payload.get("target") if isinstance(payload, Mapping) else None
        if not isinstance(target, str):
            return {"found": False}
        record = self.hub.resolve(target)
        if record is None:
            return {"found": False}
        return {"found": True, "record": record.to_jsonable()}

    def _on_submit(self, payload: object) -> dict[str, Any]:
        if not isinstance(payload, Mapping):
            return {"ok": False, "diagnostics": ["submission must be a JSON object"]}
        schema_id = payload.get("schema_id")
        if not isinstance(schema_id, str):
            return {"ok": False, "diagnostics": ["field 'schema_id' must be a string"]}
        outcome = self.hub.submit_job(schema_id, payload.get("request"))
        if not outcome.accepted:
            return {"ok": False, "diagnostics": list(outcome.diagnostics)}
        job = outcome.job
        assert job is not None and outcome.job_id is not None
        if job.status is JobStatus.PENDING:
            self.client.publish(
                subjects.MEASURE_REQUEST,
                wire.measure_request_payload(job.job_id, job.schema_id, job.request),
            )
        reply: dict[str, Any] = {
            "ok": True,
            "job_id": outcome.job_id,
            "status": job.status.value,
        }
        if job.reason is not None:
            reply["reason"] = job.reason
        return reply

    # ------------------------------------------------------------------
    # Stream consumption

    def _on_result(self, envelope: Envelope) -> None:
        payload = envelope.payload
        if not isinstance(payload, Mapping):
            return
        job_id = payload.get("job_id")
        if not isinstance(job_id, str) or self.hub.job(job_id) is None:
            return
        if payload.get("done"):
            error = payload.get("error")
            index = payload.get("last_completed_index")
            self.hub.complete_stream(
                job_id,
                error=error if isinstance(error, str) else None,
                last_completed_index=index if isinstance(index, int) else None,
            )
            return
        responses = wire.parse_responses(payload)
        if responses:
            self.hub.append_result(job_id, responses)

    def _on_status(self, envelope: Envelope) -> None:
        """Consume advisory status events, promoting Pending jobs to Running.

        Terminal statuses are deliberately ignored here: concluding a job
        before its final batches arrive would reject them, and the done marker
        already concludes the stream in order.
        """
        payload = envelope.payload
        if not isinstance(payload, Mapping):
            return
        job_id = payload.get("job_id")
        if not isinstance(job_id, str):
            return
        if payload.get("status") == JobStatus.RUNNING.value:
            self.hub.apply_status(job_id, JobStatus.RUNNING)

    # ------------------------------------------------------------------

    def _emit_status(self, job: JobRecord) -> None:
        self.client.publish(
            subjects.JOB_STATUS,
            wire.job_status_payload(job.job_id, job.status.value, reason=job.reason),
        )
