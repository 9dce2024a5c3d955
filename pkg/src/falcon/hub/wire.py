"""Payload shapes shared by the hub and the instrument server.

Result batches and the stream-done marker travel on falcon.measure.result so
they reach the hub through one ordered subscription; status events on
falcon.job.status are advisory fan-out for any observer.
"""

from __future__ import annotations

from typing import Any, Mapping, Optional, Sequence

from falcon.schemas import MeasurementResponse


def measure_request_payload(
    job_id: str, schema_id: str, request: Mapping[str, Any]
) -> dict[str, Any]:
    return {"job_id": job_id, "schema_id": schema_id, "request": dict(request)}


def result_batch_payload(
    job_id: str, point_index: int, responses: Sequence[MeasurementResponse]
) -> dict[str, Any]:
    return {
        "job_id": job_id,
        "point_index": point_index,
        "responses": [response.to_jsonable() for response in responses],
    }


def stream_done_payload(
    job_id: str,
    *,
    error: Optional[str] = None,
    last_completed_index: Optional[int] = None,
) -> dict[str, Any]:
    payload: dict[str, Any] = {"job_id": job_id, "done": True}
    if error is not None:
        payload["error"] = error
    if last_completed_index is not None:
        payload["last_completed_index"] = last_completed_index
    return payload


def job_status_payload(
    job_id: str, status: str, *, reason: Optional[str] = None
) -> dict[str, Any]:
    payload: dict[str, Any] = {"job_id": job_id, "status": status}
    if reason is not None:
        payload["reason"] = reason
    return payload


def parse_responses(payload: Mapping[str, Any]) -> list[MeasurementResponse]:
    raw = payload.get("responses")
    if not isinstance(raw, list):
        return []
    return [MeasurementResponse.from_jsonable(item) for item in raw]
