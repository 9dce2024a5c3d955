"""In-memory instrument registry, job tracker, and dataset writer.

All mutations funnel through one lock, so concurrent bus deliveries serialize;
reads hand out immutable snapshots. When a run directory is configured, every
mutation refreshes ``hub-state.json`` and finalized datasets land under
``datasets/<job_id>/``.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence

from falcon.core.grid import sweep_grid
from falcon.hub.datasets import (
    DatasetColumn,
    DatasetIntegrityError,
    DatasetManifest,
    write_dataset,
)
from falcon.hub.records import (
    InstrumentRecord,
    JobRecord,
    JobStatus,
    parse_instrument_document,
    transition_allowed,
)
from falcon.schemas import (
    GetSetRequest,
    MeasurementResponse,
    Sweep1DRequest,
    canonicalize,
    validate_request,
)


class HubError(RuntimeError):
    """An operation was applied to a job or instrument it cannot accept."""


@dataclass(frozen=True)
class SubmitOutcome:
    """Result of a job submission: either a job id or validation diagnostics."""

    job_id: Optional[str]
    diagnostics: tuple[str, ...]
    job: Optional[JobRecord]

    @property
    def accepted(self) -> bool:
        return self.job_id is not None


def _now_ms() -> int:
    return time.time_ns() // 1_000_000


class InstrumentHub:
    """Central registry and aggregation point for instruments and jobs."""

    def __init__(
        self,
        run_dir: Optional[Path] = None,
        *,
        status_listener: Optional[Callable[[JobRecord], None]] = None,
    ) -> None:
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.status_listener = status_listener
        self._lock = threading.RLock()
        self._instruments: dict[str, InstrumentRecord] = {}
        self._jobs: dict[str, JobRecord] = {}
        self._results: dict[str, list[MeasurementResponse]] = {}

    # ------------------------------------------------------------------
    # Instrument registry

    def register_instrument(self, document: object) -> tuple[str, ...]:
        """Register or replace an instrument; returns validation diagnostics."""
        record, diagnostics = parse_instrument_document(document, _now_ms())
        if diagnostics:
            return diagnostics
        assert record is not None
        with self._lock:
            self._instruments[record.id] = record
            self._save_state_locked()
        return ()

    def list_instruments(self) -> tuple[InstrumentRecord, ...]:
        with self._lock:
            return tuple(
                self._instruments[key] for key in sorted(self._instruments)
            )

    def resolve(self, target: str) -> Optional[InstrumentRecord]:
        """Find the instrument owning ``target``: an id or a parameter name."""
        with self._lock:
            record = self._instruments.get(target)
            if record is not None:
                return record
            for key in sorted(self._instruments):
                if self._instruments[key].parameter(target) is not None:
                    return self._instruments[key]
        return None

    # ------------------------------------------------------------------
    # Job lifecycle

    def submit_job(self, schema_id: str, document: object) -> SubmitOutcome:
        """Validate, record, and (if resolvable) accept one measurement job.

        A request that fails schema validation produces diagnostics and no job;
        a valid request naming unknown targets produces a job that is already
        Failed, so the caller can observe the reason.
        """
        result = validate_request(schema_id, document)
        if not result.ok:
            return SubmitOutcome(
                job_id=None,
                diagnostics=tuple(str(issue) for issue in result.diagnostics),
                job=None,
            )
        request = result.request
        assert request is not None
        canonical_document = json.loads(canonicalize(request))
        job_id = uuid.uuid4().hex
        now = _now_ms()
        job = JobRecord(
            job_id=job_id,
            schema_id=schema_id,
            request=canonical_document,
            status=JobStatus.PENDING,
            created_at=now,
            updated_at=now,
        )
        missing = self._unresolved_targets(request)
        with self._lock:
            self._jobs[job_id] = job
            self._results[job_id] = []
            if missing:
                job = job.advanced(
                    JobStatus.FAILED,
                    _now_ms(),
                    reason="unresolved target " + ", ".join(missing),
                )
                self._jobs[job_id] = job
            self._save_state_locked()
        self._notify(job)
        return SubmitOutcome(job_id=job_id, diagnostics=(), job=job)

    def _unresolved_targets(self, request: object) -> list[str]:
        ordered: list[str] = []
        if isinstance(request, GetSetRequest):
            ordered.extend(request.setters)
            ordered.extend(request.getters)
        elif isinstance(request, Sweep1DRequest):
            ordered.append(request.swept_target)
            ordered.extend(request.getters)
        missing: list[str] = []
        for target in ordered:
            if target not in missing and self.resolve(target) is None:
                missing.append(target)
        return missing

    def job(self, job_id: str) -> Optional[JobRecord]:
        with self._lock:
            return self._jobs.get(job_id)

    def jobs(self) -> tuple[JobRecord, ...]:
        with self._lock:
            return tuple(self._jobs[key] for key in sorted(self._jobs))

    def apply_status(
        self, job_id: str, status: JobStatus, reason: Optional[str] = None
    ) -> bool:
        """Apply an externally observed status if it moves the job forward.

        Repeated or stale statuses are ignored, which makes consumption of
        advisory status events idempotent.
        """
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None or not transition_allowed(job.status, status):
                return False
            job = job.advanced(status, _now_ms(), reason=reason)
            self._jobs[job_id] = job
            self._save_state_locked()
        self._notify(job)
        return True

    def append_result(
        self, job_id: str, responses: Sequence[MeasurementResponse]
    ) -> None:
        """Buffer a batch of responses for a job in arrival order.

        The first batch promotes a Pending job to Running; batches after the
        job has concluded are rejected.
        """
        promoted: Optional[JobRecord] = None
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise HubError(f"unknown job {job_id!r}")
            if job.status in (JobStatus.FINISHED, JobStatus.FAILED):
                raise HubError(
                    f"cannot append results to a {job.status.value} job"
                )
            if job.status is JobStatus.PENDING:
                job = job.advanced(JobStatus.RUNNING, _now_ms())
                promoted = job
            buffer = self._results[job_id]
            buffer.extend(responses)
            job = replace(job, updated_at=_now_ms(), result_count=len(buffer))
            self._jobs[job_id] = job
            self._save_state_locked()
        if promoted is not None:
            self._notify(job)

    def results(self, job_id: str) -> tuple[MeasurementResponse, ...]:
        with self._lock:
            buffer = self._results.get(job_id)
            if buffer is None:
                raise HubError(f"unknown job {job_id!r}")
            return tuple(buffer)

    def complete_stream(
        self,
        job_id: str,
        *,
        error: Optional[str] = None,
        last_completed_index: Optional[int] = None,
    ) -> None:
        """Conclude a job's result stream: Finished on success, Failed on error."""
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise HubError(f"unknown job {job_id!r}")
            if job.status in (JobStatus.FINISHED, JobStatus.FAILED):
                return
            now = _now_ms()
            if error is not None:
                reason = error
                if last_completed_index is not None:
                    reason = f"{error} (last completed index {last_completed_index})"
                job = job.advanced(JobStatus.FAILED, now, reason=reason)
            elif not self._results[job_id]:
                job = job.advanced(JobStatus.FAILED, now, reason="no results")
            else:
                if job.status is JobStatus.PENDING:
                    job = job.advanced(JobStatus.RUNNING, now)
                job = job.advanced(JobStatus.FINISHED, now)
            self._jobs[job_id] = job
            self._save_state_locked()
        self._notify(job)

    # ------------------------------------------------------------------
    # Dataset persistence

    def finalize_dataset(self, job_id: str) -> DatasetManifest:
        """Write the job's buffered responses as a dataset directory.

        A job with nothing buffered cannot produce a dataset; it is marked
        Failed and the call raises.
        """
        if self.run_dir is None:
            raise HubError("hub has no run directory for datasets")
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise HubError(f"unknown job {job_id!r}")
            responses = tuple(self._results[job_id])
            instruments = tuple(sorted(self._instruments))
        if not responses:
            if job.status in (JobStatus.PENDING, JobStatus.RUNNING):
                self.apply_status(job_id, JobStatus.FAILED, reason="no results")
            raise HubError(f"job {job_id!r} has no results to finalize")
        columns, rows = self._tabulate(job, responses)
        directory = self.run_dir / "datasets" / job_id
        return write_dataset(
            directory,
            job_id=job_id,
            schema_id=job.schema_id,
            request=job.request,
            instruments=instruments,
            columns=columns,
            rows=rows,
            created_at=_now_ms(),
        )

    def _tabulate(
        self, job: JobRecord, responses: tuple[MeasurementResponse, ...]
    ) -> tuple[list[DatasetColumn], list[list[float]]]:
        """Shape the response stream into the job's column grid.

        Get/set jobs produce one column per getter and one row per full getter
        cycle. Sweeps add the swept coordinate as the first column, recomputed
        from the request so it is bit-identical to the values the server set.
        """
        request = job.request
        getters = list(request.get("getters", ()))
        if not getters:
            raise DatasetIntegrityError("job request has no getters")
        cycle = len(getters)
        if len(responses) % cycle != 0:
            raise DatasetIntegrityError(
                f"{len(responses)} responses do not fill rows of {cycle} getters"
            )
        for index, response in enumerate(responses):
            expected = getters[index % cycle]
            if response.target != expected:
                raise DatasetIntegrityError(
                    f"response {index} targets {response.target!r}, expected {expected!r}"
                )

        def unit_for(target: str, fallback: str) -> str:
            for response in responses:
                if response.target == target:
                    return response.unit.symbol
            record = self.resolve(target)
            if record is not None:
                parameter = record.parameter(target)
                if parameter is not None:
                    return parameter.unit
            return fallback

        columns = [DatasetColumn(name=g, unit=unit_for(g, "dimensionless")) for g in getters]
        points = len(responses) // cycle
        rows = [
            [responses[row * cycle + col].value for col in range(cycle)]
            for row in range(points)
        ]

        if "sweptTarget" in request:
            swept = request["sweptTarget"]
            grid = sweep_grid(
                request["start"], request["stop"], request["numSteps"]
            )
            if points > len(grid):
                raise DatasetIntegrityError(
                    f"{points} swept points exceed the {len(grid)}-step grid"
                )
            swept_unit = "V"
            record = self.resolve(swept)
            if record is not None:
                parameter = record.parameter(swept)
                if parameter is not None:
                    swept_unit = parameter.unit
            columns = [DatasetColumn(name=swept, unit=swept_unit)] + columns
            rows = [[grid[index]] + row for index, row in enumerate(rows)]
        return columns, rows

    # ------------------------------------------------------------------
    # Snapshot

    def save_state(self) -> None:
        with self._lock:
            self._save_state_locked()

    def _save_state_locked(self) -> None:
        if self.run_dir is None:
            return
        state = {
            "instruments": [
                self._instruments[key].to_jsonable()
                for key in sorted(self._instruments)
            ],
            "jobs": [self._jobs[key].to_jsonable() for key in sorted(self._jobs)],
        }
        self.run_dir.mkdir(parents=True, exist_ok=True)
        path = self.run_dir / "hub-state.json"
        path.write_text(
            json.dumps(state, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )

    def _notify(self, job: JobRecord) -> None:
        listener = self.status_listener
        if listener is not None:
            listener(job)
