"""Lab-side execution service.

Starts one supervised worker per configured instrument, registers the live
ones with the hub, executes validated measurement jobs with per-instrument
serialization, and streams results plus a done marker back over the bus.
"""

from __future__ import annotations

import contextlib
import logging
import threading
from typing import Any, Mapping, Optional, Sequence

from falcon.bus import BusClientBase, BusError, Envelope, subjects
from falcon.core.types import (
    Connection,
    DeviceFeature,
    DeviceState,
    DeviceStates,
    InvariantViolation,
    Quantity,
    SymbolUnit,
)
from falcon.hub import device_states_payload, wire
from falcon.hub.client import HubClient
from falcon.schemas import GetSetRequest, validate_request
from falcon.server.executor import (
    ExecutionError,
    LogicalClock,
    TargetIndex,
    execute_get_set,
    execute_sweep,
)
from falcon.server.simdot import DriverError, SimDoubleDotDriver
from falcon.server.workers import Worker, WorkerDead

logger = logging.getLogger("falcon.server")

DRIVER_KINDS: dict[str, type] = {SimDoubleDotDriver.kind: SimDoubleDotDriver}


class _UnknownKindDriver:
    """Stand-in driver whose init always fails, for unregistered kinds."""

    def __init__(self, kind: str) -> None:
        self.kind = kind

    def init(self, config: object) -> object:
        raise DriverError(f"unknown driver kind {self.kind!r}")

    def parameters(self, handle: object) -> tuple:
        return ()

    def set_param(self, handle: object, name: str, value: float, unit: str) -> None:
        raise DriverError(f"unknown driver kind {self.kind!r}")

    def get_param(self, handle: object, name: str) -> tuple[float, str]:
        raise DriverError(f"unknown driver kind {self.kind!r}")

    def teardown(self, handle: object) -> None:
        return None


class InstrumentServer:
    """Hosts fault-contained instrument workers behind the bus."""

    def __init__(
        self,
        client: BusClientBase,
        instruments: Sequence[Mapping[str, Any]],
        *,
        driver_kinds: Optional[Mapping[str, type]] = None,
        register_with_hub: bool = True,
    ) -> None:
        self.client = client
        self.clock = LogicalClock()
        self.index = TargetIndex()
        self.workers: dict[str, Worker] = {}
        self.registration_errors: list[str] = []
        self._jobs: list[threading.Thread] = []
        self._jobs_lock = threading.Lock()
        self._kinds = dict(DRIVER_KINDS)
        if driver_kinds:
            self._kinds.update(driver_kinds)
        self._register_with_hub = register_with_hub
        for entry in instruments:
            self.start_worker(entry)
        self._subscriptions = [
            client.subscribe(subjects.MEASURE_REQUEST, self._on_measure),
            client.serve(subjects.DEVICE_STATE, self._on_device_state),
        ]
        client.flush()

    def close(self) -> None:
        for subscription in self._subscriptions:
            subscription.cancel()
        with self._jobs_lock:
            pending = list(self._jobs)
            self._jobs = []
        for thread in pending:
            thread.join(timeout=10.0)
        for worker in self.workers.values():
            worker.close()

    # ------------------------------------------------------------------
    # Workers

    def start_worker(self, entry: Mapping[str, Any]) -> Worker:
        """Bring up one instrument worker and register it when it comes alive.

        An init failure leaves the worker dead and the server running; the
        failure is reported as an advisory status event.
        """
        instrument_id = entry.get("id")
        kind = entry.get("kind")
        if not isinstance(instrument_id, str) or not instrument_id:
            raise InvariantViolation("instrument entry needs a string 'id'")
        if not isinstance(kind, str) or not kind:
            raise InvariantViolation("instrument entry needs a string 'kind'")
        params = entry.get("params")
        driver_type = self._kinds.get(kind)
        driver = driver_type() if driver_type is not None else _UnknownKindDriver(kind)
        worker = Worker(instrument_id, driver, params)
        self.workers[instrument_id] = worker
        if worker.wait_ready():
            self.index.add(worker)
            if self._register_with_hub:
                self._register(worker, entry.get("name"))
        else:
            self.client.publish(
                subjects.JOB_STATUS,
                {
                    "worker": instrument_id,
                    "status": "Failed",
                    "reason": worker.death_reason,
                },
            )
        return worker

    def _register(self, worker: Worker, name: Optional[str]) -> None:
        record = {
            "id": worker.instrument_id,
            "name": name if isinstance(name, str) and name else worker.instrument_id,
            "kind": getattr(worker.driver, "kind", "unknown"),
            "parameters": [spec.to_registration() for spec in worker.parameters],
        }
        try:
            diagnostics = HubClient(self.client).register_instrument(record)
        except BusError as exc:
            diagnostics = (str(exc),)
        if diagnostics:
            message = f"registering {worker.instrument_id!r} failed: " + "; ".join(
                diagnostics
            )
            self.registration_errors.append(message)
            logger.warning(message)

    # ------------------------------------------------------------------
    # Job execution

    def _on_measure(self, envelope: Envelope) -> None:
        payload = envelope.payload
        if not isinstance(payload, Mapping):
            return
        job_id = payload.get("job_id")
        schema_id = payload.get("schema_id")
        if not isinstance(job_id, str) or not isinstance(schema_id, str):
            return
        thread = threading.Thread(
            target=self._run_job,
            args=(job_id, schema_id, payload.get("request")),
            name=f"job-{job_id[:8]}",
            daemon=True,
        )
        with self._jobs_lock:
            self._jobs = [t for t in self._jobs if t.is_alive()]
            self._jobs.append(thread)
        thread.start()

    def _run_job(self, job_id: str, schema_id: str, request_doc: object) -> None:
        try:
            self.client.publish(
                subjects.JOB_STATUS, wire.job_status_payload(job_id, "Running")
            )
            try:
                self._execute_job(job_id, schema_id, request_doc)
            except Exception as exc:
                self._emit_done(job_id, error=str(exc))
        except BusError:
            # The bus went away under the job, typically during shutdown.
            # There is nowhere left to report to, so the job ends quietly.
            return

    def _execute_job(self, job_id: str, schema_id: str, request_doc: object) -> None:
        result = validate_request(schema_id, request_doc)
        if not result.ok:
            self._emit_done(
                job_id,
                error="invalid request: "
                + "; ".join(str(issue) for issue in result.diagnostics),
            )
            return
        request = result.request
        with contextlib.ExitStack() as stack:
            for worker in self._touched_workers(request):
                stack.enter_context(worker.job_lock)
            if isinstance(request, GetSetRequest):
                try:
                    responses = execute_get_set(self.index, request, self.clock)
                except (ExecutionError, WorkerDead) as exc:
                    self._emit_done(job_id, error=str(exc))
                    return
                self.client.publish(
                    subjects.MEASURE_RESULT,
                    wire.result_batch_payload(job_id, 0, responses),
                )
                self._emit_done(job_id)
                return
            try:
                completed, error = execute_sweep(
                    self.index,
                    request,
                    self.clock,
                    emit=lambda index, responses: self.client.publish(
                        subjects.MEASURE_RESULT,
                        wire.result_batch_payload(job_id, index, responses),
                    ),
                )
            except (ExecutionError, WorkerDead) as exc:
                self._emit_done(job_id, error=str(exc))
                return
            if error is not None:
                self._emit_done(
                    job_id,
                    error=error,
                    last_completed_index=completed - 1 if completed > 0 else None,
                )
            else:
                self._emit_done(job_id)

    def _touched_workers(self, request: object) -> tuple[Worker, ...]:
        if isinstance(request, GetSetRequest):
            names = list(request.setters) + list(request.getters)
        else:
            names = [request.swept_target, *request.getters]
        workers: dict[str, Worker] = {}
        for name in names:
            binding = self.index.binding(name)
            if binding is not None:
                workers[binding.worker.instrument_id] = binding.worker
        return tuple(workers[key] for key in sorted(workers))

    def _emit_done(
        self,
        job_id: str,
        *,
        error: Optional[str] = None,
        last_completed_index: Optional[int] = None,
    ) -> None:
        self.client.publish(
            subjects.MEASURE_RESULT,
            wire.stream_done_payload(
                job_id, error=error, last_completed_index=last_completed_index
            ),
        )
        status = "Finished" if error is None else "Failed"
        self.client.publish(
            subjects.JOB_STATUS,
            wire.job_status_payload(job_id, status, reason=error),
        )

    # ------------------------------------------------------------------
    # Device state

    def _on_device_state(self, payload: object) -> dict[str, Any]:
        states: list[DeviceState] = []
        for worker in self.index.workers():
            if not worker.alive:
                continue
            for spec in worker.parameters:
                if not spec.settable or spec.feature is None:
                    continue
                value, unit = worker.get_param(spec.name)
                states.append(
                    DeviceState(
                        connection=Connection(
                            spec.name, DeviceFeature.parse(spec.feature)
                        ),
                        quantity=Quantity(value, SymbolUnit(unit)),
                    )
                )
        return device_states_payload(DeviceStates(states))
