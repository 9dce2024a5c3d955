"""Job execution against live workers.

Both job kinds enforce the same synchronization contract: within one point,
every setter completes before the first getter samples, and sample timestamps
come from a strictly increasing clock.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from falcon.core.grid import sweep_grid
from falcon.core.types import SymbolUnit
from falcon.schemas import GetSetRequest, MeasurementResponse, Sweep1DRequest
from falcon.server.simdot import ParameterSpec
from falcon.server.workers import Worker

Journal = Optional[list]


class ExecutionError(RuntimeError):
    """The job cannot run as requested against the current workers."""


class LogicalClock:
    """Strictly increasing millisecond timestamps anchored at wall time.

    Sample spacing follows the requested schedule without sleeping, which
    keeps simulated acquisition fast while preserving ordering invariants.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._last = time.time_ns() // 1_000_000

    def tick(self, advance_ms: int = 1) -> int:
        with self._lock:
            self._last += max(1, advance_ms)
            return self._last


@dataclass(frozen=True)
class TargetBinding:
    worker: Worker
    spec: ParameterSpec


class TargetIndex:
    """Maps parameter names and instrument ids onto their workers."""

    def __init__(self) -> None:
        self._by_parameter: dict[str, TargetBinding] = {}
        self._by_instrument: dict[str, Worker] = {}

    def add(self, worker: Worker) -> None:
        self._by_instrument[worker.instrument_id] = worker
        for spec in worker.parameters:
            self._by_parameter[spec.name] = TargetBinding(worker=worker, spec=spec)

    def remove(self, worker: Worker) -> None:
        self._by_instrument.pop(worker.instrument_id, None)
        for name, binding in list(self._by_parameter.items()):
            if binding.worker is worker:
                del self._by_parameter[name]

    def binding(self, target: str) -> Optional[TargetBinding]:
        return self._by_parameter.get(target)

    def workers(self) -> tuple[Worker, ...]:
        return tuple(
            self._by_instrument[key] for key in sorted(self._by_instrument)
        )


def _require_binding(index: TargetIndex, target: str) -> TargetBinding:
    binding = index.binding(target)
    if binding is None:
        raise ExecutionError(f"unknown target {target!r}")
    if not binding.worker.alive:
        raise ExecutionError(
            f"worker {binding.worker.instrument_id!r} for target {target!r} is dead"
        )
    return binding


def _require_setter(index: TargetIndex, target: str) -> TargetBinding:
    binding = _require_binding(index, target)
    if not binding.spec.settable:
        raise ExecutionError(f"target {target!r} is not settable")
    if binding.spec.unit != "V":
        raise ExecutionError(
            f"unit mismatch: target {target!r} takes {binding.spec.unit}, "
            "set values are V"
        )
    return binding


def _require_getter(index: TargetIndex, target: str) -> TargetBinding:
    binding = _require_binding(index, target)
    if not binding.spec.gettable:
        raise ExecutionError(f"target {target!r} is not gettable")
    return binding


def _journal(journal: Journal, kind: str, target: str, at: int) -> None:
    if journal is not None:
        journal.append((kind, target, at))


def execute_get_set(
    index: TargetIndex,
    request: GetSetRequest,
    clock: LogicalClock,
    journal: Journal = None,
) -> list[MeasurementResponse]:
    """Apply every setter, then sample and average every getter.

    Responses follow the getters list; each value is the mean of num_points
    samples spaced by the sample-rate period.
    """
    if not request.getters:
        raise ExecutionError("no getters")
    setter_bindings = {
        name: _require_setter(index, name) for name in request.setters
    }
    getter_bindings = [_require_getter(index, name) for name in request.getters]

    for name in request.setters:
        if name in request.set_voltages:
            setter_bindings[name].worker.set_param(
                name, request.set_voltages[name], "V"
            )
            _journal(journal, "set", name, clock.tick())

    period_ms = max(1, round(1000.0 / request.sample_rate))
    responses: list[MeasurementResponse] = []
    for binding in getter_bindings:
        name = binding.spec.name
        total = 0.0
        unit = binding.spec.unit
        at = 0
        for _ in range(request.num_points):
            value, unit = binding.worker.get_param(name)
            at = clock.tick(period_ms)
            _journal(journal, "sample", name, at)
            total += value
        responses.append(
            MeasurementResponse(
                target=name,
                value=total / request.num_points,
                unit=SymbolUnit(unit),
                timestamp_ms=at,
            )
        )
    return responses


def execute_sweep(
    index: TargetIndex,
    request: Sweep1DRequest,
    clock: LogicalClock,
    emit: Callable[[int, Sequence[MeasurementResponse]], None],
    journal: Journal = None,
) -> tuple[int, Optional[str]]:
    """Step the swept target through its grid, recording getters per point.

    Returns (points completed, error). Batches already emitted when a worker
    dies mid-sweep remain valid; the error reports what stopped the sweep.
    """
    if request.start == request.stop:
        raise ExecutionError("sweep start equals stop")
    swept = _require_setter(index, request.swept_target)
    getter_bindings = [_require_getter(index, name) for name in request.getters]
    grid = sweep_grid(request.start, request.stop, request.num_steps)

    for point_index, setpoint in enumerate(grid):
        try:
            swept.worker.set_param(request.swept_target, setpoint, "V")
            _journal(journal, "set", request.swept_target, clock.tick())
            for _ in range(request.settle_points):
                clock.tick()
            responses = []
            for binding in getter_bindings:
                name = binding.spec.name
                value, unit = binding.worker.get_param(name)
                at = clock.tick()
                _journal(journal, "sample", name, at)
                responses.append(
                    MeasurementResponse(
                        target=name,
                        value=value,
                        unit=SymbolUnit(unit),
                        timestamp_ms=at,
                    )
                )
        except Exception as exc:
            return point_index, str(exc)
        emit(point_index, responses)
    return len(grid), None
