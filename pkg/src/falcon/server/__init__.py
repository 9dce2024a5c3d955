"""Instrument execution service with fault-contained driver workers."""

from falcon.server.executor import (
    ExecutionError,
    LogicalClock,
    TargetIndex,
    execute_get_set,
    execute_sweep,
)
from falcon.server.service import DRIVER_KINDS, InstrumentServer
from falcon.server.simdot import (
    DriverError,
    ParameterSpec,
    SimDeviceState,
    SimDoubleDotDriver,
    SimDoubleDotParams,
    sim_current,
    sim_occupancy,
)
from falcon.server.workers import Worker, WorkerDead

__all__ = [
    "DRIVER_KINDS",
    "DriverError",
    "ExecutionError",
    "InstrumentServer",
    "LogicalClock",
    "ParameterSpec",
    "SimDeviceState",
    "SimDoubleDotDriver",
    "SimDoubleDotParams",
    "TargetIndex",
    "Worker",
    "WorkerDead",
    "execute_get_set",
    "execute_sweep",
    "sim_current",
    "sim_occupancy",
]
