"""Runtime engine: interprets checked programs as hierarchical state machines."""

from falcon.runtime.engine import (
    ChildTrace,
    DEFAULT_STEP_BUDGET,
    EngineError,
    Execution,
    Failed,
    Finished,
    LogEntry,
    RUNNING,
    StepBudgetExceeded,
    TransitionRecord,
    instantiate,
    register_program_autotuners,
)
from falcon.runtime.registry import HostRoutine, LibraryRegistry, RegistryError
from falcon.runtime.stdlib import standard_registry
from falcon.runtime.values import (
    ArrayVal,
    BoolVal,
    ErrorVal,
    IntVal,
    NilVal,
    OpaqueVal,
    StructVal,
    TextVal,
    Value,
    values_equal,
)

__all__ = [
    "ArrayVal",
    "BoolVal",
    "ChildTrace",
    "DEFAULT_STEP_BUDGET",
    "EngineError",
    "ErrorVal",
    "Execution",
    "Failed",
    "Finished",
    "HostRoutine",
    "IntVal",
    "LibraryRegistry",
    "LogEntry",
    "NilVal",
    "OpaqueVal",
    "RegistryError",
    "RUNNING",
    "StepBudgetExceeded",
    "StructVal",
    "TextVal",
    "TransitionRecord",
    "Value",
    "instantiate",
    "register_program_autotuners",
    "standard_registry",
    "values_equal",
]
