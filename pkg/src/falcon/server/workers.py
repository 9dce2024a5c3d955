"""Supervised driver workers.

Each instrument's driver runs behind its own dispatch thread: driver init,
every parameter operation, and teardown all execute inside that boundary. An
unexpected driver fault marks the one worker dead; callers get a WorkerDead
error, pending operations are answered rather than abandoned, and nothing else
in the process is disturbed.
"""

from __future__ import annotations

import threading
from queue import SimpleQueue
from typing import Any, Callable, Mapping, Optional

from falcon.server.simdot import DriverError, ParameterSpec

_STOP = object()


class WorkerDead(RuntimeError):
    """The worker's driver has faulted; the worker no longer serves."""


class Worker:
    """One fault-contained driver instance bound to an instrument id."""

    def __init__(
        self,
        instrument_id: str,
        driver: Any,
        config: Optional[Mapping[str, object]] = None,
        *,
        init_timeout: float = 10.0,
    ) -> None:
        self.instrument_id = instrument_id
        self.driver = driver
        self.config = config
        self.parameters: tuple[ParameterSpec, ...] = ()
        self.job_lock = threading.Lock()
        self._queue: SimpleQueue = SimpleQueue()
        self._ready = threading.Event()
        self._dead = False
        self._death_reason: Optional[str] = None
        self._handle: Any = None
        self._thread = threading.Thread(
            target=self._run, name=f"worker-{instrument_id}", daemon=True
        )
        self._thread.start()
        self._init_timeout = init_timeout

    # ------------------------------------------------------------------

    @property
    def alive(self) -> bool:
        return not self._dead

    @property
    def death_reason(self) -> Optional[str]:
        return self._death_reason

    @property
    def boundary_id(self) -> str:
        return self._thread.name

    def wait_ready(self, timeout: Optional[float] = None) -> bool:
        """Block until init concluded; True when the worker came up alive."""
        self._ready.wait(timeout if timeout is not None else self._init_timeout)
        return self._ready.is_set() and self.alive

    def call(self, operation: Callable[[], Any], timeout: float = 10.0) -> Any:
        """Run one driver operation on the worker thread and return its result.

        DriverError passes through as an operational failure that leaves the
        worker alive; any other driver exception kills the worker and raises
        WorkerDead here and for every later call.
        """
        if self._dead:
            raise WorkerDead(self._describe_death())
        slot: list = [None, None]
        done = threading.Event()
        self._queue.put((operation, slot, done))
        if not done.wait(timeout):
            self._die("operation timed out")
            raise WorkerDead(self._describe_death())
        kind, value = slot
        if kind == "ok":
            return value
        raise value

    def set_param(self, name: str, value: float, unit: str) -> None:
        self.call(lambda: self.driver.set_param(self._handle, name, value, unit))

    def get_param(self, name: str) -> tuple[float, str]:
        return self.call(lambda: self.driver.get_param(self._handle, name))

    def kill(self, reason: str = "killed") -> None:
        """Force the worker dead, as if its driver had crashed."""
        self._die(reason)

    def close(self) -> None:
        self._queue.put(_STOP)
        self._thread.join(timeout=2.0)

    # ------------------------------------------------------------------

    def _run(self) -> None:
        try:
            self._handle = self.driver.init(self.config)
            self.parameters = tuple(self.driver.parameters(self._handle))
        except Exception as exc:
            self._die(f"driver init failed: {exc}")
            self._ready.set()
            self._drain()
            return
        self._ready.set()
        self._drain()
        if not self._dead and self._handle is not None:
            try:
                self.driver.teardown(self._handle)
            except Exception:
                pass

    def _drain(self) -> None:
        while True:
            item = self._queue.get()
            if item is _STOP:
                return
            operation, slot, done = item
            if self._dead:
                slot[:] = ["err", WorkerDead(self._describe_death())]
                done.set()
                continue
            try:
                slot[:] = ["ok", operation()]
            except DriverError as exc:
                slot[:] = ["err", exc]
            except Exception as exc:
                self._die(f"driver fault: {exc}")
                slot[:] = ["err", WorkerDead(self._describe_death())]
            done.set()

    def _die(self, reason: str) -> None:
        if not self._dead:
            self._dead = True
            self._death_reason = reason

    def _describe_death(self) -> str:
        return f"worker {self.instrument_id!r} is dead: {self._death_reason}"
