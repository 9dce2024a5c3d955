"""Tuning sessions: everything a program run needs, wired from one config.

A session owns a bus connection, a hub client, and a library registry with
the session-bound tuning routines registered. Loopback sessions additionally
host the whole stack in process (broker, hub, instrument server with the
simulated device), so nothing needs to be running beforehand; remote
sessions attach to an existing bus endpoint.
"""

from __future__ import annotations

from typing import Any, Optional

from falcon.bus import LoopbackBroker, TcpClient
from falcon.core import InvariantViolation
from falcon.hub import HubClient, HubService, InstrumentHub
from falcon.runtime.config import RunConfig
from falcon.runtime.tuning import StepperSettings, tuning_registry
from falcon.server import InstrumentServer

_SIM_KEY_MAP = {
    "V_off": "v_off",
    "V_period": "v_period",
    "c": "cross_coupling",
    "w": "peak_width",
    "I0": "baseline",
    "A": "amplitude",
    "noise_sigma": "noise_sigma",
}


def sim_driver_params(section: dict) -> dict:
    """Translate a config ``sim`` section into simulated-driver parameters."""
    params: dict[str, Any] = {}
    for key, value in section.items():
        if key == "initial":
            if not isinstance(value, dict):
                raise InvariantViolation("sim initial setpoints must be an object")
            for gate, volts in value.items():
                if gate == "P1":
                    params["initial_p1"] = volts
                elif gate == "P2":
                    params["initial_p2"] = volts
                else:
                    raise InvariantViolation(
                        f"sim initial setpoint names unknown gate {gate!r}"
                    )
        elif key in _SIM_KEY_MAP:
            params[_SIM_KEY_MAP[key]] = value
        else:
            raise InvariantViolation(f"unknown sim setting {key!r}")
    return params


def instrument_entries(config: RunConfig) -> list[dict]:
    """Instrument definitions for an embedded server.

    An explicit ``instruments`` list wins; otherwise one simulated device is
    derived from the ``sim`` section.
    """
    raw = config.raw.get("instruments")
    if raw is not None:
        if not isinstance(raw, list):
            raise InvariantViolation("instruments must be a list of definitions")
        return [dict(entry) for entry in raw]
    return [
        {
            "id": "simdot",
            "kind": "sim-device",
            "params": sim_driver_params(config.section("sim")),
        }
    ]


class Session:
    """A live tuning session; close() releases whatever it owns."""

    def __init__(
        self,
        config: RunConfig,
        hub_client: HubClient,
        registry,
        owned: tuple = (),
    ) -> None:
        self.config = config
        self.hub_client = hub_client
        self.registry = registry
        self._owned = list(owned)

    def close(self) -> None:
        for part in reversed(self._owned):
            part.close()
        self._owned = []

    def __enter__(self) -> "Session":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def open_loopback(
    config: RunConfig,
    run_dir: Optional[str] = None,
    *,
    timeout_ms: int = 30_000,
) -> Session:
    """Host broker, hub, and instrument server in process and connect."""
    broker = LoopbackBroker()
    owned = [broker]
    try:
        hub = InstrumentHub(run_dir=run_dir)
        hub_service = HubService(hub, broker.connect())
        owned.append(hub_service)
        server = InstrumentServer(broker.connect(), instrument_entries(config))
        owned.append(server)
        hub_client = HubClient(broker.connect(), default_timeout_ms=timeout_ms)
        settings = StepperSettings.from_config(config)
        session = Session(
            config, hub_client, tuning_registry(hub_client, settings), tuple(owned)
        )
        session.hub = hub
        return session
    except BaseException:
        for part in reversed(owned):
            part.close()
        raise


def open_remote(
    config: RunConfig,
    host: str,
    port: int,
    *,
    timeout_ms: int = 30_000,
) -> Session:
    """Attach to an already-running bus endpoint."""
    client = TcpClient(host=host, port=port)
    hub_client = HubClient(client, default_timeout_ms=timeout_ms)
    settings = StepperSettings.from_config(config)
    return Session(
        config, hub_client, tuning_registry(hub_client, settings), (client,)
    )
