"""Tuning-library tests: stepper settings, the blip stepper's one-charge
guarantee on the simulated device, hub snapshots, and session assembly."""

import pytest

from falcon.bus import TcpBroker, TcpClient
from falcon.core import DeviceStates, InvariantViolation
from falcon.dsl import check, parse
from falcon.hub import HubService, InstrumentHub, JobStatus
from falcon.programs import charge_configuration_tuner_source
from falcon.runtime import Failed, Finished, instantiate
from falcon.runtime.config import RunConfig, default_config
from falcon.runtime.tuning import StepperSettings
from falcon.runtime.values import IntVal, TextVal, value_to_jsonable
from falcon.server import InstrumentServer, sim_occupancy
from falcon.session import (
    instrument_entries,
    open_loopback,
    open_remote,
    sim_driver_params,
)

STEP_ONCE = """
import ("stateStepper")
autotuner StepOnce (string direction) -> () {
    start -> only (direction);
    state only (string d) {
        stateStepper::BlipStateStepper(d);
        terminal;
    }
}
"""

SNAPSHOT = """
import ("hub" "deviceStates")
autotuner Snapshot () -> (deviceStates::DeviceStates s) {
    start -> only;
    state only {
        s = hub::CollectCurrentDeviceState();
        terminal;
    }
}
"""


def config_with(*, initial=None, stepper_extra=None, sim_extra=None) -> RunConfig:
    document = {
        "device_connections": [
            {"name": "P1", "feature": "PlungerGate"},
            {"name": "P2", "feature": "PlungerGate"},
        ],
        "plunger_gates": ["P1", "P2"],
        "sim": {"noise_sigma": 0.0},
        "stepper": {},
    }
    if initial:
        document["sim"]["initial"] = dict(initial)
    if sim_extra:
        document["sim"].update(sim_extra)
    if stepper_extra:
        document["stepper"].update(stepper_extra)
    return RunConfig.from_dict(document)


def checked_program(source, registry):
    result = parse(source)
    assert not result.diagnostics, result.diagnostics
    diagnostics = check(result.program, registry.surface())
    assert not diagnostics, diagnostics
    return result.program


def run_autotuner(session, source, name, args):
    program = checked_program(source, session.registry)
    execution = instantiate(program, name, args, session.registry)
    return execution, execution.run_to_terminal()


def sim_handle(session):
    server = next(part for part in session._owned if isinstance(part, InstrumentServer))
    return server.workers["simdot"]._handle


# ---------------------------------------------------------------------------
# Settings


def test_settings_default_to_the_simulated_device():
    settings = StepperSettings.from_config(default_config())
    assert settings.directions == {"up": "P2", "right": "P1"}
    assert settings.step == 0.0005
    assert settings.threshold == 0.6
    assert settings.period == 0.05
    assert settings.sensor == "SENSOR"


def test_settings_halfway_threshold_follows_the_sim_section():
    config = config_with(sim_extra={"I0": 0.2, "A": 0.4})
    settings = StepperSettings.from_config(config)
    assert settings.threshold == pytest.approx(0.4)


def test_settings_explicit_values_win():
    config = config_with(stepper_extra={"threshold": 0.9, "period": 0.02, "step": 0.001})
    settings = StepperSettings.from_config(config)
    assert (settings.threshold, settings.period, settings.step) == (0.9, 0.02, 0.001)


def test_settings_reject_sweeping_a_non_plunger_gate():
    config = config_with(stepper_extra={"directions": {"up": "B1"}})
    with pytest.raises(InvariantViolation, match="not a configured plunger gate"):
        StepperSettings.from_config(config)


def test_settings_reject_nonsense():
    with pytest.raises(InvariantViolation):
        StepperSettings(step=0.0)
    with pytest.raises(InvariantViolation):
        StepperSettings(directions={})
    with pytest.raises(InvariantViolation):
        StepperSettings(num_points=0)


# ---------------------------------------------------------------------------
# Config-to-instrument derivation


def test_sim_driver_params_translate_section_names():
    section = {
        "V_off": 0.1,
        "V_period": 0.05,
        "c": 0.1,
        "w": 0.002,
        "I0": 0.1,
        "A": 1.0,
        "noise_sigma": 0.0,
        "initial": {"P1": 0.08, "P2": 0.09},
    }
    assert sim_driver_params(section) == {
        "v_off": 0.1,
        "v_period": 0.05,
        "cross_coupling": 0.1,
        "peak_width": 0.002,
        "baseline": 0.1,
        "amplitude": 1.0,
        "noise_sigma": 0.0,
        "initial_p1": 0.08,
        "initial_p2": 0.09,
    }


def test_sim_driver_params_reject_unknown_names():
    with pytest.raises(InvariantViolation, match="unknown sim setting"):
        sim_driver_params({"V_offset": 0.1})
    with pytest.raises(InvariantViolation, match="unknown gate"):
        sim_driver_params({"initial": {"P9": 0.1}})


def test_instrument_entries_prefer_an_explicit_list():
    config = RunConfig.from_dict(
        {
            "device_connections": [],
            "plunger_gates": [],
            "instruments": [{"id": "rig", "kind": "sim-device"}],
        }
    )
    assert instrument_entries(config) == [{"id": "rig", "kind": "sim-device"}]
    derived = instrument_entries(config_with(initial={"P2": 0.125}))
    assert derived[0]["id"] == "simdot"
    assert derived[0]["params"]["initial_p2"] == 0.125


# ---------------------------------------------------------------------------
# The stepper's one-charge-state guarantee


def test_step_up_from_the_origin_adds_one_charge():
    with open_loopback(config_with()) as session:
        _, outcome = run_autotuner(session, STEP_ONCE, "StepOnce", [TextVal("up")])
        assert isinstance(outcome, Finished)
        handle = sim_handle(session)
        assert sim_occupancy(handle.state(), handle.params) == (0, 1)
        assert handle.setpoints["P2"] == pytest.approx(0.125, abs=1e-9)
        assert handle.setpoints["P1"] == 0.075


@pytest.mark.parametrize(
    "cell_p1,cell_p2,direction",
    [
        (a, b, "up" if (a + b) % 2 == 0 else "right")
        for a in range(4)
        for b in range(5)
    ],
)
def test_one_call_steps_exactly_one_charge_state(cell_p1, cell_p2, direction):
    initial = {"P1": 0.075 + cell_p1 * 0.05, "P2": 0.075 + cell_p2 * 0.05}
    with open_loopback(config_with(initial=initial)) as session:
        handle = sim_handle(session)
        before = sim_occupancy(handle.state(), handle.params)
        assert before == (cell_p1, cell_p2)
        _, outcome = run_autotuner(
            session, STEP_ONCE, "StepOnce", [TextVal(direction)]
        )
        assert isinstance(outcome, Finished)
        after = sim_occupancy(handle.state(), handle.params)
        if direction == "up":
            assert after == (before[0], before[1] + 1)
        else:
            assert after == (before[0] + 1, before[1])


def test_stepper_emits_a_nested_child_trace():
    with open_loopback(config_with()) as session:
        execution, outcome = run_autotuner(
            session, STEP_ONCE, "StepOnce", [TextVal("up")]
        )
        assert isinstance(outcome, Finished)
        children = [
            child for record in execution.trace for child in record.children
        ]
        assert [child.autotuner for child in children] == ["BlipStateStepper"]
        records = children[0].records
        assert [(r.from_state, r.to_state) for r in records] == [
            ("start", "sweep"),
            ("sweep", "place"),
            ("place", "exit"),
        ]
        assert records[0].args == ("up", "P2")
        blip_center, target = records[1].args[0], records[2].args[0]
        assert abs(blip_center - 0.100) <= 0.0005
        assert target == blip_center + 0.025


def test_invalid_direction_fails_immediately():
    with open_loopback(config_with()) as session:
        _, outcome = run_autotuner(session, STEP_ONCE, "StepOnce", [TextVal("left")])
        assert isinstance(outcome, Failed)
        assert "invalid direction 'left'" in outcome.message
        assert session.hub.jobs() == ()
        handle = sim_handle(session)
        assert handle.setpoints == {"P1": 0.075, "P2": 0.075}


def test_unreachable_threshold_faults_at_the_ceiling():
    config = config_with(stepper_extra={"threshold": 5.0})
    with open_loopback(config) as session:
        _, outcome = run_autotuner(session, STEP_ONCE, "StepOnce", [TextVal("up")])
        assert isinstance(outcome, Failed)
        assert "no blip detected on gate 'P2'" in outcome.message


def test_stepper_runs_are_deterministic():
    finals = []
    for _ in range(2):
        with open_loopback(config_with()) as session:
            execution, outcome = run_autotuner(
                session,
                charge_configuration_tuner_source(),
                "ChargeConfigurationTuner",
                [IntVal(1), IntVal(1)],
            )
            assert isinstance(outcome, Finished)
            handle = sim_handle(session)
            finals.append(
                (
                    dict(handle.setpoints),
                    value_to_jsonable(outcome.outputs["dstates"]),
                )
            )
    assert finals[0] == finals[1]


# ---------------------------------------------------------------------------
# Hub snapshots from programs


def test_snapshot_returns_live_device_states():
    with open_loopback(config_with(initial={"P2": 0.125})) as session:
        _, outcome = run_autotuner(session, SNAPSHOT, "Snapshot", [])
        assert isinstance(outcome, Finished)
        states = outcome.outputs["s"].payload
        assert isinstance(states, DeviceStates)
        assert states.lookup("P2").quantity.value == 0.125
        assert states.lookup("P1").quantity.value == 0.075
        rendered = value_to_jsonable(outcome.outputs["s"])
        assert rendered["handle"] == "deviceStates::DeviceStates"
        assert rendered["value"]["type"] == "DeviceStates"


def test_snapshot_timeout_fails_the_execution():
    from falcon.bus import LoopbackBroker
    from falcon.hub import HubClient
    from falcon.runtime.tuning import tuning_registry

    broker = LoopbackBroker()
    try:
        hub_client = HubClient(broker.connect(), default_timeout_ms=60)
        registry = tuning_registry(hub_client, StepperSettings())
        program = checked_program(SNAPSHOT, registry)
        execution = instantiate(program, "Snapshot", [], registry)
        outcome = execution.run_to_terminal()
        assert isinstance(outcome, Failed)
        assert "device state request failed" in outcome.message
    finally:
        broker.close()


# ---------------------------------------------------------------------------
# The full charge-configuration tune


@pytest.mark.parametrize("n,m", [(1, 1), (2, 3), (3, 2)])
def test_charge_configuration_targets_are_reached(n, m):
    with open_loopback(config_with()) as session:
        execution, outcome = run_autotuner(
            session,
            charge_configuration_tuner_source(),
            "ChargeConfigurationTuner",
            [IntVal(n), IntVal(m)],
        )
        assert isinstance(outcome, Finished)
        handle = sim_handle(session)
        assert sim_occupancy(handle.state(), handle.params) == (m, n)
        directions = [
            child.records[0].args[0]
            for record in execution.trace
            for child in record.children
            if child.autotuner == "BlipStateStepper"
        ]
        assert directions == ["up"] * n + ["right"] * m
        for gate, setpoint in handle.setpoints.items():
            distance = min(
                abs(setpoint - line)
                for k in range(6)
                for line in [0.100 + k * 0.050]
            )
            assert distance > 3 * handle.params.peak_width


def test_remote_session_reaches_a_tcp_stack():
    broker = TcpBroker(port=0)
    hub = InstrumentHub()
    config = config_with(initial={"P2": 0.125})
    hub_conn = TcpClient(host="127.0.0.1", port=broker.port)
    server_conn = TcpClient(host="127.0.0.1", port=broker.port)
    hub_service = HubService(hub, hub_conn)
    server = InstrumentServer(server_conn, instrument_entries(config))
    try:
        with open_remote(config, "127.0.0.1", broker.port) as session:
            _, outcome = run_autotuner(session, SNAPSHOT, "Snapshot", [])
            assert isinstance(outcome, Finished)
            states = outcome.outputs["s"].payload
            assert states.lookup("P2").quantity.value == 0.125
    finally:
        server.close()
        hub_service.close()
        hub_conn.close()
        server_conn.close()
        broker.close()
