"""End-to-end acceptance checks.

Each test here covers one numbered shipping guarantee and prints a single
PASS or FAIL line for it on the real stdout, so a full run yields one
verdict line per guarantee regardless of output capturing. The checks are
deliberately self-contained: they re-derive their fixtures instead of
importing from the unit-test modules, so this file reads as a standalone
statement of what the package promises.
"""

from __future__ import annotations

import contextlib
import json
import random
import struct
import threading
import time

import pytest

from falcon.bus import BusTimeout, LoopbackBroker, TcpBroker, TcpClient, subjects
from falcon.core import from_json_string, to_json_string
from falcon.core.grid import sweep_grid
from falcon.dsl import ast, check, format_program, parse
from falcon.hub import (
    DatasetIntegrityError,
    HubClient,
    HubService,
    InstrumentHub,
    JobStatus,
    load_dataset,
)
from falcon.programs import (
    charge_configuration_tuner_source,
    check_plunger_gates_source,
)
from falcon.runtime import (
    Finished,
    instantiate,
    register_program_autotuners,
    standard_registry,
)
from falcon.runtime.config import RunConfig, default_config
from falcon.runtime.stdlib import config_value
from falcon.runtime.values import (
    NIL_VALUE,
    ArrayVal,
    IntVal,
    StructVal,
    TextVal,
    value_to_jsonable,
)
from falcon.schemas import validate_request
from falcon.server import DriverError, InstrumentServer, ParameterSpec, sim_occupancy
from falcon.session import open_loopback

from programgen import ProgramGen
from valuegen import GENERATORS


def _report(capsys, number: int, synopsis: str, verdict: str) -> None:
    with capsys.disabled():
        print(f"{verdict} {number:>2}: {synopsis}", flush=True)


@contextlib.contextmanager
def guarantee(capsys, number: int, synopsis: str):
    """Print one verdict line for the enclosed block, pass or fail."""
    try:
        yield
    except BaseException:
        _report(capsys, number, synopsis, "FAIL")
        raise
    _report(capsys, number, synopsis, "PASS")


def wait_for(predicate, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(0.005)
    return predicate()


def float_bits(value: float) -> bytes:
    return struct.pack("<d", value)


# ---------------------------------------------------------------------------
# Shared program sources and session plumbing


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


def tuned_config(initial=None) -> RunConfig:
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
    return RunConfig.from_dict(document)


def checked_program(source: str, registry):
    result = parse(source)
    assert result.ok, [f"{d.span} {d.message}" for d in result.diagnostics]
    errors = [d for d in check(result.program, registry.surface()) if d.is_error]
    assert errors == [], [f"{d.span} {d.message}" for d in errors]
    return result.program


def run_in_session(session, source, name, args):
    program = checked_program(source, session.registry)
    execution = instantiate(program, name, args, session.registry)
    return execution, execution.run_to_terminal()


def device_handle(session):
    server = next(
        part for part in session._owned if isinstance(part, InstrumentServer)
    )
    return server.workers["simdot"]._handle


def stepper_directions(execution):
    return [
        child.records[0].args[0]
        for record in execution.trace
        for child in record.children
        if child.autotuner == "BlipStateStepper"
    ]


TRANSITION_LINES = [0.100 + k * 0.050 for k in range(8)]


def distance_to_nearest_line(voltage: float) -> float:
    return min(abs(voltage - line) for line in TRANSITION_LINES)


# ---------------------------------------------------------------------------
# 1. The plunger-gate check program, end to end


def connection_structs(program, names):
    declaration = program.struct("DeviceConnection")
    elements = tuple(
        StructVal(declaration, {"name_": TextVal(name)}) for name in names
    )
    return ArrayVal(elements, ast.StructType("DeviceConnection"))


def test_plunger_gate_check_program_end_to_end(capsys):
    with guarantee(
        capsys,
        1,
        "plunger-gate check program parses, checks clean, and runs both "
        "branches faithfully in under a second",
    ):
        registry = standard_registry()
        result = parse(check_plunger_gates_source())
        assert result.ok and not result.diagnostics
        program = result.program
        assert [d for d in check(program, registry.surface()) if d.is_error] == []

        started = time.monotonic()

        config = config_value(default_config())
        execution = instantiate(
            program,
            "CheckPlungerGates",
            [connection_structs(program, ["P1", "P2"]), config],
            registry,
        )
        outcome = execution.run_to_terminal()
        assert isinstance(outcome, Finished)
        assert outcome.outputs["err"] == NIL_VALUE
        # Each connection's name is printed in order; the final loop pass
        # revisits the last element, so its line appears twice.
        assert execution.output == [
            "DeviceConnection name: P1",
            "DeviceConnection name: P2",
            "DeviceConnection name: P2",
        ]
        assert [(r.from_state, r.to_state) for r in execution.trace] == [
            ("loop", "loop"),
            ("loop", "loop"),
            ("loop", "exit"),
            ("exit", "terminal"),
        ]

        foreign = instantiate(
            program,
            "CheckPlungerGates",
            [connection_structs(program, ["P1", "X9"]), config],
            registry,
        )
        foreign_outcome = foreign.run_to_terminal()
        assert isinstance(foreign_outcome, Finished)
        assert (
            "is missing a plunger gate."
            in foreign_outcome.outputs["err"].message
        )
        assert [(r.from_state, r.to_state) for r in foreign.trace] == [
            ("loop", "loop"),
            ("loop", "missing_plunger_gate"),
            ("missing_plunger_gate", "exit"),
            ("exit", "terminal"),
        ]

        assert time.monotonic() - started < 1.0


# ---------------------------------------------------------------------------
# 2. The charge-configuration tuner reaches its targets


def test_charge_configuration_tuner_reaches_each_target(capsys):
    with guarantee(
        capsys,
        2,
        "charge-configuration tuner reaches (1,1), (2,3), (3,2) with the "
        "expected step order, safe setpoints, and < 10 s per target",
    ):
        for n, m in [(1, 1), (2, 3), (3, 2)]:
            started = time.monotonic()
            with open_loopback(default_config()) as session:
                execution, outcome = run_in_session(
                    session,
                    charge_configuration_tuner_source(),
                    "ChargeConfigurationTuner",
                    [IntVal(n), IntVal(m)],
                )
                assert isinstance(outcome, Finished), outcome
                handle = device_handle(session)
                right_dot, up_dot = sim_occupancy(handle.state(), handle.params)
                assert (up_dot, right_dot) == (n, m)
                assert stepper_directions(execution) == ["up"] * n + ["right"] * m
                for setpoint in handle.setpoints.values():
                    assert (
                        distance_to_nearest_line(setpoint)
                        > 3 * handle.params.peak_width
                    )
            assert time.monotonic() - started < 10.0


# ---------------------------------------------------------------------------
# 3. One stepper call moves exactly one charge state


def test_stepper_moves_exactly_one_charge_state(capsys):
    with guarantee(
        capsys,
        3,
        "one stepper call adds exactly one charge on the swept dot and none "
        "on the other, across 20 distinct starting cells",
    ):
        cells = [(a, b) for a in range(4) for b in range(5)]
        assert len(cells) == 20
        for cell_right, cell_up in cells:
            direction = "up" if (cell_right + cell_up) % 2 == 0 else "right"
            initial = {
                "P1": 0.075 + cell_right * 0.050,
                "P2": 0.075 + cell_up * 0.050,
            }
            with open_loopback(tuned_config(initial=initial)) as session:
                handle = device_handle(session)
                before = sim_occupancy(handle.state(), handle.params)
                assert before == (cell_right, cell_up)
                _, outcome = run_in_session(
                    session, STEP_ONCE, "StepOnce", [TextVal(direction)]
                )
                assert isinstance(outcome, Finished), (cell_right, cell_up)
                after = sim_occupancy(handle.state(), handle.params)
                if direction == "up":
                    assert after == (before[0], before[1] + 1)
                else:
                    assert after == (before[0] + 1, before[1])


# ---------------------------------------------------------------------------
# 4. Serialization round-trips and byte determinism


def test_serialization_round_trips_randomized_values(capsys):
    with guarantee(
        capsys,
        4,
        "1000 randomized values per core type round-trip to equality and "
        "equal values serialize to identical bytes",
    ):
        for tag, generator in sorted(GENERATORS.items()):
            rng_a = random.Random(f"acceptance-{tag}")
            rng_b = random.Random(f"acceptance-{tag}")
            for _ in range(1000):
                value = generator(rng_a)
                twin = generator(rng_b)
                assert twin == value
                text = to_json_string(value)
                assert to_json_string(twin) == text
                restored = from_json_string(text)
                assert restored == value
                assert to_json_string(restored) == text


# ---------------------------------------------------------------------------
# 5. Parser round-trip and defect reporting


DEFECT_CASES = [
    (
        "unknown transition target",
        'autotuner A () -> () {\n'
        "    start -> s;\n"
        "    state s {\n"
        "        -> elsewhere;\n"
        "    }\n"
        "}\n",
        "unknown-state",
        "elsewhere",
        4,
    ),
    (
        "transition arity mismatch",
        "autotuner A () -> () {\n"
        "    start -> s;\n"
        "    state s {\n"
        "        -> t(1, 2);\n"
        "    }\n"
        "    state t (int x) {\n"
        "        terminal;\n"
        "    }\n"
        "}\n",
        "arity",
        "t",
        4,
    ),
    (
        "transition argument type mismatch",
        "autotuner A () -> () {\n"
        "    start -> s;\n"
        "    state s {\n"
        '        -> t("oops");\n'
        "    }\n"
        "    state t (int x) {\n"
        "        terminal;\n"
        "    }\n"
        "}\n",
        "type",
        "int",
        4,
    ),
    (
        "undeclared identifier",
        "autotuner A () -> () {\n"
        "    int x = y + 1;\n"
        "    start -> s;\n"
        "    state s {\n"
        "        terminal;\n"
        "    }\n"
        "}\n",
        "undeclared",
        "'y'",
        2,
    ),
    (
        "no reachable terminal",
        "autotuner A () -> () {\n"
        "    start -> s;\n"
        "    state s {\n"
        "        -> t;\n"
        "    }\n"
        "    state t {\n"
        "        -> s;\n"
        "    }\n"
        "}\n",
        "no-terminal",
        "terminal",
        1,
    ),
    (
        "unknown import",
        'import ("log" "nonsense")\n'
        "\n"
        "autotuner A () -> () {\n"
        "    start -> s;\n"
        "    state s { terminal; }\n"
        "}\n",
        "unknown-import",
        "nonsense",
        1,
    ),
]


def test_parser_format_round_trip_and_defect_spans(capsys):
    with guarantee(
        capsys,
        5,
        "parse-format-parse is identity on both shipped programs and 200 "
        "generated ones; all six defect classes report code and span",
    ):
        for source_fn in (check_plunger_gates_source, charge_configuration_tuner_source):
            first = parse(source_fn())
            assert first.ok and not first.diagnostics
            formatted = format_program(first.program)
            second = parse(formatted)
            assert second.ok and second.program == first.program
            assert format_program(second.program) == formatted

        for seed in range(200):
            program = ProgramGen(seed).program()
            text = format_program(program)
            reparsed = parse(text)
            assert reparsed.ok, seed
            assert reparsed.program == program, seed
            assert format_program(reparsed.program) == text, seed

        for label, source, code, fragment, line in DEFECT_CASES:
            result = parse(source)
            assert result.ok, label
            errors = [d for d in check(result.program) if d.is_error]
            matching = [e for e in errors if e.code == code]
            assert matching, (label, [(e.code, e.message) for e in errors])
            diagnostic = matching[0]
            assert fragment in diagnostic.message, label
            assert diagnostic.span.line == line, (label, diagnostic.span)
            assert diagnostic.span.column >= 1, label


# ---------------------------------------------------------------------------
# 6. Transport conformance on both realizations


def _transport_conformance(make_client):
    # Ordered delivery across 1000 publishes.
    publisher = make_client()
    subscriber = make_client()
    received = []
    subscriber.subscribe(
        "falcon.measure.result",
        lambda envelope: received.append(envelope.payload["seq"]),
    )
    subscriber.flush()
    for seq in range(1000):
        publisher.publish("falcon.measure.result", {"seq": seq})
    assert wait_for(lambda: len(received) == 1000, timeout=15.0)
    assert received == list(range(1000))

    # 100 concurrent correlated request/replies, no cross-delivery.
    requester = make_client()
    responder = make_client()
    responder.serve(
        "falcon.hub.resolve",
        lambda payload: {"nonce": payload["nonce"], "doubled": payload["nonce"] * 2},
    )
    responder.flush()
    results: dict[int, object] = {}
    errors: list[Exception] = []

    def one_request(nonce: int) -> None:
        try:
            results[nonce] = requester.request(
                "falcon.hub.resolve", {"nonce": nonce}, 10000
            )
        except Exception as exc:  # noqa: BLE001 - collected for the assert
            errors.append(exc)

    threads = [
        threading.Thread(target=one_request, args=(nonce,)) for nonce in range(100)
    ]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    assert errors == []
    assert len(results) == 100
    for nonce, reply in results.items():
        assert reply == {"nonce": nonce, "doubled": nonce * 2}

    # Timeout fires within its window plus slack.
    started = time.monotonic()
    with pytest.raises(BusTimeout):
        requester.request("falcon.job.status", {}, 50)
    elapsed = time.monotonic() - started
    assert 0.045 <= elapsed < 1.5

    # Duplicate replies are dropped; the client stays consistent.
    duplicator = make_client()

    def reply_twice(envelope):
        duplicator.publish(
            envelope.reply_to, {"answer": 1}, correlation_id=envelope.correlation_id
        )
        duplicator.publish(
            envelope.reply_to, {"answer": 2}, correlation_id=envelope.correlation_id
        )

    duplicator.subscribe("falcon.device.state", reply_twice)
    duplicator.flush()
    assert requester.request("falcon.device.state", {}, 5000) == {"answer": 1}
    assert requester.request("falcon.device.state", {}, 5000) == {"answer": 1}


def test_transport_conformance_on_both_realizations(capsys):
    with guarantee(
        capsys,
        6,
        "loopback and TCP transports agree on ordering, correlation, "
        "timeouts, and duplicate-reply handling",
    ):
        clients = []
        broker = LoopbackBroker()
        try:

            def connect_loopback():
                client = broker.connect()
                clients.append(client)
                return client

            _transport_conformance(connect_loopback)
        finally:
            for client in clients:
                client.close()
            broker.close()

        clients = []
        tcp_broker = TcpBroker(port=0)
        try:

            def connect_tcp():
                client = TcpClient(port=tcp_broker.port)
                clients.append(client)
                return client

            _transport_conformance(connect_tcp)
        finally:
            for client in clients:
                client.close()
            tcp_broker.close()


# ---------------------------------------------------------------------------
# 7. Dataset round-trip, integrity, and the recomputed grid


def test_dataset_round_trip_and_integrity(tmp_path, capsys):
    with guarantee(
        capsys,
        7,
        "a submitted sweep round-trips bit-exactly through the dataset "
        "store, corruption is detected, and the swept column matches the "
        "recomputed grid",
    ):
        broker = LoopbackBroker()
        hub = InstrumentHub(run_dir=tmp_path)
        hub_service = HubService(hub, broker.connect())
        server = InstrumentServer(
            broker.connect(), [{"id": "simdot", "kind": "sim-device"}]
        )
        try:
            client = HubClient(broker.connect(), default_timeout_ms=30000)
            outcome = client.run_job(
                "Measure_Sweep1D",
                {
                    "sweptTarget": "P2",
                    "start": 0.075,
                    "stop": 0.125,
                    "numSteps": 101,
                    "getters": ["SENSOR"],
                },
            )
            assert outcome.finished, outcome.reason
            assert len(outcome.responses) == 101
            assert wait_for(
                lambda: hub.job(outcome.job_id).status is JobStatus.FINISHED
            )
            manifest = hub.finalize_dataset(outcome.job_id)
            assert manifest.row_count == 101

            dataset_dir = tmp_path / "datasets" / outcome.job_id
            loaded_manifest, rows = load_dataset(dataset_dir)
            assert loaded_manifest == manifest
            again_manifest, again_rows = load_dataset(dataset_dir)
            assert again_manifest == loaded_manifest and again_rows == rows

            names = [column.name for column in loaded_manifest.columns]
            swept_index = names.index("P2")
            sensor_index = names.index("SENSOR")
            streamed = [response.value for response in outcome.responses]
            stored = [row[sensor_index] for row in rows]
            assert [float_bits(v) for v in stored] == [
                float_bits(v) for v in streamed
            ]
            grid = list(sweep_grid(0.075, 0.125, 101))
            assert [row[swept_index] for row in rows] == grid

            blob_path = dataset_dir / "data.bin"
            blob = bytearray(blob_path.read_bytes())
            blob[len(blob) // 2] ^= 0x01
            blob_path.write_bytes(bytes(blob))
            with pytest.raises(DatasetIntegrityError):
                load_dataset(dataset_dir)
        finally:
            server.close()
            hub_service.close()
            broker.close()


# ---------------------------------------------------------------------------
# 8. Fault containment


class FragileGetDriver:
    """Serves a limited number of sensor reads, then crashes."""

    kind = "fragile"

    def init(self, config):
        budget = int((config or {}).get("budget", 1))
        return {"budget": budget, "knob": 0.0}

    def parameters(self, handle):
        return (
            ParameterSpec("KNOB", "V", settable=True, gettable=True),
            ParameterSpec("READOUT", "nA", settable=False, gettable=True),
        )

    def set_param(self, handle, name, value, unit):
        if name != "KNOB":
            raise DriverError(f"parameter {name!r} is not settable")
        handle["knob"] = float(value)

    def get_param(self, handle, name):
        if name == "KNOB":
            return handle["knob"], "V"
        if handle["budget"] <= 0:
            raise RuntimeError("hardware gone")
        handle["budget"] -= 1
        return 0.5, "nA"

    def teardown(self, handle):
        return None


def test_fault_containment_keeps_siblings_responsive(tmp_path, capsys):
    with guarantee(
        capsys,
        8,
        "a faulting driver fails its job with the reason while the server "
        "and the sibling simulated device answer a probe in < 100 ms",
    ):
        broker = LoopbackBroker()
        hub = InstrumentHub(run_dir=tmp_path)
        hub_service = HubService(hub, broker.connect())
        server = InstrumentServer(
            broker.connect(),
            [
                {"id": "frag", "kind": "fragile", "params": {"budget": 3}},
                {"id": "simdot", "kind": "sim-device"},
            ],
            driver_kinds={"fragile": FragileGetDriver},
        )
        try:
            client = HubClient(broker.connect(), default_timeout_ms=30000)
            outcome = client.run_job(
                "Measure_Sweep1D",
                {
                    "sweptTarget": "KNOB",
                    "start": 0.0,
                    "stop": 1.0,
                    "numSteps": 10,
                    "getters": ["READOUT"],
                },
            )
            assert outcome.status is JobStatus.FAILED
            assert outcome.reason is not None
            assert "hardware gone" in outcome.reason
            assert wait_for(
                lambda: hub.job(outcome.job_id).status is JobStatus.FAILED
            )
            assert "hardware gone" in hub.job(outcome.job_id).reason

            started = time.monotonic()
            states = client.collect_device_state()
            probe_elapsed = time.monotonic() - started
            assert probe_elapsed < 0.100
            names = {state.connection.name for state in states.states}
            assert {"P1", "P2"} <= names

            sibling = client.run_job(
                "Measure_Get_Set",
                {
                    "setVoltages": {"P1": 0.080},
                    "sampleRate": 1000.0,
                    "numPoints": 1,
                    "getters": ["SENSOR"],
                    "setters": ["P1"],
                },
            )
            assert sibling.finished, sibling.reason
            assert server.workers["simdot"].alive
        finally:
            server.close()
            hub_service.close()
            broker.close()


# ---------------------------------------------------------------------------
# 9. Nested composition equals standalone runs


PARTS_PROGRAM = """
import ("stateStepper" "hub" "deviceStates")

autotuner StepUp () -> () {
    start -> go;
    state go {
        stateStepper::BlipStateStepper("up");
        terminal;
    }
}

autotuner StepRight () -> () {
    start -> go;
    state go {
        stateStepper::BlipStateStepper("right");
        terminal;
    }
}

autotuner Snapshot () -> (deviceStates::DeviceStates s) {
    start -> go;
    state go {
        s = hub::CollectCurrentDeviceState();
        terminal;
    }
}
"""

MASTER_PROGRAM = """
import ("parts" "deviceStates")

autotuner Master () -> (deviceStates::DeviceStates s) {
    start -> work;
    state work {
        parts::StepUp();
        parts::StepRight();
        s = parts::Snapshot();
        terminal;
    }
}
"""


def rendered_outputs(outcome) -> str:
    document = {
        name: value_to_jsonable(value) for name, value in outcome.outputs.items()
    }
    return json.dumps(document, sort_keys=True)


def test_nested_composition_equals_standalone_runs(capsys):
    with guarantee(
        capsys,
        9,
        "a parent sequencing three children produces bit-equal outputs and "
        "final device setpoints to running the children standalone",
    ):
        with open_loopback(tuned_config()) as nested_session:
            parts = checked_program(PARTS_PROGRAM, nested_session.registry)
            register_program_autotuners(nested_session.registry, parts, "parts")
            master = checked_program(MASTER_PROGRAM, nested_session.registry)
            execution = instantiate(master, "Master", [], nested_session.registry)
            nested_outcome = execution.run_to_terminal()
            assert isinstance(nested_outcome, Finished)
            children = [
                child for record in execution.trace for child in record.children
            ]
            assert [child.autotuner for child in children] == [
                "StepUp",
                "StepRight",
                "Snapshot",
            ]
            nested_setpoints = dict(device_handle(nested_session).setpoints)

        with open_loopback(tuned_config()) as standalone_session:
            parts = checked_program(PARTS_PROGRAM, standalone_session.registry)
            standalone_outcomes = []
            for name in ("StepUp", "StepRight", "Snapshot"):
                child_execution = instantiate(
                    parts, name, [], standalone_session.registry
                )
                outcome = child_execution.run_to_terminal()
                assert isinstance(outcome, Finished), name
                standalone_outcomes.append(outcome)
            standalone_setpoints = dict(device_handle(standalone_session).setpoints)

        assert rendered_outputs(nested_outcome) == rendered_outputs(
            standalone_outcomes[-1]
        )
        for name, nested_child in zip(("StepUp", "StepRight"), children):
            assert nested_child.outputs == {}
            assert standalone_outcomes[("StepUp", "StepRight").index(name)].outputs == {}
        assert set(nested_setpoints) == set(standalone_setpoints)
        for gate in nested_setpoints:
            assert float_bits(nested_setpoints[gate]) == float_bits(
                standalone_setpoints[gate]
            ), gate


# ---------------------------------------------------------------------------
# 10. Request validation and its diagnostics


VALID_GET_SET = {
    "setVoltages": {"P1": 0.1},
    "sampleRate": 1000,
    "numPoints": 100,
    "getters": ["SENSOR"],
    "setters": ["P1"],
}

MUTATIONS = [
    (
        "missing required property",
        lambda doc: {k: v for k, v in doc.items() if k != "getters"},
        "required property getters missing",
    ),
    (
        "wrong property type",
        lambda doc: dict(doc, sampleRate="fast"),
        "property sampleRate must be a number",
    ),
    (
        "fractional integer property",
        lambda doc: dict(doc, numPoints=12.5),
        "property numPoints must be an integer",
    ),
    (
        "cross-field violation",
        lambda doc: dict(doc, setVoltages={"P1": 0.1, "P2": 0.2}),
        "setVoltages key P2 is not in setters",
    ),
    (
        "empty getters",
        lambda doc: dict(doc, getters=[]),
        "getters must not be empty",
    ),
    (
        "nonpositive sample rate",
        lambda doc: dict(doc, sampleRate=0),
        "sampleRate must be positive",
    ),
]


def test_request_validation_accepts_and_diagnoses(capsys):
    with guarantee(
        capsys,
        10,
        "the reference measurement request validates and every seeded "
        "single-field mutation yields exactly its expected diagnostic",
    ):
        result = validate_request("Measure_Get_Set", VALID_GET_SET)
        assert result.ok and result.request is not None

        for label, mutate, expected in MUTATIONS:
            mutated = mutate(dict(VALID_GET_SET))
            outcome = validate_request("Measure_Get_Set", mutated)
            assert not outcome.ok, label
            assert [issue.message for issue in outcome.diagnostics] == [
                expected
            ], label
