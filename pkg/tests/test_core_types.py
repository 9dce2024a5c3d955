import math

import pytest

from falcon.core import (
    Connection,
    DeviceFeature,
    DeviceState,
    DeviceStates,
    InvariantViolation,
    Quantity,
    SymbolUnit,
)


def test_feature_set_is_closed():
    assert {f.value for f in DeviceFeature} == {
        "BarrierGate",
        "PlungerGate",
        "ScreeningGate",
        "ReservoirGate",
        "SensorGate",
        "Ohmic",
    }
    with pytest.raises(InvariantViolation):
        DeviceFeature.parse("LaserGate")


def test_feature_constructors_and_predicates():
    barrier = Connection.barrier_gate("B1")
    assert barrier.feature is DeviceFeature.BARRIER_GATE
    assert barrier.is_barrier_gate and not barrier.is_ohmic
    ohmic = Connection.ohmic("O1")
    assert ohmic.is_ohmic and not ohmic.feature.is_gate
    assert Connection.sensor_gate("S").feature.is_gate


def test_connection_requires_nonempty_name():
    with pytest.raises(InvariantViolation):
        Connection("", DeviceFeature.OHMIC)


def test_unit_whitelist():
    for symbol in ("V", "mV", "A", "nA", "Hz", "s", "dimensionless"):
        assert SymbolUnit(symbol).symbol == symbol
    with pytest.raises(InvariantViolation):
        SymbolUnit("furlong")
    with pytest.raises(InvariantViolation):
        SymbolUnit("v")


def test_quantity_rejects_non_finite():
    unit = SymbolUnit("V")
    for bad in (math.nan, math.inf, -math.inf):
        with pytest.raises(InvariantViolation):
            Quantity(bad, unit)


def test_quantity_equality_is_bitwise():
    volt = SymbolUnit("V")
    assert Quantity(0.25, volt) == Quantity(0.25, volt)
    assert Quantity(0.25, volt) != Quantity(0.25, SymbolUnit("mV"))
    # 0.0 and -0.0 compare equal as floats but differ bitwise.
    assert Quantity(0.0, volt) != Quantity(-0.0, volt)
    assert hash(Quantity(1.5, volt)) == hash(Quantity(1.5, volt))


def test_device_state_unit_discipline():
    plunger = Connection.plunger_gate("P1")
    DeviceState(plunger, Quantity(0.075, SymbolUnit("V")))
    DeviceState(plunger, Quantity(75.0, SymbolUnit("mV")))
    with pytest.raises(InvariantViolation):
        DeviceState(plunger, Quantity(1.0, SymbolUnit("nA")))
    # Non-gate connections may carry any whitelisted unit.
    DeviceState(Connection.ohmic("O1"), Quantity(2.0, SymbolUnit("nA")))


def test_device_states_order_and_uniqueness():
    volt = SymbolUnit("V")
    first = DeviceState(Connection.plunger_gate("P1"), Quantity(0.1, volt))
    second = DeviceState(Connection.plunger_gate("P2"), Quantity(0.2, volt))
    states = DeviceStates([first, second])
    assert [s.connection.name for s in states] == ["P1", "P2"]
    assert states.lookup("P2") == second
    assert states.lookup("P9") is None
    with pytest.raises(InvariantViolation):
        DeviceStates([first, first])


def test_device_states_preserves_insertion_order():
    volt = SymbolUnit("V")
    names = ["Z", "A", "M"]
    states = DeviceStates(
        [DeviceState(Connection.plunger_gate(n), Quantity(0.0, volt)) for n in names]
    )
    assert [s.connection.name for s in states] == names
