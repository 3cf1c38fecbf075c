import numpy as np
import pytest

from hqml.qsim import (ArityError, Circuit, GateOp, GateParamError, QuantumState,
                       SizeError, Slot, WireError, apply_gate, expectation_z,
                       kernels, new_zero_state, oracle, run_circuit)
from hqml.qsim import _gatekernels_py
from hqml.simcheck import random_circuit


def test_zero_state_one_wire():
    s = new_zero_state(1)
    assert np.array_equal(s.amplitudes, [1, 0])


def test_zero_state_two_wires():
    s = new_zero_state(2)
    assert np.array_equal(s.amplitudes, [1, 0, 0, 0])


@pytest.mark.parametrize("n", [0, -1, 25])
def test_zero_state_bad_size(n):
    with pytest.raises(SizeError):
        new_zero_state(n)


def test_x_flips_zero():
    s = apply_gate(new_zero_state(1), GateOp("X", (0,)))
    assert np.array_equal(s.amplitudes, [0, 1])


def test_h_equal_superposition():
    s = apply_gate(new_zero_state(1), GateOp("H", (0,)))
    np.testing.assert_allclose(s.amplitudes, [1 / np.sqrt(2)] * 2, atol=1e-15)


def test_rx_expectation_matches_dense_oracle():
    theta = np.pi / 3
    s = apply_gate(new_zero_state(1), GateOp("RX", (0,), theta))
    # independent 2x2 matrix route
    dense = oracle.single_qubit_unitary("RX", theta) @ np.array([1, 0], dtype=complex)
    np.testing.assert_allclose(s.amplitudes, dense, atol=1e-12)
    assert expectation_z(s, 0) == pytest.approx(np.cos(theta), abs=1e-12)
    assert expectation_z(s, 0) == pytest.approx(0.5, abs=1e-12)


def test_expectation_eigenstate_and_symmetry():
    zero = new_zero_state(1)
    assert expectation_z(zero, 0) == pytest.approx(1.0)
    plus = apply_gate(zero, GateOp("H", (0,)))
    assert expectation_z(plus, 0) == pytest.approx(0.0, abs=1e-12)
    flipped = apply_gate(zero, GateOp("RX", (0,), np.pi))
    assert expectation_z(flipped, 0) == pytest.approx(-1.0)


def test_expectation_wire_out_of_range():
    with pytest.raises(WireError):
        expectation_z(new_zero_state(2), 2)


def test_gateop_validation():
    with pytest.raises(GateParamError):
        GateOp("RX", (0,))  # missing angle
    with pytest.raises(GateParamError):
        GateOp("H", (0,), 0.3)  # extra angle
    with pytest.raises(WireError):
        GateOp("CNOT", (1, 1))
    with pytest.raises(WireError):
        GateOp("CNOT", (0,))
    with pytest.raises(GateParamError):
        GateOp("RZ", (0,), float("nan"))


def test_apply_gate_wire_out_of_range():
    with pytest.raises(WireError):
        apply_gate(new_zero_state(1), GateOp("X", (1,)))


def test_state_norm_validation():
    with pytest.raises(ValueError):
        QuantumState(1, np.array([1.0, 1.0]))
    with pytest.raises(SizeError):
        QuantumState(2, np.array([1.0, 0.0]))


def test_run_circuit_rx_slot():
    c = Circuit(1)
    c.rx(0, Slot(0))
    c.measure_z(0)
    assert run_circuit(c, [0.0])[0] == pytest.approx(1.0)
    # matches the dense-matrix oracle at pi/2
    dense = oracle.simulate(1, [("RX", (0,), np.pi / 2)])
    assert run_circuit(c, [np.pi / 2])[0] == pytest.approx(
        oracle.expectation_z(dense, 1, 0), abs=1e-12)
    assert run_circuit(c, [np.pi / 2])[0] == pytest.approx(0.0, abs=1e-12)


def test_run_circuit_bell_state():
    c = Circuit(2)
    c.h(0)
    c.cnot(0, 1)
    c.measure_z(0)
    c.measure_z(1)
    np.testing.assert_allclose(run_circuit(c), [0.0, 0.0], atol=1e-12)
    state = c.compiled().statevector(())
    dense = oracle.simulate(2, [("H", (0,), None), ("CNOT", (0, 1), None)])
    np.testing.assert_allclose(state, dense, atol=1e-12)
    np.testing.assert_allclose(np.abs(state) ** 2, [0.5, 0, 0, 0.5], atol=1e-12)


def test_run_circuit_param_arity():
    c = Circuit(1)
    c.rx(0, Slot(0))
    c.measure_z(0)
    with pytest.raises(ArityError):
        run_circuit(c, [])
    with pytest.raises(ArityError):
        run_circuit(c, [0.1, 0.2])


def test_wire_zero_is_least_significant_bit():
    # X on wire 0 of a 2-wire register must set index 1, not index 2
    s = apply_gate(new_zero_state(2), GateOp("X", (0,)))
    assert np.array_equal(s.amplitudes, [0, 1, 0, 0])
    s = apply_gate(new_zero_state(2), GateOp("X", (1,)))
    assert np.array_equal(s.amplitudes, [0, 0, 1, 0])


def test_crz_applies_phase_only_when_control_set():
    theta = 0.7
    c = Circuit(2)
    c.x(0)  # control (wire 0) set
    c.crz(0, 1, theta)
    state = c.compiled().statevector(())
    expected = np.zeros(4, dtype=complex)
    expected[1] = np.exp(-1j * theta / 2)
    np.testing.assert_allclose(state, expected, atol=1e-12)
    # control clear: no phase at all
    c2 = Circuit(2)
    c2.crz(0, 1, theta)
    np.testing.assert_allclose(c2.compiled().statevector(()), [1, 0, 0, 0],
                               atol=1e-15)


def test_unitarity_on_random_circuits(rng):
    for _ in range(200):
        circuit, _, params = random_circuit(rng)
        state = circuit.compiled().statevector(params)
        assert abs(np.sum(np.abs(state) ** 2) - 1.0) < 1e-12


def test_oracle_equivalence_sample(rng):
    for _ in range(200):
        circuit, ops, params = random_circuit(rng)
        fast = circuit.compiled().statevector(params)
        dense = oracle.simulate(circuit.n_wires, ops, params)
        np.testing.assert_allclose(fast, dense, atol=1e-10)


def test_determinism_bitwise(rng):
    circuit, _, params = random_circuit(rng, with_slots=True)
    first = circuit.compiled().expectations(params)
    second = circuit.compiled().expectations(params)
    assert np.array_equal(first, second)


def test_rz_crz_only_circuits_preserve_probabilities(rng):
    # pure-phase circuits leave |0...0> probabilities untouched, which is
    # why the QNN needs its Hadamard prefix
    for _ in range(50):
        n = int(rng.integers(1, 4))
        circuit = Circuit(n)
        for _ in range(int(rng.integers(1, 10))):
            if n > 1 and rng.random() < 0.4:
                wires = rng.choice(n, size=2, replace=False)
                circuit.crz(int(wires[0]), int(wires[1]), float(rng.uniform(-6, 6)))
            else:
                circuit.rz(int(rng.integers(0, n)), float(rng.uniform(-6, 6)))
        state = circuit.compiled().statevector(())
        probs = np.abs(state) ** 2
        expected = np.zeros(1 << n)
        expected[0] = 1.0
        np.testing.assert_allclose(probs, expected, atol=1e-12)


def test_python_backend_agrees_with_selected_backend(rng):
    for _ in range(50):
        circuit, _, params = random_circuit(rng)
        comp = circuit.compiled()
        fast = comp.expectations(params).copy()
        amps = np.zeros(1 << circuit.n_wires, dtype=np.complex128)
        out = np.zeros(len(circuit.observables))
        angles = comp._angles.copy()
        if comp.slot_positions.size:
            angles[comp.slot_positions] = np.asarray(params)[comp.slot_ids]
        _gatekernels_py.run_compiled(amps, circuit.n_wires, comp.kinds, comp.w0,
                                     comp.w1, angles, comp.obs, out)
        np.testing.assert_allclose(out, fast, atol=1e-12)
        np.testing.assert_allclose(amps, comp.statevector(params), atol=1e-12)


def test_backend_name_reported():
    assert kernels.BACKEND in ("cython", "python")
