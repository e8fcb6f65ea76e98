import numpy as np
import pytest

from nisqkit.helpers import derive_rng
from nisqkit.models import CircuitError, GateSpec, ParametricCircuit, PauliSum
from nisqkit.statevector import (
    HADAMARD,
    PAULI,
    apply_circuit,
    evaluate_circuit,
    expectation,
    haar_random_state,
    pauli_sum_matrix,
    rotation,
    sample_measurements,
    tangent_vector,
    tangent_vectors,
)

Z = PauliSum.from_labels([(1.0, "Z0")])


def test_empty_circuit_is_zero_state():
    np.testing.assert_array_equal(evaluate_circuit(ParametricCircuit(1), []), [1, 0])


def test_rx_pi_flips_with_phase():
    circuit = ParametricCircuit.build(1, [GateSpec("rx", (0,), param="t")])
    np.testing.assert_allclose(evaluate_circuit(circuit, [np.pi]), [0, -1j], atol=1e-15)


def test_yzx_matches_matrix_product(yzx_circuit):
    t1, t2, t3 = 0.3, 0.7, 1.1
    expected = rotation("Y", t3) @ rotation("Z", t2) @ rotation("X", t1) @ np.array([1, 0])
    np.testing.assert_allclose(evaluate_circuit(yzx_circuit, [t1, t2, t3]), expected, atol=1e-14)


def test_qubit_zero_is_least_significant():
    circuit = ParametricCircuit(2, (GateSpec("x", (0,)),))
    state = evaluate_circuit(circuit, [])
    assert state[1] == 1


def test_cnot_control_is_first_qubit():
    circuit = ParametricCircuit(2, (GateSpec("x", (1,)), GateSpec("cnot", (1, 0))))
    state = evaluate_circuit(circuit, [])
    assert abs(state[3]) == pytest.approx(1.0)


def test_controlled_rotation_is_identity_on_control_zero():
    circuit = ParametricCircuit.build(2, [GateSpec("crx", (0, 1), param="t")])
    np.testing.assert_allclose(evaluate_circuit(circuit, [1.234]), [1, 0, 0, 0])


def test_parameter_length_mismatch(yzx_circuit):
    with pytest.raises(CircuitError, match="expected 3 parameter values"):
        evaluate_circuit(yzx_circuit, [0.1, 0.2])


def test_parameters_by_name(yzx_circuit):
    by_name = evaluate_circuit(yzx_circuit, {"t1": 0.3, "t2": 0.7, "t3": 1.1})
    np.testing.assert_allclose(by_name, evaluate_circuit(yzx_circuit, [0.3, 0.7, 1.1]))


def test_norm_preserved(make_random_circuit):
    for seed in range(10):
        circuit = make_random_circuit(seed, 4, 12)
        point = derive_rng(seed).uniform(0, 2 * np.pi, circuit.num_parameters)
        state = evaluate_circuit(circuit, point)
        assert abs(np.vdot(state, state) - 1) < 1e-12


def test_tangent_at_identity():
    circuit = ParametricCircuit.build(1, [GateSpec("rx", (0,), param="t")])
    np.testing.assert_allclose(tangent_vector(circuit, [0.0], 0), [0, -0.5j])


def test_single_rotation_tangent_norm(yzx_circuit):
    point = [0.4, 1.9, 2.6]
    for j in range(3):
        assert np.linalg.norm(tangent_vector(yzx_circuit, point, j)) == pytest.approx(0.5)


def test_invalid_parameter_index(yzx_circuit):
    with pytest.raises(CircuitError, match="out of range"):
        tangent_vector(yzx_circuit, [0, 0, 0], 3)
    with pytest.raises(CircuitError, match="Unknown parameter"):
        tangent_vector(yzx_circuit, [0, 0, 0], "t9")


def test_tangents_match_central_differences(make_random_circuit):
    h = 1e-5
    for seed in range(12):
        circuit = make_random_circuit(seed, 1 + seed % 4, 12)
        point = derive_rng(seed, 1).uniform(0, 2 * np.pi, circuit.num_parameters)
        tangents = tangent_vectors(circuit, point)
        for j in range(circuit.num_parameters):
            step = np.zeros_like(point)
            step[j] = h
            fd = (evaluate_circuit(circuit, point + step) - evaluate_circuit(circuit, point - step)) / (2 * h)
            np.testing.assert_allclose(tangents[:, j], fd, atol=1e-8)
            np.testing.assert_allclose(tangent_vector(circuit, point, j), tangents[:, j], atol=1e-14)


def test_shared_parameter_tangent_sums_occurrences():
    circuit = ParametricCircuit.build(1, [GateSpec("rz", (0,), param="t"), GateSpec("rz", (0,), param="t")])
    single = ParametricCircuit.build(1, [GateSpec("rz", (0,), param="t")])
    # rz(t) rz(t) = rz(2t), so the tangent doubles
    np.testing.assert_allclose(tangent_vector(circuit, [0.3], 0), 2 * tangent_vector(single, [0.6], 0))


def test_composition():
    a = ParametricCircuit.build(2, [GateSpec("ry", (0,), param="a"), GateSpec("cnot", (0, 1))])
    b = ParametricCircuit.build(2, [GateSpec("crz", (1, 0), param="b"), GateSpec("h", (1,))])
    combined = a.then(b)
    expected = apply_circuit(b, [0.8], evaluate_circuit(a, [1.1]))
    np.testing.assert_allclose(evaluate_circuit(combined, [1.1, 0.8]), expected, atol=1e-14)


def test_expectation_basis_states():
    assert expectation(np.array([1, 0], dtype=complex), Z) == 1.0
    plus = HADAMARD @ np.array([1, 0], dtype=complex)
    assert expectation(plus, Z) == pytest.approx(0.0, abs=1e-15)


def test_expectation_of_superposition():
    c1, c2 = 0.6, 0.8j
    assert expectation(np.array([c1, c2]), Z) == pytest.approx(abs(c1) ** 2 - abs(c2) ** 2)


def test_expectation_dimension_mismatch():
    observable = PauliSum.from_labels([(1.0, "Z0 Z1")])
    with pytest.raises(CircuitError, match="qubit 1"):
        expectation(np.array([1, 0], dtype=complex), observable)


def test_expectation_rejects_unnormalized_state():
    with pytest.raises(CircuitError, match="not normalized"):
        expectation(np.array([1, 1], dtype=complex), Z)


def test_sparse_matrix_agrees_with_expectation():
    observable = PauliSum.from_labels([(0.5, "X0 Y1"), (-1.2, "Z0 Z2"), (0.3, "Y2"), (2.0, "I")])
    state = haar_random_state(3, seed=11)
    matrix = pauli_sum_matrix(observable, 3)
    assert expectation(state, observable) == pytest.approx(np.vdot(state, matrix @ state).real, abs=1e-12)
    dense = matrix.toarray()
    np.testing.assert_allclose(dense, dense.conj().T)


def test_pauli_matrix_single_qubit_y():
    matrix = pauli_sum_matrix(PauliSum.from_labels([(1.0, "Y0")]), 1).toarray()
    np.testing.assert_allclose(matrix, PAULI["Y"])


def test_sampling_zero_state():
    counts = sample_measurements(np.array([1, 0], dtype=complex), 1000, seed=1)
    assert counts.counts == {"0": 1000}


def test_sampling_plus_state_frequency():
    plus = HADAMARD @ np.array([1, 0], dtype=complex)
    shots = 10**6
    counts = sample_measurements(plus, shots, seed=5)
    freq = counts.counts.get("1", 0) / shots
    assert abs(freq - 0.5) < 5 * np.sqrt(0.25 / shots)


def test_sampling_bell_state_support():
    bell = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    counts = sample_measurements(bell, 10**6, seed=2)
    assert set(counts.counts) == {"00", "11"}
    assert counts.shots == 10**6


def test_sampling_is_deterministic():
    state = haar_random_state(3, seed=4)
    assert sample_measurements(state, 5000, seed=9) == sample_measurements(state, 5000, seed=9)
    assert sample_measurements(state, 5000, seed=9) != sample_measurements(state, 5000, seed=10)


def test_sampling_rejects_zero_shots():
    with pytest.raises(CircuitError, match="shots must be positive"):
        sample_measurements(np.array([1, 0], dtype=complex), 0, seed=1)


def test_haar_state_norm_and_determinism():
    state = haar_random_state(4, seed=3)
    assert np.linalg.norm(state) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(state, haar_random_state(4, seed=3))
    assert not np.allclose(state, haar_random_state(4, seed=8))


def test_haar_states_are_unbiased():
    rng = derive_rng(2021)
    draws = 10**5
    z = np.empty(draws)
    x = np.empty(draws)
    for i in range(draws):
        state = haar_random_state(1, rng)
        z[i] = abs(state[0]) ** 2 - abs(state[1]) ** 2
        rotated = HADAMARD @ state
        x[i] = abs(rotated[0]) ** 2 - abs(rotated[1]) ** 2
    for values in (z, x):
        assert abs(values.mean()) < 5 * values.std() / np.sqrt(draws)
    # A unitary change of basis leaves the distribution alone
    assert abs(z.var() - x.var()) < 0.01


def test_haar_rejects_zero_qubits():
    with pytest.raises(CircuitError):
        haar_random_state(0, seed=1)
