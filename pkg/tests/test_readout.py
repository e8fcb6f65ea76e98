import itertools

import numpy as np
import pytest

from nisqkit.experiments.ising import build_ti_hamiltonian
from nisqkit.helpers import derive_rng
from nisqkit.models import PauliSum, PauliTerm, ReadoutNoiseModel, ShotCounts, TransverseIsingModel
from nisqkit.readout import (
    MitigationError,
    SimulatedExecutor,
    apply_readout_noise,
    calibrate,
    calibration_series,
    correct_observable,
    correct_operator,
    forward_operator,
    gamma,
    mitigated_estimate,
    mitigated_expectation,
    noisy_distribution,
    preprocess_hamiltonian,
    sample_mean,
    t1_correct,
    t1_forward,
    t1_survival,
)
from nisqkit.statevector import expectation, haar_random_state, probabilities, rotation

ZZ = PauliTerm.from_label("Z0 Z1")


def _flip_weights(num_qubits, model):
    """Every flip pattern with its probability, given the true outcome."""
    for flips in itertools.product((0, 1), repeat=num_qubits):
        mask = sum(f << q for q, f in enumerate(flips))
        yield mask, lambda true, flips=flips: np.prod([
            (model.p0[q] if (true >> q) & 1 == 0 else model.p1[q]) if f
            else (1 - model.p0[q] if (true >> q) & 1 == 0 else 1 - model.p1[q])
            for q, f in enumerate(flips)
        ])


def _single_shot_value(num_qubits, outcome, observable, model):
    counts = ShotCounts.from_arrays(num_qubits, [outcome], [1])
    return mitigated_expectation(counts, observable, model)


def test_noiseless_model_leaves_counts_alone():
    counts = ShotCounts(2, {"00": 10, "01": 5, "11": 7})
    assert apply_readout_noise(counts, ReadoutNoiseModel.noiseless(2), seed=1) == counts


def test_certain_flip_inverts_every_bit():
    counts = ShotCounts(2, {"00": 10, "01": 5})
    flipped = apply_readout_noise(counts, ReadoutNoiseModel.uniform(2, 1.0), seed=1)
    assert flipped.counts == {"11": 10, "10": 5}


def test_noise_shrinks_single_qubit_mean():
    p, theta, shots = 0.1, 0.8, 200_000
    state = rotation("Y", theta) @ np.array([1, 0], dtype=complex)
    executor = SimulatedExecutor(1, ReadoutNoiseModel.uniform(1, p))
    counts = executor.measure(state, shots, seed=4)
    noisy = sample_mean(counts, PauliSum.from_labels([(1.0, "Z0")]))
    assert abs(noisy - (1 - 2 * p) * np.cos(theta)) < 5 / np.sqrt(shots)


def test_gamma_values():
    model = ReadoutNoiseModel((0.02,), (0.08,))
    assert gamma("Z", 0, model) == pytest.approx(0.9)
    assert gamma("I", 0, model) == pytest.approx(0.06)
    assert gamma("1", 0, ReadoutNoiseModel.uniform(1, 0.05)) == 0.0
    with pytest.raises(MitigationError):
        gamma("X", 0, model)
    with pytest.raises(MitigationError, match="qubit 3"):
        gamma("Z", 3, model)


def test_correct_single_z_symmetric():
    p = 0.05
    corrected = correct_operator(PauliTerm.from_label("Z0"), ReadoutNoiseModel.uniform(1, p))
    assert corrected.coefficients() == pytest.approx({"Z0": 1 / (1 - 2 * p), "I": 0.0})


def test_correct_two_qubit_string():
    model = ReadoutNoiseModel((0.02, 0.05), (0.08, 0.03))
    gz = [0.9, 0.92]
    gi = [0.06, -0.02]
    corrected = correct_operator(ZZ, model).coefficients()
    assert corrected == pytest.approx({
        "Z0 Z1": 1 / (gz[0] * gz[1]),
        "Z0": -gi[1] / (gz[0] * gz[1]),
        "Z1": -gi[0] / (gz[0] * gz[1]),
        "I": gi[0] * gi[1] / (gz[0] * gz[1]),
    })


def test_noiseless_correction_is_identity():
    corrected = correct_operator(ZZ, ReadoutNoiseModel.noiseless(2)).simplify()
    assert corrected.coefficients() == {"Z0 Z1": 1.0}


def test_singular_qubit_is_named():
    model = ReadoutNoiseModel((0.1, 0.5), (0.1, 0.5))
    with pytest.raises(MitigationError, match="qubit 1"):
        correct_operator(ZZ, model)


def test_correction_rejects_non_diagonal_terms():
    with pytest.raises(MitigationError):
        correct_operator(PauliTerm.from_label("X0"), ReadoutNoiseModel.uniform(1, 0.1))


def test_correction_term_count_grows_with_locality():
    model = ReadoutNoiseModel.uniform(4, 0.05)
    for k in range(5):
        label = " ".join(f"Z{q}" for q in range(k)) or "I"
        assert len(correct_operator(PauliTerm.from_label(label), model)) == 2**k


def test_correction_inverts_forward_noise():
    model = ReadoutNoiseModel((0.02, 0.05, 0.11), (0.08, 0.03, 0.01))
    observable = PauliSum.from_labels([(0.7, "Z0 Z2"), (-1.3, "Z1"), (0.4, "Z0 Z1 Z2"), (2.0, "I")])
    noisy = PauliSum.combine(t for term in observable.terms for t in forward_operator(term, model).terms)
    restored = correct_observable(noisy, model).simplify(1e-12)
    assert restored.coefficients() == pytest.approx(observable.coefficients(), abs=1e-12)
    assert set(restored.coefficients()) == set(observable.coefficients())


def test_mitigation_is_unbiased():
    rng = derive_rng(31)
    for case in range(50):
        num_qubits = 1 + case % 3
        p = (0.0, 0.05, 0.2, None)[(case // 3) % 4]
        if p is None:
            model = ReadoutNoiseModel(tuple(rng.uniform(0, 0.2, num_qubits)), tuple(rng.uniform(0, 0.2, num_qubits)))
        else:
            model = ReadoutNoiseModel.uniform(num_qubits, p)
        state = haar_random_state(num_qubits, rng)
        labels = []
        for _ in range(3):
            support = [q for q in range(num_qubits) if rng.random() < 0.6] or [0]
            labels.append((float(rng.normal()), " ".join(f"Z{q}" for q in support)))
        observable = PauliSum.from_labels(labels)
        probs = probabilities(state)
        mean = 0.0
        for true in range(2**num_qubits):
            for mask, weight in _flip_weights(num_qubits, model):
                mean += probs[true] * weight(true) * _single_shot_value(num_qubits, true ^ mask, observable, model)
        assert mean == pytest.approx(expectation(state, observable), abs=1e-12)


def test_two_qubit_zz_flip_table():
    p = 0.1
    model = ReadoutNoiseModel.uniform(2, p)
    observable = PauliSum((ZZ,))
    state = haar_random_state(2, seed=6)
    probs = probabilities(state)
    weights = {0b00: (1 - p) ** 2, 0b01: p * (1 - p), 0b10: (1 - p) * p, 0b11: p**2}
    assert sum(weights.values()) == pytest.approx(1.0)
    raw = mitigated = 0.0
    for true in range(4):
        for mask, w in weights.items():
            measured = true ^ mask
            raw += probs[true] * w * (1 - 2 * (bin(measured).count("1") % 2))
            mitigated += probs[true] * w * _single_shot_value(2, measured, observable, model)
    exact = expectation(state, observable)
    assert raw == pytest.approx((1 - 2 * p) ** 2 * exact, abs=1e-12)
    assert mitigated == pytest.approx(exact, abs=1e-12)


def test_noiseless_mitigation_is_the_sample_mean():
    counts = ShotCounts(2, {"00": 40, "01": 25, "10": 20, "11": 15})
    observable = PauliSum.from_labels([(1.0, "Z0 Z1"), (0.5, "Z1")])
    assert mitigated_expectation(counts, observable, ReadoutNoiseModel.noiseless(2)) == pytest.approx(
        sample_mean(counts, observable)
    )
    assert sample_mean(counts, observable) == pytest.approx((40 - 25 - 20 + 15) / 100 + 0.5 * (40 + 25 - 20 - 15) / 100)


def test_mitigation_input_checks():
    counts = ShotCounts(1, {"0": 3})
    with pytest.raises(MitigationError):
        mitigated_expectation(counts, PauliSum.from_labels([(1.0, "X0")]), ReadoutNoiseModel.noiseless(1))
    with pytest.raises(MitigationError, match="qubit 1"):
        mitigated_expectation(counts, PauliSum((ZZ,)), ReadoutNoiseModel.noiseless(2))


def test_noisy_distribution_matches_enumeration():
    model = ReadoutNoiseModel((0.02, 0.15), (0.07, 0.04))
    probs = probabilities(haar_random_state(2, seed=8))
    expected = np.zeros(4)
    for true in range(4):
        for mask, weight in _flip_weights(2, model):
            expected[true ^ mask] += probs[true] * weight(true)
    np.testing.assert_allclose(noisy_distribution(probs, model), expected, atol=1e-15)
    assert noisy_distribution(probs, model).sum() == pytest.approx(1.0)


def test_preprocess_groups_by_setting():
    model = ReadoutNoiseModel.uniform(2, 0.05)
    settings = preprocess_hamiltonian(PauliSum((ZZ,)), model)
    assert list(settings) == ["Z"]
    assert len(settings["Z"].corrected) == 4

    settings = preprocess_hamiltonian(PauliSum.from_labels([(1.0, "X0")]), model)
    assert list(settings) == ["X"]
    assert settings["X"].original.coefficients() == {"Z0": 1.0}


def test_preprocess_two_site_ising():
    model = ReadoutNoiseModel.uniform(2, 0.05)
    hamiltonian = build_ti_hamiltonian(TransverseIsingModel(2, J=-1.0, h=1.0))
    settings = preprocess_hamiltonian(hamiltonian, model)
    assert set(settings) == {"Z", "X"}
    # the periodic bond doubles onto the open one
    assert settings["Z"].original.coefficients() == {"Z0 Z1": -2.0}
    assert len(settings["X"].original) == 2
    assert len(settings["Z"].corrected) == 4
    assert len(settings["X"].corrected) == 4


def test_preprocess_rejects_mixed_terms():
    model = ReadoutNoiseModel.uniform(2, 0.05)
    with pytest.raises(MitigationError, match="X0 Z1"):
        preprocess_hamiltonian(PauliSum.from_labels([(1.0, "X0 Z1")]), model)
    with pytest.raises(MitigationError):
        preprocess_hamiltonian(PauliSum.from_labels([(1.0, "Y0")]), model)


def test_calibration_recovers_flip_rates():
    shots = 4096
    model = ReadoutNoiseModel((0.05, 0.02), (0.05, 0.08))
    record = calibrate(SimulatedExecutor(2, model), shots=shots, seed=3)
    for estimated, true in zip(record.model.p0 + record.model.p1, model.p0 + model.p1):
        assert abs(estimated - true) < 5 * np.sqrt(true * (1 - true) / shots)
    assert record.shots == shots
    assert all(e > 0 for e in record.stderr0)


def test_noiseless_calibration_is_exact():
    record = calibrate(SimulatedExecutor(3, ReadoutNoiseModel.noiseless(3)), shots=1000, seed=1)
    assert record.model == ReadoutNoiseModel.noiseless(3)
    assert record.stderr0 == (0.0, 0.0, 0.0)


def test_calibration_series_is_deterministic():
    executor = SimulatedExecutor(1, ReadoutNoiseModel.uniform(1, 0.1))
    runs = calibration_series(executor, 3, shots=2000, seed=5)
    assert [r.run_index for r in runs] == [0, 1, 2]
    assert runs == calibration_series(executor, 3, shots=2000, seed=5)
    assert len({r.model.p0 for r in runs}) > 1
    with pytest.raises(MitigationError):
        calibration_series(executor, 0)


def test_mitigated_estimate_error_bars():
    true_model = ReadoutNoiseModel.uniform(2, 0.05)
    executor = SimulatedExecutor(2, true_model)
    record = calibrate(executor, shots=4096, seed=2)
    state = haar_random_state(2, seed=9)
    counts = executor.measure(state, 8192, seed=3)
    observable = PauliSum((ZZ,))
    estimate = mitigated_estimate(counts, observable, record)
    assert estimate.value == pytest.approx(mitigated_expectation(counts, observable, record.model))
    assert estimate.shot_stderr > 0
    assert estimate.calibration_stderr > 0
    assert estimate.stderr >= estimate.shot_stderr
    assert abs(estimate.value - expectation(state, observable)) < 5 * estimate.stderr

    known = mitigated_estimate(counts, observable, true_model)
    assert known.calibration_stderr == 0.0


def test_t1_decay():
    assert t1_survival(0.0, 50.0) == 1.0
    assert t1_survival(50.0, 50.0) == pytest.approx(np.exp(-1))
    assert t1_correct(0.3, 1.0) == 0.3
    assert t1_correct(-0.6, 0.8) == pytest.approx(-1.0)
    for p_t in np.linspace(0.05, 1.0, 10):
        for z in np.linspace(-1, 1, 10):
            assert t1_correct(t1_forward(z, p_t), p_t) == pytest.approx(z, abs=1e-12)
    with pytest.raises(MitigationError):
        t1_correct(0.1, 0.0)
    with pytest.raises(MitigationError):
        t1_survival(1.0, -2.0)
