"""Readout bit-flip noise, calibration and gamma-factor mitigation.

Flips are independent per qubit: p0[q] reads 0 as 1, p1[q] reads 1 as 0. A
k-local Z string is corrected by expanding the tensor product of the
single-qubit inverses into 2**k noisy strings, all evaluated on the same counts.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from nisqkit.helpers import SeedLike, derive_rng, derive_seed
from nisqkit.models import (
    VALID_SETTINGS,
    CalibrationRecord,
    GateSpec,
    MitigatedOperator,
    ParametricCircuit,
    PauliSum,
    PauliTerm,
    QuantumState,
    ReadoutNoiseModel,
    ShotCounts,
)
from nisqkit.statevector import (
    HADAMARD,
    apply_matrix,
    bit_parity,
    evaluate_circuit,
    num_qubits_of,
    probabilities,
    sample_measurements,
)

log = logging.getLogger(__name__)

GAMMA_ATOL = 1e-12
SENSITIVITY_STEP = 1e-6


class MitigationError(ValueError):
    """Raised when readout mitigation is impossible or the input is unsupported."""


def _check_covers(model: ReadoutNoiseModel, num_qubits: int) -> None:
    if model.num_qubits < num_qubits:
        raise MitigationError(
            f"noise model covers {model.num_qubits} qubits, counts have {num_qubits}"
        )


def apply_readout_noise(counts: ShotCounts, model: ReadoutNoiseModel, seed: SeedLike = None) -> ShotCounts:
    """Flip every bit of every shot independently."""
    _check_covers(model, counts.num_qubits)
    rng = derive_rng(seed)
    indices, weights = counts.to_arrays()
    outcomes = np.repeat(indices, weights)
    for q in range(counts.num_qubits):
        bits = (outcomes >> q) & 1
        flip_prob = np.where(bits == 0, model.p0[q], model.p1[q])
        flips = rng.random(outcomes.shape[0]) < flip_prob
        outcomes = outcomes ^ (flips.astype(np.int64) << q)
    observed, tally = np.unique(outcomes, return_counts=True)
    return ShotCounts.from_arrays(counts.num_qubits, observed, tally)


def gamma(op: str, qubit: int, model: ReadoutNoiseModel) -> float:
    """gamma(Z_q) = 1 - p0 - p1; gamma(1_q) = p1 - p0."""
    if not 0 <= qubit < model.num_qubits:
        raise MitigationError(f"qubit {qubit} is not covered by the noise model")
    p0, p1 = model.p0[qubit], model.p1[qubit]
    if op == "Z":
        return 1.0 - p0 - p1
    if op in ("I", "1"):
        return p1 - p0
    raise MitigationError(f"gamma is defined for Z and identity, got {op!r}")


def _check_diagonal(term: PauliTerm) -> None:
    if not term.is_diagonal:
        raise MitigationError(f"term {term.label} is not a Z/identity string")


def _expand(term: PauliTerm, factors) -> PauliSum:
    """Expand prod_q (a_q Z_q + b_q 1) over the support of `term`."""
    support = term.support
    out = []
    for keep in itertools.product((True, False), repeat=len(support)):
        coefficient = term.coefficient
        paulis = []
        for q, z in zip(support, keep):
            a, b = factors[q]
            coefficient *= a if z else b
            if z:
                paulis.append((q, "Z"))
        out.append(PauliTerm(coefficient, tuple(paulis)))
    return PauliSum(tuple(out))


def correct_operator(zstring: PauliTerm, model: ReadoutNoiseModel) -> PauliSum:
    """Noisy-string expansion whose noisy expectation equals <zstring> exactly.

    Always returns 2**k terms for a k-local string, zero coefficients included.
    """
    _check_diagonal(zstring)
    factors = {}
    for q in zstring.support:
        g_z = gamma("Z", q, model)
        if abs(g_z) < GAMMA_ATOL:
            raise MitigationError(
                f"qubit {q}: gamma(Z) = 0 (p0 + p1 = 1), readout mitigation is impossible"
            )
        factors[q] = (1.0 / g_z, -gamma("I", q, model) / g_z)
    return _expand(zstring, factors)


def forward_operator(zstring: PauliTerm, model: ReadoutNoiseModel) -> PauliSum:
    """Noisy image of a Z string: prod_q (gamma(Z_q) Z_q + gamma(1_q) 1)."""
    _check_diagonal(zstring)
    factors = {q: (gamma("Z", q, model), gamma("I", q, model)) for q in zstring.support}
    return _expand(zstring, factors)


def correct_observable(observable: PauliSum, model: ReadoutNoiseModel) -> PauliSum:
    return PauliSum.combine(t for term in observable.terms for t in correct_operator(term, model).terms)


def forward_observable(observable: PauliSum, model: ReadoutNoiseModel) -> PauliSum:
    return PauliSum.combine(t for term in observable.terms for t in forward_operator(term, model).terms)


def confusion_matrix(qubit: int, model: ReadoutNoiseModel) -> np.ndarray:
    """2x2 column-stochastic map from true to measured bit."""
    p0, p1 = model.p0[qubit], model.p1[qubit]
    return np.array([[1.0 - p0, p1], [p0, 1.0 - p1]])


def noisy_distribution(probs: np.ndarray, model: ReadoutNoiseModel) -> np.ndarray:
    """Measured-outcome distribution after readout flips (exponential in qubits)."""
    probs = np.asarray(probs, dtype=float)
    n = num_qubits_of(probs)
    _check_covers(model, n)
    for q in range(n):
        probs = apply_matrix(probs, confusion_matrix(q, model), (q,), n)
    return probs


def _z_mask(term: PauliTerm) -> int:
    return sum(1 << q for q in term.support)


def _outcome_values(indices: np.ndarray, observable: PauliSum) -> np.ndarray:
    """Per-outcome value of a diagonal observable."""
    values = np.zeros(indices.shape[0])
    for term in observable.terms:
        _check_diagonal(term)
        values += term.coefficient * (1 - 2 * bit_parity(indices & _z_mask(term)))
    return values


def _check_support(observable: PauliSum, num_qubits: int) -> None:
    if observable.min_qubits > num_qubits:
        raise MitigationError(
            f"observable acts on qubit {observable.min_qubits - 1}, counts have {num_qubits} bits"
        )


def sample_mean(counts: ShotCounts, observable: PauliSum) -> float:
    """Raw estimate of a diagonal observable from counts."""
    _check_support(observable, counts.num_qubits)
    indices, weights = counts.to_arrays()
    if counts.shots == 0:
        raise MitigationError("counts are empty")
    return float(np.dot(_outcome_values(indices, observable), weights) / counts.shots)


def mitigated_expectation(noisy_counts: ShotCounts, observable: PauliSum, model: ReadoutNoiseModel) -> float:
    """Estimate of the noiseless <observable> from noisy counts."""
    _check_support(observable, noisy_counts.num_qubits)
    return sample_mean(noisy_counts, correct_observable(observable, model))


@dataclass(frozen=True)
class MitigatedEstimate:
    value: float
    shot_stderr: float
    calibration_stderr: float

    @property
    def stderr(self) -> float:
        return math.hypot(self.shot_stderr, self.calibration_stderr)


def _perturbed(model: ReadoutNoiseModel, qubit: int, which: int, value: float) -> ReadoutNoiseModel:
    probs = [list(model.p0), list(model.p1)]
    probs[which][qubit] = value
    return ReadoutNoiseModel(tuple(probs[0]), tuple(probs[1]))


def mitigated_estimate(noisy_counts: ShotCounts, observable: PauliSum,
                       calibration: CalibrationRecord | ReadoutNoiseModel) -> MitigatedEstimate:
    """Mitigated value with shot and calibration standard errors.

    The calibration part propagates each p_{q,b} standard error through a
    central finite difference of the mitigated value.
    """
    if isinstance(calibration, ReadoutNoiseModel):
        model, stderrs = calibration, None
    else:
        model, stderrs = calibration.model, (calibration.stderr0, calibration.stderr1)

    corrected = correct_observable(observable, model)
    _check_support(observable, noisy_counts.num_qubits)
    indices, weights = noisy_counts.to_arrays()
    per_outcome = _outcome_values(indices, corrected)
    shots = noisy_counts.shots
    value = float(np.dot(per_outcome, weights) / shots)
    if shots > 1:
        variance = float(np.dot((per_outcome - value) ** 2, weights) / (shots - 1))
        shot_stderr = math.sqrt(variance / shots)
    else:
        shot_stderr = 0.0

    calibration_var = 0.0
    if stderrs is not None:
        support = sorted({q for t in observable.terms for q in t.support})
        for which, errs in enumerate(stderrs):
            probs = model.p0 if which == 0 else model.p1
            for q in support:
                if errs[q] == 0.0:
                    continue
                lo = max(probs[q] - SENSITIVITY_STEP, 0.0)
                hi = min(probs[q] + SENSITIVITY_STEP, 1.0)
                f_hi = mitigated_expectation(noisy_counts, observable, _perturbed(model, q, which, hi))
                f_lo = mitigated_expectation(noisy_counts, observable, _perturbed(model, q, which, lo))
                calibration_var += ((f_hi - f_lo) / (hi - lo) * errs[q]) ** 2
    return MitigatedEstimate(value, shot_stderr, math.sqrt(calibration_var))


def to_setting_string(term: PauliTerm) -> tuple[str, PauliTerm]:
    """(setting, Z string measured in that setting) for a pure Z or pure X term."""
    letters = term.letters
    if letters <= {"Z"}:
        return "Z", term
    if letters == {"X"}:
        return "X", PauliTerm(term.coefficient, tuple((q, "Z") for q in term.support))
    raise MitigationError(
        f"term {term.label} mixes Paulis or contains Y; only pure Z or pure X strings are supported"
    )


def preprocess_hamiltonian(hamiltonian: PauliSum, model: ReadoutNoiseModel) -> dict[str, MitigatedOperator]:
    """Group terms into the Z and global-X settings and correct each group."""
    grouped: dict[str, list[PauliTerm]] = {}
    for term in hamiltonian.terms:
        setting, zterm = to_setting_string(term)
        grouped.setdefault(setting, []).append(zterm)
    out = {}
    for setting in VALID_SETTINGS:
        if setting not in grouped:
            continue
        original = PauliSum.combine(grouped[setting])
        out[setting] = MitigatedOperator(setting, original, correct_observable(original, model))
    return out


def split_settings(hamiltonian: PauliSum) -> dict[str, PauliSum]:
    """Diagonal operator per measurement setting, without correction."""
    noiseless = ReadoutNoiseModel.noiseless(max(hamiltonian.min_qubits, 1))
    return {s: op.original for s, op in preprocess_hamiltonian(hamiltonian, noiseless).items()}


def rotate_to_setting(state: QuantumState, setting: str) -> QuantumState:
    """Basis change so that measuring Z reads the setting's Paulis."""
    if setting == "Z":
        return state
    if setting != "X":
        raise MitigationError(f"unknown measurement setting {setting!r}")
    n = num_qubits_of(state)
    for q in range(n):
        state = apply_matrix(state, HADAMARD, (q,), n)
    return state


class Executor(Protocol):
    num_qubits: int

    def measure(self, state: QuantumState, shots: int, seed: SeedLike = None) -> ShotCounts: ...


@dataclass(frozen=True)
class SimulatedExecutor:
    """Exact sampling followed by readout flips from a true noise model."""

    num_qubits: int
    noise: ReadoutNoiseModel | None = None

    def __post_init__(self):
        if self.noise is not None:
            _check_covers(self.noise, self.num_qubits)

    def prepare(self, circuit: ParametricCircuit, params=()) -> QuantumState:
        return evaluate_circuit(circuit, params)

    def measure(self, state: QuantumState, shots: int, seed: SeedLike = None) -> ShotCounts:
        counts = sample_measurements(state, shots, derive_rng(seed, 0))
        if self.noise is None:
            return counts
        return apply_readout_noise(counts, self.noise, derive_rng(seed, 1))

    def measure_setting(self, state: QuantumState, setting: str, shots: int, seed: SeedLike = None) -> ShotCounts:
        return self.measure(rotate_to_setting(state, setting), shots, seed)


def _flip_frequency(counts: ShotCounts, qubit: int, expected_bit: int) -> float:
    indices, weights = counts.to_arrays()
    wrong = ((indices >> qubit) & 1) != expected_bit
    return float(weights[wrong].sum() / counts.shots)


def calibrate(executor: Executor, qubits: int | None = None, shots: int = 4096, seed: SeedLike = None,
              run_index: int = 0, timestamp: str | None = None) -> CalibrationRecord:
    """Estimate p0 from |0...0> and p1 from |1...1> preparations."""
    if shots <= 0:
        raise MitigationError("calibration shots must be positive")
    n = executor.num_qubits if qubits is None else qubits
    zeros = ParametricCircuit(n)
    ones = ParametricCircuit(n, tuple(GateSpec("x", (q,)) for q in range(n)))
    counts0 = executor.measure(evaluate_circuit(zeros, ()), shots, derive_rng(seed, 0))
    counts1 = executor.measure(evaluate_circuit(ones, ()), shots, derive_rng(seed, 1))

    p0 = tuple(_flip_frequency(counts0, q, 0) for q in range(n))
    p1 = tuple(_flip_frequency(counts1, q, 1) for q in range(n))
    record = CalibrationRecord(
        model=ReadoutNoiseModel(p0, p1),
        shots=int(shots),
        stderr0=tuple(math.sqrt(p * (1 - p) / shots) for p in p0),
        stderr1=tuple(math.sqrt(p * (1 - p) / shots) for p in p1),
        run_index=int(run_index),
        timestamp=timestamp,
    )
    log.debug("calibration run %d: p0=%s p1=%s", run_index, p0, p1)
    return record


def calibration_series(executor: Executor, runs: int, shots: int = 4096, seed: SeedLike = None,
                       qubits: int | None = None) -> list[CalibrationRecord]:
    """Repeated calibrations, one independent stream per run."""
    if runs < 1:
        raise MitigationError("runs must be at least 1")
    records = [
        calibrate(executor, qubits, shots, derive_seed(seed, i), run_index=i) for i in range(runs)
    ]
    log.info("calibrated %d runs of %d shots", runs, shots)
    return records


def _check_survival(p_t: float) -> None:
    if not 0.0 < p_t <= 1.0:
        raise MitigationError(f"survival probability must lie in (0, 1], got {p_t}")


def t1_survival(t: float, t1: float) -> float:
    """exp(-t / T1)."""
    if t1 <= 0 or t < 0:
        raise MitigationError("T1 must be positive and t nonnegative")
    return math.exp(-t / t1)


def t1_forward(z_exact: float, p_t: float) -> float:
    """Relaxed expectation p_t Z + (1 - p_t)."""
    _check_survival(p_t)
    return p_t * z_exact + (1.0 - p_t)


def t1_correct(noisy_z: float, p_t: float) -> float:
    """Invert the T1 decay: Z = noisy / p_t - (1 - p_t) / p_t."""
    _check_survival(p_t)
    return noisy_z / p_t - (1.0 - p_t) / p_t


def outcome_values(num_qubits: int, observable: PauliSum) -> np.ndarray:
    """Value of a diagonal observable on every basis outcome."""
    return _outcome_values(np.arange(2**num_qubits, dtype=np.int64), observable)


def distribution_for(state: QuantumState, setting: str, model: ReadoutNoiseModel | None) -> np.ndarray:
    """Exact measured-outcome distribution of `state` in `setting`."""
    probs = probabilities(rotate_to_setting(state, setting))
    return probs if model is None else noisy_distribution(probs, model)
