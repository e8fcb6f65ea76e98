"""Exact state-vector simulation of parametric circuits.

Qubit 0 is the least significant bit of a basis-state index. Rotations follow
exp(-i theta P / 2); controlled rotations act as identity when the control
(first listed qubit) is |0>.
"""

from __future__ import annotations

import logging
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sparse

from nisqkit.helpers import SeedLike, derive_rng
from nisqkit.models import CircuitError, GateSpec, ParametricCircuit, PauliSum, PauliTerm, QuantumState, ShotCounts

log = logging.getLogger(__name__)

NORM_ATOL = 1e-10
IMAG_ATOL = 1e-10

I2 = np.eye(2, dtype=np.complex128)
PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
PROJ0 = np.diag([1, 0]).astype(np.complex128)
PROJ1 = np.diag([0, 1]).astype(np.complex128)

FIXED_GATES = {
    "h": HADAMARD,
    "x": PAULI["X"],
    "z": PAULI["Z"],
    "cnot": np.kron(PROJ0, I2) + np.kron(PROJ1, PAULI["X"]),
}


def rotation(pauli: str, angle: float) -> np.ndarray:
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * PAULI[pauli]


def gate_matrix(gate: GateSpec, angle: float | None = None) -> np.ndarray:
    """Local matrix of `gate`; for two-qubit gates the first qubit is the high bit."""
    if not gate.is_rotation:
        return FIXED_GATES[gate.gate]
    if angle is None:
        angle = gate.value
    local = rotation(gate.pauli, angle)
    if gate.is_controlled:
        return np.kron(PROJ0, I2) + np.kron(PROJ1, local)
    return local


def generator(gate: GateSpec) -> np.ndarray:
    """G with d/dtheta U(theta) = -i G U(theta): P/2, or |1><1| (x) P/2 when controlled."""
    half = PAULI[gate.pauli] / 2
    if gate.is_controlled:
        return np.kron(PROJ1, half)
    return half


def zero_state(num_qubits: int) -> QuantumState:
    state = np.zeros(2**num_qubits, dtype=np.complex128)
    state[0] = 1.0
    return state


def apply_matrix(state: QuantumState, matrix: np.ndarray, qubits: Sequence[int], num_qubits: int) -> QuantumState:
    """Apply a local operator on `qubits` (first listed = most significant local bit)."""
    k = len(qubits)
    psi = state.reshape((2,) * num_qubits)
    axes = [num_qubits - 1 - q for q in qubits]
    op = matrix.reshape((2,) * (2 * k))
    psi = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), axes))
    psi = np.moveaxis(psi, list(range(k)), axes)
    return np.ascontiguousarray(psi).reshape(-1)


def bind_parameters(circuit: ParametricCircuit, params) -> dict[str, float]:
    """Map parameter names to values from a vector (circuit order) or a mapping."""
    if isinstance(params, Mapping):
        missing = set(circuit.parameters) - set(params)
        if missing:
            raise CircuitError(f"missing values for parameters {sorted(missing)}")
        values = {name: float(params[name]) for name in circuit.parameters}
    else:
        vector = np.asarray(params if params is not None else [], dtype=float).reshape(-1)
        if vector.size != circuit.num_parameters:
            raise CircuitError(
                f"expected {circuit.num_parameters} parameter values, got {vector.size}"
            )
        values = dict(zip(circuit.parameters, vector.tolist()))
    if not all(np.isfinite(v) for v in values.values()):
        raise CircuitError("parameter values must be finite")
    return values


def _angle(gate: GateSpec, values: Mapping[str, float]) -> float | None:
    if not gate.is_rotation:
        return None
    return values[gate.param] if gate.param is not None else gate.value


def apply_gate(state: QuantumState, gate: GateSpec, values: Mapping[str, float], num_qubits: int) -> QuantumState:
    return apply_matrix(state, gate_matrix(gate, _angle(gate, values)), gate.qubits, num_qubits)


def apply_circuit(circuit: ParametricCircuit, params, state: QuantumState) -> QuantumState:
    """Apply every gate of `circuit`, in list order, to `state`."""
    values = bind_parameters(circuit, params)
    check_dimension(state, circuit.num_qubits)
    for gate in circuit.gates:
        state = apply_gate(state, gate, values, circuit.num_qubits)
    return state


def evaluate_circuit(circuit: ParametricCircuit, params) -> QuantumState:
    """C(theta)|0...0>."""
    return apply_circuit(circuit, params, zero_state(circuit.num_qubits))


def _forward_states(circuit: ParametricCircuit, values: Mapping[str, float]) -> list[QuantumState]:
    """State after each gate."""
    state = zero_state(circuit.num_qubits)
    states = []
    for gate in circuit.gates:
        state = apply_gate(state, gate, values, circuit.num_qubits)
        states.append(state)
    return states


def _finish(state: QuantumState, circuit: ParametricCircuit, values, start: int) -> QuantumState:
    for gate in circuit.gates[start:]:
        state = apply_gate(state, gate, values, circuit.num_qubits)
    return state


def tangent_vectors(circuit: ParametricCircuit, params) -> np.ndarray:
    """Columns |d_j C(theta)> for every parameter, shape (2**Q, N_p).

    Each occurrence of parameter j contributes the circuit with -iG inserted
    right after that gate.
    """
    values = bind_parameters(circuit, params)
    n = circuit.num_qubits
    forward = _forward_states(circuit, values)
    index = {name: j for j, name in enumerate(circuit.parameters)}
    tangents = np.zeros((2**n, circuit.num_parameters), dtype=np.complex128)
    for pos, gate in enumerate(circuit.gates):
        if gate.param is None:
            continue
        branch = apply_matrix(forward[pos], -1j * generator(gate), gate.qubits, n)
        tangents[:, index[gate.param]] += _finish(branch, circuit, values, pos + 1)
    return tangents


def tangent_vector(circuit: ParametricCircuit, params, j: int | str) -> QuantumState:
    """|d_j C(theta)>, unnormalized."""
    values = bind_parameters(circuit, params)
    j = circuit.parameter_index(j)
    n = circuit.num_qubits
    forward = _forward_states(circuit, values)
    out = np.zeros(2**n, dtype=np.complex128)
    for pos in circuit.occurrences(j):
        gate = circuit.gates[pos]
        branch = apply_matrix(forward[pos], -1j * generator(gate), gate.qubits, n)
        out += _finish(branch, circuit, values, pos + 1)
    return out


def unitary_insertions(circuit: ParametricCircuit, params, j: int | str) -> list[tuple[complex, QuantumState]]:
    """Decompose |d_j C> = sum_u w_u |psi_u> with every |psi_u> unit norm.

    A plain rotation occurrence gives w = -i/2 with P inserted; a controlled one
    uses |1><1| (x) P = ((I - Z)/2) (x) P and gives two insertions, I(x)P with
    w = -i/4 and Z(x)P with w = +i/4.
    """
    values = bind_parameters(circuit, params)
    j = circuit.parameter_index(j)
    n = circuit.num_qubits
    forward = _forward_states(circuit, values)
    out = []
    for pos in circuit.occurrences(j):
        gate = circuit.gates[pos]
        pauli = PAULI[gate.pauli]
        if gate.is_controlled:
            pieces = [(-0.25j, np.kron(I2, pauli)), (0.25j, np.kron(PAULI["Z"], pauli))]
        else:
            pieces = [(-0.5j, pauli)]
        for weight, op in pieces:
            branch = apply_matrix(forward[pos], op, gate.qubits, n)
            out.append((weight, _finish(branch, circuit, values, pos + 1)))
    return out


def check_dimension(state: QuantumState, num_qubits: int) -> None:
    if state.ndim != 1 or state.shape[0] != 2**num_qubits:
        raise CircuitError(f"state of length {state.shape} does not match {num_qubits} qubits")


def num_qubits_of(state: QuantumState) -> int:
    dim = np.asarray(state).shape[0]
    n = int(dim).bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise CircuitError(f"state length {dim} is not a power of two")
    return n


def check_normalized(state: QuantumState) -> None:
    norm = float(np.vdot(state, state).real)
    if abs(norm - 1.0) > NORM_ATOL:
        raise CircuitError(f"state is not normalized (norm^2 = {norm:.3e})")


def bit_parity(values) -> np.ndarray:
    """Parity of the set bits of each integer."""
    values = np.array(values, dtype=np.int64, copy=True)
    parity = np.zeros_like(values)
    while np.any(values):
        parity ^= values & 1
        values >>= 1
    return parity


def _masks(term: PauliTerm) -> tuple[int, int, int]:
    x_mask = z_mask = n_y = 0
    for q, p in term.paulis:
        if p in ("X", "Y"):
            x_mask |= 1 << q
        if p in ("Z", "Y"):
            z_mask |= 1 << q
        n_y += p == "Y"
    return x_mask, z_mask, n_y


def apply_pauli(state: QuantumState, term: PauliTerm) -> QuantumState:
    """P|psi> for the string of `term` (coefficient not applied)."""
    idx = np.arange(state.shape[0], dtype=np.int64)
    x_mask, z_mask, n_y = _masks(term)
    phase = (1j**n_y) * (1 - 2 * bit_parity(idx & z_mask))
    out = np.empty_like(state)
    out[idx ^ x_mask] = phase * state
    return out


def _check_observable(observable: PauliSum, num_qubits: int) -> None:
    if observable.min_qubits > num_qubits:
        raise CircuitError(
            f"observable acts on qubit {observable.min_qubits - 1} of a {num_qubits}-qubit state"
        )


def expectation(state: QuantumState, observable: PauliSum) -> float:
    """<psi|O|psi> for a normalized state."""
    n = num_qubits_of(state)
    _check_observable(observable, n)
    check_normalized(state)
    total = 0j
    for term in observable.terms:
        total += term.coefficient * np.vdot(state, apply_pauli(state, term))
    scale = max(1.0, sum(abs(t.coefficient) for t in observable.terms))
    if abs(total.imag) > IMAG_ATOL * scale:
        raise CircuitError(f"expectation has imaginary residue {total.imag:.3e}")
    if abs(total.imag) > IMAG_ATOL * scale / 100:
        log.warning("expectation has imaginary residue %.3e", total.imag)
    return float(total.real)


def pauli_sum_matrix(observable: PauliSum, num_qubits: int) -> sparse.csr_matrix:
    """Sparse 2**Q x 2**Q matrix of a Pauli sum."""
    _check_observable(observable, num_qubits)
    dim = 2**num_qubits
    idx = np.arange(dim, dtype=np.int64)
    rows, cols, data = [], [], []
    for term in observable.terms:
        x_mask, z_mask, n_y = _masks(term)
        rows.append(idx ^ x_mask)
        cols.append(idx)
        data.append(term.coefficient * (1j**n_y) * (1 - 2 * bit_parity(idx & z_mask)))
    if not rows:
        return sparse.csr_matrix((dim, dim), dtype=np.complex128)
    matrix = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )
    return matrix.tocsr()


def probabilities(state: QuantumState) -> np.ndarray:
    probs = np.abs(state) ** 2
    return probs / probs.sum()


def sample_measurements(state: QuantumState, shots: int, seed: SeedLike = None) -> ShotCounts:
    """Draw `shots` computational-basis outcomes from |amplitude|^2."""
    if shots <= 0:
        raise CircuitError("shots must be positive")
    n = num_qubits_of(state)
    check_normalized(state)
    rng = derive_rng(seed)
    counts = rng.multinomial(int(shots), probabilities(state))
    nonzero = np.flatnonzero(counts)
    return ShotCounts.from_arrays(n, nonzero, counts[nonzero])


def haar_random_state(num_qubits: int, seed: SeedLike = None) -> QuantumState:
    """Normalized complex Gaussian vector: Haar-distributed on the unit sphere."""
    if num_qubits < 1:
        raise CircuitError("num_qubits must be positive")
    rng = derive_rng(seed)
    dim = 2**num_qubits
    vector = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return vector / np.linalg.norm(vector)


def phase_distance(a: QuantumState, b: QuantumState) -> float:
    """min over alpha of ||a - e^{i alpha} b|| for unit vectors."""
    overlap = min(abs(np.vdot(a, b)), 1.0)
    return float(np.sqrt(max(2.0 - 2.0 * overlap, 0.0)))
