"""Transverse-field Ising chain and exact ground states."""

from __future__ import annotations

import logging

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from nisqkit.experiments import ExperimentError
from nisqkit.models import PauliSum, PauliTerm, QuantumState, TransverseIsingModel
from nisqkit.statevector import pauli_sum_matrix

log = logging.getLogger(__name__)

MAX_DIAG_QUBITS = 14
DENSE_LIMIT = 10
RESIDUAL_TOL = 1e-9


def build_ti_hamiltonian(model: TransverseIsingModel) -> PauliSum:
    """J sum Z_i Z_{i+1} + h sum X_i.

    A periodic L=2 chain counts its single bond twice; zero coefficients are dropped.
    """
    L = model.L
    bonds = [(i, i + 1) for i in range(L - 1)]
    if model.boundary == "periodic":
        bonds.append((L - 1, 0))
    terms = [PauliTerm(model.J, ((a, "Z"), (b, "Z"))) for a, b in bonds]
    terms += [PauliTerm(model.h, ((i, "X"),)) for i in range(L)]
    return PauliSum.combine(terms).simplify()


def _fix_phase(vector: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude amplitude real and positive."""
    pivot = vector[np.argmax(np.abs(vector))]
    return vector * (abs(pivot) / pivot)


def exact_ground_state(hamiltonian: PauliSum, num_qubits: int | None = None,
                       max_qubits: int = MAX_DIAG_QUBITS) -> tuple[float, QuantumState]:
    """Lowest eigenvalue and a normalized eigenvector."""
    n = max(hamiltonian.min_qubits, 1) if num_qubits is None else num_qubits
    if n > max_qubits:
        raise ExperimentError(f"exact diagonalization limited to {max_qubits} qubits, got {n}")
    matrix = pauli_sum_matrix(hamiltonian, n)
    if n <= DENSE_LIMIT:
        values, vectors = scipy.linalg.eigh(matrix.toarray(), subset_by_index=[0, 0])
    else:
        values, vectors = scipy.sparse.linalg.eigsh(matrix, k=1, which="SA", tol=1e-12)
    energy = float(values[0])
    state = _fix_phase(vectors[:, 0].astype(np.complex128))
    state /= np.linalg.norm(state)

    residual = float(np.linalg.norm(matrix @ state - energy * state))
    if residual > RESIDUAL_TOL:
        raise ExperimentError(f"ground-state residual {residual:.2e} exceeds {RESIDUAL_TOL:g}")
    if residual > RESIDUAL_TOL / 100:
        log.warning("ground-state residual %.2e is close to the %g limit", residual, RESIDUAL_TOL)
    log.debug("ground energy %.12f on %d qubits (residual %.1e)", energy, n, residual)
    return energy, state
