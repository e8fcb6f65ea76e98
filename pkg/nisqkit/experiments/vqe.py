"""Variational ground-state search with a derivative-free local optimizer."""

from __future__ import annotations

import itertools
import logging
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from nisqkit.experiments import ExperimentError
from nisqkit.expressivity import random_point
from nisqkit.helpers import SeedLike, derive_rng
from nisqkit.models import ParametricCircuit, PauliSum, ReadoutNoiseModel
from nisqkit.readout import (
    SimulatedExecutor,
    calibrate,
    preprocess_hamiltonian,
    sample_mean,
    split_settings,
)
from nisqkit.statevector import evaluate_circuit, expectation

log = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 2000
DEFAULT_TOL = 1e-10


class VQEResult(NamedTuple):
    params: np.ndarray
    energy: float


def _shot_objective(circuit, hamiltonian, shots, noise, mitigate, calibration_shots, seed):
    executor = SimulatedExecutor(circuit.num_qubits, noise)
    if mitigate:
        record = calibrate(executor, shots=calibration_shots or shots, seed=derive_rng(seed, 2))
        operators = {s: op.corrected for s, op in preprocess_hamiltonian(hamiltonian, record.model).items()}
    else:
        operators = split_settings(hamiltonian)
    calls = itertools.count()

    def objective(theta):
        state = evaluate_circuit(circuit, theta)
        call = next(calls)
        energy = 0.0
        for k, (setting, operator) in enumerate(sorted(operators.items())):
            counts = executor.measure_setting(state, setting, shots, derive_rng(seed, 1, call, k))
            energy += sample_mean(counts, operator)
        return energy

    return objective


def vqe_minimize(circuit: ParametricCircuit, hamiltonian: PauliSum, seed: SeedLike = None,
                 initial=None, restarts: int = 1, max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL,
                 shots: int | None = None, noise: ReadoutNoiseModel | None = None, mitigate: bool = False,
                 calibration_shots: int | None = None) -> VQEResult:
    """Minimize <C(theta)|H|C(theta)> with Powell's method.

    Without `shots` the objective is the exact expectation. With `shots` each
    evaluation samples both measurement settings, optionally through readout
    noise and the corrected Hamiltonian. The best of `restarts` runs is returned.
    """
    if restarts < 1:
        raise ExperimentError("restarts must be at least 1")
    if circuit.num_parameters == 0:
        raise ExperimentError("circuit has no parameters to optimize")
    if shots is None:
        def objective(theta):
            return expectation(evaluate_circuit(circuit, theta), hamiltonian)
    else:
        if shots <= 0:
            raise ExperimentError("shots must be positive")
        objective = _shot_objective(circuit, hamiltonian, shots, noise, mitigate, calibration_shots, seed)

    best: VQEResult | None = None
    for attempt in range(restarts):
        if attempt == 0 and initial is not None:
            start = np.asarray(initial, dtype=float)
        else:
            start = random_point(circuit, derive_rng(seed, 0, attempt))
        result = minimize(
            objective, start, method="Powell",
            options={"maxiter": max_iter, "xtol": tol, "ftol": tol},
        )
        if not result.success:
            log.warning("Powell stopped without converging: %s", result.message)
        log.debug("restart %d: energy %.10f after %d evaluations", attempt, result.fun, result.nfev)
        if best is None or result.fun < best.energy:
            best = VQEResult(np.asarray(result.x, dtype=float), float(result.fun))
    return best
