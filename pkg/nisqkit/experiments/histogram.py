"""Energy histogram of a prepared ground state measured through readout noise."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from nisqkit.experiments import ExperimentConfig, ExperimentError, ExperimentOutput
from nisqkit.experiments.ising import build_ti_hamiltonian, exact_ground_state
from nisqkit.experiments.vqe import vqe_minimize
from nisqkit.expressivity import inductive_ansatz
from nisqkit.helpers import SeedLike, derive_rng
from nisqkit.models import PauliSum, QuantumState, ReadoutNoiseModel, TransverseIsingModel
from nisqkit.readout import (
    SimulatedExecutor,
    calibrate,
    distribution_for,
    forward_observable,
    mitigated_expectation,
    outcome_values,
    sample_mean,
    split_settings,
)
from nisqkit.statevector import evaluate_circuit, num_qubits_of

log = logging.getLogger(__name__)

HEADERS = ("experiment_index", "noisy_energy", "mitigated_energy")
STATE_SOURCES = ("exact", "vqe")
DEFAULT_BINS = 32


@dataclass(frozen=True, eq=False)
class HistogramResult:
    noisy_energies: np.ndarray
    mitigated_energies: np.ndarray
    exact_energy: float
    predicted_mean: float
    predicted_std: float
    fit_mean: float
    fit_std: float
    bin_edges: np.ndarray
    bin_counts: np.ndarray

    @property
    def experiments(self) -> int:
        return int(self.noisy_energies.shape[0])

    def rows(self) -> list[tuple]:
        return [
            (i, float(noisy), float(mitigated))
            for i, (noisy, mitigated) in enumerate(zip(self.noisy_energies, self.mitigated_energies))
        ]


def predict_noisy_energy(state: QuantumState, hamiltonian: PauliSum,
                         noise: ReadoutNoiseModel | None, shots_per_setting: int) -> tuple[float, float]:
    """(mean, standard deviation) of the unmitigated energy estimate.

    The mean damps every term with its forward gamma factors; the spread comes
    from the exact per-shot outcome distribution in each setting.
    """
    n = num_qubits_of(state)
    mean = 0.0
    variance = 0.0
    for setting, operator in split_settings(hamiltonian).items():
        noiseless = distribution_for(state, setting, None)
        damped = operator if noise is None else forward_observable(operator, noise)
        mean += float(noiseless @ outcome_values(n, damped))

        measured = distribution_for(state, setting, noise)
        values = outcome_values(n, operator)
        setting_mean = float(measured @ values)
        variance += float(measured @ (values - setting_mean) ** 2) / shots_per_setting
    return mean, math.sqrt(variance)


def histogram_experiment(model: TransverseIsingModel, noise: ReadoutNoiseModel | None, experiments: int,
                         shots_per_setting: int, seed: SeedLike = None, bins: int = DEFAULT_BINS,
                         calibration_shots: int | None = None, state_source: str = "exact",
                         max_diag_qubits: int = 14) -> HistogramResult:
    """Repeat the two-setting energy measurement of the ground state.

    Each experiment recalibrates the readout model and mitigates with the
    estimate; total shots per experiment are twice `shots_per_setting`.
    """
    if experiments < 1 or shots_per_setting < 1:
        raise ExperimentError("experiments and shots_per_setting must be positive")
    if state_source not in STATE_SOURCES:
        raise ExperimentError(f"state_source must be one of {STATE_SOURCES}")

    hamiltonian = build_ti_hamiltonian(model)
    exact_energy, state = exact_ground_state(hamiltonian, model.L, max_qubits=max_diag_qubits)
    if state_source == "vqe":
        circuit = inductive_ansatz(model.L)
        params, _ = vqe_minimize(circuit, hamiltonian, seed=derive_rng(seed, 3), restarts=3)
        state = evaluate_circuit(circuit, params)

    executor = SimulatedExecutor(model.L, noise)
    settings = split_settings(hamiltonian)
    noisy = np.empty(experiments)
    mitigated = np.empty(experiments)
    for r in range(experiments):
        record = calibrate(executor, shots=calibration_shots or shots_per_setting, seed=derive_rng(seed, r, 2))
        noisy[r] = mitigated[r] = 0.0
        for k, (setting, operator) in enumerate(sorted(settings.items())):
            counts = executor.measure_setting(state, setting, shots_per_setting, derive_rng(seed, r, k))
            noisy[r] += sample_mean(counts, operator)
            mitigated[r] += mitigated_expectation(counts, operator, record.model)

    predicted_mean, predicted_std = predict_noisy_energy(state, hamiltonian, noise, shots_per_setting)
    if experiments > 1:
        fit_mean, fit_std = stats.norm.fit(noisy)
    else:
        fit_mean, fit_std = float(noisy[0]), 0.0
    counts, edges = np.histogram(noisy, bins=bins)
    log.info("histogram: %d experiments, noisy mean %.6f, prediction %.6f, exact %.6f",
             experiments, noisy.mean(), predicted_mean, exact_energy)
    return HistogramResult(
        noisy_energies=noisy,
        mitigated_energies=mitigated,
        exact_energy=exact_energy,
        predicted_mean=predicted_mean,
        predicted_std=predicted_std,
        fit_mean=float(fit_mean),
        fit_std=float(fit_std),
        bin_edges=edges,
        bin_counts=counts,
    )


def run(config: ExperimentConfig, bootstrap: int = 200, max_diag_qubits: int = 14) -> ExperimentOutput:
    model = config.model or TransverseIsingModel(4)
    shots = config.shots[0] if config.shots else 2048
    options = dict(config.options)
    result = histogram_experiment(
        model,
        config.noise,
        config.repetitions or 2048,
        shots,
        seed=config.seed,
        bins=int(options.get("bins", DEFAULT_BINS)),
        calibration_shots=options.get("calibration_shots"),
        state_source=options.get("state_source", "exact"),
        max_diag_qubits=max_diag_qubits,
    )
    meta = {
        "exact_energy": result.exact_energy,
        "predicted_mean": result.predicted_mean,
        "predicted_std": result.predicted_std,
        "fit": {"family": "gaussian", "mean": result.fit_mean, "std": result.fit_std},
        "mitigated_mean": float(result.mitigated_energies.mean()),
        "bin_edges": result.bin_edges.tolist(),
        "bin_counts": result.bin_counts.tolist(),
    }
    return ExperimentOutput(HEADERS, result.rows(), meta)
