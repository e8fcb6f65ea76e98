"""Smallest Gram-matrix eigenvalues estimated from simulated ancilla measurements."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from nisqkit.experiments import ExperimentConfig, ExperimentError, ExperimentOutput
from nisqkit.expressivity import HadamardTestSample, gram_matrix, sample_gram_entry
from nisqkit.helpers import SeedLike, derive_rng, derive_seed
from nisqkit.models import GateSpec, ParametricCircuit

log = logging.getLogger(__name__)

HEADERS = ("shots", "eig_smallest", "eig_smallest_stderr", "eig_second", "eig_second_stderr")
DEFAULT_SHOTS = (1000, 4000, 8000)
DEFAULT_RESAMPLES = 200


def planted_redundancy_circuit() -> tuple[ParametricCircuit, tuple[float, ...]]:
    """R_X R_Z R_X on one qubit plus a repeated R_X, and a generic point.

    The repeated rotation gives S an exact zero eigenvalue; at t2 = 1.3 the
    next smallest is about 0.218.
    """
    circuit = ParametricCircuit.build(1, [
        GateSpec("rx", (0,), param="t1"),
        GateSpec("rz", (0,), param="t2"),
        GateSpec("rx", (0,), param="t3"),
        GateSpec("rx", (0,), param="t4"),
    ])
    return circuit, (0.7, 1.3, 0.4, 0.9)


@dataclass(frozen=True)
class EigenvalueEstimate:
    shots: int
    eigenvalues: np.ndarray
    stderr: np.ndarray

    def row(self) -> tuple:
        return (self.shots, float(self.eigenvalues[0]), float(self.stderr[0]),
                float(self.eigenvalues[1]), float(self.stderr[1]))


def _entry_value(samples: Sequence[HadamardTestSample], successes=None) -> float:
    if successes is None:
        return float(sum(s.estimate for s in samples))
    return float(sum(s.weight * (2.0 * k / s.shots - 1.0) for s, k in zip(samples, successes)))


def _assemble(n: int, entries: dict[tuple[int, int], float]) -> np.ndarray:
    matrix = np.zeros((n, n))
    for (j, l), value in entries.items():
        matrix[j, l] = matrix[l, j] = value
    return (matrix + matrix.T) / 2


def estimate_eigenvalues(circuit: ParametricCircuit, params, shots: int, seed: SeedLike = None,
                         resamples: int = DEFAULT_RESAMPLES) -> EigenvalueEstimate:
    """Sorted eigenvalues of the sampled S with bootstrap standard errors.

    Bootstrap replicas redraw every Hadamard test's successes from the
    binomial with the observed success rate.
    """
    n = circuit.num_parameters
    samples = {
        (j, l): sample_gram_entry(circuit, params, j, l, shots, seed)
        for j in range(n) for l in range(j, n)
    }
    estimate = np.linalg.eigvalsh(_assemble(n, {k: _entry_value(v) for k, v in samples.items()}))

    rng = derive_rng(seed, n, n)
    replicas = []
    for _ in range(resamples):
        entries = {
            key: _entry_value(group, [rng.binomial(s.shots, s.successes / s.shots) for s in group])
            for key, group in samples.items()
        }
        replicas.append(np.linalg.eigvalsh(_assemble(n, entries)))
    stderr = np.std(np.array(replicas), axis=0, ddof=1) if resamples > 1 else np.zeros(n)
    return EigenvalueEstimate(int(shots), estimate, stderr)


def eigenvalue_shot_experiment(circuit: ParametricCircuit, params, shots_list: Sequence[int] = DEFAULT_SHOTS,
                               seed: SeedLike = None, resamples: int = DEFAULT_RESAMPLES) -> list[EigenvalueEstimate]:
    """One sampled S per shot budget, each from its own stream."""
    if circuit.num_parameters < 2:
        raise ExperimentError("the eigenvalue experiment needs at least 2 parameters")
    out = []
    for b, shots in enumerate(shots_list):
        estimate = estimate_eigenvalues(circuit, params, shots, derive_seed(seed, b), resamples)
        log.debug("shots %d: eigenvalues %s +- %s", shots, estimate.eigenvalues, estimate.stderr)
        out.append(estimate)
    return out


def exact_eigenvalues(circuit: ParametricCircuit, params) -> np.ndarray:
    return gram_matrix(circuit, params).eigenvalues()


def run(config: ExperimentConfig, bootstrap: int = 200, max_diag_qubits: int = 14) -> ExperimentOutput:
    options = dict(config.options)
    circuit, params = planted_redundancy_circuit()
    if "circuit" in options:
        circuit = options["circuit"]
        if "params" not in options:
            raise ExperimentError("a custom circuit needs 'params'")
    if "params" in options:
        params = tuple(float(x) for x in options["params"])
    estimates = eigenvalue_shot_experiment(
        circuit, params, config.shots or DEFAULT_SHOTS, seed=config.seed, resamples=bootstrap,
    )
    meta = {
        "parameters": list(circuit.parameters),
        "point": list(params),
        "exact_eigenvalues": exact_eigenvalues(circuit, params).tolist(),
        "bootstrap_resamples": bootstrap,
    }
    return ExperimentOutput(HEADERS, [e.row() for e in estimates], meta)
