"""Error-versus-shots scaling of mitigated and raw two-qubit ZZ estimates."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from nisqkit.experiments import ExperimentConfig, ExperimentError, ExperimentOutput
from nisqkit.helpers import SeedLike, derive_rng
from nisqkit.models import PauliSum, ReadoutNoiseModel
from nisqkit.readout import SimulatedExecutor, calibrate, mitigated_expectation, sample_mean
from nisqkit.statevector import expectation, haar_random_state

log = logging.getLogger(__name__)

HEADERS = ("shots", "mean_err_mitigated", "std_mitigated", "mean_err_raw", "std_raw")
DEFAULT_SHOTS_GRID = tuple(2**k for k in range(4, 14))
DEFAULT_REPETITIONS = 256
OBSERVABLE = PauliSum.from_labels([(1.0, "Z0 Z1")])


@dataclass(frozen=True)
class PowerLawFit:
    a: float
    beta: float
    points: int


def power_law_fit(shots: Sequence[float], errors: Sequence[float], lowest: int | None = None) -> PowerLawFit:
    """Least squares of log(error) on log(shots) for error = a * shots**(-beta).

    `lowest` keeps only the points with the smallest shot counts.
    """
    s = np.asarray(shots, dtype=float)
    e = np.asarray(errors, dtype=float)
    if s.shape != e.shape:
        raise ExperimentError("shots and errors must have the same length")
    if lowest is not None:
        order = np.argsort(s, kind="stable")[:lowest]
        s, e = s[order], e[order]
    if s.size < 2:
        raise ExperimentError("a power-law fit needs at least 2 points")
    if np.any(s <= 0) or np.any(e <= 0):
        raise ExperimentError("power-law fits need positive shots and errors")
    fit = stats.linregress(np.log(s), np.log(e))
    return PowerLawFit(a=float(np.exp(fit.intercept)), beta=float(-fit.slope), points=int(s.size))


def bootstrap_exponent(shots: Sequence[int], errors: np.ndarray, resamples: int = 200,
                       seed: SeedLike = None, lowest: int | None = None) -> float:
    """Standard deviation of beta over repetitions resampled with replacement.

    `errors` has one row per repetition and one column per shot count.
    """
    errors = np.asarray(errors, dtype=float)
    if resamples < 2:
        raise ExperimentError("bootstrap needs at least 2 resamples")
    rng = derive_rng(seed)
    betas = []
    for _ in range(resamples):
        rows = rng.integers(0, errors.shape[0], size=errors.shape[0])
        mean_errors = errors[rows].mean(axis=0)
        if np.any(mean_errors <= 0):
            continue
        betas.append(power_law_fit(shots, mean_errors, lowest).beta)
    if len(betas) < 2:
        raise ExperimentError("too few usable bootstrap resamples")
    return float(np.std(betas, ddof=1))


@dataclass(frozen=True, eq=False)
class ScalingResult:
    shots: tuple[int, ...]
    errors_mitigated: np.ndarray
    errors_raw: np.ndarray

    def _std(self, errors: np.ndarray) -> np.ndarray:
        ddof = 1 if errors.shape[0] > 1 else 0
        return errors.std(axis=0, ddof=ddof)

    @property
    def mean_err_mitigated(self) -> np.ndarray:
        return self.errors_mitigated.mean(axis=0)

    @property
    def std_mitigated(self) -> np.ndarray:
        return self._std(self.errors_mitigated)

    @property
    def mean_err_raw(self) -> np.ndarray:
        return self.errors_raw.mean(axis=0)

    @property
    def std_raw(self) -> np.ndarray:
        return self._std(self.errors_raw)

    def fit(self, mitigated: bool = True, lowest: int | None = None) -> PowerLawFit:
        errors = self.mean_err_mitigated if mitigated else self.mean_err_raw
        return power_law_fit(self.shots, errors, lowest)

    def rows(self) -> list[tuple]:
        return [
            (s, float(a), float(b), float(c), float(d))
            for s, a, b, c, d in zip(
                self.shots, self.mean_err_mitigated, self.std_mitigated, self.mean_err_raw, self.std_raw
            )
        ]


def scaling_experiment(repetitions: int, shots_grid: Sequence[int], noise: ReadoutNoiseModel | None,
                       seed: SeedLike = None, calibration_shots: int | None = None) -> ScalingResult:
    """Absolute ZZ errors over Haar-random two-qubit states for every shot count.

    Every (state, shots) run is recalibrated with `calibration_shots` (the run's
    own shot count by default) before mitigating.
    """
    if repetitions < 1:
        raise ExperimentError("repetitions must be at least 1")
    shots_grid = tuple(int(s) for s in shots_grid)
    if not shots_grid or any(s <= 0 for s in shots_grid):
        raise ExperimentError("shots grid must hold positive shot counts")

    executor = SimulatedExecutor(2, noise)
    mitigated = np.empty((repetitions, len(shots_grid)))
    raw = np.empty_like(mitigated)
    for r in range(repetitions):
        state = haar_random_state(2, derive_rng(seed, r, 0))
        exact = expectation(state, OBSERVABLE)
        for i, shots in enumerate(shots_grid):
            counts = executor.measure(state, shots, derive_rng(seed, r, 1, i))
            record = calibrate(executor, shots=calibration_shots or shots, seed=derive_rng(seed, r, 2, i))
            raw[r, i] = abs(sample_mean(counts, OBSERVABLE) - exact)
            mitigated[r, i] = abs(mitigated_expectation(counts, OBSERVABLE, record.model) - exact)
    log.info("scaling: %d states over %d shot counts", repetitions, len(shots_grid))
    return ScalingResult(shots_grid, mitigated, raw)


def run(config: ExperimentConfig, bootstrap: int = 200, max_diag_qubits: int = 14) -> ExperimentOutput:
    options = dict(config.options)
    shots_grid = config.shots or DEFAULT_SHOTS_GRID
    result = scaling_experiment(
        config.repetitions or DEFAULT_REPETITIONS,
        shots_grid,
        config.noise,
        seed=config.seed,
        calibration_shots=options.get("calibration_shots"),
    )
    meta = {}
    for label, mitigated in (("mitigated", True), ("raw", False)):
        for subset, lowest in (("full", None), ("lowest4", 4)):
            if lowest is not None and len(shots_grid) < lowest:
                continue
            fit = result.fit(mitigated, lowest)
            errors = result.errors_mitigated if mitigated else result.errors_raw
            meta[f"fit_{label}_{subset}"] = {
                "a": fit.a,
                "beta": fit.beta,
                "beta_stderr": bootstrap_exponent(
                    result.shots, errors, bootstrap, derive_rng(config.seed, 9), lowest
                ),
            }
    return ExperimentOutput(HEADERS, result.rows(), meta)
