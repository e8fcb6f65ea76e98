"""Experiment registry: one module per experiment, each exposing `run`."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

from nisqkit.models import ReadoutNoiseModel, TransverseIsingModel

log = logging.getLogger(__name__)

VALID_EXPERIMENTS = ("histogram", "scaling", "eigenvalue")


class ExperimentError(ValueError):
    """Raised for invalid experiment configurations or unusable data."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    model: TransverseIsingModel | None = None
    noise: ReadoutNoiseModel | None = None
    shots: tuple[int, ...] = ()
    repetitions: int | None = None
    output: str | None = None
    # Experiment-specific keys (bins, calibration_shots, circuit, params, ...)
    options: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in VALID_EXPERIMENTS:
            raise ExperimentError(
                f"unknown experiment {self.experiment!r}, expected one of {VALID_EXPERIMENTS}"
            )
        object.__setattr__(self, "shots", tuple(int(s) for s in self.shots))
        if any(s <= 0 for s in self.shots):
            raise ExperimentError("shot counts must be positive")
        if self.repetitions is not None and self.repetitions < 1:
            raise ExperimentError("repetitions must be at least 1")


@dataclass(frozen=True)
class ExperimentOutput:
    headers: Sequence[str]
    rows: list[tuple]
    meta: dict[str, Any]


Runner = Callable[..., ExperimentOutput]


def register_experiments() -> dict[str, Runner]:
    from nisqkit.experiments.eigenvalues import run as eigenvalue_run
    from nisqkit.experiments.histogram import run as histogram_run
    from nisqkit.experiments.scaling import run as scaling_run

    return {
        "histogram": histogram_run,
        "scaling": scaling_run,
        "eigenvalue": eigenvalue_run,
    }


def run_experiment(config: ExperimentConfig, bootstrap: int = 200, max_diag_qubits: int = 14) -> ExperimentOutput:
    """Dispatch `config` to its experiment module."""
    runner = register_experiments()[config.experiment]
    log.info("Running %s experiment (seed %d)", config.experiment, config.seed)
    output = runner(config, bootstrap=bootstrap, max_diag_qubits=max_diag_qubits)
    log.info("%s experiment produced %d rows", config.experiment, len(output.rows))
    return output
