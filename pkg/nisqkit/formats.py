"""JSON artifacts: circuits, reports, noise models, calibrations, counts, configs.

Every artifact written here carries "qubit_order": "little-endian" (qubit 0 is
the least significant bit, the rightmost bitstring character).
"""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from nisqkit.experiments import ExperimentConfig, ExperimentError
from nisqkit.models import (
    VALID_GATES,
    CalibrationRecord,
    CircuitError,
    ExpressivityReport,
    GateSpec,
    ParameterVerdict,
    ParametricCircuit,
    PauliSum,
    PauliTerm,
    ReadoutNoiseModel,
    ShotCounts,
    TransverseIsingModel,
)

FORMAT_VERSION = 1
QUBIT_ORDER = "little-endian"
META_SUFFIX = ".meta.json"


class FormatError(ValueError):
    """Raised when a JSON artifact is malformed or incompatible."""


def encode_value(value: Any) -> Any:
    """Convert numpy and tuple values into plain JSON types."""
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [encode_value(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [encode_value(v) for v in value]
    if isinstance(value, dict):
        return {str(k): encode_value(v) for k, v in value.items()}
    raise TypeError(f"Cannot encode value of type {type(value).__name__}")


def load_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"Cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path.name} is not valid JSON: {exc}") from exc


def dump_json(data: Any, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(encode_value(data), indent=2) + "\n", encoding="utf-8")


def _require(data: Any, key: str, what: str) -> Any:
    if not isinstance(data, dict):
        raise FormatError(f"{what} must be a JSON object")
    if key not in data:
        raise FormatError(f"{what} is missing {key!r}")
    return data[key]


def _check_header(data: dict, what: str) -> None:
    version = data.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise FormatError(f"{what}: unsupported format_version {version!r} (expected {FORMAT_VERSION})")
    order = data.get("qubit_order", QUBIT_ORDER)
    if order != QUBIT_ORDER:
        raise FormatError(f"{what}: qubit_order must be {QUBIT_ORDER!r}, got {order!r}")


def _header() -> dict:
    return {"format_version": FORMAT_VERSION, "qubit_order": QUBIT_ORDER}


def _real(value: Any, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise FormatError(f"{what} must be a finite number, got {value!r}")
    return float(value)


def _integer(value: Any, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError(f"{what} must be an integer, got {value!r}")
    return value


# Circuits

def encode_circuit(circuit: ParametricCircuit) -> dict:
    gates = []
    for gate in circuit.gates:
        item = {"gate": gate.gate, "qubits": list(gate.qubits)}
        if gate.param is not None:
            item["param"] = gate.param
        elif gate.value is not None:
            item["value"] = gate.value
        gates.append(item)
    return {
        **_header(),
        "num_qubits": circuit.num_qubits,
        "gates": gates,
        "parameter_order": list(circuit.parameters),
    }


def decode_circuit(data: Any) -> ParametricCircuit:
    num_qubits = _integer(_require(data, "num_qubits", "circuit"), "num_qubits")
    _check_header(data, "circuit")
    raw_gates = _require(data, "gates", "circuit")
    if not isinstance(raw_gates, list):
        raise FormatError("circuit 'gates' must be a list")
    gates = []
    for pos, item in enumerate(raw_gates):
        name = _require(item, "gate", f"gate {pos}")
        if name not in VALID_GATES:
            raise FormatError(f"gate {pos}: unknown gate {name!r}")
        value = item.get("value")
        try:
            gates.append(GateSpec(
                name,
                tuple(_require(item, "qubits", f"gate {pos}")),
                param=item.get("param"),
                value=None if value is None else _real(value, f"gate {pos} value"),
            ))
        except (ValueError, TypeError) as exc:
            raise FormatError(f"gate {pos}: {exc}") from exc
    order = data.get("parameter_order")
    try:
        return ParametricCircuit.build(num_qubits, gates, order)
    except CircuitError as exc:
        raise FormatError(f"invalid circuit: {exc}") from exc


# Expressivity reports

def encode_report(report: ExpressivityReport) -> dict:
    return {
        **_header(),
        "point": list(report.point),
        "epsilon": report.epsilon,
        "mode": report.mode,
        "verdicts": [
            {"param": v.param, "independent": v.independent, "min_eigenvalue": v.min_eigenvalue}
            for v in report.verdicts
        ],
        "independent_count": report.independent_count,
        "dim_target": report.dim_target,
        "maximally_expressive": report.maximally_expressive,
        "operation_counts": dict(report.operation_counts),
    }


def decode_report(data: Any) -> ExpressivityReport:
    _require(data, "verdicts", "report")
    _check_header(data, "report")
    verdicts = []
    for pos, item in enumerate(data["verdicts"]):
        eig = item.get("min_eigenvalue")
        verdicts.append(ParameterVerdict(
            str(_require(item, "param", f"verdict {pos}")),
            bool(_require(item, "independent", f"verdict {pos}")),
            None if eig is None else _real(eig, f"verdict {pos} min_eigenvalue"),
        ))
    report = ExpressivityReport(
        point=tuple(_real(x, "point entry") for x in _require(data, "point", "report")),
        epsilon=_real(_require(data, "epsilon", "report"), "epsilon"),
        verdicts=tuple(verdicts),
        dim_target=_integer(_require(data, "dim_target", "report"), "dim_target"),
        mode=data.get("mode", "exact"),
        operation_counts=dict(data.get("operation_counts", {})),
    )
    if "independent_count" in data and data["independent_count"] != report.independent_count:
        raise FormatError("report independent_count disagrees with its verdicts")
    return report


# Noise models and calibrations

def encode_noise_model(model: ReadoutNoiseModel) -> dict:
    return {
        **_header(),
        "qubits": [{"q": q, "p0": p0, "p1": p1} for q, (p0, p1) in enumerate(zip(model.p0, model.p1))],
    }


def decode_noise_model(data: Any, num_qubits: int | None = None) -> ReadoutNoiseModel:
    """Full per-qubit form, or {"p0": x, "p1": y} applied to `num_qubits` qubits."""
    if isinstance(data, dict) and "qubits" not in data and "p0" in data:
        if num_qubits is None:
            raise FormatError("a uniform noise model needs a qubit count")
        p0 = _real(data["p0"], "p0")
        return _noise(lambda: ReadoutNoiseModel.uniform(num_qubits, p0, _real(data.get("p1", p0), "p1")))
    _require(data, "qubits", "noise model")
    _check_header(data, "noise model")
    entries = sorted(data["qubits"], key=lambda item: _integer(_require(item, "q", "noise entry"), "q"))
    if [item["q"] for item in entries] != list(range(len(entries))):
        raise FormatError("noise model must list qubits 0..n-1 exactly once")
    return _noise(lambda: ReadoutNoiseModel(
        tuple(_real(_require(item, "p0", "noise entry"), "p0") for item in entries),
        tuple(_real(_require(item, "p1", "noise entry"), "p1") for item in entries),
    ))


def _noise(factory) -> ReadoutNoiseModel:
    try:
        return factory()
    except CircuitError as exc:
        raise FormatError(f"invalid noise model: {exc}") from exc


def encode_calibration(record: CalibrationRecord) -> dict:
    data = encode_noise_model(record.model)
    data.update({
        "stderr0": list(record.stderr0),
        "stderr1": list(record.stderr1),
        "shots": record.shots,
        "run_index": record.run_index,
    })
    if record.timestamp is not None:
        data["timestamp"] = record.timestamp
    return data


def decode_calibration(data: Any) -> CalibrationRecord:
    model = decode_noise_model(data)
    stderr0 = tuple(_real(x, "stderr0") for x in _require(data, "stderr0", "calibration"))
    stderr1 = tuple(_real(x, "stderr1") for x in _require(data, "stderr1", "calibration"))
    if len(stderr0) != model.num_qubits or len(stderr1) != model.num_qubits:
        raise FormatError("calibration standard errors must cover every qubit")
    return CalibrationRecord(
        model=model,
        shots=_integer(_require(data, "shots", "calibration"), "shots"),
        stderr0=stderr0,
        stderr1=stderr1,
        run_index=_integer(data.get("run_index", 0), "run_index"),
        timestamp=data.get("timestamp"),
    )


def decode_noise_or_calibration(data: Any) -> CalibrationRecord | ReadoutNoiseModel:
    if isinstance(data, dict) and "stderr0" in data:
        return decode_calibration(data)
    return decode_noise_model(data)


# Counts and observables

def encode_counts(counts: ShotCounts) -> dict:
    return {**_header(), "num_qubits": counts.num_qubits, "counts": dict(counts.counts)}


def decode_counts(data: Any) -> ShotCounts:
    raw = _require(data, "counts", "counts")
    _check_header(data, "counts")
    if not isinstance(raw, dict) or not raw:
        raise FormatError("counts must be a non-empty object of bitstring -> count")
    num_qubits = data.get("num_qubits", len(next(iter(raw))))
    try:
        return ShotCounts(_integer(num_qubits, "num_qubits"), {
            str(bits): _integer(n, f"count for {bits}") for bits, n in raw.items()
        })
    except CircuitError as exc:
        raise FormatError(f"invalid counts: {exc}") from exc


def encode_observable(observable: PauliSum) -> dict:
    return {
        **_header(),
        "terms": [
            {"coefficient": t.coefficient, "string": {str(q): p for q, p in t.paulis}}
            for t in observable.terms
        ],
    }


def decode_observable(data: Any) -> PauliSum:
    raw = _require(data, "terms", "observable")
    _check_header(data, "observable")
    terms = []
    for pos, item in enumerate(raw):
        coefficient = _real(_require(item, "coefficient", f"term {pos}"), f"term {pos} coefficient")
        try:
            if "label" in item:
                terms.append(PauliTerm.from_label(str(item["label"]), coefficient))
            else:
                string = item.get("string", {})
                terms.append(PauliTerm(coefficient, tuple((int(q), p) for q, p in string.items())))
        except (CircuitError, ValueError) as exc:
            raise FormatError(f"term {pos}: {exc}") from exc
    try:
        return PauliSum(tuple(terms))
    except CircuitError as exc:
        raise FormatError(f"invalid observable: {exc}") from exc


# Experiment configs and result metadata

CONFIG_KEYS = ("experiment", "model", "noise", "shots", "repetitions", "seed", "output")
# Register size of the default model when a config gives uniform noise without one
DEFAULT_REGISTERS = {"histogram": 4, "scaling": 2}


def decode_experiment_config(data: Any, default_seed: int) -> ExperimentConfig:
    name = _require(data, "experiment", "experiment config")
    model = None
    if data.get("model") is not None:
        spec = data["model"]
        try:
            model = TransverseIsingModel(
                _integer(_require(spec, "L", "model"), "L"),
                J=_real(spec.get("J", -1.0), "J"),
                h=_real(spec.get("h", 1.0), "h"),
                boundary=spec.get("boundary", "periodic"),
            )
        except CircuitError as exc:
            raise FormatError(f"invalid model: {exc}") from exc
    register = model.L if model is not None else DEFAULT_REGISTERS.get(name)
    noise = None if data.get("noise") is None else decode_noise_model(data["noise"], register)

    shots = data.get("shots", [])
    shots = [shots] if isinstance(shots, int) else shots
    options = {k: v for k, v in data.items() if k not in CONFIG_KEYS}
    if "circuit" in options:
        options["circuit"] = decode_circuit(options["circuit"])
    seed = data.get("seed")
    try:
        return ExperimentConfig(
            experiment=name,
            seed=default_seed if seed is None else _integer(seed, "seed"),
            model=model,
            noise=noise,
            shots=tuple(_integer(s, "shots") for s in shots),
            repetitions=None if data.get("repetitions") is None else _integer(data["repetitions"], "repetitions"),
            output=data.get("output"),
            options=options,
        )
    except ExperimentError as exc:
        raise FormatError(str(exc)) from exc


def meta_path(output: str | Path) -> Path:
    output = Path(output)
    return output.with_name(output.name + META_SUFFIX)


def build_meta(config: dict, seed: int, results: dict, timestamp: bool = True) -> dict:
    """Result sidecar: what ran, with which seed, and the derived numbers."""
    meta = {
        **_header(),
        "tool": "nisqkit",
        "experiment": config.get("experiment"),
        "seed": seed,
        "config": config,
        "results": results,
    }
    if timestamp:
        meta["created_at"] = datetime.now(timezone.utc).isoformat()
    return meta
