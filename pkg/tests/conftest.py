"""Shared pytest fixtures."""

import json
import os

import numpy as np
import pytest

# Keep test runs quiet and independent of a developer .env
os.environ.setdefault("NISQKIT_LOG_LEVEL", "WARNING")

from nisqkit.models import GateSpec, ParametricCircuit  # noqa: E402

RANDOM_GATES = ("rx", "ry", "rz", "crx", "cry", "crz", "cnot", "h")


@pytest.fixture
def yzx_circuit():
    """R_Y(t3) R_Z(t2) R_X(t1) |0>."""
    return ParametricCircuit.build(1, [
        GateSpec("rx", (0,), param="t1"),
        GateSpec("rz", (0,), param="t2"),
        GateSpec("ry", (0,), param="t3"),
    ])


@pytest.fixture
def rxrx_circuit():
    return ParametricCircuit.build(1, [
        GateSpec("rx", (0,), param="t1"),
        GateSpec("rx", (0,), param="t2"),
    ])


@pytest.fixture
def make_random_circuit():
    """Factory for seeded random circuits; some parameters drive two gates."""

    def factory(seed: int, num_qubits: int, max_params: int, num_gates: int | None = None):
        rng = np.random.default_rng(seed)
        num_gates = num_gates or 2 * max_params
        gates: list[GateSpec] = []
        names: list[str] = []
        for _ in range(num_gates):
            choices = RANDOM_GATES if num_qubits > 1 else ("rx", "ry", "rz", "h")
            name = str(rng.choice(choices))
            if name in ("crx", "cry", "crz", "cnot"):
                qubits = tuple(int(q) for q in rng.choice(num_qubits, size=2, replace=False))
            else:
                qubits = (int(rng.integers(num_qubits)),)
            if name in ("cnot", "h"):
                gates.append(GateSpec(name, qubits))
                continue
            if names and (len(names) >= max_params or rng.random() < 0.15):
                param = names[int(rng.integers(len(names)))]
            else:
                param = f"p{len(names)}"
                names.append(param)
            gates.append(GateSpec(name, qubits, param=param))
        if not names:
            gates.append(GateSpec("ry", (0,), param="p0"))
        return ParametricCircuit.build(num_qubits, gates)

    return factory


@pytest.fixture
def write_json(tmp_path):
    """Write `data` to tmp_path/name and return the path as a string."""

    def writer(name: str, data) -> str:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    return writer
