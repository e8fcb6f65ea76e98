"""Domain types shared by every nisqkit module."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import numpy.typing as npt

VALID_GATES = ("rx", "ry", "rz", "crx", "cry", "crz", "cnot", "h", "x", "z")
ROTATION_PAULI = {"rx": "X", "ry": "Y", "rz": "Z", "crx": "X", "cry": "Y", "crz": "Z"}
CONTROLLED_GATES = ("crx", "cry", "crz", "cnot")
VALID_PAULIS = ("X", "Y", "Z")
VALID_BOUNDARIES = ("periodic", "open")
VALID_SETTINGS = ("Z", "X")

# Complex amplitude vector of length 2**num_qubits; qubit 0 is the least
# significant bit of the basis-state index.
QuantumState = npt.NDArray[np.complex128]


class CircuitError(ValueError):
    """Raised when a circuit, gate, parameter vector or state is invalid."""


@dataclass(frozen=True)
class GateSpec:
    gate: str
    qubits: tuple[int, ...]
    param: str | None = None
    value: float | None = None

    def __post_init__(self):
        if self.gate not in VALID_GATES:
            raise CircuitError(f"Unknown gate {self.gate!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        arity = 2 if self.gate in CONTROLLED_GATES else 1
        if len(self.qubits) != arity:
            raise CircuitError(f"{self.gate} acts on {arity} qubit(s), got {list(self.qubits)}")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"{self.gate} has repeated qubits {list(self.qubits)}")
        if any(q < 0 for q in self.qubits):
            raise CircuitError(f"{self.gate} has a negative qubit index")
        if self.is_rotation:
            if (self.param is None) == (self.value is None):
                raise CircuitError(f"{self.gate} needs exactly one of a parameter name or a fixed value")
            if self.value is not None and not math.isfinite(self.value):
                raise CircuitError(f"{self.gate} has a non-finite angle")
        elif self.param is not None or self.value is not None:
            raise CircuitError(f"{self.gate} takes no angle")

    @property
    def is_rotation(self) -> bool:
        return self.gate in ROTATION_PAULI

    @property
    def is_controlled(self) -> bool:
        return self.gate in CONTROLLED_GATES

    @property
    def pauli(self) -> str | None:
        return ROTATION_PAULI.get(self.gate)

    def frozen(self, value: float) -> "GateSpec":
        """The same rotation with its parameter replaced by a fixed angle."""
        return GateSpec(self.gate, self.qubits, value=float(value))


@dataclass(frozen=True)
class ParametricCircuit:
    """Ordered gate list over `num_qubits` qubits.

    `parameters` fixes the parameter order; index j in every API refers to
    `parameters[j]`. A parameter may drive several gates.
    """

    num_qubits: int
    gates: tuple[GateSpec, ...] = ()
    parameters: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "parameters", tuple(self.parameters))
        if self.num_qubits < 1:
            raise CircuitError("num_qubits must be positive")
        for gate in self.gates:
            if max(gate.qubits) >= self.num_qubits:
                raise CircuitError(
                    f"{gate.gate} on qubits {list(gate.qubits)} exceeds a {self.num_qubits}-qubit register"
                )
        if len(set(self.parameters)) != len(self.parameters):
            raise CircuitError("parameter names must be unique")
        used = {g.param for g in self.gates if g.param is not None}
        unknown = used - set(self.parameters)
        if unknown:
            raise CircuitError(f"gates reference undeclared parameters: {sorted(unknown)}")
        unused = set(self.parameters) - used
        if unused:
            raise CircuitError(f"parameters drive no gate: {sorted(unused)}")

    @classmethod
    def build(cls, num_qubits: int, gates: Iterable[GateSpec], parameters: Iterable[str] | None = None):
        """Build a circuit, taking parameter order from first appearance unless given."""
        gates = tuple(gates)
        if parameters is None:
            parameters = []
            for gate in gates:
                if gate.param is not None and gate.param not in parameters:
                    parameters.append(gate.param)
        return cls(num_qubits, gates, tuple(parameters))

    @property
    def num_parameters(self) -> int:
        return len(self.parameters)

    def parameter_index(self, j: int | str) -> int:
        if isinstance(j, str):
            try:
                return self.parameters.index(j)
            except ValueError:
                raise CircuitError(f"Unknown parameter {j!r}") from None
        if isinstance(j, (int, np.integer)) and 0 <= j < self.num_parameters:
            return int(j)
        raise CircuitError(f"Parameter index {j!r} out of range for {self.num_parameters} parameters")

    def occurrences(self, j: int | str) -> list[int]:
        """Gate positions driven by parameter j."""
        name = self.parameters[self.parameter_index(j)]
        return [pos for pos, gate in enumerate(self.gates) if gate.param == name]

    def then(self, other: "ParametricCircuit") -> "ParametricCircuit":
        """Concatenation A++B: apply self first, then other."""
        if other.num_qubits != self.num_qubits:
            raise CircuitError("cannot concatenate circuits on different registers")
        params = list(self.parameters) + [p for p in other.parameters if p not in self.parameters]
        return ParametricCircuit(self.num_qubits, self.gates + other.gates, tuple(params))


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    paulis: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        if not math.isfinite(self.coefficient):
            raise CircuitError("Pauli coefficients must be finite")
        items = sorted((int(q), str(p).upper()) for q, p in dict(self.paulis).items())
        for q, p in items:
            if p not in VALID_PAULIS:
                raise CircuitError(f"Unknown Pauli {p!r} on qubit {q}")
            if q < 0:
                raise CircuitError("Pauli strings need nonnegative qubit indices")
        object.__setattr__(self, "coefficient", float(self.coefficient))
        object.__setattr__(self, "paulis", tuple(items))

    @classmethod
    def from_label(cls, label: str, coefficient: float = 1.0) -> "PauliTerm":
        """Parse 'Z0 Z1' style labels; 'I' or '' is the identity."""
        paulis = {}
        for token in label.split():
            if token.upper() == "I":
                continue
            paulis[int(token[1:])] = token[0]
        return cls(coefficient, tuple(paulis.items()))

    @property
    def label(self) -> str:
        return " ".join(f"{p}{q}" for q, p in self.paulis) or "I"

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.paulis)

    @property
    def letters(self) -> set[str]:
        return {p for _, p in self.paulis}

    @property
    def is_diagonal(self) -> bool:
        return self.letters <= {"Z"}

    def scaled(self, factor: float) -> "PauliTerm":
        return PauliTerm(self.coefficient * factor, self.paulis)


@dataclass(frozen=True)
class PauliSum:
    """Real-weighted sum of Pauli strings with unique strings."""

    terms: tuple[PauliTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        keys = [t.paulis for t in self.terms]
        if len(set(keys)) != len(keys):
            raise CircuitError("Pauli strings within one PauliSum must be unique")

    @classmethod
    def combine(cls, terms: Iterable[PauliTerm]) -> "PauliSum":
        """Sum like strings together, keeping first-appearance order."""
        merged: dict[tuple, float] = {}
        for term in terms:
            merged[term.paulis] = merged.get(term.paulis, 0.0) + term.coefficient
        return cls(tuple(PauliTerm(c, k) for k, c in merged.items()))

    @classmethod
    def from_labels(cls, items: Iterable[tuple[float, str]]) -> "PauliSum":
        return cls.combine(PauliTerm.from_label(label, c) for c, label in items)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        return PauliSum.combine(self.terms + other.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def coefficients(self) -> dict[str, float]:
        return {t.label: t.coefficient for t in self.terms}

    def simplify(self, atol: float = 0.0) -> "PauliSum":
        return PauliSum(tuple(t for t in self.terms if abs(t.coefficient) > atol))

    @property
    def is_diagonal(self) -> bool:
        return all(t.is_diagonal for t in self.terms)

    @property
    def min_qubits(self) -> int:
        """Smallest register that holds every string."""
        return max((q + 1 for t in self.terms for q in t.support), default=0)


@dataclass(frozen=True)
class ShotCounts:
    """Measurement histogram; bitstrings carry qubit 0 as the rightmost character."""

    num_qubits: int
    counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for bits, n in self.counts.items():
            if len(bits) != self.num_qubits or set(bits) - {"0", "1"}:
                raise CircuitError(f"Bitstring {bits!r} does not fit {self.num_qubits} qubits")
            if int(n) < 0:
                raise CircuitError(f"Negative count for {bits!r}")
            if int(n):
                clean[bits] = int(n)
        object.__setattr__(self, "counts", dict(sorted(clean.items())))

    @classmethod
    def from_arrays(cls, num_qubits: int, indices, counts) -> "ShotCounts":
        return cls(num_qubits, {
            format(int(i), f"0{num_qubits}b"): int(n) for i, n in zip(indices, counts) if n
        })

    @property
    def shots(self) -> int:
        return sum(self.counts.values())

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(basis indices, counts) for the observed outcomes."""
        indices = np.array([int(b, 2) for b in self.counts], dtype=np.int64)
        counts = np.array(list(self.counts.values()), dtype=np.int64)
        return indices, counts


@dataclass(frozen=True)
class ReadoutNoiseModel:
    """Per-qubit bit-flip probabilities: p0[q] reads 0 as 1, p1[q] reads 1 as 0."""

    p0: tuple[float, ...]
    p1: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "p0", tuple(float(p) for p in self.p0))
        object.__setattr__(self, "p1", tuple(float(p) for p in self.p1))
        if len(self.p0) != len(self.p1):
            raise CircuitError("p0 and p1 must cover the same qubits")
        for q, (a, b) in enumerate(zip(self.p0, self.p1)):
            if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
                raise CircuitError(f"qubit {q}: flip probabilities must lie in [0, 1]")

    @classmethod
    def uniform(cls, num_qubits: int, p0: float, p1: float | None = None) -> "ReadoutNoiseModel":
        p1 = p0 if p1 is None else p1
        return cls((p0,) * num_qubits, (p1,) * num_qubits)

    @classmethod
    def noiseless(cls, num_qubits: int) -> "ReadoutNoiseModel":
        return cls.uniform(num_qubits, 0.0)

    @property
    def num_qubits(self) -> int:
        return len(self.p0)


@dataclass(frozen=True)
class CalibrationRecord:
    model: ReadoutNoiseModel
    shots: int
    stderr0: tuple[float, ...]
    stderr1: tuple[float, ...]
    run_index: int = 0
    timestamp: str | None = None


@dataclass(frozen=True)
class MitigatedOperator:
    """Diagonal operator for one measurement setting and its bit-flip corrected form."""

    setting: str
    original: PauliSum
    corrected: PauliSum


@dataclass(frozen=True)
class ParameterVerdict:
    param: str
    independent: bool
    # None when the parameter was never tested (early stop at the target dimension)
    min_eigenvalue: float | None


@dataclass(frozen=True)
class ExpressivityReport:
    point: tuple[float, ...]
    epsilon: float
    verdicts: tuple[ParameterVerdict, ...]
    dim_target: int
    mode: str = "exact"
    operation_counts: Mapping[str, int] = field(default_factory=dict)

    @property
    def independent_parameters(self) -> list[str]:
        return [v.param for v in self.verdicts if v.independent]

    @property
    def redundant_parameters(self) -> list[str]:
        return [v.param for v in self.verdicts if not v.independent]

    @property
    def independent_count(self) -> int:
        return len(self.independent_parameters)

    @property
    def maximally_expressive(self) -> bool:
        return self.independent_count == self.dim_target

    def values_at_point(self, names: Iterable[str]) -> dict[str, float]:
        """Evaluation-point values for the named parameters."""
        lookup = {v.param: x for v, x in zip(self.verdicts, self.point)}
        return {name: lookup[name] for name in names}


@dataclass(frozen=True)
class StateSpaceDim:
    num_qubits: int

    @property
    def dim_with_phase(self) -> int:
        return 2 ** (self.num_qubits + 1) - 1

    @property
    def dim_mod_phase(self) -> int:
        return 2 ** (self.num_qubits + 1) - 2


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """S_k over an ordered parameter subset: (S)_{jl} = Re<d_j C|d_l C>."""

    subset: tuple[int, ...]
    entries: np.ndarray

    @property
    def k(self) -> int:
        return len(self.subset)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])


@dataclass(frozen=True)
class TransverseIsingModel:
    L: int
    J: float = -1.0
    h: float = 1.0
    boundary: str = "periodic"

    def __post_init__(self):
        if self.L < 2:
            raise CircuitError("a transverse-field Ising chain needs L >= 2")
        if self.boundary not in VALID_BOUNDARIES:
            raise CircuitError(f"boundary must be one of {VALID_BOUNDARIES}")
