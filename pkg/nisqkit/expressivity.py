"""Dimensional expressivity analysis of parametric circuits.

Parameters are added one at a time to the Gram matrix S = Re(T^H T) of the
tangent vectors; a candidate whose inclusion leaves S with a smallest
eigenvalue below epsilon is redundant and is left out of every later S.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from nisqkit.helpers import SeedLike, derive_rng
from nisqkit.models import (
    ExpressivityReport,
    GateSpec,
    GramMatrix,
    ParameterVerdict,
    ParametricCircuit,
    StateSpaceDim,
)
from nisqkit.statevector import (
    bind_parameters,
    evaluate_circuit,
    haar_random_state,
    tangent_vectors,
    unitary_insertions,
)

log = logging.getLogger(__name__)

VALID_MODES = ("exact", "sampled")
EXACT_EPSILON = 1e-8
PHASE_PARAM = "phase"
BOUND_MAX_ITER = 200
BOUND_TOL = 1e-10


class ExpressivityError(ValueError):
    """Raised for invalid expressivity requests (subsets, epsilon, freeze values)."""


def random_point(circuit: ParametricCircuit, seed: SeedLike = None) -> np.ndarray:
    """Generic evaluation point, uniform in [0, 2pi) per parameter."""
    return derive_rng(seed).uniform(0.0, 2 * np.pi, size=circuit.num_parameters)


def sampled_epsilon(shots: int) -> float:
    """Five standard errors of a single Hadamard-test Gram entry."""
    return 5.0 / (4.0 * np.sqrt(shots))


def _subset_indices(circuit: ParametricCircuit, subset) -> tuple[int, ...]:
    if subset is None:
        return tuple(range(circuit.num_parameters))
    subset = tuple(subset)
    if not subset:
        raise ExpressivityError("subset must not be empty")
    return tuple(circuit.parameter_index(j) for j in subset)


def gram_matrix(circuit: ParametricCircuit, params, subset: Sequence[int | str] | None = None) -> GramMatrix:
    """Exact S over `subset` (all parameters when omitted)."""
    indices = _subset_indices(circuit, subset)
    tangents = tangent_vectors(circuit, params)[:, indices]
    entries = (tangents.conj().T @ tangents).real
    return GramMatrix(indices, (entries + entries.T) / 2)


@dataclass(frozen=True)
class HadamardTestSample:
    """One simulated Hadamard test between two unitary insertions.

    `weight` is the real factor conj(w_u) w_v multiplying Re<psi_u|psi_v>.
    """

    weight: float
    successes: int
    shots: int

    @property
    def overlap(self) -> float:
        return 2.0 * self.successes / self.shots - 1.0

    @property
    def estimate(self) -> float:
        return self.weight * self.overlap


def _hadamard_tests(ins_j, ins_l, shots: int, rng: np.random.Generator) -> tuple[HadamardTestSample, ...]:
    samples = []
    for w_u, psi_u in ins_j:
        for w_v, psi_v in ins_l:
            weight = np.conj(w_u) * w_v
            overlap = float(np.vdot(psi_u, psi_v).real)
            p = min(max((1.0 + overlap) / 2.0, 0.0), 1.0)
            samples.append(HadamardTestSample(float(weight.real), int(rng.binomial(shots, p)), shots))
    return tuple(samples)


def sample_gram_entry(circuit: ParametricCircuit, params, j: int | str, l: int | str,
                      shots: int, seed: SeedLike = None) -> tuple[HadamardTestSample, ...]:
    """Simulated ancilla measurements for the entry (j, l) of S.

    Controlled rotations are split as |1><1| (x) P = ((I - Z)/2) (x) P, so every
    inserted operator is unitary and each pair of insertions is one Hadamard test.
    """
    if shots <= 0:
        raise ExpressivityError("shots must be positive")
    j, l = circuit.parameter_index(j), circuit.parameter_index(l)
    rng = derive_rng(seed, min(j, l), max(j, l))
    return _hadamard_tests(
        unitary_insertions(circuit, params, j), unitary_insertions(circuit, params, l), shots, rng
    )


def estimate_gram_entry(circuit: ParametricCircuit, params, j: int | str, l: int | str,
                        shots: int, seed: SeedLike = None) -> float:
    """Unbiased shot-noise estimate of Re<d_j C|d_l C>."""
    return float(sum(s.estimate for s in sample_gram_entry(circuit, params, j, l, shots, seed)))


class _SampledGram:
    """Lazily estimated S entries, one independent stream per (j, l)."""

    def __init__(self, circuit, params, shots, seed):
        self.circuit = circuit
        self.params = params
        self.shots = shots
        self.seed = seed
        self.entries: dict[tuple[int, int], float] = {}
        self.insertions: dict[int, list] = {}
        self.hadamard_tests = 0

    def _insertions(self, j):
        if j not in self.insertions:
            self.insertions[j] = unitary_insertions(self.circuit, self.params, j)
        return self.insertions[j]

    def entry(self, j: int, l: int) -> float:
        key = (min(j, l), max(j, l))
        if key not in self.entries:
            rng = derive_rng(self.seed, *key)
            samples = _hadamard_tests(self._insertions(key[0]), self._insertions(key[1]), self.shots, rng)
            self.hadamard_tests += len(samples) * self.shots
            self.entries[key] = float(sum(s.estimate for s in samples))
        return self.entries[key]

    def matrix(self, subset: Sequence[int]) -> np.ndarray:
        return np.array([[self.entry(a, b) for b in subset] for a in subset])


def classify_parameters(circuit: ParametricCircuit, params=None, epsilon: float | None = None,
                        mode: str = "exact", shots: int | None = None, seed: SeedLike = None,
                        dim_target: int | None = None, early_stop: bool = True) -> ExpressivityReport:
    """Classify every parameter as independent or redundant at one point.

    With `params` omitted the point is drawn uniformly from [0, 2pi) using
    `seed`. Once the independents reach `dim_target` the remaining parameters
    are marked redundant without an eigenvalue (`early_stop`).
    """
    if mode not in VALID_MODES:
        raise ExpressivityError(f"mode must be one of {VALID_MODES}")
    if mode == "sampled" and (shots is None or shots <= 0):
        raise ExpressivityError("sampled mode needs a positive shot count")
    if epsilon is None:
        epsilon = EXACT_EPSILON if mode == "exact" else sampled_epsilon(shots)
    if not epsilon > 0:
        raise ExpressivityError("epsilon must be positive")
    if dim_target is None:
        dim_target = StateSpaceDim(circuit.num_qubits).dim_with_phase

    if params is None:
        point = random_point(circuit, derive_rng(seed, 0))
    else:
        point = np.array(list(bind_parameters(circuit, params).values()))
    counts = {"circuit_evaluations": 0, "hadamard_tests": 0, "eigen_solves": 0}

    if mode == "exact":
        full = gram_matrix(circuit, point).entries
        counts["circuit_evaluations"] = 1 + sum(g.param is not None for g in circuit.gates)

        def submatrix(subset):
            return full[np.ix_(subset, subset)]
    else:
        sampled = _SampledGram(circuit, point, shots, derive_rng(seed, 1))

        def submatrix(subset):
            return sampled.matrix(subset)

    accepted: list[int] = []
    verdicts = []
    for j, name in enumerate(circuit.parameters):
        if early_stop and len(accepted) >= dim_target:
            verdicts.append(ParameterVerdict(name, False, None))
            continue
        lam = float(np.linalg.eigvalsh(submatrix(accepted + [j]))[0])
        counts["eigen_solves"] += 1
        independent = lam >= epsilon
        log.debug("parameter %s: smallest eigenvalue %.3e (%s)", name, lam,
                  "independent" if independent else "redundant")
        if independent:
            accepted.append(j)
        verdicts.append(ParameterVerdict(name, independent, lam))

    if mode == "sampled":
        counts["circuit_evaluations"] = sum(len(v) for v in sampled.insertions.values())
        counts["hadamard_tests"] = sampled.hadamard_tests

    report = ExpressivityReport(
        point=tuple(float(x) for x in point),
        epsilon=float(epsilon),
        verdicts=tuple(verdicts),
        dim_target=int(dim_target),
        mode=mode,
        operation_counts=counts,
    )
    log.info("classified %d parameters: %d independent of target %d",
             circuit.num_parameters, report.independent_count, dim_target)
    return report


def remove_redundant(circuit: ParametricCircuit, report: ExpressivityReport,
                     freeze_values: Mapping[str, float] | None = None) -> ParametricCircuit:
    """Replace redundant parameters by fixed angles (0 unless given)."""
    if tuple(v.param for v in report.verdicts) != circuit.parameters:
        raise ExpressivityError("report does not match the circuit's parameters")
    freeze_values = dict(freeze_values or {})
    redundant = set(report.redundant_parameters)
    misplaced = sorted(set(freeze_values) - redundant)
    if misplaced:
        raise ExpressivityError(f"freeze values given for non-redundant parameters: {misplaced}")

    gates = [
        gate.frozen(freeze_values.get(gate.param, 0.0)) if gate.param in redundant else gate
        for gate in circuit.gates
    ]
    return ParametricCircuit(circuit.num_qubits, tuple(gates), tuple(report.independent_parameters))


def remove_symmetry(circuit: ParametricCircuit, symmetry_gates: Sequence[GateSpec], params=None,
                    epsilon: float | None = None, seed: SeedLike = None, dim_target: int | None = None,
                    freeze_values: Mapping[str, float] | None = None) -> tuple[ParametricCircuit, ExpressivityReport]:
    """Strip parameters that only move along symmetry directions.

    The symmetry gates are prepended and their parameters tested first, so any
    original parameter whose tangent lies in the symmetry directions comes out
    redundant. The returned report covers the original parameters only.
    """
    sym_names = []
    for gate in symmetry_gates:
        if gate.param is None:
            raise ExpressivityError("symmetry gates must carry a parameter")
        if gate.param in circuit.parameters:
            raise ExpressivityError(f"symmetry parameter {gate.param!r} clashes with the circuit")
        if gate.param not in sym_names:
            sym_names.append(gate.param)
    if dim_target is None:
        dim_target = StateSpaceDim(circuit.num_qubits).dim_with_phase - len(sym_names)

    if params is None:
        point = random_point(circuit, derive_rng(seed, 0))
    else:
        point = np.array(list(bind_parameters(circuit, params).values()))
    sym_point = derive_rng(seed, 2).uniform(0.0, 2 * np.pi, size=len(sym_names))
    augmented = ParametricCircuit(
        circuit.num_qubits,
        tuple(symmetry_gates) + circuit.gates,
        tuple(sym_names) + circuit.parameters,
    )
    full = classify_parameters(
        augmented, np.concatenate([sym_point, point]), epsilon=epsilon,
        dim_target=dim_target + len(sym_names),
    )
    n_sym = len(sym_names)
    if not all(v.independent for v in full.verdicts[:n_sym]):
        log.warning("a symmetry parameter was not independent; symmetry directions overlap")

    report = ExpressivityReport(
        point=tuple(float(x) for x in point),
        epsilon=full.epsilon,
        verdicts=full.verdicts[n_sym:],
        dim_target=int(dim_target),
        mode=full.mode,
        operation_counts=full.operation_counts,
    )
    return remove_redundant(circuit, report, freeze_values), report


def remove_phase_symmetry(circuit: ParametricCircuit, params=None, epsilon: float | None = None,
                          seed: SeedLike = None) -> tuple[ParametricCircuit, ExpressivityReport]:
    """Remove parameters that only generate a global phase.

    rz on qubit 0 of |0...0> multiplies the state by a phase, so it spans the
    phase direction exactly.
    """
    phase_gate = GateSpec("rz", (0,), param=PHASE_PARAM)
    return remove_symmetry(
        circuit, [phase_gate], params=params, epsilon=epsilon, seed=seed,
        dim_target=StateSpaceDim(circuit.num_qubits).dim_mod_phase,
    )


class _Names:
    def __init__(self):
        self.count = 0

    def __call__(self) -> str:
        self.count += 1
        return f"t{self.count}"


def uniformly_controlled_rotation(gate: str, target: int, controls: Sequence[int], names) -> list[GateSpec]:
    """Gray-code decomposition: 2**k rotations on `target` interleaved with CNOTs.

    The rotation angles are a linear bijection of the 2**k per-pattern angles,
    so each rotation gets its own free parameter.
    """
    k = len(controls)
    if k == 0:
        return [GateSpec(gate, (target,), param=names())]
    gates = []
    size = 2**k
    for i in range(size):
        gates.append(GateSpec(gate, (target,), param=names()))
        changed = (i ^ (i >> 1)) ^ (((i + 1) % size) ^ (((i + 1) % size) >> 1))
        gates.append(GateSpec("cnot", (controls[changed.bit_length() - 1], target)))
    return gates


def inductive_ansatz(num_qubits: int, include_phase: bool = True, seed: SeedLike = None) -> ParametricCircuit:
    """Candidate minimal maximally expressive circuit on `num_qubits` qubits.

    The one-qubit base is R_Y R_Z R_X. Each new qubit q is prepared by a
    uniformly controlled RY then RZ on q, controlled by qubits 0..q-1, which adds
    2**(q+1) parameters. Without the phase the circuit is passed through
    `remove_phase_symmetry`.
    """
    if num_qubits < 1:
        raise ExpressivityError("num_qubits must be positive")
    names = _Names()
    gates = [
        GateSpec("rx", (0,), param=names()),
        GateSpec("rz", (0,), param=names()),
        GateSpec("ry", (0,), param=names()),
    ]
    for q in range(1, num_qubits):
        controls = list(range(q))
        gates += uniformly_controlled_rotation("ry", q, controls, names)
        gates += uniformly_controlled_rotation("rz", q, controls, names)
    circuit = ParametricCircuit.build(num_qubits, gates)
    if not include_phase:
        circuit, _ = remove_phase_symmetry(circuit, seed=seed)
    return circuit


def efficient_su2(num_qubits: int, reps: int = 2) -> ParametricCircuit:
    """Hardware-efficient 2-local ansatz: RY and RZ layers with linear CNOT entanglers."""
    if num_qubits < 1 or reps < 0:
        raise ExpressivityError("efficient_su2 needs num_qubits >= 1 and reps >= 0")
    names = _Names()
    gates = []
    for layer in range(reps + 1):
        gates += [GateSpec("ry", (q,), param=names()) for q in range(num_qubits)]
        gates += [GateSpec("rz", (q,), param=names()) for q in range(num_qubits)]
        if layer < reps:
            gates += [GateSpec("cnot", (q, q + 1)) for q in range(num_qubits - 1)]
    return ParametricCircuit.build(num_qubits, gates)


def finite_difference_jacobian(circuit: ParametricCircuit, params, h: float = 1e-5) -> np.ndarray:
    """Real partial Jacobian [Re; Im] of C(theta) by central differences."""
    point = np.asarray(params, dtype=float)
    columns = []
    for j in range(circuit.num_parameters):
        step = np.zeros_like(point)
        step[j] = h
        diff = (evaluate_circuit(circuit, point + step) - evaluate_circuit(circuit, point - step)) / (2 * h)
        columns.append(np.concatenate([diff.real, diff.imag]))
    if not columns:
        return np.zeros((2 ** (circuit.num_qubits + 1), 0))
    return np.column_stack(columns)


def jacobian_rank(jacobian: np.ndarray, tol: float = 1e-6) -> int:
    """Number of singular values above `tol`."""
    if jacobian.size == 0:
        return 0
    return int(np.linalg.matrix_rank(jacobian, tol=tol))


def _infidelity(a: np.ndarray, b: np.ndarray) -> float:
    return 1.0 - min(abs(np.vdot(a, b)), 1.0)


def _distance(infidelity: float) -> float:
    return float(np.sqrt(max(2.0 * infidelity, 0.0)))


def best_approximation_bounds(circuit: ParametricCircuit, n_sites: int, n_targets: int,
                              seed: SeedLike = None, targets: Sequence[np.ndarray] | None = None,
                              max_iter: int = BOUND_MAX_ITER, tol: float = BOUND_TOL) -> tuple[float, float]:
    """Sampling estimate of the worst-case distance to the circuit manifold.

    Returns (lower, upper). The upper value is the covering radius of random
    sites over the targets; the lower value refines each target's nearest site
    with Powell's method. Distances are minimized over the global phase.
    """
    if n_sites < 1 or n_targets < 1:
        raise ExpressivityError("n_sites and n_targets must be at least 1")
    site_rng = derive_rng(seed, 0)
    site_points = site_rng.uniform(0.0, 2 * np.pi, size=(n_sites, circuit.num_parameters))
    sites = np.array([evaluate_circuit(circuit, p) for p in site_points])
    if targets is None:
        targets = [haar_random_state(circuit.num_qubits, derive_rng(seed, 1, t)) for t in range(n_targets)]

    lower = upper = 0.0
    for target in targets:
        infidelities = 1.0 - np.minimum(np.abs(sites.conj() @ target), 1.0)
        nearest = int(np.argmin(infidelities))
        covering = _distance(infidelities[nearest])
        refined = covering
        if circuit.num_parameters:
            result = minimize(
                lambda theta: _infidelity(target, evaluate_circuit(circuit, theta)),
                site_points[nearest],
                method="Powell",
                options={"maxiter": max_iter, "xtol": tol, "ftol": tol},
            )
            refined = min(_distance(result.fun), covering)
        lower = max(lower, refined)
        upper = max(upper, covering)
    log.debug("best-approximation bounds over %d targets: [%.3e, %.3e]", len(targets), lower, upper)
    return lower, upper
