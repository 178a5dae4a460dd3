"""Dense statevector simulation over a handful of qubits.

Conventions, fixed once for the whole package:

* Qubit k is the k-th least significant bit of the basis index, so on three
  qubits the basis state at amplitude index 5 is qubit0=1, qubit1=0, qubit2=1.
* Operations are pure: they return fresh states and never mutate inputs.
* Randomness enters only through an explicitly injected
  ``numpy.random.Generator``; the module holds no ambient RNG state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InternalError, ResourceError

MAX_QUBITS = 24

_NORM_ATOL = 1e-9
_ZERO_BRANCH = 1e-15

_H_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0)
_X_MATRIX = np.array([[0, 1], [1, 0]], dtype=complex)
_Z_MATRIX = np.array([[1, 0], [0, -1]], dtype=complex)

GATE_KINDS = ("H", "X", "Z", "PHASE", "CNOT")


@dataclass(frozen=True)
class GateSpec:
    """A gate from the fixed set {H, X, Z, PHASE(theta), CNOT} plus targets."""

    kind: str
    targets: tuple[int, ...]
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise DomainError(f"unknown gate kind {self.kind!r}")
        arity = 2 if self.kind == "CNOT" else 1
        if len(self.targets) != arity:
            raise DomainError(f"{self.kind} takes {arity} target(s), got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise DomainError(f"gate targets must be distinct, got {self.targets}")
        if any(t < 0 for t in self.targets):
            raise DomainError(f"gate targets must be non-negative, got {self.targets}")
        if self.kind == "PHASE":
            if self.theta is None or not math.isfinite(self.theta):
                raise DomainError(f"PHASE needs a finite angle, got {self.theta}")
        elif self.theta is not None:
            raise DomainError(f"{self.kind} takes no angle")


def h(qubit: int) -> GateSpec:
    return GateSpec("H", (qubit,))


def x(qubit: int) -> GateSpec:
    return GateSpec("X", (qubit,))


def z(qubit: int) -> GateSpec:
    return GateSpec("Z", (qubit,))


def phase(theta: float, qubit: int) -> GateSpec:
    return GateSpec("PHASE", (qubit,), theta)


def cnot(control: int, target: int) -> GateSpec:
    return GateSpec("CNOT", (control, target))


@dataclass(frozen=True)
class StateVector:
    """Normalized amplitude vector over 2**n_qubits basis states."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if self.n_qubits < 1:
            raise DomainError(f"need at least one qubit, got {self.n_qubits}")
        if amps.shape != (1 << self.n_qubits,):
            raise DomainError(
                f"amplitude vector has length {amps.shape}, expected {1 << self.n_qubits}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > _NORM_ATOL:
            raise DomainError(f"state norm {norm} deviates from 1 beyond {_NORM_ATOL}")

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits


@dataclass(frozen=True)
class MeasurementRecord:
    """One projective measurement: which qubit, the outcome, its Born weight."""

    qubit: int
    outcome: int
    probability: float


def new_basis_state(n_qubits: int, basis_index: int, max_qubits: int = MAX_QUBITS) -> StateVector:
    """Computational basis state |basis_index> on n_qubits."""
    if n_qubits < 1:
        raise DomainError(f"need at least one qubit, got {n_qubits}")
    if n_qubits > max_qubits:
        raise ResourceError(f"{n_qubits} qubits exceeds the cap of {max_qubits}")
    if not 0 <= basis_index < (1 << n_qubits):
        raise DomainError(f"basis index {basis_index} out of range for {n_qubits} qubit(s)")
    amps = np.zeros(1 << n_qubits, dtype=complex)
    amps[basis_index] = 1.0
    return StateVector(n_qubits, amps)


def _check_targets(state: StateVector, targets: tuple[int, ...]):
    for t in targets:
        if not 0 <= t < state.n_qubits:
            raise DomainError(f"qubit {t} out of range for {state.n_qubits}-qubit state")


def _apply_single(amps: np.ndarray, n: int, qubit: int, matrix: np.ndarray) -> np.ndarray:
    # Axis n-1-q of the reshaped tensor corresponds to qubit q (LSB-0 indexing).
    axis = n - 1 - qubit
    tensor = np.moveaxis(amps.reshape([2] * n), axis, -1)
    tensor = tensor @ matrix.T
    return np.moveaxis(tensor, -1, axis).reshape(-1)


def _apply_cnot(amps: np.ndarray, control: int, target: int) -> np.ndarray:
    idx = np.arange(amps.size)
    src = ((idx >> control) & 1 == 1) & ((idx >> target) & 1 == 0)
    base = idx[src]
    flipped = base | (1 << target)
    out = amps.copy()
    out[base], out[flipped] = amps[flipped], amps[base]
    return out


def apply_gate(state: StateVector, gate: GateSpec) -> StateVector:
    """Return U|state> for the gate's unitary."""
    _check_targets(state, gate.targets)
    if gate.kind == "CNOT":
        amps = _apply_cnot(state.amplitudes, gate.targets[0], gate.targets[1])
    else:
        if gate.kind == "H":
            matrix = _H_MATRIX
        elif gate.kind == "X":
            matrix = _X_MATRIX
        elif gate.kind == "Z":
            matrix = _Z_MATRIX
        else:
            matrix = np.array([[1.0, 0.0], [0.0, np.exp(1j * gate.theta)]])
        amps = _apply_single(state.amplitudes, state.n_qubits, gate.targets[0], matrix)
    return StateVector(state.n_qubits, amps)


def apply_gates(state: StateVector, gates) -> StateVector:
    for gate in gates:
        state = apply_gate(state, gate)
    return state


def measurement_probabilities(state: StateVector, qubit: int) -> tuple[float, float]:
    """Born-rule probabilities (p0, p1) for measuring `qubit`."""
    _check_targets(state, (qubit,))
    idx = np.arange(state.dim)
    weights = np.abs(state.amplitudes) ** 2
    p1 = float(weights[(idx >> qubit) & 1 == 1].sum())
    p1 = min(max(p1, 0.0), 1.0)
    return 1.0 - p1, p1


def measure_qubit(
    state: StateVector, qubit: int, rng: np.random.Generator
) -> tuple[MeasurementRecord, StateVector]:
    """Sample a projective measurement of `qubit`, collapsing the state."""
    p0, p1 = measurement_probabilities(state, qubit)
    outcome = 1 if rng.random() < p1 else 0
    p_outcome = p1 if outcome else p0
    if p_outcome < _ZERO_BRANCH:
        raise InternalError(
            f"sampled a branch of probability {p_outcome}; sampling is inconsistent"
        )
    idx = np.arange(state.dim)
    keep = ((idx >> qubit) & 1) == outcome
    amps = np.where(keep, state.amplitudes, 0.0) / math.sqrt(p_outcome)
    return MeasurementRecord(qubit, outcome, p_outcome), StateVector(state.n_qubits, amps)


def fidelity(s1: StateVector, s2: StateVector) -> float:
    """|<s1|s2>|^2, the squared overlap of two pure states."""
    if s1.n_qubits != s2.n_qubits:
        raise DomainError(f"qubit counts differ: {s1.n_qubits} vs {s2.n_qubits}")
    return float(abs(np.vdot(s1.amplitudes, s2.amplitudes)) ** 2)
