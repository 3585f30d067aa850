"""Shot-sampling statevector simulator with an optional readout noise model.

Conventions: qubit 0 is the most significant bit of a state index and the
leftmost character of result bitstrings; bitstrings contain only measured
qubits, in ascending qubit order.  Sampling computes the exact marginal
distribution over measured qubits and draws a multinomial, which is
statistically identical to per-shot collapse because measurement is
terminal.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .kernel import GateKind, Instruction, Kernel, ROTATION_GATES
from .pauli import PauliObservable
from .results import HeterogeneousMap

MAX_QUBITS = 24
EXACT_QUBIT_CAP = 12
GENERATOR_NAME = "pcg64"

_SQ2 = 1.0 / math.sqrt(2.0)
_FIXED_1Q = {
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.H: np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    GateKind.S: np.array([[1, 0], [0, 1j]], dtype=complex),
    GateKind.Sdg: np.array([[1, 0], [0, -1j]], dtype=complex),
    GateKind.T: np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=complex),
}
_ROTATIONS = {
    GateKind.Rx: lambda t: np.array(
        [[math.cos(t / 2), -1j * math.sin(t / 2)],
         [-1j * math.sin(t / 2), math.cos(t / 2)]], dtype=complex),
    GateKind.Ry: lambda t: np.array(
        [[math.cos(t / 2), -math.sin(t / 2)],
         [math.sin(t / 2), math.cos(t / 2)]], dtype=complex),
    GateKind.Rz: lambda t: np.array(
        [[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]], dtype=complex),
}


@dataclass
class ReadoutNoiseModel:
    """Independent per-qubit readout bit flips.

    p01 = P(measure 1 | true 0), p10 = P(measure 0 | true 1).  `per_qubit`
    overrides the global pair for specific qubits.
    """

    p01: float = 0.0
    p10: float = 0.0
    per_qubit: dict | None = None

    def __post_init__(self):
        for q, (a, b) in (self.per_qubit or {}).items():
            _check_prob(a, f"p01[q{q}]")
            _check_prob(b, f"p10[q{q}]")
        _check_prob(self.p01, "p01")
        _check_prob(self.p10, "p10")

    def probs(self, qubit: int) -> tuple:
        if self.per_qubit and qubit in self.per_qubit:
            return tuple(self.per_qubit[qubit])
        return (self.p01, self.p10)

    def confusion_matrix(self, qubit: int) -> np.ndarray:
        """Exact 2x2 column-stochastic matrix M[observed][true]."""
        p01, p10 = self.probs(qubit)
        return np.array([[1.0 - p01, p10], [p01, 1.0 - p10]])


def _check_prob(p, name):
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"{name} must lie in [0, 1], got {p}")


@dataclass
class ExecutionConfig:
    shots: int = 1024
    seed: int = 0
    noise: ReadoutNoiseModel | None = None
    exact: bool = False

    def __post_init__(self):
        if self.shots < 1:
            raise ValidationError("shots must be >= 1")

    def with_seed(self, seed: int) -> "ExecutionConfig":
        return replace(self, seed=seed)


@dataclass
class StateVector:
    amplitudes: np.ndarray
    num_qubits: int

    @classmethod
    def zero(cls, num_qubits: int) -> "StateVector":
        if not 1 <= num_qubits <= MAX_QUBITS:
            raise ValidationError(f"qubit count must lie in [1, {MAX_QUBITS}]")
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(amps, num_qubits)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _apply_inplace(amps: np.ndarray, n: int, instr: Instruction) -> np.ndarray:
    if instr.kind is GateKind.Measure:
        raise ValidationError("apply_gate cannot apply Measure")
    if not instr.is_bound():
        raise ValidationError(f"unbound parameter {instr.param!r}")
    t = amps.reshape([2] * n)
    if instr.kind in _FIXED_1Q or instr.kind in ROTATION_GATES:
        q = instr.qubits[0]
        mat = (_FIXED_1Q[instr.kind] if instr.kind in _FIXED_1Q
               else _ROTATIONS[instr.kind](instr.param))
        t = np.moveaxis(np.tensordot(mat, t, axes=([1], [q])), 0, q)
        return np.ascontiguousarray(t).reshape(-1)
    control, target = instr.qubits
    idx = [slice(None)] * n
    if instr.kind is GateKind.CNOT:
        idx[control] = 1
        block = t[tuple(idx)].copy()
        flipped = np.flip(block, axis=target - (1 if target > control else 0))
        t[tuple(idx)] = flipped
    elif instr.kind is GateKind.CZ:
        idx[control] = 1
        idx[target] = 1
        t[tuple(idx)] *= -1.0
    else:  # pragma: no cover - exhaustive over GateKind
        raise ValidationError(f"unsupported gate {instr.kind}")
    return t.reshape(-1)


def apply_gate(state: StateVector, instr: Instruction) -> StateVector:
    """Pure single-instruction application; returns a new StateVector."""
    for q in instr.qubits:
        if q >= state.num_qubits:
            raise ValidationError(f"qubit q{q} out of range")
    amps = _apply_inplace(state.amplitudes.copy(), state.num_qubits, instr)
    return StateVector(amps, state.num_qubits)


def _evolve(kernel: Kernel) -> np.ndarray:
    if kernel.params:
        raise ValidationError(f"kernel {kernel.name!r} has free parameters {kernel.params}")
    if kernel.num_qubits > MAX_QUBITS:
        raise ValidationError(f"simulator capped at {MAX_QUBITS} qubits")
    amps = np.zeros(2**kernel.num_qubits, dtype=complex)
    amps[0] = 1.0
    for instr in kernel.body:
        if instr.kind is GateKind.Measure:
            continue
        amps = _apply_inplace(amps, kernel.num_qubits, instr)
    return amps


def _measured_marginal(kernel: Kernel) -> tuple:
    """Probability vector over measured qubits (ascending) and their indices."""
    measured = kernel.measured_qubits()
    if not measured:
        raise ValidationError("kernel has no measurements")
    amps = _evolve(kernel)
    n = kernel.num_qubits
    probs = (np.abs(amps) ** 2).reshape([2] * n)
    drop = tuple(q for q in range(n) if q not in measured)
    if drop:
        probs = probs.sum(axis=drop)
    vec = probs.reshape(-1)
    return vec / vec.sum(), measured


def _apply_stochastic(vec: np.ndarray, pos: int, k: int, mat: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix to bit position `pos` of a 2^k probability vector."""
    t = vec.reshape([2] * k)
    t = np.moveaxis(np.tensordot(mat, t, axes=([1], [pos])), 0, pos)
    return np.ascontiguousarray(t).reshape(-1)


def exact_distribution(kernel: Kernel, noise: ReadoutNoiseModel | None = None) -> dict:
    """Exact outcome distribution over measured qubits, optionally corrupted
    analytically by the readout noise model."""
    vec, measured = _measured_marginal(kernel)
    if noise is not None:
        for pos, q in enumerate(measured):
            vec = _apply_stochastic(vec, pos, len(measured), noise.confusion_matrix(q))
    k = len(measured)
    return {format(i, f"0{k}b"): float(p) for i, p in enumerate(vec) if p > 0.0}


def execute(kernel: Kernel, config: ExecutionConfig):
    """Run a bound, measured kernel; returns (counts, metadata)."""
    start = time.perf_counter()
    vec, measured = _measured_marginal(kernel)
    k = len(measured)
    rng = np.random.default_rng(config.seed)
    counts_vec = rng.multinomial(config.shots, vec)
    if config.noise is not None:
        counts_vec = _readout_flips(counts_vec, measured, config.noise, rng)
    counts = {
        format(i, f"0{k}b"): int(c) for i, c in enumerate(counts_vec) if c > 0
    }
    metadata = HeterogeneousMap({
        "shots": config.shots,
        "seed": config.seed,
        "measured-qubits": list(measured),
        "generator": GENERATOR_NAME,
        "wall-time-ms": (time.perf_counter() - start) * 1e3,
    })
    return counts, metadata


def _readout_flips(counts_vec: np.ndarray, measured, noise: ReadoutNoiseModel,
                   rng: np.random.Generator) -> np.ndarray:
    k = len(measured)
    counts = counts_vec.astype(np.int64)
    for pos, q in enumerate(measured):
        p01, p10 = noise.probs(q)
        if p01 == 0.0 and p10 == 0.0:
            continue
        bit = 1 << (k - 1 - pos)
        new = np.zeros_like(counts)
        for i in np.nonzero(counts)[0]:
            c = int(counts[i])
            p = p10 if i & bit else p01
            flipped = int(rng.binomial(c, p)) if p > 0.0 else 0
            new[i] += c - flipped
            new[i ^ bit] += flipped
        counts = new
    return counts


def exact_expectation(kernel: Kernel, obs: PauliObservable) -> float:
    """Dense <psi|O|psi> for a bound, unmeasured kernel of <= 12 qubits."""
    if kernel.is_measured():
        raise ValidationError("exact_expectation requires an unmeasured kernel")
    if kernel.num_qubits > EXACT_QUBIT_CAP:
        raise ValidationError(f"exact expectation capped at {EXACT_QUBIT_CAP} qubits")
    if obs.num_qubits() > kernel.num_qubits:
        raise ValidationError("observable is wider than the kernel")
    psi = _evolve(kernel)
    val = np.vdot(psi, obs.to_dense(kernel.num_qubits) @ psi)
    if abs(val.imag) > 1e-10:
        raise ValidationError(
            f"observable is not Hermitian (imaginary expectation {val.imag:.3e})"
        )
    return float(val.real)
