"""Readout-error mitigation by per-qubit confusion-matrix inversion,
packaged as an objective-function decorator."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .kernel import GateKind, Instruction, Kernel
from .pauli import expectation_from_counts
from .results import HeterogeneousMap
from .runtime import (ObjectiveFunction, TermRun, derive_seed,
                      publish_evaluation)
from .simulator import ExecutionConfig, ReadoutNoiseModel, execute

MIN_CALIBRATION_SHOTS = 100
MIN_DETERMINANT = 1e-6

# Offset added to the task seed when deriving calibration-run seeds, so
# calibration draws are decoupled from objective-evaluation draws.
_CALIBRATION_SEED_OFFSET = 0x5EED


def validate_confusion_matrix(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 2):
        raise ValidationError("confusion matrix must be 2x2")
    if (m < -1e-12).any() or (m > 1 + 1e-12).any():
        raise ValidationError("confusion matrix entries must lie in [0, 1]")
    if not np.allclose(m.sum(axis=0), 1.0, atol=1e-9):
        raise ValidationError("confusion matrix columns must sum to 1")
    if abs(np.linalg.det(m)) < MIN_DETERMINANT:
        raise ValidationError("confusion matrix is singular")
    return m


def confusion_from_noise(noise: ReadoutNoiseModel | None, qubits) -> dict:
    """Analytic confusion matrices (identity when no noise model)."""
    out = {}
    for q in qubits:
        m = noise.confusion_matrix(q) if noise is not None else np.eye(2)
        out[q] = validate_confusion_matrix(m)
    return out


def calibrate(num_qubits: int, config: ExecutionConfig) -> dict:
    """Estimate each qubit's confusion matrix from |0> and |1> preparation runs."""
    if config.shots < MIN_CALIBRATION_SHOTS:
        raise ValidationError(
            f"calibration needs at least {MIN_CALIBRATION_SHOTS} shots, got {config.shots}"
        )
    matrices = {}
    for q in range(num_qubits):
        columns = []
        for prepare_one in (False, True):
            body = []
            if prepare_one:
                body.append(Instruction(GateKind.X, (q,)))
            body.append(Instruction(GateKind.Measure, (q,)))
            kernel = Kernel(f"calibrate_q{q}_{int(prepare_one)}", (), num_qubits,
                            tuple(body))
            seed = derive_seed(config.seed,
                               _CALIBRATION_SEED_OFFSET + 2 * q + int(prepare_one))
            counts, _ = execute(kernel, config.with_seed(seed))
            total = sum(counts.values())
            columns.append([counts.get("0", 0) / total, counts.get("1", 0) / total])
        matrices[q] = validate_confusion_matrix(np.array(columns).T)
    return matrices


def mitigate_counts(counts: Mapping[str, float], calibration: Mapping[int, np.ndarray],
                    measured_qubits: Sequence[int] | None = None) -> dict:
    """Invert the factorized confusion matrix over a counts map.

    Returns a quasi-distribution (entries may be negative) normalized to
    sum to 1.  Bitstring positions correspond to `measured_qubits` in
    ascending order (defaulting to qubits 0..k-1).
    """
    if not counts:
        raise ValidationError("empty counts")
    k = len(next(iter(counts)))
    measured = sorted(measured_qubits) if measured_qubits is not None else list(range(k))
    if len(measured) != k:
        raise ValidationError("measured qubit list does not match bitstring length")
    missing = [q for q in measured if q not in calibration]
    if missing:
        raise ValidationError(f"calibration missing for qubits {missing}")
    vec = np.zeros(2**k)
    for bits, weight in counts.items():
        if len(bits) != k:
            raise ValidationError(f"inconsistent bitstring length in counts: {bits!r}")
        vec[int(bits, 2)] += weight
    total = vec.sum()
    if total == 0:
        raise ValidationError("counts sum to zero")
    vec = vec / total
    t = vec.reshape([2] * k)
    for pos, q in enumerate(measured):
        m = validate_confusion_matrix(calibration[q])
        inv = np.linalg.inv(m)
        t = np.moveaxis(np.tensordot(inv, t, axes=([1], [pos])), 0, pos)
    flat = np.ascontiguousarray(t).reshape(-1)
    return {format(i, f"0{k}b"): float(v) for i, v in enumerate(flat) if v != 0.0}


class MitigatedObjective(ObjectiveFunction):
    """Decorator that replaces raw-counts expectations with mitigated ones.

    Calibration is performed lazily on the first evaluation and cached;
    pass `calibration` explicitly to skip the calibration runs.
    """

    def __init__(self, inner: ObjectiveFunction,
                 calibration: Mapping[int, np.ndarray] | None = None):
        super().__init__(inner.observable, inner.kernel, inner.config, None)
        self.inner = inner
        self._calibration = (
            {q: validate_confusion_matrix(m) for q, m in calibration.items()}
            if calibration is not None else None
        )

    @property
    def sink(self):
        return self.inner.sink

    @sink.setter
    def sink(self, value):
        # __init__ of the base class assigns sink before `inner` exists
        if "inner" in self.__dict__:
            self.inner.sink = value

    def dimensions(self) -> int:
        return self.inner.dimensions()

    def _ensure_calibration(self) -> dict:
        if self._calibration is None:
            qubits = range(self.kernel.num_qubits)
            if self.config.exact:
                self._calibration = confusion_from_noise(self.config.noise, qubits)
            else:
                self._calibration = calibrate(self.kernel.num_qubits, self.config)
            self._record_calibration()
        return self._calibration

    def _record_calibration(self):
        if self.sink is None or "readout-calibration" in self.sink.metadata:
            return
        entry = HeterogeneousMap({
            f"q{q}": [float(x) for x in m.reshape(-1)]
            for q, m in sorted(self._calibration.items())
        })
        self.sink.metadata.put("readout-calibration", entry)

    def _run_both(self, params: Sequence[float]):
        calibration = self._ensure_calibration()
        offset, runs = self.inner._run_terms(params)
        chain_runs = []    # quasi-distribution counts, so decorators compose
        publish_runs = []  # integer counts for the buffer tree
        for run in runs:
            support = run.term.string.qubits
            quasi = mitigate_counts(run.counts, calibration, support)
            value = expectation_from_counts(run.term, quasi, support)
            metadata = HeterogeneousMap()
            metadata.update(run.metadata)
            metadata.put("raw-expectation", run.expectation)
            metadata.put("mitigated", True)
            chain_runs.append(TermRun(run.term, run.kernel, quasi, metadata, value))
            publish_runs.append(
                TermRun(run.term, run.kernel, dict(run.counts), metadata, value))
        return offset, chain_runs, publish_runs, runs

    def _run_terms(self, params: Sequence[float]):
        """Decorator-compatible view: mitigated counts and expectations per term."""
        offset, chain_runs, _, _ = self._run_both(params)
        return offset, chain_runs

    def __call__(self, params: Sequence[float]) -> float:
        offset, _, publish_runs, raw_runs = self._run_both(params)
        raw = offset + sum(r.expectation for r in raw_runs)
        mitigated = offset + sum(r.expectation for r in publish_runs)
        publish_evaluation(self.sink, params, mitigated, publish_runs,
                           extra={"raw-value": float(raw),
                                  "mitigated-value": float(mitigated)})
        return mitigated
