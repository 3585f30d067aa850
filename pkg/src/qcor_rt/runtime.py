"""Asynchronous task execution model: objectives, task_initiate, sync.

Quantum results are visible to the host only through the ResultBuffer
returned by `sync` (or published to the objective's buffer sink while the
task runs); nothing is shared in place with the caller.
"""

from __future__ import annotations

import threading
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import TaskError, ValidationError
from .kernel import Kernel, identity_kernel
from .pauli import PauliObservable, PauliString, PauliTerm, expectation_from_counts
from .results import HeterogeneousMap, ResultBuffer
from .simulator import ExecutionConfig, exact_distribution, execute


def derive_seed(base: int, index: int) -> int:
    """Deterministic per-execution seed from a task-level base seed."""
    return int(np.random.SeedSequence([base, index]).generate_state(1)[0])


@dataclass
class TermRun:
    """Record of one measured-kernel execution inside an objective evaluation."""

    term: PauliTerm
    kernel: Kernel
    counts: dict            # shot counts, or probabilities in exact mode
    metadata: HeterogeneousMap
    expectation: float


class ObjectiveFunction:
    """Parameterized scalar function whose evaluation drives the simulator."""

    def __init__(self, observable: PauliObservable, kernel: Kernel,
                 config: ExecutionConfig | None = None,
                 sink: ResultBuffer | None = None):
        self.observable = observable
        self.kernel = kernel
        self.config = config if config is not None else ExecutionConfig()
        self.sink = sink

    def dimensions(self) -> int:
        return len(self.kernel.params)

    def __call__(self, params: Sequence[float]) -> float:
        raise NotImplementedError


class DefaultObjective(ObjectiveFunction):
    """Expectation value of the observable at the given parameters."""

    def __init__(self, observable, kernel, config=None, sink=None):
        super().__init__(observable, kernel, config, sink)
        self._exec_count = 0

    def _run_terms(self, params: Sequence[float]):
        """Bind, observe, and execute every non-identity term.

        Returns (offset, [TermRun...]); `offset` is the real part of the
        summed identity coefficients.
        """
        bound = self.kernel.bind(params)
        pairs, offset = self.observable.observe(bound)
        runs = []
        for term, measured_kernel in pairs:
            support = term.string.qubits
            if self.config.exact:
                counts = exact_distribution(measured_kernel, self.config.noise)
                metadata = HeterogeneousMap({"mode": "exact"})
            else:
                cfg = self.config.with_seed(
                    derive_seed(self.config.seed, self._exec_count))
                self._exec_count += 1
                counts, metadata = execute(measured_kernel, cfg)
            value = expectation_from_counts(term, counts, support)
            metadata.put("term", str(term.string))
            metadata.put("coefficient", term.coefficient)
            runs.append(TermRun(term, measured_kernel, counts, metadata, value))
        return offset.real, runs

    def __call__(self, params: Sequence[float]) -> float:
        offset, runs = self._run_terms(params)
        value = offset + sum(r.expectation for r in runs)
        publish_evaluation(self.sink, params, value, runs)
        return value


def publish_evaluation(sink: ResultBuffer | None, params, value, runs,
                       extra: dict | None = None) -> None:
    """Append one evaluation node (with per-kernel grandchildren) to the sink."""
    if sink is None:
        return
    child = ResultBuffer(HeterogeneousMap({
        "params": [float(p) for p in params],
        "value": float(value),
        **(extra or {}),
    }))
    for run in runs:
        if run.counts and all(isinstance(v, int) for v in run.counts.values()):
            grandchild = ResultBuffer(run.metadata, counts=run.counts)
        else:
            # exact-mode probabilities are not shot counts; keep the JSON
            # counts field integer-valued and record the distribution aside
            grandchild = ResultBuffer(run.metadata)
            grandchild.metadata.put(
                "distribution",
                HeterogeneousMap({b: float(p) for b, p in run.counts.items()}))
        child.add_child(grandchild)
    sink.add_child(child)


def default_objective_evaluate(observable: PauliObservable, kernel: Kernel,
                               params: Sequence[float], config: ExecutionConfig,
                               sink: ResultBuffer | None = None) -> float:
    return DefaultObjective(observable, kernel, config, sink)(params)


# ---------------------------------------------------------------------------
# task machinery

_EXECUTOR: ThreadPoolExecutor | None = None
_EXECUTOR_LOCK = threading.Lock()
_RUNTIME_TOKEN = object()


def _executor() -> ThreadPoolExecutor:
    global _EXECUTOR
    with _EXECUTOR_LOCK:
        if _EXECUTOR is None:
            _EXECUTOR = ThreadPoolExecutor(max_workers=8,
                                           thread_name_prefix="qcor-task")
        return _EXECUTOR


@dataclass
class TaskSpec:
    """Arguments for task_initiate; every field may take its default."""

    kernel: Kernel | None = None
    observable: PauliObservable | None = None
    objective: ObjectiveFunction | None = None
    optimizer: object | None = None
    params: Sequence[float] | None = None
    config: ExecutionConfig = field(default_factory=ExecutionConfig)
    num_qubits: int | None = None


class TaskHandle:
    """Opaque handle for one in-flight task; sync-able exactly once."""

    def __init__(self, future: Future):
        self._future = future
        self._synced = False
        self._lock = threading.Lock()
        self._runtime = _RUNTIME_TOKEN


def computational_basis_observable(num_qubits: int) -> PauliObservable:
    """Single all-qubit Z string: measures every qubit in the computational basis."""
    return PauliObservable(
        [(1.0, PauliString(tuple((q, "Z") for q in range(num_qubits))))]
    )


def _resolve(spec: TaskSpec):
    """Apply the default-argument rules and validate synchronously."""
    kernel = spec.kernel
    observable = spec.observable
    if kernel is None:
        if observable is not None and observable.num_qubits() > 0:
            width = observable.num_qubits()
        elif spec.num_qubits is not None:
            width = spec.num_qubits
        elif spec.objective is not None:
            width = None
        else:
            raise ValidationError(
                "cannot infer kernel width: provide kernel, observable, or num_qubits"
            )
        if width is not None:
            kernel = identity_kernel(width)
    if spec.objective is not None:
        objective = spec.objective
    else:
        if kernel is None:
            raise ValidationError("a kernel or objective is required")
        if observable is None:
            observable = computational_basis_observable(kernel.num_qubits)
        objective = DefaultObjective(observable, kernel, spec.config)

    params = list(spec.params) if spec.params is not None else None
    dims = objective.dimensions()
    if spec.optimizer is None:
        if params is None:
            if dims > 0:
                raise ValidationError(
                    "no optimizer given: concrete parameters are required"
                )
            params = []
        elif len(params) != dims:
            raise ValidationError(
                f"objective takes {dims} parameter(s), got {len(params)}"
            )
    return objective, spec.optimizer, params


def _run_task(objective, optimizer, params, root: ResultBuffer) -> ResultBuffer:
    if optimizer is not None:
        opt_params, opt_value = optimizer.optimize(objective)
        root.metadata.put("opt-value", float(opt_value))
        root.metadata.put("opt-params", [float(p) for p in opt_params])
    else:
        value = objective(params)
        root.metadata.put("value", float(value))
        root.metadata.put("params", [float(p) for p in params])
    root.metadata.put("num-evaluations", len(root.children))
    return root


def task_initiate(spec: TaskSpec) -> TaskHandle:
    """Launch a task; returns immediately with a handle for sync()."""
    objective, optimizer, params = _resolve(spec)
    root = ResultBuffer()
    if getattr(objective, "sink", None) is None:
        objective.sink = root
    future = _executor().submit(_run_task, objective, optimizer, params, root)
    return TaskHandle(future)


def sync(handle: TaskHandle) -> ResultBuffer:
    """Block until the task finishes and return its root ResultBuffer."""
    if not isinstance(handle, TaskHandle) or getattr(handle, "_runtime", None) is not _RUNTIME_TOKEN:
        raise TaskError("handle does not belong to this runtime")
    with handle._lock:
        if handle._synced:
            raise TaskError("handle already synced")
        handle._synced = True
    try:
        return handle._future.result()
    except TaskError:
        raise
    except Exception as e:
        raise TaskError(f"task failed: {e}") from e
