import math
import threading
import time

import numpy as np
import pytest

from qcor_rt import (DefaultObjective, ExecutionConfig, FunctionObjective,
                     HeterogeneousMap, Kind, KindMismatchError, MissingKeyError,
                     NelderMead, OptimizationError, ResultBuffer, TaskError,
                     TaskHandle, TaskSpec, ValidationError, derive_seed,
                     exact_expectation, make_optimizer, parse_kernel,
                     parse_pauli, sync, task_initiate)
from qcor_rt.runtime import computational_basis_observable


class TestHeterogeneousMap:
    def test_put_get_by_kind(self):
        m = HeterogeneousMap()
        m.put("shots", 1024)
        assert m.get("shots", Kind.INT) == 1024
        assert m.get("shots", int) == 1024

    def test_missing_key_is_distinct_error(self):
        m = HeterogeneousMap({"a": 1})
        with pytest.raises(MissingKeyError):
            m.get("b", int)
        with pytest.raises(KindMismatchError):
            m.get("a", float)

    def test_bool_is_not_int(self):
        m = HeterogeneousMap({"flag": True})
        assert m.kind_of("flag") is Kind.BOOL
        with pytest.raises(KindMismatchError):
            m.get("flag", int)

    def test_real_list(self):
        m = HeterogeneousMap({"params": [0.1, 0.2]})
        assert m.get("params", Kind.REAL_LIST) == [0.1, 0.2]

    def test_nested_map(self):
        inner = HeterogeneousMap({"x": 1.0})
        m = HeterogeneousMap({"inner": inner})
        assert m.get("inner", Kind.MAP).get("x", float) == 1.0

    def test_complex_encodes_as_pair(self):
        m = HeterogeneousMap({"coefficient": 1 - 2j})
        assert m.to_dict() == {"coefficient": [1.0, -2.0]}

    def test_update_overwrites(self):
        a = HeterogeneousMap({"k": 1})
        a.update(HeterogeneousMap({"k": 2.5}))
        assert a.get("k", float) == 2.5


class TestResultBuffer:
    def test_json_schema(self):
        root = ResultBuffer(HeterogeneousMap({"value": -1.0}))
        child = root.add_child(ResultBuffer(counts={"00": 3, "11": 5}))
        got = root.to_dict()
        assert set(got) == {"metadata", "counts", "children"}
        assert got["children"][0]["counts"] == {"00": 3, "11": 5}
        assert child.to_dict()["children"] == []

    def test_exclude_keys(self):
        root = ResultBuffer(HeterogeneousMap({"wall-time-ms": 3.2, "seed": 1}))
        assert "wall-time-ms" not in root.to_dict(exclude=("wall-time-ms",))["metadata"]


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(7, 3) == derive_seed(7, 3)

    def test_distinct_per_index(self):
        seeds = {derive_seed(0, i) for i in range(100)}
        assert len(seeds) == 100


class TestDefaultObjective:
    def test_identity_only_no_executions(self):
        obj = DefaultObjective(parse_pauli("(3.5,0) I"),
                               parse_kernel("kernel id() qubits 1 { }"))
        assert obj(()) == 3.5
        assert obj._exec_count == 0

    def test_exact_matches_dense(self, ansatz_2p):
        obs = parse_pauli("X0 X1 + Z0 Z1")
        obj = DefaultObjective(obs, ansatz_2p, ExecutionConfig(exact=True))
        for params in ([0.0, 0.0], [0.3, -1.1], [math.pi / 2, math.pi / 2]):
            want = exact_expectation(ansatz_2p.bind(params), obs)
            assert obj(params) == pytest.approx(want, abs=1e-10)

    def test_linearity_exact(self, ansatz_1p):
        a = parse_pauli("X0 X1")
        b = parse_pauli("Z0 Z1")
        cfg = ExecutionConfig(exact=True)
        params = [0.7]
        total = DefaultObjective(a + b, ansatz_1p, cfg)(params)
        split = (DefaultObjective(a, ansatz_1p, cfg)(params)
                 + DefaultObjective(b, ansatz_1p, cfg)(params))
        assert total == pytest.approx(split, abs=1e-10)

    def test_sampled_deterministic_for_fixed_seed(self, ansatz_1p):
        obs = parse_pauli("X0 X1")
        cfg = ExecutionConfig(shots=2000, seed=42)
        v1 = DefaultObjective(obs, ansatz_1p, cfg)([0.4])
        v2 = DefaultObjective(obs, ansatz_1p, cfg)([0.4])
        assert v1 == v2

    def test_publishes_to_sink(self, ansatz_1p):
        sink = ResultBuffer()
        obs = parse_pauli("X0 X1 + Z0 Z1")
        obj = DefaultObjective(obs, ansatz_1p, ExecutionConfig(shots=500), sink)
        obj([0.1])
        obj([0.2])
        assert len(sink.children) == 2
        child = sink.children[0]
        assert child.metadata.get("params", list) == [0.1]
        assert len(child.children) == 2  # one grandchild per measured term
        grandchild = child.children[0]
        assert sum(grandchild.counts.values()) == 500
        assert grandchild.metadata.get("term", str)


class TestNelderMead:
    def test_scalar_quadratic(self):
        # off-lattice target: a minimum at an exact multiple of the initial
        # step lets the simplex straddle it symmetrically and stall early
        target = math.sqrt(3)
        obj = FunctionObjective(lambda x: (x[0] - target) ** 2, 1)
        params, value = NelderMead({"tolerance": 1e-12}).optimize(obj)
        assert abs(params[0] - target) < 1e-3
        assert value < 1e-6

    def test_multidim_convex_quadratics(self):
        rng = np.random.default_rng(67)
        for dim in range(1, 5):
            target = rng.uniform(-1, 1, size=dim)
            obj = FunctionObjective(
                lambda x, t=target: float(np.sum((np.asarray(x) - t) ** 2)), dim)
            opt = NelderMead({"max-iterations": 500, "tolerance": 1e-10})
            params, value = opt.optimize(obj)
            assert np.allclose(params, target, atol=1e-3)

    def test_respects_budget(self):
        calls = []
        obj = FunctionObjective(lambda x: calls.append(1) or (x[0] ** 2), 1)
        NelderMead({"max-iterations": 25, "tolerance": 1e-30}).optimize(obj)
        assert len(calls) <= 25

    def test_initial_point(self):
        obj = FunctionObjective(lambda x: (x[0] + 3.0) ** 2, 1)
        params, _ = NelderMead({"initial-point": [-2.9]}).optimize(obj)
        assert abs(params[0] + 3.0) < 1e-3

    def test_unknown_option_rejected(self):
        with pytest.raises(ValidationError):
            NelderMead({"step-size": 0.1})

    def test_non_finite_objective(self):
        obj = FunctionObjective(lambda x: float("nan"), 1)
        with pytest.raises(OptimizationError):
            NelderMead().optimize(obj)

    def test_make_optimizer(self):
        assert isinstance(make_optimizer("nelder-mead"), NelderMead)
        with pytest.raises(ValidationError):
            make_optimizer("adam")


class TestTaskDefaults:
    def test_all_defaults_single_qubit(self):
        # identity kernel + all-qubit Z observable on |0> gives +1
        buf = sync(task_initiate(TaskSpec(num_qubits=1, params=[])))
        assert buf.metadata.get("value", float) == pytest.approx(1.0)

    def test_default_observable_is_all_z(self):
        obs = computational_basis_observable(3)
        assert obs.to_string() == "Z0 Z1 Z2"

    def test_default_kernel_from_observable(self):
        buf = sync(task_initiate(TaskSpec(observable=parse_pauli("Z0 Z1"),
                                          params=[])))
        assert buf.metadata.get("value", float) == pytest.approx(1.0)

    def test_params_required_without_optimizer(self, ansatz_1p):
        with pytest.raises(ValidationError):
            task_initiate(TaskSpec(kernel=ansatz_1p,
                                   observable=parse_pauli("X0 X1")))

    def test_arity_checked_synchronously(self, ansatz_1p):
        with pytest.raises(ValidationError):
            task_initiate(TaskSpec(kernel=ansatz_1p,
                                   observable=parse_pauli("X0 X1"),
                                   params=[0.1, 0.2]))

    def test_nothing_to_infer(self):
        with pytest.raises(ValidationError):
            task_initiate(TaskSpec())


class TestTaskLifecycle:
    def test_evaluation_buffer_structure(self, ansatz_2p):
        spec = TaskSpec(kernel=ansatz_2p, observable=parse_pauli("X0 X1 + Z0 Z1"),
                        params=[0.2, 0.4], config=ExecutionConfig(shots=100, seed=3))
        buf = sync(task_initiate(spec))
        assert buf.metadata.get("num-evaluations", int) == 1
        assert len(buf.children) == 1
        assert len(buf.children[0].children) == 2

    def test_optimized_task(self, ansatz_1p):
        spec = TaskSpec(kernel=ansatz_1p, observable=parse_pauli("X0 X1"),
                        optimizer=NelderMead(), config=ExecutionConfig(exact=True))
        buf = sync(task_initiate(spec))
        assert buf.metadata.get("opt-value", float) == pytest.approx(-1.0, abs=1e-4)
        assert len(buf.metadata.get("opt-params", list)) == 1
        assert buf.metadata.get("num-evaluations", int) == len(buf.children)

    def test_double_sync_rejected(self):
        handle = task_initiate(TaskSpec(num_qubits=1, params=[]))
        sync(handle)
        with pytest.raises(TaskError):
            sync(handle)

    def test_foreign_handle_rejected(self):
        class Fake:
            pass

        with pytest.raises(TaskError):
            sync(Fake())
        fake = TaskHandle.__new__(TaskHandle)
        fake._runtime = object()
        with pytest.raises(TaskError):
            sync(fake)

    def test_task_failure_wrapped(self):
        class Exploding(FunctionObjective):
            sink = None

            def __init__(self):
                super().__init__(lambda x: 1 / 0, 0)

        handle = task_initiate(TaskSpec(objective=Exploding(), params=[]))
        with pytest.raises(TaskError, match="task failed"):
            sync(handle)

    def test_initiate_returns_before_completion(self):
        class Slow(FunctionObjective):
            sink = None

            def __init__(self):
                super().__init__(lambda x: time.sleep(0.5) or 7.0, 0)

        start = time.perf_counter()
        handle = task_initiate(TaskSpec(objective=Slow(), params=[]))
        elapsed = time.perf_counter() - start
        assert elapsed < 0.1
        buf = sync(handle)
        assert buf.metadata.get("value", float) == 7.0

    def test_handle_transfer_across_threads(self):
        handle = task_initiate(TaskSpec(num_qubits=1, params=[]))
        result = {}

        def worker():
            result["buf"] = sync(handle)

        t = threading.Thread(target=worker)
        t.start()
        t.join()
        assert result["buf"].metadata.get("value", float) == pytest.approx(1.0)

    def test_concurrent_tasks(self):
        class Slow(FunctionObjective):
            sink = None

            def __init__(self):
                super().__init__(lambda x: time.sleep(0.3) or 1.0, 0)

        start = time.perf_counter()
        handles = [task_initiate(TaskSpec(objective=Slow(), params=[]))
                   for _ in range(2)]
        for h in handles:
            sync(h)
        # both 0.3 s objectives must have overlapped
        assert time.perf_counter() - start < 0.55


class TestBasesRunInParallelEquivalence:
    def test_grouped_vs_per_term_exact(self):
        # evaluating term groups separately must match the joint evaluation
        rng = np.random.default_rng(71)
        from conftest import random_bound_kernel, random_hermitian_observable
        cfg = ExecutionConfig(exact=True)
        for _ in range(10):
            kernel = random_bound_kernel(rng, num_qubits=3, depth=5)
            obs = random_hermitian_observable(rng, max_qubits=3, max_terms=5)
            whole = DefaultObjective(obs, kernel, cfg)(())
            by_group = sum(DefaultObjective(g, kernel, cfg)(())
                           for g in obs.group_commuting())
            assert whole == pytest.approx(by_group, abs=1e-10)
