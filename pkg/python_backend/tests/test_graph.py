"""
Computation Graph 테스트
상수 전파, memoization, 정수 행렬곱 서브그래프, 커널 카운터
"""

import numpy as np
import pytest

from core.exceptions import DimensionError, FeedError, GraphError, VocabularyError
from engine.autotune import TunerState
from engine.graph import Graph, Op, Precision, dot_int, prepare_operand, tuned_gemm
from engine.quant import Int8Scheme


@pytest.fixture
def weights(rng):
    return rng.uniform(-1, 1, size=(6, 4)).astype(np.float32)


@pytest.mark.unit
class TestConstness:

    def test_param_literal_and_input(self, weights):
        g = Graph()
        p = g.param(weights)
        lit = g.literal(np.ones(4, np.float32))
        x = g.input((2, 6))
        assert g.node(p).is_constant and g.node(lit).is_constant
        assert not g.node(x).is_constant

    def test_constness_propagates_through_children(self, weights):
        g = Graph()
        p = g.param(weights)
        t = g.add_node(Op.TRANSPOSE, [p])
        x = g.input((2, 6))
        product = g.add_node(Op.GEMM_F32, [x, p])
        assert g.node(t).is_constant
        assert not g.node(product).is_constant

    def test_ids_are_monotonic_and_children_precede_parents(self, weights):
        g = Graph()
        p = g.param(weights)
        t = g.add_node(Op.TRANSPOSE, [p])
        assert t > p
        with pytest.raises(GraphError):
            g.add_node(Op.TRANSPOSE, [t + 5])


@pytest.mark.unit
class TestMemoization:

    def test_constant_subgraph_evaluated_once(self, weights, rng):
        # Given: 상수 가중치의 전치 + 양자화 노드
        g = Graph(memoize=True)
        p = g.param(weights)
        x = g.input((3, 6))
        out = dot_int(g, x, p, Precision.I16)

        # When: 다섯 번 forward
        for _ in range(5):
            g.forward({x: rng.standard_normal((3, 6))}, [out])

        # Then: 가중치 준비 노드는 한 번, 활성화 양자화와 곱은 매번
        assert g.kernel_counters[Op.TRANSPOSE.value] == 1
        assert g.kernel_counters[Op.QUANTIZE_I16.value] == 1 + 5
        assert g.kernel_counters[Op.GEMM_I16.value] == 5

    def test_without_memoization_constants_recompute(self, weights, rng):
        g = Graph(memoize=False)
        p = g.param(weights)
        x = g.input((3, 6))
        out = dot_int(g, x, p, Precision.I16)
        for _ in range(5):
            g.forward({x: rng.standard_normal((3, 6))}, [out])
        assert g.kernel_counters[Op.TRANSPOSE.value] == 5
        assert g.kernel_counters[Op.QUANTIZE_I16.value] == 10

    def test_memoized_and_plain_results_are_identical(self, weights, rng):
        feeds = rng.standard_normal((3, 6)).astype(np.float32)
        results = []
        for memoize in (True, False):
            g = Graph(memoize=memoize)
            p = g.param(weights)
            x = g.input((3, 6))
            out = dot_int(g, x, p, Precision.I8, Int8Scheme(2.0))
            g.forward({x: feeds}, [out])
            results.append(g.forward({x: feeds}, [out])[out])
        np.testing.assert_array_equal(results[0], results[1])

    def test_prepared_operand_is_shared(self, weights):
        g = Graph()
        p = g.param(weights)
        first = prepare_operand(g, p, Precision.I16)
        assert prepare_operand(g, p, Precision.I16) == first
        assert prepare_operand(g, p, Precision.I8) != first


@pytest.mark.unit
class TestForward:

    def test_missing_feed(self, weights):
        g = Graph()
        x = g.input((2, 6), "x")
        out = g.add_node(Op.GEMM_F32, [x, g.param(weights)])
        with pytest.raises(FeedError):
            g.forward({}, [out])

    def test_wrong_feed_shape(self, weights):
        g = Graph()
        x = g.input((2, 6))
        out = g.add_node(Op.GEMM_F32, [x, g.param(weights)])
        with pytest.raises(DimensionError):
            g.forward({x: np.zeros((3, 6))}, [out])

    def test_shape_errors_at_construction(self, weights):
        g = Graph()
        x = g.input((2, 5))
        with pytest.raises(DimensionError):
            g.add_node(Op.GEMM_F32, [x, g.param(weights)])
        with pytest.raises(GraphError):
            dot_int(g, x, g.param(weights), Precision.I16)

    def test_gather_out_of_range(self, weights):
        g = Graph()
        with pytest.raises(VocabularyError):
            g.add_node(Op.GATHER, [g.param(weights)], {"ids": [0, 6]})

    def test_only_requested_nodes_run(self, weights):
        g = Graph()
        p = g.param(weights)
        g.add_node(Op.RELU, [p])
        t = g.add_node(Op.TRANSPOSE, [p])
        g.forward({}, [t])
        assert Op.RELU.value not in g.kernel_counters

    def test_rollback_discards_nodes_after_mark(self, weights):
        g = Graph()
        p = g.param(weights)
        mark = g.checkpoint()
        g.add_node(Op.TRANSPOSE, [p])
        g.add_node(Op.RELU, [p])
        g.rollback(mark)
        assert len(g) == 1
        assert g.add_node(Op.RELU, [p]) == mark + 2

    def test_scope_counts_multiply_accumulates(self, weights):
        g = Graph()
        x = g.input((3, 6))
        out = g.add_node(Op.GEMM_F32, [x, g.param(weights)], scope="output")
        g.forward({x: np.ones((3, 6))}, [out])
        assert g.mac_counters["output"] == 3 * 6 * 4


@pytest.mark.unit
class TestTunedGemm:

    def test_forced_alternative_runs_integer_kernel(self, weights, rng):
        g = Graph(tuner=TunerState(force_alt="i16"))
        x = g.input((2, 6))
        out = tuned_gemm(g, x, g.param(weights))
        value = g.forward({x: rng.standard_normal((2, 6))}, [out])[out]
        assert value.shape == (2, 4)
        assert g.kernel_counters[Op.GEMM_I16.value] == 1
        assert Op.GEMM_F32.value not in g.kernel_counters

    def test_alternatives_agree_within_quantization_error(self, weights, rng):
        feed = rng.uniform(-1, 1, size=(2, 6)).astype(np.float32)
        results = {}
        for alt in ("f32", "i16"):
            g = Graph(tuner=TunerState(force_alt=alt))
            x = g.input((2, 6))
            out = tuned_gemm(g, x, g.param(weights))
            results[alt] = g.forward({x: feed}, [out])[out]
        np.testing.assert_allclose(results["f32"], results["i16"], atol=6 * 2e-3)

    def test_tuner_commits_after_budget(self, weights, rng, fake_clock):
        tuner = TunerState(budget=2, clock=fake_clock)
        g = Graph(tuner=tuner)
        x = g.input((2, 6))
        out = tuned_gemm(g, x, g.param(weights))
        for _ in range(4):
            g.forward({x: rng.standard_normal((2, 6))}, [out])
        assert len(tuner.table) == 1
        entry = next(iter(tuner.table.values()))
        assert entry.chosen in ("f32", "i16")
        assert [m.count for m in entry.measurements] == [2, 2]
