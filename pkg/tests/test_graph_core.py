import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import NINE_NODE_A
from netbridge.errors import DomainError, GraphParseError, GraphValidationError
from netbridge.graph_core import (
    Graph,
    adjacency_kernel,
    ensure_sink_loop,
    feasibility,
    format_graph,
    is_primitive,
    kernel_costs,
    parse_graph,
    teleport_kernel,
    weighted_kernel,
)
from oracles import dfs_paths


class TestParse:
    def test_inline_records(self):
        g = parse_graph("n=2; 1 2; 2 1")
        assert g.n == 2
        assert set(g.edges) == {(0, 1), (1, 0)}
        assert g.weights is None

    def test_nine_node_file(self, nine_node):
        # the printed matrix has 16 ones (a_99 included)
        assert len(nine_node.edges) == 16
        assert np.array_equal(adjacency_kernel(nine_node), NINE_NODE_A)

    def test_endpoint_out_of_range(self):
        with pytest.raises(GraphValidationError):
            parse_graph("n=2; 1 3")

    def test_duplicate_edge(self):
        with pytest.raises(GraphValidationError, match="duplicate"):
            parse_graph("n=3\n1 2\n1 2\n")

    def test_malformed_line_reports_line_number(self):
        with pytest.raises(GraphParseError) as info:
            parse_graph("n=3\n# comment\n1 2\n1 two\n")
        assert info.value.line == 4
        assert "line 4" in str(info.value)

    def test_too_many_fields(self):
        with pytest.raises(GraphParseError):
            parse_graph("n=3\n1 2 3 4\n")

    def test_missing_header(self):
        with pytest.raises(GraphParseError, match="n=<int>"):
            parse_graph("1 2\n")

    def test_unknown_mode(self):
        with pytest.raises(GraphParseError):
            parse_graph("n=2 mode=capacity\n1 2 1\n")

    def test_energy_mode(self):
        g = parse_graph(f"n=2 mode=energy\n1 2 {math.log(2)!r}\n2 1 0\n")
        assert weighted_kernel(g)[0, 1] == pytest.approx(0.5, abs=1e-15)
        assert weighted_kernel(g)[1, 0] == 1.0

    def test_negative_energy_rejected(self):
        with pytest.raises(GraphValidationError):
            parse_graph("n=2 mode=energy\n1 2 -1\n")

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(GraphValidationError):
            parse_graph("n=2\n1 2 0\n")

    def test_partial_values_rejected(self):
        with pytest.raises(GraphValidationError):
            parse_graph("n=2\n1 2 0.5\n2 1\n")

    def test_json(self):
        g = parse_graph('{"n": 3, "mode": "weight", "edges": [[1, 2, 0.5], [2, 3, 1.0]]}')
        assert g.weights == {(0, 1): 0.5, (1, 2): 1.0}

    def test_json_errors(self):
        with pytest.raises(GraphParseError):
            parse_graph('{"n": 3, "edges": [[1]]}')
        with pytest.raises(GraphParseError):
            parse_graph('{"n": 3, "edges": [[1, 2]')
        with pytest.raises(GraphValidationError):
            parse_graph('{"n": 2, "edges": [[1, 5]]}')

    def test_round_trip(self, nine_node_costly):
        assert parse_graph(format_graph(nine_node_costly)) == nine_node_costly


class TestKernels:
    def test_adjacency_two_cycle(self):
        g = parse_graph("n=2; 1 2; 2 1")
        assert np.array_equal(adjacency_kernel(g), [[0, 1], [1, 0]])

    def test_empty_edge_set(self):
        assert not adjacency_kernel(Graph(3, ())).any()

    def test_weighted_printed_matrix(self, nine_node_weighted):
        B = NINE_NODE_A.copy()
        B[6, 8] = 0.5
        assert np.array_equal(weighted_kernel(nine_node_weighted), B)

    def test_zero_energies_give_adjacency(self, nine_node):
        g = Graph.from_energies(nine_node.n, {e: 0.0 for e in nine_node.edges})
        assert np.array_equal(weighted_kernel(g), adjacency_kernel(nine_node))

    def test_log2_energy(self):
        g = Graph.from_energies(2, {(0, 1): math.log(2)})
        assert weighted_kernel(g)[0, 1] == pytest.approx(0.5, rel=1e-15)

    def test_weighted_needs_values(self, nine_node):
        with pytest.raises(GraphValidationError):
            weighted_kernel(nine_node)

    def test_teleport_entries(self, nine_node_cut):
        M = teleport_kernel(nine_node_cut, 8.0)
        A = adjacency_kernel(nine_node_cut)
        assert np.all(M[A == 1] == 1.0)
        assert np.allclose(M[A == 0], 3.3546262790251185e-4, rtol=1e-12)
        assert np.all(M > 0)
        M2 = teleport_kernel(nine_node_cut, 2.0)
        assert np.allclose(M2[A == 0], math.exp(-2))

    def test_teleport_complete_graph(self):
        edges = tuple((i, j) for i in range(3) for j in range(3))
        g = Graph(3, edges, {e: 0.3 for e in edges})
        assert np.array_equal(teleport_kernel(g, 5.0), weighted_kernel(g))

    def test_teleport_dominates_weighted(self, nine_node_costly):
        T = teleport_kernel(nine_node_costly, 3.0)
        B = weighted_kernel(nine_node_costly)
        assert np.all(T >= B)
        assert np.all(T[B == 0] > 0)

    def test_teleport_rejects_nonpositive_energy(self, nine_node):
        with pytest.raises(DomainError):
            teleport_kernel(nine_node, 0.0)

    def test_kernel_costs(self):
        U = kernel_costs(np.array([[1.0, 0.0], [0.5, 2.0]]))
        assert U[0, 0] == 0 and U[0, 1] == math.inf
        assert U[1, 0] == pytest.approx(math.log(2))


class TestSinkLoop:
    def test_adds_loop(self, nine_node):
        g = nine_node.without_edges([(8, 8)])
        assert adjacency_kernel(g)[8, 8] == 0
        assert adjacency_kernel(ensure_sink_loop(g, 8))[8, 8] == 1

    def test_existing_loop_unchanged(self, nine_node_costly):
        assert ensure_sink_loop(nine_node_costly, 8) is nine_node_costly

    def test_added_loop_has_zero_energy(self, nine_node_weighted):
        g = ensure_sink_loop(nine_node_weighted.without_edges([(8, 8)]), 8)
        assert g.costs[(8, 8)] == 0.0

    def test_out_of_range(self, nine_node):
        with pytest.raises(DomainError):
            ensure_sink_loop(nine_node, -1)


class TestFeasibility:
    def test_counts(self):
        assert feasibility(NINE_NODE_A, 0, 8, 3) == (3, True)
        # seven walks of length four; matches the sevenths in the flow table
        assert feasibility(NINE_NODE_A, 0, 8, 4) == (7, True)
        assert len(dfs_paths(NINE_NODE_A, 0, 8, 4)) == 7

    def test_disconnected(self):
        M = np.array([[1.0, 0.0], [0.0, 1.0]])
        for N in (1, 3, 7):
            assert feasibility(M, 0, 1, N) == (0, False)

    @pytest.mark.parametrize("N", range(1, 7))
    def test_agrees_with_dfs(self, N):
        for i in range(9):
            for j in range(9):
                assert feasibility(NINE_NODE_A, i, j, N).count == len(dfs_paths(NINE_NODE_A, i, j, N))

    def test_weighted_entry(self):
        M = np.array([[0.5, 0.25], [0.0, 1.0]])
        assert feasibility(M, 0, 1, 2).count == pytest.approx(0.5 * 0.25 + 0.25 * 1.0)


class TestPrimitive:
    def test_all_ones(self):
        assert is_primitive(np.ones((2, 2))) == (True, 1)

    def test_cycle_is_periodic(self):
        P = np.roll(np.eye(3), 1, axis=1)
        assert is_primitive(P) == (False, None)

    def test_nine_node(self):
        prim = is_primitive(NINE_NODE_A)
        assert prim.primitive
        assert np.all(np.linalg.matrix_power(NINE_NODE_A, prim.exponent) > 0)
        assert not np.all(np.linalg.matrix_power(NINE_NODE_A, prim.exponent - 1) > 0)

    def test_reducible(self):
        assert not is_primitive(np.array([[1.0, 1.0], [0.0, 1.0]])).primitive


@settings(max_examples=150, deadline=None)
@given(
    st.integers(1, 6).flatmap(
        lambda n: st.lists(st.lists(st.booleans(), min_size=n, max_size=n), min_size=n, max_size=n)
    )
)
def test_primitivity_matches_direct_powers(rows):
    S = np.array(rows, dtype=np.int64)
    n = len(S)
    bound = n * n - 2 * n + 2
    P = np.eye(n, dtype=np.int64)
    first = None
    for k in range(1, bound + 1):
        P = np.minimum(P @ S, 1)
        if P.all():
            first = k
            break
    assert is_primitive(S.astype(float)) == (first is not None, first)
