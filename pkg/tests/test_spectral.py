import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import NINE_NODE_A, random_primitive_kernel
from netbridge.errors import DomainError, PreconditionError
from netbridge.graph_core import kernel_costs, weighted_kernel
from netbridge.spectral import (
    entropy_energy_rates,
    hilbert_distance,
    homogeneous_bridge,
    perron,
    rb_walk,
)
from oracles import dense_perron, dfs_paths


def _check_perron(M, p):
    assert np.max(np.abs(M @ p.right - p.lam * p.right)) <= 1e-10 * np.max(np.abs(p.right))
    assert np.max(np.abs(M.T @ p.left - p.lam * p.left)) <= 1e-10 * np.max(np.abs(p.left))
    assert abs(p.left @ p.right - 1.0) <= 1e-12
    assert np.all(p.right > 0) and np.all(p.left > 0)


class TestPerron:
    def test_all_ones(self):
        p = perron(np.ones((2, 2)))
        assert p.lam == pytest.approx(2.0, abs=1e-14)
        assert np.allclose(p.right, [1, 1])
        assert np.allclose(p.left * p.right, [0.5, 0.5])

    def test_nine_node_against_dense_eigensolver(self):
        p = perron(NINE_NODE_A)
        lam, v, u = dense_perron(NINE_NODE_A)
        assert p.lam == pytest.approx(lam, rel=1e-12)
        assert np.allclose(p.right / p.right.max(), v / v.max(), atol=1e-10)
        assert np.allclose(p.left / p.left.max(), u / u.max(), atol=1e-10)
        _check_perron(NINE_NODE_A, p)

    def test_periodic_rejected(self):
        with pytest.raises(PreconditionError):
            perron(np.roll(np.eye(3), 1, axis=1))

    def test_normalisation(self):
        p = perron(NINE_NODE_A)
        assert p.right.max() == 1.0

    def test_deterministic(self):
        a, b = perron(NINE_NODE_A), perron(NINE_NODE_A.copy())
        assert a.lam == b.lam
        assert np.array_equal(a.right, b.right) and np.array_equal(a.left, b.left)

    def test_random_kernels(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            M = random_primitive_kernel(rng, int(rng.integers(2, 9)))
            p = perron(M)
            _check_perron(M, p)
            assert p.lam == pytest.approx(dense_perron(M)[0], rel=1e-10)

    def test_adding_an_edge_raises_lambda(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            M = random_primitive_kernel(rng, 6)
            zeros = np.argwhere(M == 0)
            if not len(zeros):
                continue
            i, j = zeros[rng.integers(len(zeros))]
            M2 = M.copy()
            M2[i, j] = 0.3
            assert perron(M2).lam > perron(M).lam


class TestHilbert:
    def test_scaling_invariance(self):
        x = np.array([0.3, 1.7, 2.2])
        assert hilbert_distance(x, 3 * x) == pytest.approx(0.0, abs=1e-15)

    def test_simple_pair(self):
        assert hilbert_distance([1, 2], [2, 1]) == pytest.approx(math.log(4))

    def test_domain(self):
        with pytest.raises(DomainError):
            hilbert_distance([1, 0], [1, 1])
        with pytest.raises(DomainError):
            hilbert_distance([1, 2], [1, 2, 3])

    def test_birkhoff_contraction(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            n = int(rng.integers(2, 7))
            M = rng.uniform(0.05, 1.0, (n, n))
            x, y = rng.uniform(0.01, 5, n), rng.uniform(0.01, 5, n)
            assert hilbert_distance(M.T @ x, M.T @ y) <= hilbert_distance(x, y) + 1e-12


positive = arrays(np.float64, 4, elements=st.floats(1e-3, 1e3))


@settings(max_examples=200, deadline=None)
@given(positive, positive, positive, st.floats(1e-3, 1e3))
def test_hilbert_is_projective_metric(x, y, z, c):
    dxy = hilbert_distance(x, y)
    assert dxy >= 0
    assert dxy == pytest.approx(hilbert_distance(y, x), abs=1e-12)
    assert hilbert_distance(x, c * x) == pytest.approx(0.0, abs=1e-12)
    assert dxy <= hilbert_distance(x, z) + hilbert_distance(z, y) + 1e-9


class TestWalks:
    def test_all_ones(self):
        w = rb_walk(np.ones((2, 2)))
        assert np.allclose(w.kernel, 0.5)
        assert np.allclose(w.stationary, 0.5)

    def test_stochastic_and_stationary(self):
        w = rb_walk(NINE_NODE_A)
        assert np.max(np.abs(w.kernel.sum(axis=1) - 1)) <= 1e-12
        assert np.max(np.abs(w.kernel.T @ w.stationary - w.stationary)) <= 1e-10
        assert w.stationary.sum() == pytest.approx(1.0, abs=1e-14)

    def test_uniform_on_equal_length_paths(self):
        w = rb_walk(NINE_NODE_A)
        p = w.perron
        for t in range(1, 6):
            for i in range(9):
                for j in range(9):
                    for path in dfs_paths(NINE_NODE_A, i, j, t):
                        prob = w.stationary[i] * math.prod(
                            w.kernel[a, b] for a, b in zip(path, path[1:])
                        )
                        assert prob == pytest.approx(p.lam**-t * p.left[i] * p.right[j], abs=1e-10)

    def test_weighted_path_measure(self, nine_node_weighted):
        B = weighted_kernel(nine_node_weighted)
        U = kernel_costs(B)
        w = rb_walk(B)
        p = w.perron
        for path in dfs_paths(B, 0, 8, 3) + dfs_paths(B, 1, 8, 4):
            t = len(path) - 1
            prob = w.stationary[path[0]] * math.prod(w.kernel[a, b] for a, b in zip(path, path[1:]))
            energy = sum(U[a, b] for a, b in zip(path, path[1:]))
            want = p.lam**-t * math.exp(-energy) * p.left[path[0]] * p.right[path[-1]]
            assert prob == pytest.approx(want, rel=1e-10)

    def test_homogeneous_bridge_invariant(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            M = random_primitive_kernel(rng, int(rng.integers(2, 8)))
            w = homogeneous_bridge(M)
            assert np.max(np.abs(w.kernel.T @ w.stationary - w.stationary)) <= 1e-10

    def test_stochastic_prior_is_its_own_bridge(self):
        P = np.array([[0.2, 0.8, 0.0], [0.3, 0.3, 0.4], [0.5, 0.0, 0.5]])
        w = homogeneous_bridge(P)
        assert w.perron.lam == pytest.approx(1.0, abs=1e-13)
        assert np.allclose(w.kernel, P, atol=1e-12)
        vals, vecs = np.linalg.eig(P.T)
        pi = np.abs(vecs[:, np.argmin(np.abs(vals - 1))].real)
        assert np.allclose(w.stationary, pi / pi.sum(), atol=1e-12)

    def test_two_state_hand_computed(self):
        # eigenvalues 3 and -1; right vector (1, 1)
        w = homogeneous_bridge(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert w.perron.lam == pytest.approx(3.0, abs=1e-13)
        assert np.allclose(w.kernel, [[1 / 3, 2 / 3], [2 / 3, 1 / 3]], atol=1e-14)

    def test_normalisation_invariance(self):
        # rescaling (u, v) -> (c u, v / c) leaves walk and stationary law fixed
        M = random_primitive_kernel(np.random.default_rng(2), 5)
        p = perron(M)
        for c in (0.01, 7.0):
            u, v = c * p.left, p.right / c
            R = M * v[None, :] / (p.lam * v[:, None])
            w = rb_walk(M)
            assert np.allclose(R, w.kernel, atol=1e-12)
            assert np.allclose(u * v, w.stationary, atol=1e-12)


class TestRates:
    def test_adjacency_entropy_is_log_lambda(self):
        w = rb_walk(NINE_NODE_A)
        U = np.where(NINE_NODE_A > 0, 0.0, np.inf)
        S, Ubar = entropy_energy_rates(w, U)
        assert Ubar == 0.0
        assert S == pytest.approx(math.log(w.perron.lam), abs=1e-9)

    def test_all_ones(self):
        S, Ubar = entropy_energy_rates(rb_walk(np.ones((2, 2))), np.zeros((2, 2)))
        assert S == pytest.approx(math.log(2), abs=1e-14)
        assert Ubar == 0.0

    def test_free_energy_weighted_graph(self, nine_node_costly):
        B = weighted_kernel(nine_node_costly)
        w = rb_walk(B)
        S, Ubar = entropy_energy_rates(w, kernel_costs(B))
        assert S - Ubar == pytest.approx(math.log(w.perron.lam), abs=1e-9)

    def test_free_energy_random(self):
        rng = np.random.default_rng(21)
        for _ in range(30):
            M = random_primitive_kernel(rng, int(rng.integers(2, 9)))
            w = rb_walk(M)
            S, Ubar = entropy_energy_rates(w, kernel_costs(M))
            assert abs(S - Ubar - math.log(w.perron.lam)) <= 1e-9

    def test_support_mismatch(self):
        w = rb_walk(np.ones((2, 2)))
        with pytest.raises(DomainError):
            entropy_energy_rates(w, np.array([[0.0, np.inf], [0.0, 0.0]]))
