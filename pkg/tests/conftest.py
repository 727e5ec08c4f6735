from pathlib import Path

import numpy as np
import pytest

from netbridge.graph_core import Graph, is_primitive, load_graph

DATA = Path(__file__).resolve().parent.parent / "data"
SCHEMAS = Path(__file__).resolve().parent.parent / "schemas"

# printed 0/1 matrix of the nine-node network (sink loop included)
NINE_NODE_A = np.array(
    [
        [0, 1, 1, 1, 0, 0, 0, 0, 0],
        [0, 0, 1, 0, 1, 0, 1, 0, 0],
        [0, 0, 0, 1, 0, 0, 0, 1, 0],
        [0, 0, 0, 0, 0, 0, 0, 1, 0],
        [0, 0, 0, 0, 0, 1, 1, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 1],
        [0, 0, 0, 0, 0, 0, 0, 0, 1],
        [0, 0, 0, 0, 0, 0, 0, 0, 1],
        [1, 0, 0, 0, 0, 0, 0, 0, 1],
    ],
    dtype=float,
)


@pytest.fixture
def nine_node():
    return load_graph(DATA / "nine_node.txt")


@pytest.fixture
def nine_node_weighted():
    return load_graph(DATA / "nine_node_weighted.txt")


@pytest.fixture
def nine_node_costly():
    return load_graph(DATA / "nine_node_costly.txt")


@pytest.fixture
def nine_node_cut():
    return load_graph(DATA / "nine_node_cut.txt")


def random_primitive_graph(rng, n, density=0.45, weighted=True):
    """Random strongly connected aperiodic graph: a Hamiltonian cycle, one
    self-loop, and random extra edges, with weights in [0.2, 1.5]."""
    while True:
        order = rng.permutation(n)
        edges = {(int(order[k]), int(order[(k + 1) % n])) for k in range(n)}
        edges.add((int(order[0]), int(order[0])))
        for i in range(n):
            for j in range(n):
                if rng.random() < density:
                    edges.add((i, j))
        weights = None
        if weighted:
            weights = {e: float(rng.uniform(0.2, 1.5)) for e in edges}
        g = Graph(n, tuple(edges), weights)
        M = np.zeros((n, n))
        for e in edges:
            M[e] = 1
        if is_primitive(M).primitive:
            return g


def random_primitive_kernel(rng, n, density=0.5):
    while True:
        M = rng.uniform(0.1, 2.0, (n, n)) * (rng.random((n, n)) < density)
        if is_primitive(M).primitive:
            return M
