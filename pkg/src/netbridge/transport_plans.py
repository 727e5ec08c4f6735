"""Robust source-to-sink transport plans and their comparison with OMT."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import bridge_solver as bs
from .errors import CapacityError, DomainError, InfeasibleError
from .graph_core import (
    Graph,
    adjacency_kernel,
    ensure_sink_loop,
    feasibility,
    kernel_costs,
    teleport_kernel,
    weighted_kernel,
)

ORACLE_MAX_NODES = 12
ORACLE_MAX_STEPS = 8
ENUMERATION_LIMIT = 200_000
COST_TIE_TOL = 1e-12
PRIOR_MODES = ("adjacency", "weighted", "teleport")


@dataclass(frozen=True)
class PathEnsemble:
    """Paths (0-based node tuples) with probabilities and total energies."""

    paths: tuple[tuple[int, ...], ...]
    probs: np.ndarray
    costs: np.ndarray

    @property
    def feasible(self) -> bool:
        return len(self.paths) > 0

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return dict(zip(self.paths, self.probs.tolist()))

    def __len__(self):
        return len(self.paths)


@dataclass(frozen=True)
class CostMatrix:
    """End-to-end minimal costs over ``horizon`` steps with free waiting.

    ``layers[t][s, x]`` is the cheapest ``t``-step cost from ``s`` to ``x``
    using ``step`` (the edge energies with zero on the diagonal); the last
    layer is ``matrix``.
    """

    matrix: np.ndarray
    step: np.ndarray
    layers: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.layers) - 1


@dataclass(frozen=True)
class OmtCoupling:
    q: np.ndarray
    total_cost: float
    row_potential: np.ndarray
    col_potential: np.ndarray
    slackness_residual: float
    dual_violation: float


@dataclass(frozen=True)
class CostLevel:
    cost: float
    paths: int
    prob_min: float
    prob_max: float
    mass: float


@dataclass(frozen=True)
class TransportReport:
    levels: tuple[CostLevel, ...]
    decreasing_in_cost: bool
    equal_cost_gap: float
    boltzmann_spread: float
    min_cost_paths: tuple[tuple[int, ...], ...]
    min_cost_path_probs: tuple[float, ...]
    mass_on_min_cost_paths: float
    bridge_path_count: int
    omt_path_count: int
    effective_support: float


@dataclass(frozen=True)
class RobustPlan:
    graph: Graph
    kernel: np.ndarray
    costs: np.ndarray
    source: int
    sink: int
    horizon: int
    mode: str
    potentials: bs.PotentialSchedule
    schedule: bs.TransitionSchedule
    flow: bs.MarginalFlow
    ensemble: PathEnsemble | None = field(default=None, repr=False)
    path_count: float = 0


def prior_kernel(g: Graph, mode: str, U0: float = 8.0) -> np.ndarray:
    if mode == "adjacency":
        return adjacency_kernel(g)
    if mode == "weighted":
        return adjacency_kernel(g) if g.weights is None else weighted_kernel(g)
    if mode == "teleport":
        return teleport_kernel(g, U0)
    raise DomainError(f"unknown prior mode {mode!r}; expected one of {PRIOR_MODES}")


def path_cost(costs, path: Sequence[int]) -> float:
    return float(sum(costs[a, b] for a, b in zip(path, path[1:])))


def _ensemble(paths, weights, costs):
    if not paths:
        return PathEnsemble((), np.zeros(0), np.zeros(0))
    w = np.asarray(weights, dtype=float)
    return PathEnsemble(
        tuple(paths), w / w.sum(), np.array([path_cost(costs, p) for p in paths])
    )


def enumerate_schedule(ts: bs.TransitionSchedule, costs, limit: int = ENUMERATION_LIMIT) -> PathEnsemble:
    """All paths with positive probability under a transition schedule, in lexicographic order."""
    N = ts.horizon
    paths, probs = [], []
    stack = [((int(x),), float(ts.nu0[x])) for x in np.flatnonzero(ts.nu0 > 0)[::-1]]
    while stack:
        path, prob = stack.pop()
        t = len(path) - 1
        if t == N:
            paths.append(path)
            probs.append(prob)
            if len(paths) > limit:
                raise CapacityError(f"more than {limit} paths carry mass")
            continue
        row = ts.steps[t][path[-1]]
        for y in np.flatnonzero(row > 0)[::-1]:
            stack.append((path + (int(y),), prob * row[y]))
    return PathEnsemble(
        tuple(paths), np.array(probs), np.array([path_cost(costs, p) for p in paths])
    )


def robust_plan(
    g: Graph,
    source: int,
    sink: int,
    N: int,
    prior_mode: str = "adjacency",
    U0: float = 8.0,
    tol: float = bs.DEFAULT_TOL,
    max_iter: int = bs.DEFAULT_MAX_ITER,
    sink_loop: bool = True,
    enumerate_paths: bool = True,
) -> RobustPlan:
    """Bridge from a unit mass at ``source`` to ``sink`` in ``N`` steps.

    The prior kernel is the adjacency matrix, the edge weights, or the
    teleport kernel with energy ``U0`` on non-edges.  A zero-energy loop is
    added at the sink first unless ``sink_loop`` is false.
    """
    for name, node in (("source", source), ("sink", sink)):
        if not 0 <= node < g.n:
            raise DomainError(f"{name} {node + 1} outside 1..{g.n}")
    if sink_loop:
        g = ensure_sink_loop(g, sink)
    M = prior_kernel(g, prior_mode, U0)
    costs = kernel_costs(M)
    count, ok = feasibility(M, source, sink, N)
    if not ok:
        raise InfeasibleError(
            f"(M^{N})_{{{source + 1},{sink + 1}}} = 0: no path of length {N}",
            state=source,
            path_count=0,
        )
    problem = bs.BridgeProblem(M, N, bs.delta(g.n, source), bs.delta(g.n, sink))
    pot, ts, flow = bs.solve(problem, tol, max_iter)
    ensemble = None
    if enumerate_paths:
        try:
            ensemble = enumerate_schedule(ts, costs)
        except CapacityError:
            ensemble = None
    return RobustPlan(g, M, costs, source, sink, N, prior_mode, pot, ts, flow, ensemble, count)


def oracle_bridge(M, source: int, sink: int, N: int) -> PathEnsemble:
    """Brute-force conditioned prior: every ``N``-step path ``source -> sink``
    weighted by the product of its kernel entries, then normalised."""
    M = np.asarray(M, dtype=float)
    n = len(M)
    if n > ORACLE_MAX_NODES or N > ORACLE_MAX_STEPS:
        raise CapacityError(
            f"oracle is limited to n <= {ORACLE_MAX_NODES}, N <= {ORACLE_MAX_STEPS} "
            f"(got n={n}, N={N})"
        )
    succ = [np.flatnonzero(M[i] > 0).tolist() for i in range(n)]
    # hits[k][x]: x can reach the sink in exactly k more steps (pruning only)
    hits = [np.arange(n) == sink]
    for _ in range(N):
        hits.append((M > 0) @ hits[-1] > 0)
    paths, weights = [], []

    def walk(path, w):
        if len(path) == N + 1:
            paths.append(tuple(path))
            weights.append(w)
            return
        x = path[-1]
        left = N - len(path)
        for y in succ[x]:
            if hits[left][y]:
                path.append(y)
                walk(path, w * M[x, y])
                path.pop()

    if hits[N][source]:
        walk([source], 1.0)
    return _ensemble(paths, weights, kernel_costs(M))


# ---------------------------------------------------------------------------
# minimum-cost paths


def graph_costs(g: Graph) -> np.ndarray:
    """Edge energies (zero for unweighted graphs), ``inf`` off the edge set."""
    U = np.full((g.n, g.n), np.inf)
    costs = g.costs
    for e in g.edges:
        U[e] = 0.0 if costs is None else costs[e]
    return U


def cost_matrix(costs, N: int) -> CostMatrix:
    """All-pairs cheapest cost over exactly ``N`` steps with zero-cost waiting."""
    if N < 1:
        raise DomainError(f"horizon must be >= 1, got {N}")
    step = np.array(costs, dtype=float)
    np.fill_diagonal(step, 0.0)
    n = len(step)
    layers = np.empty((N + 1, n, n))
    layers[0] = np.where(np.eye(n, dtype=bool), 0.0, np.inf)
    for t in range(N):
        layers[t + 1] = np.min(layers[t][:, :, None] + step[None, :, :], axis=1)
    return CostMatrix(layers[N], step, layers)


def _canonical(seq, sink, N):
    collapsed = [seq[0]]
    for x in seq[1:]:
        if x != collapsed[-1]:
            collapsed.append(x)
    return tuple(collapsed + [sink] * (N + 1 - len(collapsed)))


def minimizing_paths(C: CostMatrix, source: int, sink: int) -> list[tuple[int, ...]]:
    """Every cheapest route, waiting removed and padded at the sink.

    Ties are kept when costs agree to within ``COST_TIE_TOL``.
    """
    N = C.horizon
    D = C.layers[:, source, :]
    if not np.isfinite(D[N, sink]):
        return []
    found = set()

    def back(t, x, suffix):
        if t == 0:
            if x == source:
                found.add(_canonical([x] + suffix, sink, N))
            return
        for y in range(len(D[t])):
            c = D[t - 1, y] + C.step[y, x]
            if np.isfinite(c) and abs(c - D[t, x]) <= COST_TIE_TOL * max(1.0, abs(D[t, x])):
                back(t - 1, y, [x] + suffix)

    back(N, sink, [])
    return sorted(found)


def min_cost_paths(g_or_costs, source: int, sink: int, N: int):
    """Return ``(CostMatrix, minimizing source->sink paths)``.

    Accepts a :class:`Graph` or an energy matrix (``inf`` for missing edges).
    Self-loops cost nothing, so the matrix covers every length up to ``N``.
    """
    U = graph_costs(g_or_costs) if isinstance(g_or_costs, Graph) else np.asarray(g_or_costs, float)
    C = cost_matrix(U, N)
    return C, minimizing_paths(C, source, sink)


# ---------------------------------------------------------------------------
# optimal mass transport


def _bellman_ford(n_nodes, arcs, dist):
    """Relax ``arcs`` (u, v, cost) from initial distances; returns dist and preds."""
    pred = [None] * n_nodes
    for _ in range(n_nodes):
        changed = False
        for k, (u, v, c) in enumerate(arcs):
            if dist[u] + c < dist[v] - 1e-15:
                dist[v] = dist[u] + c
                pred[v] = k
                changed = True
        if not changed:
            break
    return dist, pred


def omt_plan(C, nu0, nuN, eps: float = 1e-14) -> OmtCoupling:
    """Optimal coupling of ``nu0`` and ``nuN`` under end-point costs ``C``.

    Successive shortest augmenting paths on the bipartite transportation
    network (Bellman-Ford on the residual graph).  Dual potentials are
    recovered from residual distances and used to certify optimality.
    """
    Cm = np.asarray(C.matrix if isinstance(C, CostMatrix) else C, dtype=float)
    nu0 = np.asarray(nu0, dtype=float)
    nuN = np.asarray(nuN, dtype=float)
    n = len(Cm)
    rows = np.flatnonzero(nu0 > 0)
    cols = np.flatnonzero(nuN > 0)
    R, K = len(rows), len(cols)
    S, T = R + K, R + K + 1
    supply = nu0[rows].copy()
    demand = nuN[cols].copy()
    q = np.zeros((R, K))
    finite = np.isfinite(Cm[np.ix_(rows, cols)])
    cost = np.where(finite, Cm[np.ix_(rows, cols)], 0.0)

    while True:
        arcs = []
        for a in range(R):
            if supply[a] > eps:
                arcs.append((S, a, 0.0))
            for b in range(K):
                if finite[a, b]:
                    arcs.append((a, R + b, cost[a, b]))
                if q[a, b] > eps:
                    arcs.append((R + b, a, -cost[a, b]))
        for b in range(K):
            if demand[b] > eps:
                arcs.append((R + b, T, 0.0))
        dist = [math.inf] * (R + K + 2)
        dist[S] = 0.0
        dist, pred = _bellman_ford(R + K + 2, arcs, dist)
        if not math.isfinite(dist[T]):
            break
        route = []
        v = T
        while v != S:
            route.append(arcs[pred[v]])
            v = arcs[pred[v]][0]
        amount = math.inf
        for u, v, _ in route:
            if u == S:
                amount = min(amount, supply[v])
            elif v == T:
                amount = min(amount, demand[u - R])
            elif u >= R:
                amount = min(amount, q[v, u - R])
        for u, v, _ in route:
            if u == S:
                supply[v] -= amount
            elif v == T:
                demand[u - R] -= amount
            elif u < R:
                q[u, v - R] += amount
            else:
                q[v, u - R] -= amount
    shipped = q.sum()
    if shipped < 1.0 - 1e-10:
        raise InfeasibleError(
            f"no finite-cost coupling: only {shipped:.6g} of the mass can be matched"
        )

    # dual certificate: potentials from residual shortest paths (all-zero start)
    arcs = []
    for a in range(R):
        for b in range(K):
            if finite[a, b]:
                arcs.append((a, R + b, cost[a, b]))
            if q[a, b] > eps:
                arcs.append((R + b, a, -cost[a, b]))
    d, _ = _bellman_ford(R + K, arcs, [0.0] * (R + K))
    alpha = -np.array(d[:R])
    beta = np.array(d[R:])
    reduced = cost - alpha[:, None] - beta[None, :]
    used = q > eps
    slack = float(np.max(np.abs(reduced[used]))) if used.any() else 0.0
    violation = float(max(0.0, -np.min(np.where(finite, reduced, np.inf))))

    full = np.zeros((n, n))
    full[np.ix_(rows, cols)] = q
    row_pot = np.zeros(n)
    col_pot = np.zeros(n)
    row_pot[rows] = alpha
    col_pot[cols] = beta
    total = float(np.sum(q * cost))
    return OmtCoupling(full, total, row_pot, col_pot, slack, violation)


# ---------------------------------------------------------------------------
# comparison


def cost_levels(ensemble: PathEnsemble, tol: float = 1e-9) -> list[CostLevel]:
    order = np.argsort(ensemble.costs, kind="stable")
    levels = []
    group = []
    for k in order:
        if group and ensemble.costs[k] - ensemble.costs[group[0]] > tol * max(1.0, abs(ensemble.costs[group[0]])):
            levels.append(group)
            group = []
        group.append(k)
    if group:
        levels.append(group)
    out = []
    for grp in levels:
        p = ensemble.probs[grp]
        out.append(
            CostLevel(float(np.mean(ensemble.costs[grp])), len(grp), float(p.min()), float(p.max()), float(p.sum()))
        )
    return out


def compare(
    bridge: PathEnsemble,
    mc: Sequence[tuple[int, ...]],
    C: CostMatrix | None = None,
    coupling: OmtCoupling | None = None,
) -> TransportReport:
    """Summarise how the bridge spreads mass relative to cheapest routes.

    Probability is expected to fall strictly with path cost, equal-cost
    paths to share one probability, and ``prob * exp(cost)`` to be a single
    constant.  OMT moves each unit of mass along one cheapest route, so its
    path count is the number of charged end-point pairs.
    """
    levels = cost_levels(bridge)
    decreasing = all(a.prob_min > b.prob_max for a, b in zip(levels, levels[1:]))
    gap = max((lv.prob_max - lv.prob_min for lv in levels), default=0.0)
    if len(bridge):
        k = bridge.probs * np.exp(bridge.costs - bridge.costs.min())
        spread = float((k.max() - k.min()) / k.max())
    else:
        spread = 0.0
    lookup = bridge.as_dict()
    mc = tuple(tuple(p) for p in mc)
    mc_probs = tuple(lookup.get(p, 0.0) for p in mc)
    if coupling is not None:
        omt_paths = int(np.count_nonzero(coupling.q > 1e-14))
    else:
        omt_paths = 1 if mc else 0
    p = bridge.probs[bridge.probs > 0]
    entropy = float(-np.sum(p * np.log(p)))
    return TransportReport(
        tuple(levels),
        decreasing,
        float(gap),
        spread,
        mc,
        mc_probs,
        float(sum(mc_probs)),
        len(bridge),
        omt_paths,
        math.exp(entropy),
    )
