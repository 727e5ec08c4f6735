"""Discrete Schrödinger bridges over a nonnegative prior kernel.

Given a kernel ``M``, a horizon ``N`` and marginals ``nu0``/``nuN``, the
bridge is the path law closest in relative entropy to the prior path
measure ``mu0(x0) m_{x0 x1} ... m_{x_{N-1} x_N}`` among laws with those
marginals.  It factors through potentials satisfying

    phi(t) = M phi(t+1),        phihat(t+1) = M^T phihat(t),
    phi(0) * phihat(0) = nu0,   phi(N) * phihat(N) = nuN,

and its transitions are ``pi_ij(t) = m_ij phi(t+1, j) / phi(t, i)``
(with 0/0 = 0).  The potentials are found by the fixed-point iteration
``phihat(0) -> phihat(N) -> phi(N) -> phi(0) -> phihat(0)``, which
contracts in the Hilbert metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, InfeasibleError
from .graph_core import support_reach
from .spectral import hilbert_distance

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10_000
_PROB_TOL = 1e-12


def _distribution(x, name, n):
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DomainError(f"{name} must have length {n}, got shape {x.shape}")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DomainError(f"{name} has negative or non-finite entries")
    return x


def delta(n: int, node: int) -> np.ndarray:
    """Point mass at ``node`` (0-based)."""
    if not 0 <= node < n:
        raise DomainError(f"node {node + 1} outside 1..{n}")
    d = np.zeros(n)
    d[node] = 1.0
    return d


@dataclass(frozen=True)
class BridgeProblem:
    prior: np.ndarray
    horizon: int
    nu0: np.ndarray
    nuN: np.ndarray
    mu0: np.ndarray | None = None

    def __post_init__(self):
        M = np.asarray(self.prior, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DomainError(f"prior kernel must be square, got shape {M.shape}")
        if np.any(M < 0) or not np.all(np.isfinite(M)):
            raise DomainError("prior kernel must be finite and nonnegative")
        n = len(M)
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise DomainError(f"horizon must be a positive integer, got {self.horizon}")
        nu0 = _distribution(self.nu0, "nu0", n)
        nuN = _distribution(self.nuN, "nuN", n)
        for name, d in (("nu0", nu0), ("nuN", nuN)):
            if abs(d.sum() - 1.0) > _PROB_TOL:
                raise DomainError(f"{name} must sum to 1, sums to {d.sum():.15g}")
        mu0 = np.ones(n) if self.mu0 is None else _distribution(self.mu0, "mu0", n)
        if np.any(mu0 <= 0):
            raise DomainError("mu0 must be strictly positive")
        object.__setattr__(self, "prior", M)
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "nu0", nu0)
        object.__setattr__(self, "nuN", nuN)
        object.__setattr__(self, "mu0", mu0)

    @property
    def n(self) -> int:
        return len(self.prior)


@dataclass(frozen=True)
class PotentialSchedule:
    """Rows ``phi[t]`` and ``phihat[t]`` for ``t = 0..N``."""

    phi: np.ndarray
    phihat: np.ndarray
    iterations: int = 0
    gaps: tuple[float, ...] = field(default=(), repr=False)

    def scaled(self, c: float) -> "PotentialSchedule":
        return PotentialSchedule(self.phi * c, self.phihat / c, self.iterations, self.gaps)


@dataclass(frozen=True)
class TransitionSchedule:
    nu0: np.ndarray
    steps: np.ndarray  # shape (N, n, n)

    @property
    def horizon(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class MarginalFlow:
    rows: np.ndarray  # shape (N + 1, n)


def check_support(p: BridgeProblem) -> None:
    """Raise :class:`InfeasibleError` unless every marginal state can be matched.

    Each state charged by ``nu0`` must reach some state charged by ``nuN``
    in exactly ``N`` steps, every state charged by ``nuN`` must be reached
    from some state charged by ``nu0``, and the whole of ``nu0`` must be
    movable onto ``nuN`` along such ``N``-step connections.
    """
    R = support_reach(p.prior, p.horizon)
    s0 = p.nu0 > 0
    sN = p.nuN > 0
    block = R[np.ix_(s0, sN)]
    rows0 = np.flatnonzero(s0)
    colsN = np.flatnonzero(sN)
    N = p.horizon
    for k, ok in enumerate(block.any(axis=1)):
        if not ok:
            i = rows0[k]
            if colsN.size == 1:
                msg = f"(M^{N})_{{{i + 1},{colsN[0] + 1}}} = 0"
            else:
                msg = f"node {i + 1} cannot reach the final support in {N} steps"
            raise InfeasibleError(msg, state=int(i), path_count=0)
    for k, ok in enumerate(block.any(axis=0)):
        if not ok:
            j = colsN[k]
            raise InfeasibleError(
                f"node {j + 1} is not reachable from the initial support in {N} steps",
                state=int(j),
                path_count=0,
            )
    received = _max_transport(block, p.nu0[s0], p.nuN[sN])
    short = p.nuN[sN] - received
    k = int(np.argmax(short))
    if short[k] > _PROB_TOL:
        j = colsN[k]
        raise InfeasibleError(
            f"marginals cannot be coupled in {N} steps: node {j + 1} can receive "
            f"at most {received[k]:.6g} of its mass {p.nuN[j]:.6g}",
            state=int(j),
        )


def _max_transport(allowed, supply, demand):
    """Largest amount each sink can receive when supply may only move along
    ``allowed`` (Edmonds-Karp on the bipartite network)."""
    a, b = len(supply), len(demand)
    size = a + b + 2
    src, snk = a + b, a + b + 1
    cap = np.zeros((size, size))
    cap[src, :a] = supply
    cap[:a, a:a + b] = np.where(allowed, np.inf, 0.0)
    cap[a:a + b, snk] = demand
    flow = np.zeros_like(cap)
    while True:
        residual = cap - flow
        parent = np.full(size, -1)
        parent[src] = src
        queue = [src]
        for u in queue:
            for v in np.flatnonzero(residual[u] > _PROB_TOL * 1e-3):
                if parent[v] < 0:
                    parent[v] = u
                    queue.append(v)
        if parent[snk] < 0:
            return flow[a:a + b, snk]
        path = [snk]
        while path[-1] != src:
            path.append(parent[path[-1]])
        edges = list(zip(path[1:], path[:-1]))
        push = min(residual[u, v] for u, v in edges)
        for u, v in edges:
            flow[u, v] += push
            flow[v, u] -= push


def _sweep(M, N, hat0, nu0, nuN, s0, sN):
    h = hat0
    for _ in range(N):
        h = h @ M
        h = h / h.max()
    phiN = np.zeros_like(h)
    phiN[sN] = nuN[sN] / h[sN]
    f = phiN / phiN.max()
    for _ in range(N):
        f = M @ f
        f = f / f.max()
    new = np.zeros_like(f)
    new[s0] = nu0[s0] / f[s0]
    return new / new.max()


def _potentials_from(M, N, hat0, nuN, sN):
    n = len(M)
    phihat = np.zeros((N + 1, n))
    phi = np.zeros((N + 1, n))
    phihat[0] = hat0
    for t in range(N):
        phihat[t + 1] = M.T @ phihat[t]
    phi[N, sN] = nuN[sN] / phihat[N, sN]
    for t in range(N - 1, -1, -1):
        phi[t] = M @ phi[t + 1]
    return phi, phihat


def solve_bridge(
    p: BridgeProblem, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> PotentialSchedule:
    """Solve the Schrödinger system for ``p``.

    The iteration starts from ``phihat(0) = mu0`` restricted to the support
    of ``nu0`` and stops once successive ``phihat(0)`` iterates are within
    ``tol`` in Hilbert distance on that support.

    Raises:
        InfeasibleError: some marginal state has no admissible partner.
        ConvergenceError: ``max_iter`` sweeps did not reach ``tol``.
    """
    check_support(p)
    M, N = p.prior, p.horizon
    s0 = p.nu0 > 0
    sN = p.nuN > 0
    hat0 = np.where(s0, p.mu0, 0.0)
    hat0 = hat0 / hat0.max()
    gaps = []
    for it in range(1, max_iter + 1):
        new = _sweep(M, N, hat0, p.nu0, p.nuN, s0, sN)
        gap = hilbert_distance(new[s0], hat0[s0])
        gaps.append(gap)
        hat0 = new
        if gap < tol:
            break
    else:
        raise ConvergenceError(
            f"bridge iteration did not converge in {max_iter} sweeps "
            f"(last Hilbert gap {gaps[-1]:.3e})",
            residual=gaps[-1],
            iterations=max_iter,
        )
    phi, phihat = _potentials_from(M, N, hat0, p.nuN, sN)
    return PotentialSchedule(phi, phihat, it, tuple(gaps))


def transition_schedule(s: PotentialSchedule, M, nu0=None) -> TransitionSchedule:
    """Transitions ``diag(phi(t))^-1 M diag(phi(t+1))``; rows with ``phi(t, i) = 0`` are zero.

    ``nu0`` defaults to ``phi(0) * phihat(0)``.
    """
    M = np.asarray(M, dtype=float)
    N = len(s.phi) - 1
    steps = np.zeros((N, len(M), len(M)))
    for t in range(N):
        live = s.phi[t] > 0
        steps[t][live] = M[live] * s.phi[t + 1][None, :] / s.phi[t][live, None]
    if nu0 is None:
        nu0 = s.phi[0] * s.phihat[0]
    return TransitionSchedule(np.asarray(nu0, dtype=float), steps)


def marginal_flow(ts: TransitionSchedule) -> MarginalFlow:
    rows = [ts.nu0]
    for P in ts.steps:
        rows.append(rows[-1] @ P)
    return MarginalFlow(np.array(rows))


def path_probability(ts: TransitionSchedule, path: Sequence[int]) -> float:
    """Probability of a node sequence (0-based) of length ``N + 1``."""
    if len(path) != ts.horizon + 1:
        raise DomainError(f"path must have {ts.horizon + 1} nodes, got {len(path)}")
    n = len(ts.nu0)
    if any(not 0 <= x < n for x in path):
        raise DomainError(f"path {list(path)} leaves 0..{n - 1}")
    prob = float(ts.nu0[path[0]])
    for t in range(ts.horizon):
        prob *= ts.steps[t][path[t], path[t + 1]]
        if prob == 0.0:
            return 0.0
    return prob


def relative_entropy(p_paths: Mapping, q_paths: Mapping) -> float:
    """``sum p log(p/q)`` over the support of ``p``; ``inf`` if ``p`` escapes ``q``."""
    total = 0.0
    for x, px in p_paths.items():
        if px == 0:
            continue
        qx = q_paths.get(x, 0.0)
        if qx <= 0:
            return math.inf
        total += px * math.log(px / qx)
    return total


def bridge_relative_entropy(p: BridgeProblem, s: PotentialSchedule) -> float:
    """Relative entropy of the bridge w.r.t. the prior path measure, from potentials.

    Along any path the likelihood ratio is
    ``nu0(x0) phi(N, xN) / (mu0(x0) phi(0, x0))``, so the divergence
    splits into two boundary sums.
    """
    s0 = p.nu0 > 0
    sN = p.nuN > 0
    head = np.sum(p.nu0[s0] * np.log(p.nu0[s0] / (p.mu0[s0] * s.phi[0, s0])))
    tail = np.sum(p.nuN[sN] * np.log(s.phi[-1, sN]))
    return float(head + tail)


def solve(p: BridgeProblem, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
    """Convenience wrapper returning ``(potentials, schedule, flow)``."""
    pot = solve_bridge(p, tol, max_iter)
    ts = transition_schedule(pot, p.prior, p.nu0)
    return pot, ts, marginal_flow(ts)
