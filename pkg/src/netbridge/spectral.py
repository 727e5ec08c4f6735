"""Perron-Frobenius data and the walks built from it.

The maximum-entropy (Ruelle-Bowen) walk of a primitive kernel ``M`` is

    r_ij = m_ij v_j / (lambda v_i),   stationary(i) = u_i v_i,

with ``v``/``u`` the right/left Perron vectors scaled so ``<u, v> = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, PreconditionError
from .graph_core import is_primitive

PERRON_TOL = 1e-14
PERRON_MAX_ITER = 100_000


@dataclass(frozen=True)
class PerronData:
    lam: float
    right: np.ndarray
    left: np.ndarray
    iterations: int = 0

    @property
    def entropy_rate(self) -> float:
        return float(np.log(self.lam))


@dataclass(frozen=True)
class StationaryWalk:
    kernel: np.ndarray
    stationary: np.ndarray
    perron: PerronData | None = None


def hilbert_distance(x, y) -> float:
    """Hilbert projective distance ``log(max(x/y) / min(x/y))``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DomainError(f"shape mismatch {x.shape} vs {y.shape}")
    if x.size == 0 or np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("Hilbert distance needs strictly positive vectors")
    r = np.log(x) - np.log(y)
    return float(r.max() - r.min())


def _power(M, tol, max_iter):
    x = np.ones(len(M))
    gap = np.inf
    for it in range(1, max_iter + 1):
        y = M @ x
        y /= y.max()
        gap = hilbert_distance(x, y)
        x = y
        if gap < tol:
            return x, it
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations (gap {gap:.3e})",
        residual=gap,
        iterations=max_iter,
    )


def perron(M, tol: float = PERRON_TOL, max_iter: int = PERRON_MAX_ITER) -> PerronData:
    """Spectral radius and positive Perron vectors of a primitive kernel.

    Power iteration from the all-ones vector; stops when successive iterates
    are within ``tol`` in Hilbert distance.  ``right`` is scaled to unit
    maximum, then ``left`` so that ``<left, right> = 1``.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"kernel must be square, got shape {M.shape}")
    if np.any(M < 0):
        raise DomainError("kernel has negative entries")
    if not is_primitive(M).primitive:
        raise PreconditionError("kernel is not primitive (reducible or periodic)")
    v, it_r = _power(M, tol, max_iter)
    u, it_l = _power(M.T, tol, max_iter)
    v = v / v.max()
    u = u / (u @ v)
    lam = float(u @ (M @ v)) / float(u @ v)
    return PerronData(lam, v, u, max(it_r, it_l))


def rb_walk(M, tol: float = PERRON_TOL) -> StationaryWalk:
    """Maximum-entropy walk ``diag(v)^-1 M diag(v) / lambda`` and its stationary law."""
    M = np.asarray(M, dtype=float)
    p = perron(M, tol)
    R = M * p.right[None, :] / (p.lam * p.right[:, None])
    # exact row normalisation removes the O(tol) drift of the eigenvector
    R /= R.sum(axis=1, keepdims=True)
    pi = p.left * p.right
    pi = pi / pi.sum()
    return StationaryWalk(R, pi, p)


def homogeneous_bridge(M, tol: float = PERRON_TOL) -> StationaryWalk:
    """Time-invariant bridge between equal marginals ``phi * phihat``.

    Same construction as :func:`rb_walk`; kept separate because the bridge
    reading (constant transition matrix, invariant marginal) is what the
    solver tests rely on.
    """
    return rb_walk(M, tol)


def entropy_energy_rates(w: StationaryWalk, costs) -> tuple[float, float]:
    """Entropy rate ``S`` and mean energy rate ``Ubar`` of a stationary walk.

    ``costs`` must be finite wherever the walk moves.  For the walk built
    from a kernel ``B = exp(-U)``, ``S - Ubar == log(lambda_B)``.
    """
    P = np.asarray(w.kernel, dtype=float)
    pi = np.asarray(w.stationary, dtype=float)
    U = np.asarray(costs, dtype=float)
    if U.shape != P.shape:
        raise DomainError(f"cost matrix shape {U.shape} does not match kernel {P.shape}")
    support = P > 0
    if not np.all(np.isfinite(U[support])):
        raise DomainError("costs must be finite on the support of the walk")
    logP = np.where(support, np.log(np.where(support, P, 1.0)), 0.0)
    Uon = np.where(support, U, 0.0)
    S = -float(np.sum(pi[:, None] * P * logP))
    Ubar = float(np.sum(pi[:, None] * P * Uon))
    return S, Ubar
