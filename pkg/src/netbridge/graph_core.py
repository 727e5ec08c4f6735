"""Graph ingestion and kernel construction.

Nodes are labelled ``1..n`` in documents and reports and ``0..n-1`` in
memory.  A :class:`Graph` carries an optional multiplicative weight per
edge; the matching energy is ``U_ij = -log(w_ij)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from .errors import DomainError, GraphParseError, GraphValidationError

Edge = tuple[int, int]


@dataclass(frozen=True)
class Graph:
    """Directed graph on nodes ``0..n-1`` with optional edge weights.

    ``weights`` maps every edge to a positive multiplicative weight
    ``b_ij = exp(-U_ij)``; ``None`` means an unweighted graph.
    """

    n: int
    edges: tuple[Edge, ...]
    weights: Mapping[Edge, float] | None = field(default=None, compare=True)

    def __post_init__(self):
        if self.n < 1:
            raise GraphValidationError(f"node count must be positive, got {self.n}")
        seen = set()
        for i, j in self.edges:
            for k in (i, j):
                if not 0 <= k < self.n:
                    raise GraphValidationError(
                        f"edge ({i + 1},{j + 1}) has endpoint outside 1..{self.n}"
                    )
            if (i, j) in seen:
                raise GraphValidationError(f"duplicate edge ({i + 1},{j + 1})")
            seen.add((i, j))
        object.__setattr__(self, "edges", tuple(sorted(seen)))
        if self.weights is not None:
            w = dict(self.weights)
            if set(w) != seen:
                raise GraphValidationError("weights must be defined exactly on the edge set")
            for (i, j), value in w.items():
                if not (value > 0 and math.isfinite(value)):
                    raise GraphValidationError(
                        f"edge ({i + 1},{j + 1}) has nonpositive weight {value}"
                    )
            object.__setattr__(self, "weights", w)

    @classmethod
    def from_energies(cls, n, costs: Mapping[Edge, float]) -> "Graph":
        """Build a weighted graph from nonnegative edge energies."""
        for (i, j), u in costs.items():
            if not (u >= 0 and math.isfinite(u)):
                raise GraphValidationError(f"edge ({i + 1},{j + 1}) has invalid energy {u}")
        return cls(n, tuple(costs), {e: math.exp(-u) for e, u in costs.items()})

    @property
    def costs(self) -> dict[Edge, float] | None:
        """Edge energies ``-log(w_ij)``, or ``None`` for an unweighted graph."""
        if self.weights is None:
            return None
        return {e: -math.log(w) for e, w in self.weights.items()}

    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    def without_edges(self, removed) -> "Graph":
        removed = set(removed)
        edges = tuple(e for e in self.edges if e not in removed)
        weights = None
        if self.weights is not None:
            weights = {e: self.weights[e] for e in edges}
        return Graph(self.n, edges, weights)


class Primitivity(NamedTuple):
    primitive: bool
    exponent: int | None


class Feasibility(NamedTuple):
    count: float
    feasible: bool


# ---------------------------------------------------------------------------
# parsing


def _parse_header_token(token, header, lineno):
    key, sep, value = token.partition("=")
    if not sep:
        raise GraphParseError(f"expected key=value in header, got {token!r}", lineno)
    key = key.strip()
    value = value.strip()
    if key == "n":
        try:
            header["n"] = int(value)
        except ValueError:
            raise GraphParseError(f"node count {value!r} is not an integer", lineno) from None
    elif key == "mode":
        if value not in ("energy", "weight"):
            raise GraphParseError(f"mode must be 'energy' or 'weight', got {value!r}", lineno)
        header["mode"] = value
    else:
        raise GraphParseError(f"unknown header key {key!r}", lineno)


def _build(n, mode, rows, line_numbers=None):
    """Turn parsed ``(i, j, value|None)`` rows (1-based) into a Graph."""
    if n is None:
        raise GraphParseError("missing node count header 'n=<int>'")
    edges = []
    values = {}
    seen = set()
    for k, (i, j, value) in enumerate(rows):
        where = f" (line {line_numbers[k]})" if line_numbers else ""
        if not (1 <= i <= n and 1 <= j <= n):
            raise GraphValidationError(f"edge ({i},{j}) has endpoint outside 1..{n}{where}")
        e = (i - 1, j - 1)
        if e in seen:
            raise GraphValidationError(f"duplicate edge ({i},{j}){where}")
        seen.add(e)
        edges.append(e)
        if value is not None:
            values[e] = value
    if not values:
        return Graph(n, tuple(edges))
    if len(values) != len(edges):
        raise GraphValidationError("either every edge carries a value or none does")
    if mode == "energy":
        return Graph.from_energies(n, values)
    for (i, j), w in values.items():
        if not w > 0:
            raise GraphValidationError(f"edge ({i + 1},{j + 1}) has nonpositive weight {w}")
    return Graph(n, tuple(edges), values)


def _parse_edge_list(text):
    header = {"n": None, "mode": "weight"}
    rows = []
    line_numbers = []
    # ';' separates records as well as newlines: "n=2; 1 2; 2 1"
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        records.extend((lineno, part.strip()) for part in line.split(";"))
    for lineno, rec in records:
        if not rec:
            continue
        if "=" in rec:
            for token in rec.split():
                _parse_header_token(token, header, lineno)
            continue
        parts = rec.split()
        if len(parts) not in (2, 3):
            raise GraphParseError(f"expected '<i> <j> [value]', got {rec!r}", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(f"node labels must be integers in {rec!r}", lineno) from None
        value = None
        if len(parts) == 3:
            try:
                value = float(parts[2])
            except ValueError:
                raise GraphParseError(f"edge value {parts[2]!r} is not a number", lineno) from None
        rows.append((i, j, value))
        line_numbers.append(lineno)
    return _build(header["n"], header["mode"], rows, line_numbers)


def _parse_json(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(exc.msg, exc.lineno) from None
    if not isinstance(doc, dict) or "n" not in doc or "edges" not in doc:
        raise GraphParseError("JSON graph needs keys 'n' and 'edges'")
    n = doc["n"]
    mode = doc.get("mode", "weight")
    if not isinstance(n, int) or isinstance(n, bool):
        raise GraphParseError("'n' must be an integer")
    if mode not in ("energy", "weight"):
        raise GraphParseError(f"mode must be 'energy' or 'weight', got {mode!r}")
    rows = []
    for k, item in enumerate(doc["edges"]):
        if not isinstance(item, list) or len(item) not in (2, 3):
            raise GraphParseError(f"edge #{k + 1} must be [i, j] or [i, j, value]")
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in item[:2]):
            raise GraphParseError(f"edge #{k + 1} has non-integer endpoints")
        value = float(item[2]) if len(item) == 3 else None
        rows.append((item[0], item[1], value))
    return _build(n, mode, rows)


def parse_graph(text: str) -> Graph:
    """Parse an edge-list or JSON graph document.

    The edge-list form has a ``n=<int>`` header (optionally ``mode=energy``
    or ``mode=weight``, default weight) followed by ``<i> <j> [value]``
    records, one per line or separated by ``;``.  ``#`` starts a comment.
    """
    if text.lstrip().startswith("{"):
        return _parse_json(text)
    return _parse_edge_list(text)


def load_graph(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def format_graph(g: Graph) -> str:
    """Serialize ``g`` in the edge-list format (weights, not energies)."""
    lines = [f"n={g.n} mode=weight"]
    for i, j in g.edges:
        if g.weights is None:
            lines.append(f"{i + 1} {j + 1}")
        else:
            lines.append(f"{i + 1} {j + 1} {g.weights[(i, j)]!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# kernels


def adjacency_kernel(g: Graph) -> np.ndarray:
    A = np.zeros((g.n, g.n))
    for i, j in g.edges:
        A[i, j] = 1.0
    return A


def weighted_kernel(g: Graph) -> np.ndarray:
    """Kernel with ``exp(-U_ij)`` on edges and zero elsewhere."""
    if g.weights is None:
        raise GraphValidationError("weighted kernel needs weights or energies on every edge")
    B = np.zeros((g.n, g.n))
    for (i, j), w in g.weights.items():
        B[i, j] = w
    return B


def teleport_kernel(g: Graph, U0: float) -> np.ndarray:
    """Strictly positive kernel: edge weights on edges, ``exp(-U0)`` on every non-edge.

    Absent self-loops count as non-edges.  Unweighted graphs use ``U_ij = 0``.
    """
    if not U0 > 0:
        raise DomainError(f"teleport energy must be positive, got {U0}")
    M = np.full((g.n, g.n), math.exp(-U0))
    base = adjacency_kernel(g) if g.weights is None else weighted_kernel(g)
    for i, j in g.edges:
        M[i, j] = base[i, j]
    return M


def kernel_costs(M) -> np.ndarray:
    """Energies ``-log(m_ij)``, ``+inf`` where the kernel vanishes."""
    M = np.asarray(M, dtype=float)
    U = np.full(M.shape, np.inf)
    pos = M > 0
    U[pos] = -np.log(M[pos])
    return U


def ensure_sink_loop(g: Graph, sink: int) -> Graph:
    """Return ``g`` with a zero-energy loop at ``sink`` added if it is missing."""
    if not 0 <= sink < g.n:
        raise DomainError(f"sink {sink + 1} outside 1..{g.n}")
    if (sink, sink) in g.edge_set():
        return g
    weights = None
    if g.weights is not None:
        weights = dict(g.weights)
        weights[(sink, sink)] = 1.0
    return Graph(g.n, g.edges + ((sink, sink),), weights)


# ---------------------------------------------------------------------------
# structure


def _is_zero_one(M):
    return bool(np.all((M == 0) | (M == 1)))


def feasibility(M, source: int, sink: int, N: int) -> Feasibility:
    """Entry ``(M^N)[source, sink]``; for 0/1 kernels this is the path count."""
    if N < 1:
        raise DomainError(f"horizon must be >= 1, got {N}")
    M = np.asarray(M, dtype=float)
    row = np.zeros(len(M), dtype=object if _is_zero_one(M) else float)
    row[source] = 1
    K = M.astype(object) if _is_zero_one(M) else M
    for _ in range(N):
        row = row @ K
    count = row[sink]
    count = int(count) if _is_zero_one(M) else float(count)
    return Feasibility(count, count > 0)


def support_reach(M, N: int) -> np.ndarray:
    """Boolean support of ``M^N``."""
    S = np.asarray(M) > 0
    n = len(S)
    R = np.eye(n, dtype=bool)
    for _ in range(N):
        R = (R.astype(np.int64) @ S.astype(np.int64)) > 0
    return R


def is_primitive(M) -> Primitivity:
    """Check primitivity on the 0/1 support pattern up to the Wielandt bound."""
    S = (np.asarray(M) > 0).astype(np.int64)
    n = len(S)
    bound = n * n - 2 * n + 2
    P = S.copy()
    for k in range(1, bound + 1):
        if P.all():
            return Primitivity(True, k)
        P = ((P @ S) > 0).astype(np.int64)
    return Primitivity(False, None)
