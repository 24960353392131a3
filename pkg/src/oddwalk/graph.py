"""Finite weighted graphs and the reversible walk they carry.

A graph is given by a symmetric weight ``mu`` on pairs of vertices.  The
vertex measure is ``m(x) = sum_y mu[x, y]`` (a loop is counted once), the
kernel is ``p(x, y) = mu[x, y] / (m(x) m(y))`` and the Markov operator acts
by ``Pf(x) = sum_y p(x, y) f(y) m(y)``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

__all__ = [
    "GraphError",
    "WeightedGraph",
    "GraphConstants",
    "build_graph",
    "read_edge_list",
    "parse_edge_list",
    "format_edge_list",
    "kernel_entry",
    "apply_markov",
    "apply_laplacian",
    "inner",
    "lp_norm",
    "local_finiteness_degree",
    "two_ball_volumes",
    "as_vertex_function",
]


class GraphError(ValueError):
    """Invalid graph input."""


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Immutable weighted graph on vertices ``0..n-1``.

    ``mu`` is a symmetric CSR matrix holding every weight (loops on the
    diagonal), ``labels[i]`` is the id vertex ``i`` had in the input.
    """

    mu: sp.csr_matrix
    labels: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.mu.shape[0]

    def __len__(self) -> int:
        return self.n

    @cached_property
    def measure(self) -> np.ndarray:
        m = np.asarray(self.mu.sum(axis=1)).ravel()
        m.setflags(write=False)
        return m

    @property
    def m(self) -> np.ndarray:
        return self.measure

    @cached_property
    def kernel(self) -> sp.csr_matrix:
        """Sparse matrix of ``p(x, y)``."""
        inv = sp.diags(1.0 / self.measure)
        return sp.csr_matrix(inv @ self.mu @ inv)

    @cached_property
    def transition(self) -> sp.csr_matrix:
        """Row-stochastic matrix ``p(x, y) m(y)``."""
        return sp.csr_matrix(sp.diags(1.0 / self.measure) @ self.mu)

    @cached_property
    def symmetric_kernel(self) -> sp.csr_matrix:
        """``p(x, y) sqrt(m(x) m(y))``, unitarily equivalent to P on L^2(m)."""
        s = sp.diags(1.0 / np.sqrt(self.measure))
        return sp.csr_matrix(s @ self.mu @ s)

    @cached_property
    def edge_count(self) -> int:
        """Number of unordered pairs ``{x, y}`` (loops included) with positive weight."""
        upper = sp.triu(self.mu)
        return int(upper.nnz)

    @property
    def has_loops(self) -> bool:
        return bool(np.any(self.mu.diagonal() > 0))

    @cached_property
    def component_labels(self) -> np.ndarray:
        return connected_components(self.mu, directed=False)[1]

    @property
    def is_connected(self) -> bool:
        return self.n == 0 or int(self.component_labels.max()) == 0

    def neighbors(self, x: int) -> np.ndarray:
        """Vertices ``y`` with ``p(x, y) > 0`` (``x`` itself only if it carries a loop)."""
        self._check_vertex(x)
        start, stop = self.mu.indptr[x], self.mu.indptr[x + 1]
        return self.mu.indices[start:stop]

    def edges(self) -> list[tuple[int, int, float]]:
        """Unordered edges ``(u, v, w)`` with ``u <= v``, sorted."""
        upper = sp.triu(self.mu).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return [
            (int(upper.row[i]), int(upper.col[i]), float(upper.data[i])) for i in order
        ]

    def dense_weights(self) -> np.ndarray:
        return self.mu.toarray()

    def _check_vertex(self, x: int) -> None:
        if not 0 <= x < self.n:
            raise IndexError(f"vertex {x} out of range 0..{self.n - 1}")


@dataclass(frozen=True)
class GraphConstants:
    """Constants attached to a graph; each optional one is a certificate when set."""

    N_dvl: int
    C_dvl: float | None = None
    C_dv: float | None = None
    C_pdv: float | None = None
    d: float | None = None
    eps_LB: float | None = None

    @classmethod
    def of(cls, g: WeightedGraph) -> GraphConstants:
        """Local constants that need no radius scan: ``N_dvl``, ``C_dvl`` and ``eps_LB``."""
        return cls(
            N_dvl=local_finiteness_degree(g),
            C_dvl=float(np.max(two_ball_volumes(g) / g.measure)),
            eps_LB=float(np.min(g.mu.diagonal() / g.measure)),
        )


def build_graph(edges: Iterable[tuple[int, int, float]]) -> WeightedGraph:
    """Build a graph from ``(u, v, weight)`` triples.

    Vertex ids may be arbitrary nonnegative integers; they are compacted to
    ``0..n-1`` in increasing order.  A pair may be listed twice (in either
    orientation) only with the same weight.
    """
    weights: dict[tuple[int, int], float] = {}
    ids: set[int] = set()
    for item in edges:
        try:
            u, v, w = item
        except (TypeError, ValueError):
            raise GraphError(f"edge {item!r} is not a (u, v, weight) triple") from None
        u, v, w = int(u), int(v), float(w)
        if u < 0 or v < 0:
            raise GraphError(f"negative vertex id in edge ({u}, {v})")
        if not math.isfinite(w) or w < 0:
            raise GraphError(f"weight of ({u}, {v}) must be finite and >= 0, got {w}")
        key = (u, v) if u <= v else (v, u)
        if key in weights and weights[key] != w:
            raise GraphError(
                f"asymmetric duplicate weights for ({u}, {v}): {weights[key]} vs {w}"
            )
        weights[key] = w
        ids.update(key)
    if not ids:
        raise GraphError("empty edge list")

    labels = np.array(sorted(ids), dtype=np.int64)
    index = {label: i for i, label in enumerate(labels.tolist())}
    rows, cols, data = [], [], []
    for (u, v), w in weights.items():
        if w == 0:
            continue
        i, j = index[u], index[v]
        rows.append(i)
        cols.append(j)
        data.append(w)
        if i != j:
            rows.append(j)
            cols.append(i)
            data.append(w)
    n = len(labels)
    mu = sp.csr_matrix((data, (rows, cols)), shape=(n, n), dtype=float)
    mu.sum_duplicates()
    mu.sort_indices()
    mass = np.asarray(mu.sum(axis=1)).ravel()
    isolated = np.flatnonzero(mass <= 0)
    if isolated.size:
        raise GraphError(f"isolated vertex {int(labels[isolated[0]])} (zero measure)")
    return WeightedGraph(mu=mu, labels=labels)


def parse_edge_list(lines: Iterable[str]) -> WeightedGraph:
    """Parse the ``u v weight`` text format; ``#`` starts a comment line."""
    edges = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise GraphError(f"line {lineno}: expected 'u v weight', got {raw.rstrip()!r}")
        try:
            u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise GraphError(f"line {lineno}: cannot parse {raw.rstrip()!r}") from None
        edges.append((u, v, w))
    return build_graph(edges)


def read_edge_list(path: str | Path) -> WeightedGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh)


def format_edge_list(g: WeightedGraph) -> str:
    out = [f"# vertices {g.n} edges {g.edge_count}"]
    for u, v, w in g.edges():
        out.append(f"{int(g.labels[u])} {int(g.labels[v])} {w!r}")
    return "\n".join(out) + "\n"


def as_vertex_function(g: WeightedGraph, f) -> np.ndarray:
    """Validate ``f`` as a real function on the vertices of ``g``."""
    arr = np.asarray(f, dtype=float)
    if arr.shape != (g.n,):
        raise ValueError(f"function has shape {arr.shape}, graph has {g.n} vertices")
    if not np.all(np.isfinite(arr)):
        raise ValueError("function values must be finite")
    return arr


def kernel_entry(g: WeightedGraph, x: int, y: int) -> float:
    g._check_vertex(x)
    g._check_vertex(y)
    return float(g.mu[x, y] / (g.measure[x] * g.measure[y]))


def apply_markov(g: WeightedGraph, f) -> np.ndarray:
    return g.transition @ as_vertex_function(g, f)


def apply_laplacian(g: WeightedGraph, f) -> np.ndarray:
    f = as_vertex_function(g, f)
    return f - g.transition @ f


def inner(g: WeightedGraph, f, h) -> float:
    """Inner product of L^2(m)."""
    return float(np.sum(as_vertex_function(g, f) * as_vertex_function(g, h) * g.measure))


def lp_norm(g: WeightedGraph, f, q: float = 2.0, where=None) -> float:
    """Weighted norm ``(sum |f|^q m)^(1/q)``; ``q=math.inf`` gives ``max |f|``.

    ``where`` optionally restricts the sum to a vertex subset.
    """
    if not q >= 1:
        raise ValueError(f"norm exponent must be >= 1, got {q}")
    f = np.abs(as_vertex_function(g, f))
    m = g.measure
    if where is not None:
        idx = np.asarray(sorted(where), dtype=np.int64)
        f, m = f[idx], m[idx]
    if f.size == 0:
        return 0.0
    if math.isinf(q):
        return float(f.max())
    return float(np.sum(f**q * m) ** (1.0 / q))


def two_ball_volumes(g: WeightedGraph) -> np.ndarray:
    """``V(x, 2)``: measure of ``x`` together with its neighbours."""
    support = g.mu.astype(bool).astype(float)
    # a loop already puts x in its own support row
    loops = g.mu.diagonal() > 0
    return support @ g.measure + np.where(loops, 0.0, g.measure)


def local_finiteness_degree(g: WeightedGraph) -> int:
    """``max_x #({y : y ~ x} | {x})``."""
    deg = np.diff(g.mu.indptr)
    loops = g.mu.diagonal() > 0
    return int(np.max(deg + (~loops)))
