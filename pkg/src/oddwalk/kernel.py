"""Iterated kernels ``p_k`` and return probabilities of odd powers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .graph import WeightedGraph, two_ball_volumes

__all__ = [
    "DENSE_CAP",
    "PROB_TOL",
    "IteratedKernel",
    "iterate_kernel",
    "kernel_columns",
    "diag_mass",
    "diag_masses",
    "lb_infimum",
    "check_lb",
    "PathCheck",
    "closed_path_product_check",
    "dvl_p2_check",
]

DENSE_CAP = 4096
PROB_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class IteratedKernel:
    """Kernel of ``P^step``; ``entries[x, y] = p_step(x, y)``."""

    graph: WeightedGraph
    step: int
    entries: np.ndarray | sp.csr_matrix

    @property
    def is_dense(self) -> bool:
        return isinstance(self.entries, np.ndarray)

    def entry(self, x: int, y: int) -> float:
        return float(self.entries[x, y])

    def diagonal(self) -> np.ndarray:
        return np.asarray(self.entries.diagonal()).ravel()

    def toarray(self) -> np.ndarray:
        return self.entries if self.is_dense else self.entries.toarray()

    def transition(self) -> np.ndarray:
        """``p_step(x, y) m(y)``: the ``step``-step transition probabilities."""
        return self.toarray() * self.graph.measure[None, :]


def iterate_kernel(
    g: WeightedGraph, k: int, *, dense: bool | None = None, dense_cap: int = DENSE_CAP
) -> IteratedKernel:
    """Compute ``p_k`` by ``p_{j+1}(x, y) = sum_z p(x, z) p_j(z, y) m(z)``.

    Dense storage is used up to ``dense_cap`` vertices; above it the
    recursion runs on sparse matrices.  Asking for ``dense=True`` above the
    cap is an error.
    """
    if k < 0:
        raise ValueError(f"step count must be >= 0, got {k}")
    if dense is None:
        dense = g.n <= dense_cap
    elif dense and g.n > dense_cap:
        raise MemoryError(
            f"dense kernel for {g.n} vertices exceeds the cap of {dense_cap}; "
            "use sparse mode"
        )
    m = g.measure
    if dense:
        p = g.kernel.toarray()
        pk = np.diag(1.0 / m)
        for _ in range(k):
            pk = p @ (m[:, None] * pk)
    else:
        p = g.kernel
        mdiag = sp.diags(m)
        pk = sp.diags(1.0 / m).tocsr()
        for _ in range(k):
            pk = sp.csr_matrix(p @ (mdiag @ pk))
    return IteratedKernel(graph=g, step=k, entries=pk)


def kernel_columns(g: WeightedGraph, k: int, cols: Sequence[int]) -> np.ndarray:
    """Columns ``p_k(., y)`` for ``y`` in ``cols``, via the same recursion.

    Memory is ``n * len(cols)``, so this is the route for graphs past the
    dense cap.
    """
    if k < 0:
        raise ValueError(f"step count must be >= 0, got {k}")
    cols = np.asarray(cols, dtype=np.int64)
    m = g.measure
    block = np.zeros((g.n, cols.size))
    block[cols, np.arange(cols.size)] = 1.0 / m[cols]
    p = g.kernel
    for _ in range(k):
        block = p @ (m[:, None] * block)
    return block


def diag_mass(g: WeightedGraph, k: int, x: int) -> float:
    """Return probability ``p_k(x, x) m(x)`` after ``k`` steps."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    g._check_vertex(x)
    col = kernel_columns(g, k, [x])[:, 0]
    return float(col[x] * g.measure[x])


def diag_masses(
    g: WeightedGraph, k: int, *, dense_cap: int = DENSE_CAP, block: int = 256
) -> np.ndarray:
    """``p_k(x, x) m(x)`` for every vertex."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if g.n <= dense_cap:
        return iterate_kernel(g, k, dense=True).diagonal() * g.measure
    out = np.empty(g.n)
    for start in range(0, g.n, block):
        cols = np.arange(start, min(start + block, g.n))
        cb = kernel_columns(g, k, cols)
        out[cols] = cb[cols, np.arange(cols.size)] * g.measure[cols]
    return out


def lb_infimum(g: WeightedGraph, k: int, **kw) -> tuple[float, int]:
    """``min_x p_k(x, x) m(x)`` and the smallest vertex attaining it."""
    masses = diag_masses(g, k, **kw)
    x = int(np.argmin(masses))
    return float(masses[x]), x


def check_lb(g: WeightedGraph, k: int, eps: float) -> bool:
    """Whether ``P^k`` satisfies the lower bound ``p_k(x, x) m(x) >= eps`` everywhere."""
    return lb_infimum(g, k)[0] >= eps


class PathCheck(NamedTuple):
    product: float
    bound: float
    holds: bool


def closed_path_product_check(g: WeightedGraph, path: Sequence[int]) -> PathCheck:
    """Compare ``prod p(x_{i-1}, x_i) m(x_i)`` with the return probability ``p_k(x_0, x_0) m(x_0)``."""
    path = [int(v) for v in path]
    if len(path) < 2 or path[0] != path[-1]:
        raise ValueError("path must be closed with at least one step")
    for v in path:
        g._check_vertex(v)
    m = g.measure
    product = 1.0
    for a, b in zip(path[:-1], path[1:]):
        product *= g.mu[a, b] / m[a]
    bound = diag_mass(g, len(path) - 1, path[0])
    return PathCheck(product, bound, product <= bound + PROB_TOL)


def dvl_p2_check(g: WeightedGraph) -> tuple[float, bool]:
    """Check ``p_2(x, x) m(x) >= m(x) / V(x, 2)`` at every vertex.

    Returns the tightest ratio ``p_2(x, x) m(x) V(x, 2) / m(x)`` (at least 1
    when the bound holds) and the verdict.
    """
    v2_over_m = two_ball_volumes(g) / g.measure
    masses = diag_masses(g, 2)
    ratio = masses * v2_over_m
    holds = bool(np.all(masses >= 1.0 / v2_over_m - PROB_TOL))
    return float(ratio.min()), holds

