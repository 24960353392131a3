"""Spectrum of P, the gap at -1, analyticity constants and witness functions."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.sparse.linalg import eigsh

from .eps import EpsBall, EpsView, bipartition, eps_ball, eps_boundary, eps_view
from .graph import GraphConstants, WeightedGraph, apply_markov, lp_norm
from .kernel import lb_infimum

__all__ = [
    "DENSE_CAP",
    "GAP_TOL",
    "CapExceeded",
    "spectrum",
    "extremal_eigenvalues",
    "gap_at_minus_one",
    "analyticity_constants",
    "power_iteration_norm",
    "SpectralReport",
    "spectral_report",
    "WitnessFunction",
    "build_witness",
    "DefectCheck",
    "defect_bound_check",
    "odd_closed_walk_lengths",
    "equivalence_report",
]

DENSE_CAP = 4096
GAP_TOL = 1e-10


class CapExceeded(ValueError):
    """Dense eigendecomposition requested on a graph past the cap."""


def _check_cap(g: WeightedGraph, dense_cap: int) -> None:
    if g.n > dense_cap:
        raise CapExceeded(
            f"{g.n} vertices exceeds the dense cap of {dense_cap}; "
            "use extremal_eigenvalues for the ends of the spectrum"
        )


def spectrum(g: WeightedGraph, *, dense_cap: int = DENSE_CAP) -> np.ndarray:
    """Eigenvalues of P on L^2(m), ascending.

    P is conjugate to the symmetric matrix ``p(x, y) sqrt(m(x) m(y))``.
    """
    _check_cap(g, dense_cap)
    return np.linalg.eigvalsh(g.symmetric_kernel.toarray())


def extremal_eigenvalues(g: WeightedGraph, k: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """The ``k`` smallest and ``k`` largest eigenvalues, by Lanczos."""
    A = g.symmetric_kernel
    if g.n <= max(2 * k + 1, 16):
        ev = np.linalg.eigvalsh(A.toarray())
        return ev[:k], ev[-k:]
    lo = eigsh(A, k=k, which="SA", return_eigenvectors=False, tol=1e-12)
    hi = eigsh(A, k=k, which="LA", return_eigenvectors=False, tol=1e-12)
    return np.sort(lo), np.sort(hi)


def gap_at_minus_one(g: WeightedGraph, *, dense_cap: int = DENSE_CAP) -> float:
    """``1 + lambda_min``; zero exactly when -1 is an eigenvalue."""
    if g.n <= dense_cap:
        return float(1.0 + spectrum(g, dense_cap=dense_cap)[0])
    return float(1.0 + extremal_eigenvalues(g)[0][0])


def analyticity_constants(
    g: WeightedGraph, n_max: int, *, eigenvalues: np.ndarray | None = None
) -> np.ndarray:
    """``a_n = n * ||(I - P) P^(n-1)||_{2->2}`` for ``n = 1..n_max``.

    For self-adjoint P the norm is ``max_theta (1 - theta) |theta|^(n-1)``.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    theta = spectrum(g) if eigenvalues is None else np.asarray(eigenvalues)
    n = np.arange(1, n_max + 1)
    vals = (1.0 - theta)[None, :] * np.abs(theta)[None, :] ** (n[:, None] - 1)
    return n * np.clip(vals.max(axis=1), 0.0, None)


def power_iteration_norm(
    g: WeightedGraph, n: int, *, iters: int = 20000, tol: float = 1e-15, seed: int = 0
) -> float:
    """Estimate ``||(I - P) P^(n-1)||_{2->2}`` by power iteration on ``T^2``.

    Works only through applications of P in L^2(m), so it shares nothing
    with the eigendecomposition route.
    """
    m = g.measure

    def T(v: np.ndarray) -> np.ndarray:
        w = v
        for _ in range(n - 1):
            w = apply_markov(g, w)
        return w - apply_markov(g, w)

    def norm(v: np.ndarray) -> float:
        return math.sqrt(float(np.sum(v * v * m)))

    v = np.random.default_rng(seed).standard_normal(g.n)
    v /= norm(v)
    est = 0.0
    for _ in range(iters):
        w = T(T(v))
        nw = norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(nw - est) <= tol * max(nw, 1.0):
            est = nw
            break
        est = nw
    return math.sqrt(est)


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray = field(repr=False)
    gap_at_minus_one: float
    analyticity: np.ndarray = field(repr=False)

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])


def spectral_report(g: WeightedGraph, n_max: int = 32, *, dense_cap: int = DENSE_CAP) -> SpectralReport:
    ev = spectrum(g, dense_cap=dense_cap)
    return SpectralReport(
        eigenvalues=ev,
        gap_at_minus_one=float(1.0 + ev[0]),
        analyticity=analyticity_constants(g, n_max, eigenvalues=ev),
    )


@dataclass(frozen=True)
class WitnessFunction:
    """``+1`` on ``part0``, ``-1`` on ``part1``, ``0`` off the ball."""

    values: np.ndarray = field(repr=False)
    ball: EpsBall
    partition: tuple[frozenset[int], frozenset[int]] = field(repr=False)
    q: float
    defect: float


def build_witness(
    view: EpsView,
    ball: EpsBall,
    partition: tuple[Sequence[int], Sequence[int]],
    q: float,
) -> WitnessFunction:
    """Witness built on a two-coloured ball and its defect ``||(I+P)f||_q^q / ||f||_q^q``.

    The full operator P is used, eps-discarded edges included.
    """
    if not 1 <= q < math.inf:
        raise ValueError(f"q must lie in [1, inf), got {q}")
    part0, part1 = frozenset(partition[0]), frozenset(partition[1])
    if part0 & part1 or part0 | part1 != ball.members:
        raise ValueError("partition must split the ball's members into two disjoint sets")
    g = view.graph
    f = np.zeros(g.n)
    f[sorted(part0)] = 1.0
    f[sorted(part1)] = -1.0
    num = lp_norm(g, f + apply_markov(g, f), q) ** q
    den = lp_norm(g, f, q) ** q
    return WitnessFunction(values=f, ball=ball, partition=(part0, part1), q=q, defect=num / den)


class DefectCheck(NamedTuple):
    defect: float
    bound: float
    holds: bool


def defect_bound_check(
    view: EpsView,
    ball: EpsBall,
    p_target: int,
    q: float,
    *,
    partition: tuple[Sequence[int], Sequence[int]] | None = None,
    constants: GraphConstants | None = None,
) -> DefectCheck:
    """Compare a witness defect with ``2/p + 2^(q+1) eps (C_dvl + N_dvl)``.

    The ball must satisfy ``m(boundary) <= m(ball)/p_target`` and be
    eps-bipartite; without an explicit partition the canonical two-colouring
    is used.
    """
    g = view.graph
    m = g.measure
    boundary = eps_boundary(view, ball.members)
    mass = float(m[sorted(ball.members)].sum())
    bmass = float(m[sorted(boundary)].sum()) if boundary else 0.0
    if bmass * p_target > mass * (1 + 1e-12):
        raise ValueError(
            f"ball has boundary ratio {bmass / mass:.6g} > 1/{p_target}; no small-boundary certificate"
        )
    if partition is None:
        cert = bipartition(view, ball.members)
        if not cert.bipartite:
            raise ValueError(f"ball is not eps-bipartite; odd closed path {cert.witness}")
        partition = (cert.part0, cert.part1)
    consts = constants or GraphConstants.of(g)
    assert consts.C_dvl is not None
    bound = 2.0 / p_target + 2.0 ** (q + 1) * view.eps * (consts.C_dvl + consts.N_dvl)
    defect = build_witness(view, ball, partition, q).defect
    return DefectCheck(defect, bound, defect <= bound + 1e-10)


def odd_closed_walk_lengths(view: EpsView) -> np.ndarray:
    """Shortest odd closed eps-safe walk through each vertex (``inf`` if none).

    A breadth-first search on (vertex, parity) pairs from ``(x, even)``.
    """
    out = np.full(view.n, math.inf)
    for x in range(view.n):
        dist = {(x, 0): 0}
        frontier = [(x, 0)]
        while frontier and (x, 1) not in dist:
            nxt = []
            for v, par in frontier:
                for w in view.neighbors(v).tolist():
                    s = (w, 1 - par)
                    if s not in dist:
                        dist[s] = dist[(v, par)] + 1
                        nxt.append(s)
            frontier = nxt
        if (x, 1) in dist:
            out[x] = dist[(x, 1)]
    return out


def _ball_scan(view: EpsView, r: int, q_list: Sequence[float]) -> dict:
    for x in range(view.n):
        ball = eps_ball(view, x, r)
        cert = bipartition(view, ball.members)
        if cert.bipartite:
            defects = [
                {"q": q, "defect": build_witness(view, ball, (cert.part0, cert.part1), q).defect}
                for q in q_list
            ]
            return {"eps": view.eps, "r": r, "exists": True, "center": x,
                    "size": len(ball), "defects": defects}
    return {"eps": view.eps, "r": r, "exists": False, "center": None, "size": None, "defects": []}


def equivalence_report(
    g: WeightedGraph,
    eps_grid: Sequence[float],
    r_grid: Sequence[int],
    k_odd_max: int,
    q_list: Sequence[float],
    *,
    n_max: int = 32,
    threads: int = 1,
    dense_cap: int = DENSE_CAP,
) -> dict:
    """Run the finite-graph checks linking the spectrum at -1, odd return
    probabilities and bipartite balls, and assemble them into one report.

    The verdict applies to connected loop-free graphs, where
    ``gap == 0``, ``bipartite at eps = 0`` and ``every odd-step return
    probability vanishes`` should agree.  The last predicate only sees
    ``k <= k_odd_max``; when that horizon is shorter than the longest
    shortest odd closed walk, a mismatch is reported as ``inconclusive``.
    """
    if k_odd_max < 1:
        raise ValueError(f"k_odd_max must be >= 1, got {k_odd_max}")
    consts = GraphConstants.of(g)
    if g.n <= dense_cap:
        ev = spectrum(g, dense_cap=dense_cap)
        gap = float(1.0 + ev[0])
        a_n = analyticity_constants(g, n_max, eigenvalues=ev)
        spec_list = ev.tolist()
    else:
        gap = gap_at_minus_one(g, dense_cap=dense_cap)
        a_n, spec_list = None, None

    odd = []
    for k in range(1, k_odd_max + 1, 2):
        value, arg = lb_infimum(g, k, dense_cap=dense_cap)
        odd.append({"k": k, "value": value, "argmin": arg})

    cells = [(e, r) for e in eps_grid for r in r_grid]
    views = {e: eps_view(g, e) for e in eps_grid}
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        balls = list(pool.map(lambda c: _ball_scan(views[c[0]], c[1], q_list), cells))
    witnesses = [
        {"eps": b["eps"], "r": b["r"], "center": b["center"], "q": d["q"], "defect": d["defect"]}
        for b in balls
        for d in b["defects"]
    ]
    for b in balls:
        del b["defects"]

    view0 = views.get(0.0) or eps_view(g, 0.0)
    bip = bipartition(view0, range(g.n))
    gap_zero = gap < GAP_TOL
    lb_zero = all(o["value"] == 0.0 for o in odd)
    applicable = g.is_connected and not g.has_loops
    horizon = None
    if not applicable:
        status = "not_applicable"
    elif gap_zero == bip.bipartite == lb_zero:
        status = "consistent"
    else:
        lengths = odd_closed_walk_lengths(view0)
        horizon = float(lengths.max())
        truncated = lb_zero and not bip.bipartite and not gap_zero and k_odd_max < horizon
        status = "inconclusive" if truncated else "inconsistent"

    return {
        "graph": {
            "vertices": g.n,
            "edges": g.edge_count,
            "connected": g.is_connected,
            "loops": g.has_loops,
            "N_dvl": consts.N_dvl,
            "C_dvl": consts.C_dvl,
            "eps_LB": consts.eps_LB,
        },
        "spectrum": spec_list,
        "gap_at_minus_one": gap,
        "analyticity": None if a_n is None else {"n_max": n_max, "a_n": a_n.tolist(),
                                                 "sup": float(a_n.max())},
        "odd_powers": odd,
        "balls": balls,
        "witnesses": witnesses,
        "verdict": {
            "applicable": applicable,
            "gap_zero": gap_zero,
            "bipartite": bip.bipartite,
            "odd_witness": None if bip.bipartite else list(bip.witness),
            "odd_lb_zero": lb_zero,
            "odd_horizon": horizon,
            "status": status,
            "consistent": status != "inconsistent",
        },
    }
