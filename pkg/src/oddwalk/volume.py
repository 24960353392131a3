"""Volume growth certificates and the search for balls with small boundary."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .eps import EpsView, bfs_depths, eps_boundary, eps_view
from .graph import WeightedGraph

__all__ = [
    "RADIUS_CAP",
    "ball_volume",
    "volume_table",
    "GrowthFit",
    "fit_growth",
    "ImplicationReport",
    "implication_check",
    "BallRecord",
    "SearchExhausted",
    "ball_record",
    "find_small_boundary_ball",
    "search_all_centers",
    "ExpansionCheck",
    "expansion_check",
]

RADIUS_CAP = 1024


def ball_volume(g: WeightedGraph, x: int, r: int) -> float:
    """``V(x, r) = m({y : d(x, y) < r})`` for the graph distance."""
    if r < 1:
        raise ValueError(f"radius must be >= 1, got {r}")
    depth = bfs_depths(eps_view(g, 0.0), x, max_depth=r - 1)
    return float(g.measure[list(depth)].sum())


def volume_table(g: WeightedGraph, r_max: int, *, chunk: int = 256) -> np.ndarray:
    """Array ``V`` with ``V[x, r] = V(x, r)`` for ``0 <= r <= r_max``."""
    m = g.measure
    out = np.empty((g.n, r_max + 1))
    for start in range(0, g.n, chunk):
        rows = np.arange(start, min(start + chunk, g.n))
        dist = shortest_path(g.mu, directed=False, unweighted=True, indices=rows)
        # distances >= r_max never enter a ball of radius <= r_max
        d = np.where(np.isfinite(dist), np.minimum(dist, r_max), r_max).astype(np.int64)
        hist = np.zeros((rows.size, r_max + 1))
        np.add.at(hist, (np.repeat(np.arange(rows.size), g.n), d.ravel()), np.tile(m, rows.size))
        out[rows, 0] = 0.0
        out[rows, 1:] = np.cumsum(hist, axis=1)[:, :r_max]
    return out


@dataclass(frozen=True)
class GrowthFit:
    """Certified growth constants over radii ``1..r_max`` (doubling up to ``2 r_max``)."""

    C_pdv: float
    d: float
    C_dv: float
    C_dvl: float
    r_max: int
    volumes: np.ndarray = field(repr=False, compare=False)
    measure: np.ndarray = field(repr=False, compare=False)

    def pdv_violations(self, C: float, d: float) -> int:
        r = np.arange(1, self.r_max + 1)
        lhs = self.volumes[:, 1 : self.r_max + 1]
        rhs = C * r[None, :] ** d * self.measure[:, None]
        return int(np.sum(lhs > rhs * (1 + 1e-12)))

    def dv_violations(self, C: float) -> int:
        r = np.arange(1, self.r_max + 1)
        return int(np.sum(self.volumes[:, 2 * r] > C * self.volumes[:, r] * (1 + 1e-12)))

    def dvl_violations(self, C: float) -> int:
        return int(np.sum(self.volumes[:, 2] > C * self.measure * (1 + 1e-12)))


def fit_growth(g: WeightedGraph, r_max: int, *, cap: int = RADIUS_CAP) -> GrowthFit:
    """Tightest polynomial-growth, doubling and local-doubling constants on the scanned radii.

    The exponent ``d`` is the least-squares slope of
    ``log max_x V(x, r)/m(x)`` against ``log r`` over ``2 <= r <= r_max``
    (``V(x, 1) = m(x)`` on every graph); ``C_pdv`` is then the smallest
    constant that makes ``V(x, r) <= C_pdv r^d m(x)`` hold for all scanned
    ``r``.
    """
    if r_max < 2:
        raise ValueError(f"r_max must be >= 2, got {r_max}")
    if r_max > cap:
        raise ValueError(f"r_max={r_max} exceeds the cap of {cap}")
    m = g.measure
    V = volume_table(g, 2 * r_max)
    r = np.arange(1, r_max + 1)
    growth = V[:, 1 : r_max + 1] / m[:, None]
    worst = growth.max(axis=0)
    slope = float(np.polyfit(np.log(r[1:]), np.log(worst[1:]), 1)[0])
    d = max(slope, 0.0)
    C_pdv = float(np.max(growth / r[None, :] ** d))
    C_dv = float(np.max(V[:, 2 * r] / V[:, r]))
    C_dvl = float(np.max(V[:, 2] / m))
    return GrowthFit(C_pdv=C_pdv, d=d, C_dv=C_dv, C_dvl=C_dvl, r_max=r_max, volumes=V, measure=m)


@dataclass(frozen=True)
class ImplicationReport:
    dv_pdv_C: float
    dv_pdv_d: float
    dv_pdv_violations: int
    dvl_from_pdv: float
    dvl_within_pdv: bool

    @property
    def holds(self) -> bool:
        return self.dv_pdv_violations == 0 and self.dvl_within_pdv


def implication_check(fit: GrowthFit) -> ImplicationReport:
    """Check the certificate chain doubling => polynomial growth => local doubling.

    Doubling with constant ``C`` gives ``V(x, r) <= C r^(log2 C) m(x)``; the
    polynomial certificate at ``r = 2`` bounds the local doubling constant
    by ``2^d C_pdv``.
    """
    d_dv = math.log2(fit.C_dv) if fit.C_dv > 0 else 0.0
    violations = fit.pdv_violations(fit.C_dv, d_dv)
    dvl_bound = 2.0**fit.d * fit.C_pdv
    return ImplicationReport(
        dv_pdv_C=fit.C_dv,
        dv_pdv_d=d_dv,
        dv_pdv_violations=violations,
        dvl_from_pdv=dvl_bound,
        dvl_within_pdv=fit.C_dvl <= dvl_bound * (1 + 1e-12),
    )


@dataclass(frozen=True)
class BallRecord:
    center: int
    radius: int
    eps: float
    mass: float
    boundary_mass: float
    members: frozenset[int] = field(repr=False, default=frozenset())

    @property
    def ratio(self) -> float:
        return self.boundary_mass / self.mass

    def satisfies(self, p: int) -> bool:
        """``m(boundary) <= m(ball) / p``."""
        return self.boundary_mass * p <= self.mass * (1 + 1e-12)


class SearchExhausted(RuntimeError):
    """No ball with a small enough boundary exists among the scanned ones."""

    def __init__(self, p: int, best: BallRecord | None):
        self.p = p
        self.best = best
        self.best_ratio = best.ratio if best is not None else math.inf
        super().__init__(
            f"no ball with boundary/volume <= 1/{p}; best ratio found {self.best_ratio:.6g}"
        )


def ball_record(view: EpsView, center: int, radius: int, depth: dict[int, int] | None = None) -> BallRecord:
    if depth is None:
        depth = bfs_depths(view, center, max_depth=radius - 1)
    members = frozenset(x for x, dx in depth.items() if dx < radius)
    boundary = eps_boundary(view, members)
    m = view.graph.measure
    return BallRecord(
        center=center,
        radius=radius,
        eps=view.eps,
        mass=float(m[sorted(members)].sum()),
        boundary_mass=float(m[sorted(boundary)].sum()) if boundary else 0.0,
        members=members,
    )


def find_small_boundary_ball(view: EpsView, centers: Sequence[int], p: int) -> BallRecord:
    """First ball ``B_eps(x_n, l)``, ``1 <= l < n``, with ``m(boundary) <= m(B)/p``.

    ``centers[n - 1]`` is the centre ``x_n`` of the radius-``n`` ball; ``n``
    and then ``l`` are scanned upward.  Raises :class:`SearchExhausted`,
    carrying the best ball seen, if no candidate qualifies.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if not len(centers):
        raise ValueError("centers must be nonempty")
    depths: dict[int, dict[int, int]] = {}
    best: BallRecord | None = None
    for n, x in enumerate(centers, start=1):
        x = int(x)
        if x not in depths:
            depths[x] = bfs_depths(view, x)
        for l in range(1, n):
            rec = ball_record(view, x, l, depths[x])
            if rec.satisfies(p):
                return rec
            if best is None or rec.ratio < best.ratio:
                best = rec
    raise SearchExhausted(p, best)


def search_all_centers(view: EpsView, p: int, n_max: int) -> BallRecord:
    """Run the search with each vertex in turn as a fixed centre, smallest id first."""
    best: BallRecord | None = None
    for x in range(view.n):
        try:
            return find_small_boundary_ball(view, [x] * n_max, p)
        except SearchExhausted as exc:
            if exc.best is not None and (best is None or exc.best.ratio < best.ratio):
                best = exc.best
    raise SearchExhausted(p, best)


@dataclass(frozen=True)
class ExpansionCheck:
    K: float
    mass: float
    lower_bound: float

    @property
    def holds(self) -> bool:
        return self.mass >= self.lower_bound * (1 - 1e-12)


def expansion_check(view: EpsView, center: int, n: int) -> ExpansionCheck:
    """Growth forced by large boundaries around ``center``.

    With ``K = min_{1 <= l < n} m(boundary B_l) / m(B_l)``, every ball in
    the range grows by a factor ``1 + K`` per unit of radius, so
    ``m(B(x, n)) >= (1 + K)^(n - 2) m(x)``.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    depth = bfs_depths(view, center)
    K = min(ball_record(view, center, l, depth).ratio for l in range(1, n))
    mass = ball_record(view, center, n, depth).mass
    return ExpansionCheck(K=K, mass=mass, lower_bound=(1 + K) ** (n - 2) * view.graph.measure[center])
