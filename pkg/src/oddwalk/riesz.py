"""Quasidistances, discrete gradients and Riesz-transform estimates.

The gradient length is
``grad f(x) = (sum_y p(x, y) |f(x) - f(y)|^2 m(y))^(1/2)`` and the Riesz
transform is ``grad`` composed with ``(I - P)^(-1/2)`` on the orthogonal
complement of the kernel of ``I - P``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .graph import WeightedGraph, apply_markov, as_vertex_function, lp_norm
from .kernel import PROB_TOL, iterate_kernel, lb_infimum
from .volume import volume_table

__all__ = [
    "TRIPLE_CAP",
    "QuasiDistanceError",
    "QuasiDistance",
    "validate_quasidistance",
    "graph_distance",
    "read_rho_matrix",
    "power_quasidistance",
    "rho_volumes",
    "LemmaCheck",
    "lemma_pdv_check",
    "sigma_rescale",
    "gradient",
    "generalized_gradient",
    "energy",
    "half_inverse_laplacian",
    "riesz_norm",
    "GaffneyCheck",
    "gaffney_check",
    "SubgaussianFit",
    "UEFitError",
    "ue_fit",
    "DominationFails",
    "kernel_domination_check",
]

TRIPLE_CAP = 2048
NULL_TOL = 1e-12


class QuasiDistanceError(ValueError):
    """A quasidistance axiom fails; ``where`` names the offending pair or triple."""

    def __init__(self, axiom: str, where: tuple[int, ...], message: str):
        self.axiom = axiom
        self.where = where
        super().__init__(f"axiom ({axiom}) fails at {where}: {message}")


@dataclass(frozen=True, eq=False)
class QuasiDistance:
    """Validated integer quasidistance with its minimal constant ``C_rho``.

    ``beta = 1 + log2 C_rho``; ``D_rho = log2`` of the doubling constant of
    rho-ball volumes, when those were computed.
    """

    graph: WeightedGraph = field(repr=False)
    rho: np.ndarray = field(repr=False)
    C_rho: float
    tight_triple: tuple[int, int, int] | None
    D_rho: float | None = None
    sampled: bool = False

    @property
    def beta(self) -> float:
        return 1.0 + math.log2(self.C_rho)

    def set_distance(self, E: Iterable[int], F: Iterable[int]) -> int:
        E, F = sorted(E), sorted(F)
        if not E or not F:
            raise ValueError("both sets must be nonempty")
        return int(self.rho[np.ix_(E, F)].min())


def _support(g: WeightedGraph) -> np.ndarray:
    return g.mu.toarray() > 0


def validate_quasidistance(
    g: WeightedGraph,
    rho,
    *,
    adjacency: np.ndarray | None = None,
    triple_cap: int = TRIPLE_CAP,
    sample_z: int = 256,
    seed: int = 0,
) -> QuasiDistance:
    """Check the axioms and find the smallest valid ``C_rho`` by a triple scan.

    ``adjacency`` is the neighbour relation on which ``rho`` must equal 1
    (default: ``p(x, y) > 0``).  Above ``triple_cap`` vertices only
    ``sample_z`` intermediate points are scanned and the result is flagged
    as sampled.
    """
    R = np.asarray(rho)
    n = g.n
    if R.shape != (n, n):
        raise ValueError(f"rho has shape {R.shape}, expected {(n, n)}")
    if not np.all(np.isfinite(R)) or np.any(R < 0) or np.any(R != np.round(R)):
        bad = np.argwhere(~np.isfinite(R) | (R < 0) | (R != np.round(np.nan_to_num(R))))[0]
        raise QuasiDistanceError("iv", tuple(int(i) for i in bad), "values must be nonnegative integers")
    R = R.astype(np.int64)
    diag = np.diag(R)
    if np.any(diag != 0):
        x = int(np.flatnonzero(diag)[0])
        raise QuasiDistanceError("i", (x, x), "rho(x, x) must be 0")
    off_zero = (R == 0) & ~np.eye(n, dtype=bool)
    if off_zero.any():
        x, y = (int(i) for i in np.argwhere(off_zero)[0])
        raise QuasiDistanceError("i", (x, y), "rho vanishes off the diagonal")
    asym = R != R.T
    if asym.any():
        x, y = (int(i) for i in np.argwhere(asym)[0])
        raise QuasiDistanceError("ii", (x, y), f"{R[x, y]} != {R[y, x]}")
    adj = _support(g) if adjacency is None else np.asarray(adjacency, dtype=bool)
    # a loop is not a pair of distinct neighbours
    bad_edge = adj & ~np.eye(n, dtype=bool) & (R != 1)
    if bad_edge.any():
        x, y = (int(i) for i in np.argwhere(bad_edge)[0])
        raise QuasiDistanceError("v", (x, y), f"neighbours at rho = {R[x, y]}")

    sampled = n > triple_cap
    zs = (
        np.sort(np.random.default_rng(seed).choice(n, size=min(sample_z, n), replace=False))
        if sampled
        else np.arange(n)
    )
    Rf = R.astype(float)
    best, arg = 0.0, None
    for z in zs:
        den = Rf[:, z][:, None] + Rf[z, :][None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(den > 0, Rf / den, 0.0)
        i = int(np.argmax(ratio))
        if ratio.flat[i] > best:
            best, arg = float(ratio.flat[i]), (i // n, i % n, int(z))
    C = best if best > 0 else 1.0
    return QuasiDistance(
        graph=g,
        rho=R,
        C_rho=C,
        tight_triple=arg,
        D_rho=_doubling_exponent(g, R),
        sampled=sampled,
    )


def rho_volumes(g: WeightedGraph, rho: np.ndarray, ks: np.ndarray) -> np.ndarray:
    """``V_rho(x, k) = m({y : rho(x, y) < k})`` for each ``k`` in ``ks``."""
    order = np.argsort(rho, axis=1, kind="stable")
    srt = np.take_along_axis(rho, order, axis=1)
    cum = np.concatenate([np.zeros((g.n, 1)), np.cumsum(g.measure[order], axis=1)], axis=1)
    out = np.empty((g.n, len(ks)))
    for x in range(g.n):
        out[x] = cum[x, np.searchsorted(srt[x], ks, side="left")]
    return out


def _doubling_exponent(g: WeightedGraph, R: np.ndarray) -> float:
    # V_rho(x, 2k)/V_rho(x, k) can only peak right after V_rho(x, 2k) jumps
    ks = np.unique(R // 2 + 1)
    ks = ks[ks >= 1]
    V1 = rho_volumes(g, R, ks)
    V2 = rho_volumes(g, R, 2 * ks)
    return float(math.log2(np.max(V2 / V1)))


def graph_distance(g: WeightedGraph) -> np.ndarray:
    return shortest_path(g.mu, directed=False, unweighted=True)


def read_rho_matrix(path) -> np.ndarray:
    """Whitespace-separated integer matrix, one row per line; ``#`` lines skipped."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append([int(tok) for tok in line.split()])
            except ValueError:
                raise ValueError(f"line {lineno}: expected integers, got {raw.rstrip()!r}") from None
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ValueError(f"{path}: rho must be a square matrix")
    return np.array(rows, dtype=np.int64)


def power_quasidistance(g: WeightedGraph, m_exp: float, **kw) -> QuasiDistance:
    """``rho = floor(d^m_exp)`` for the graph distance ``d``."""
    if m_exp < 1:
        raise ValueError(f"exponent must be >= 1, got {m_exp}")
    d = graph_distance(g)
    if not np.all(np.isfinite(d)):
        raise ValueError("graph is disconnected; the distance takes infinite values")
    # absorb rounding in d**m when d**m is an integer, e.g. 2**log2(5)
    rho = np.floor(d**m_exp + 1e-9).astype(np.int64)
    return validate_quasidistance(g, rho, **kw)


class LemmaCheck(NamedTuple):
    holds: bool
    worst_pair: tuple[int, int] | None
    worst_ratio: float
    pdv_exponent: float | None
    pdv_constant: float | None


def lemma_pdv_check(g: WeightedGraph, qd: QuasiDistance, n_max: int = 16) -> LemmaCheck:
    """Check ``rho(x, y) <= (2 d(x, y))^beta`` on all pairs ``x != y``.

    Also reports the smallest ``C`` with ``V(x, r) <= C r^(beta D_rho) m(x)``
    for ``r <= n_max``.
    """
    d = graph_distance(g)
    off = ~np.eye(g.n, dtype=bool) & np.isfinite(d)
    ratio = np.zeros_like(d)
    ratio[off] = qd.rho[off] / (2.0 * d[off]) ** qd.beta
    i = int(np.argmax(ratio))
    worst = float(ratio.flat[i])
    pair = (i // g.n, i % g.n) if g.n > 1 else None
    exponent = constant = None
    if qd.D_rho is not None:
        exponent = qd.beta * qd.D_rho
        V = volume_table(g, n_max)
        r = np.arange(1, n_max + 1)
        constant = float(np.max(V[:, 1:] / (r[None, :] ** exponent * g.measure[:, None])))
    return LemmaCheck(worst <= 1 + 1e-12, pair, worst, exponent, constant)


def sigma_rescale(qd: QuasiDistance, l: int) -> QuasiDistance:
    """``sigma = ceil(rho / (2 l)^beta)``, validated for the walk ``P^l``.

    Raises :class:`QuasiDistanceError` if ``sigma`` is not a quasidistance
    whose neighbour relation is the support of ``p_l``.
    """
    if l < 1 or l % 2 == 0:
        raise ValueError(f"l must be a positive odd integer, got {l}")
    g = qd.graph
    scale = (2.0 * l) ** qd.beta
    sigma = np.ceil(qd.rho / scale * (1 - 1e-12)).astype(np.int64)
    support = iterate_kernel(g, l).toarray() > 0
    return validate_quasidistance(g, sigma, adjacency=support)


def gradient(g: WeightedGraph, f) -> np.ndarray:
    f = as_vertex_function(g, f)
    T = g.transition.tocoo()
    terms = T.data * (f[T.row] - f[T.col]) ** 2
    return np.sqrt(np.bincount(T.row, weights=terms, minlength=g.n))


def generalized_gradient(g: WeightedGraph, f, l: int) -> np.ndarray:
    """Gradient length built on ``p_l`` instead of ``p``."""
    if l < 1:
        raise ValueError(f"l must be >= 1, got {l}")
    f = as_vertex_function(g, f)
    T = iterate_kernel(g, l).transition()
    return np.sqrt(np.sum(T * (f[:, None] - f[None, :]) ** 2, axis=1))


def energy(g: WeightedGraph, f) -> float:
    """``sum_{x,y} mu_xy |f(x) - f(y)|^2`` computed edge by edge."""
    f = as_vertex_function(g, f)
    mu = g.mu.tocoo()
    return float(np.sum(mu.data * (f[mu.row] - f[mu.col]) ** 2))


def _eigh(g: WeightedGraph) -> tuple[np.ndarray, np.ndarray]:
    return np.linalg.eigh(g.symmetric_kernel.toarray())


def _half_inverse_matrix(g: WeightedGraph) -> tuple[np.ndarray, np.ndarray]:
    theta, U = _eigh(g)
    lap = 1.0 - theta
    keep = lap >= NULL_TOL
    gain = np.zeros_like(lap)
    gain[keep] = 1.0 / np.sqrt(lap[keep])
    s = np.sqrt(g.measure)
    K = (U * gain[None, :]) @ U.T
    return K / s[:, None] * s[None, :], U[:, ~keep]


def half_inverse_laplacian(
    g: WeightedGraph, f, *, return_flag: bool = False, dense_cap: int = 4096
):
    """``(I - P)^(-1/2) f`` by functional calculus.

    Modes with ``1 - theta < 1e-12`` (the constants, on a connected graph)
    are zeroed.  With ``return_flag`` the result comes with a boolean telling
    whether ``f`` had a component along those modes.
    """
    if g.n > dense_cap:
        raise ValueError(f"{g.n} vertices exceeds the dense cap of {dense_cap}")
    f = as_vertex_function(g, f)
    K, null = _half_inverse_matrix(g)
    out = K @ f
    if not return_flag:
        return out
    u = np.sqrt(g.measure) * f
    coeff = null.T @ u
    scale = max(float(np.linalg.norm(u)), 1.0)
    return out, bool(np.any(np.abs(coeff) > 1e-12 * scale))


def riesz_norm(g: WeightedGraph, q: float = 2.0, *, trials: int = 200, seed: int = 0) -> float:
    """Norm of ``grad (I - P)^(-1/2)`` on ``L^q``.

    For ``q = 2`` the value is exact: the largest eigenvalue of the energy
    form pulled back through ``(I - P)^(-1/2)``.  For ``1 < q < 2`` it is a
    lower bound, the best ratio over every point mass and ``trials`` random
    functions (all projected off the null modes).
    """
    if not 1 < q <= 2:
        raise ValueError(f"q must lie in (1, 2], got {q}")
    if g.n < 2:
        return 0.0
    K, null = _half_inverse_matrix(g)
    if q == 2:
        m = g.measure
        s = np.sqrt(m)
        mu = g.mu.toarray()
        energy_form = 2.0 * (np.diag(m) - mu)
        # in coordinates u = sqrt(m) f the L^2(m) norm is Euclidean
        Ku = K / s[None, :]
        M = Ku.T @ energy_form @ Ku
        return float(math.sqrt(max(np.linalg.eigvalsh((M + M.T) / 2)[-1], 0.0)))

    rng = np.random.default_rng(seed)
    s = np.sqrt(g.measure)
    cand = [np.eye(g.n)]
    if trials:
        cand.append(rng.standard_normal((g.n, trials)))
        cand.append(rng.choice([-1.0, 1.0], size=(g.n, trials)))
    F = np.concatenate(cand, axis=1)
    # project off null modes in L^2(m)
    if null.size:
        F = F - (null / s[:, None]) @ (null.T @ (s[:, None] * F))
    best = 0.0
    for j in range(F.shape[1]):
        f = F[:, j]
        den = lp_norm(g, f, q)
        if den <= 1e-12 * max(1.0, float(np.abs(F[:, j]).max())):
            continue
        best = max(best, lp_norm(g, gradient(g, K @ f), q) / den)
    return best


class GaffneyCheck(NamedTuple):
    lhs: float
    rhs: float
    ratio: float
    rho_EF: int


def gaffney_check(
    g: WeightedGraph,
    qd: QuasiDistance,
    E: Iterable[int],
    F: Iterable[int],
    k: int,
    q: float,
    C: float,
    c: float,
    eta: float,
    *,
    trials: int = 20,
    seed: int = 0,
) -> GaffneyCheck:
    """Off-diagonal decay of ``grad P^(k-1)`` from ``F`` to ``E``.

    ``lhs`` is the largest ``||grad P^(k-1) f||_{L^q(E)}`` over unit-norm test
    functions supported on ``F`` (normalised point masses, the normalised
    indicator and random sign patterns); ``rhs`` is
    ``C / sqrt(k) * exp(-c (rho(E, F) / k)^eta)``.
    """
    E, F = sorted(set(E)), sorted(set(F))
    if not E or not F:
        raise ValueError("E and F must be nonempty")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    rng = np.random.default_rng(seed)
    tests = []
    for y in F:
        f = np.zeros(g.n)
        f[y] = 1.0
        tests.append(f)
    ind = np.zeros(g.n)
    ind[F] = 1.0
    tests.append(ind)
    for _ in range(trials):
        f = np.zeros(g.n)
        f[F] = rng.choice([-1.0, 1.0], size=len(F)) * rng.uniform(0.5, 1.5, size=len(F))
        tests.append(f)
    lhs = 0.0
    for f in tests:
        f = f / lp_norm(g, f, q)
        h = f
        for _ in range(k - 1):
            h = apply_markov(g, h)
        lhs = max(lhs, lp_norm(g, gradient(g, h), q, where=E))
    dist = qd.set_distance(E, F)
    rhs = C / math.sqrt(k) * math.exp(-c * (dist / k) ** eta)
    return GaffneyCheck(lhs, rhs, lhs / rhs if rhs > 0 else math.inf, dist)


@dataclass(frozen=True)
class SubgaussianFit:
    C_ue: float
    c_ue: float
    eta: float
    k_max: int
    violation_ratio: float
    table: dict = field(repr=False, default_factory=dict)


class UEFitError(RuntimeError):
    """No finite constants were found on the grid."""


def ue_fit(
    g: WeightedGraph,
    qd: QuasiDistance,
    k_max: int,
    eta_grid: Sequence[float] = (0.5, 2.0 / 3.0, 1.0),
    c_grid: Sequence[float] = (0.1, 0.25, 0.5, 1.0),
) -> SubgaussianFit:
    """Fit ``p_{k-1}(x, y) <= C / V_rho(x, k) * exp(-c (rho(x, y) / k)^eta)``.

    For every ``(eta, c)`` on the grids the smallest ``C`` valid for all
    ``x, y`` and ``2 <= k <= k_max`` is computed; the pair with the
    smallest ``C`` wins (first on the grid in case of ties).
    """
    if k_max < 2:
        raise ValueError(f"k_max must be >= 2, got {k_max}")
    m = g.measure
    p = g.kernel.toarray()
    ks = np.arange(2, k_max + 1)
    V = rho_volumes(g, qd.rho, ks)
    rho = qd.rho.astype(float)
    combos = [(eta, c) for eta in eta_grid for c in c_grid]
    logC = np.full(len(combos), -np.inf)
    pk = np.diag(1.0 / m)
    for j, k in enumerate(ks):
        pk = p @ (m[:, None] * pk)  # p_{k-1}
        pos = pk > 0
        base = np.log(pk[pos]) + np.log(V[:, j])[:, None].repeat(g.n, axis=1)[pos]
        r = rho[pos] / k
        for i, (eta, c) in enumerate(combos):
            logC[i] = max(logC[i], float(np.max(base + c * r**eta)))
    table = {combo: (math.exp(v) if v < 709 else math.inf) for combo, v in zip(combos, logC)}
    i = int(np.argmin(logC))
    if not np.isfinite(logC[i]) or logC[i] >= 709:
        raise UEFitError("no finite constant on the grid; rho is probably mis-scaled for this graph")
    eta, c = combos[i]
    C = math.exp(logC[i]) * (1 + 1e-12)
    return SubgaussianFit(
        C_ue=C,
        c_ue=c,
        eta=eta,
        k_max=k_max,
        violation_ratio=_ue_violation(g, qd, k_max, C, c, eta, V),
        table=table,
    )


def _ue_violation(g, qd, k_max, C, c, eta, V) -> float:
    m = g.measure
    p = g.kernel.toarray()
    pk = np.diag(1.0 / m)
    worst = 0.0
    for j, k in enumerate(range(2, k_max + 1)):
        pk = p @ (m[:, None] * pk)
        rhs = C / V[:, j][:, None] * np.exp(-c * (qd.rho / k) ** eta)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(pk > 0, pk / rhs, 0.0)
        worst = max(worst, float(np.max(ratio)))
    return worst


class DominationFails(ValueError):
    """``P^(l-1)`` has a vanishing return probability, so ``p <= C p_l`` cannot be derived."""


def kernel_domination_check(g: WeightedGraph, l: int) -> tuple[float, bool]:
    """Check ``p(x, y) <= C p_l(x, y)`` on every edge with ``C = 1 / min_x p_{l-1}(x, x) m(x)``."""
    if l < 3 or l % 2 == 0:
        raise ValueError(f"l must be odd and >= 3, got {l}")
    floor, x = lb_infimum(g, l - 1)
    if floor <= 0:
        raise DominationFails(f"p_{l - 1}(x, x) m(x) vanishes at x = {x}")
    C = 1.0 / floor
    p = g.kernel.toarray()
    pl = iterate_kernel(g, l).toarray()
    off = ~np.eye(g.n, dtype=bool) & (p > 0)
    holds = bool(np.all(p[off] <= C * pl[off] * (1 + 1e-12) + PROB_TOL))
    return C, holds
