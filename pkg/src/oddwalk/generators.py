"""Deterministic test graphs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import GraphError, WeightedGraph, build_graph

__all__ = [
    "GraphSpec",
    "generate",
    "parse_spec",
    "cycle",
    "path",
    "lattice2d",
    "complete",
    "complete_bipartite",
    "sierpinski",
    "random_weighted",
    "lazify",
]

KINDS = ("cycle", "path", "lattice2d", "complete", "complete_bipartite", "sierpinski", "random_weighted")


def cycle(n: int, weight: float = 1.0) -> WeightedGraph:
    if n < 3:
        raise GraphError(f"cycle needs n >= 3, got {n}")
    return build_graph((i, (i + 1) % n, weight) for i in range(n))


def path(n: int, weight: float = 1.0) -> WeightedGraph:
    """Path on vertices ``0..n-1``."""
    if n < 2:
        raise GraphError(f"path needs n >= 2, got {n}")
    return build_graph((i, i + 1, weight) for i in range(n - 1))


def lattice2d(width: int, height: int, weight: float = 1.0) -> WeightedGraph:
    """Grid patch; vertex ``i + width * j`` sits at ``(i, j)``."""
    if width < 1 or height < 1 or width * height < 2:
        raise GraphError(f"lattice needs at least two sites, got {width}x{height}")
    edges = []
    for j in range(height):
        for i in range(width):
            v = i + width * j
            if i + 1 < width:
                edges.append((v, v + 1, weight))
            if j + 1 < height:
                edges.append((v, v + width, weight))
    return build_graph(edges)


def complete(n: int, weight: float = 1.0) -> WeightedGraph:
    if n < 2:
        raise GraphError(f"complete graph needs n >= 2, got {n}")
    return build_graph((i, j, weight) for i in range(n) for j in range(i + 1, n))


def complete_bipartite(a: int, b: int, weight: float = 1.0) -> WeightedGraph:
    if a < 1 or b < 1:
        raise GraphError(f"complete bipartite graph needs a, b >= 1, got {a}, {b}")
    return build_graph((i, a + j, weight) for i in range(a) for j in range(b))


def sierpinski(level: int, weight: float = 1.0) -> WeightedGraph:
    """Sierpinski gasket graph at subdivision ``level`` (level 0 is a triangle).

    Level ``L + 1`` is three copies of level ``L`` glued at corners.  Points
    carry integer coordinates ``(a, b)`` on a triangle of side ``2^L``, and
    ids are handed out in order of first appearance.
    """
    if level < 0:
        raise GraphError(f"level must be >= 0, got {level}")
    edges = [((0, 0), (1, 0)), ((1, 0), (0, 1)), ((0, 1), (0, 0))]
    side = 1
    for _ in range(level):
        shifted = []
        for da, db in ((0, 0), (side, 0), (0, side)):
            shifted.extend(((a + da, b + db), (c + da, e + db)) for (a, b), (c, e) in edges)
        edges = shifted
        side *= 2
    ids: dict[tuple[int, int], int] = {}
    for u, v in edges:
        for pt in (u, v):
            ids.setdefault(pt, len(ids))
    return build_graph((ids[u], ids[v], weight) for u, v in edges)


def random_weighted(
    n: int,
    density: float,
    seed: int,
    *,
    loop_prob: float = 0.0,
    low: float = 0.5,
    high: float = 2.0,
) -> WeightedGraph:
    """Connected random graph: a random spanning path plus independent extra edges.

    Weights are uniform on ``[low, high)``; each vertex gets a loop with
    probability ``loop_prob``.
    """
    if n < 2:
        raise GraphError(f"random graph needs n >= 2, got {n}")
    if not 0 <= density <= 1 or not 0 <= loop_prob <= 1:
        raise GraphError("density and loop_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    pairs = {tuple(sorted((int(order[i]), int(order[i + 1])))) for i in range(n - 1)}
    extra = rng.random((n, n)) < density
    for i in range(n):
        for j in range(i + 1, n):
            if extra[i, j]:
                pairs.add((i, j))
    loops = rng.random(n) < loop_prob
    pairs.update((i, i) for i in range(n) if loops[i])
    pairs = sorted(pairs)
    weights = rng.uniform(low, high, size=len(pairs))
    return build_graph((u, v, float(w)) for (u, v), w in zip(pairs, weights))


@dataclass(frozen=True)
class GraphSpec:
    kind: str
    params: tuple[float, ...] = ()
    seed: int | None = None
    weight: float = 1.0

    def __str__(self) -> str:
        args = ",".join(_fmt(p) for p in self.params)
        if self.seed is not None:
            args += f",{self.seed}"
        return f"{self.kind}:{args}"


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def parse_spec(text: str) -> GraphSpec:
    """Parse ``kind:args``, e.g. ``cycle:4``, ``lattice2d:33x33``, ``random_weighted:10,0.3,7``."""
    kind, _, args = text.partition(":")
    kind = kind.strip()
    if kind not in KINDS:
        raise GraphError(f"unknown graph kind {kind!r}; expected one of {', '.join(KINDS)}")
    parts = [a for a in args.replace("x", ",").split(",") if a.strip()]
    try:
        values = [float(a) for a in parts]
    except ValueError:
        raise GraphError(f"bad parameters in {text!r}") from None
    if kind == "random_weighted":
        if len(values) != 3:
            raise GraphError("random_weighted takes n,density,seed")
        return GraphSpec(kind, (values[0], values[1]), seed=int(values[2]))
    return GraphSpec(kind, tuple(values))


def generate(spec: GraphSpec | str) -> WeightedGraph:
    if isinstance(spec, str):
        spec = parse_spec(spec)
    p, w = spec.params, spec.weight

    def ints(k: int) -> list[int]:
        if len(p) != k or any(not float(x).is_integer() for x in p):
            raise GraphError(f"{spec.kind} takes {k} integer parameter(s), got {p}")
        return [int(x) for x in p]

    if spec.kind == "cycle":
        return cycle(*ints(1), weight=w)
    if spec.kind == "path":
        return path(*ints(1), weight=w)
    if spec.kind == "lattice2d":
        return lattice2d(*ints(2), weight=w)
    if spec.kind == "complete":
        return complete(*ints(1), weight=w)
    if spec.kind == "complete_bipartite":
        return complete_bipartite(*ints(2), weight=w)
    if spec.kind == "sierpinski":
        return sierpinski(*ints(1), weight=w)
    if spec.kind == "random_weighted":
        if len(p) != 2 or spec.seed is None or not float(p[0]).is_integer():
            raise GraphError("random_weighted needs integer n, density and a seed")
        return random_weighted(int(p[0]), float(p[1]), spec.seed)
    raise GraphError(f"unknown graph kind {spec.kind!r}")


def lazify(g: WeightedGraph, alpha: float) -> WeightedGraph:
    """Holding walk ``alpha I + (1 - alpha) P`` realised as loop weights.

    Off-diagonal weights are scaled by ``1 - alpha`` and the loop at ``x``
    becomes ``alpha m(x) + (1 - alpha) mu_xx``, so the measure is unchanged.
    """
    if not 0 <= alpha < 1:
        raise ValueError(f"holding probability must lie in [0, 1), got {alpha}")
    m = g.measure
    loop = alpha * m + (1 - alpha) * g.mu.diagonal()
    label = g.labels.tolist()
    edges = [(label[u], label[v], (1 - alpha) * w) for u, v, w in g.edges() if u != v]
    edges.extend((label[x], label[x], float(loop[x])) for x in range(g.n))
    out = build_graph(edges)
    held = out.mu.diagonal() / out.measure
    if not np.allclose(held, alpha + (1 - alpha) * g.mu.diagonal() / m, rtol=0, atol=1e-12):
        raise AssertionError("holding probabilities differ from the requested ones")
    return out
