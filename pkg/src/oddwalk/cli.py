"""Command line entry point: ``oddwalk <command> [graph] [options]``.

Every command reads one graph, either an edge-list file or a generator spec
passed with ``--generate``, and writes a JSON report.  Exit status is 0 on
success, 1 on usage or input errors and 2 when the analysis verdict is
inconsistent.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from dataclasses import asdict, dataclass, fields

from .eps import EpsBall, bipartition, eps_ball, eps_view
from .generators import generate, lazify
from .graph import GraphConstants, GraphError, WeightedGraph, format_edge_list, read_edge_list
from .kernel import lb_infimum
from .report import rows_to_csv, to_json
from .riesz import (
    DominationFails,
    QuasiDistanceError,
    UEFitError,
    kernel_domination_check,
    lemma_pdv_check,
    power_quasidistance,
    read_rho_matrix,
    riesz_norm,
    sigma_rescale,
    ue_fit,
    validate_quasidistance,
)
from .spectral import (
    DENSE_CAP,
    defect_bound_check,
    equivalence_report,
    extremal_eigenvalues,
    spectral_report,
)
from .volume import SearchExhausted, fit_growth, implication_check, search_all_centers

COMMANDS = ("analyze", "spectrum", "bipartite", "volume", "witness", "riesz", "generate")
EXIT_OK, EXIT_USAGE, EXIT_INCONSISTENT = 0, 1, 2
DOMINATION_L_MAX = 15


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: str | None = None
    generate: str | None = None
    lazy: float | None = None
    eps: tuple[float, ...] = (0.0,)
    r: tuple[int, ...] = (1, 2, 3, 4)
    odd_k: int = 9
    q: tuple[float, ...] = (2.0,)
    p: tuple[int, ...] = (2, 5, 10)
    rho: str = "none"
    r_max: int = 8
    search_n: int = 32
    n_max: int = 32
    k_max: int = 16
    trials: int = 200
    out: str | None = None
    csv: str | None = None
    threads: int | None = None
    dense_cap: int = DENSE_CAP

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.command != "generate" and (self.input is None) == (self.generate is None):
            raise UsageError("give exactly one of an edge-list path or --generate SPEC")
        if self.command == "generate" and self.generate is None:
            raise UsageError("generate needs a graph spec")
        for name in ("eps", "r", "q", "p"):
            if not getattr(self, name):
                raise UsageError(f"--{name} grid is empty")
        if any(not (e >= 0 and math.isfinite(e)) for e in self.eps):
            raise UsageError("eps values must be finite and >= 0")
        if any(r < 1 for r in self.r):
            raise UsageError("radii must be >= 1")
        if any(not 1 <= q < math.inf for q in self.q):
            raise UsageError("q values must lie in [1, inf)")
        if any(p < 1 for p in self.p):
            raise UsageError("p values must be >= 1")
        if self.odd_k < 1 or self.r_max < 2 or self.search_n < 2 or self.n_max < 1 or self.k_max < 2:
            raise UsageError("need odd_k >= 1, r_max >= 2, search_n >= 2, n_max >= 1, k_max >= 2")
        if self.lazy is not None and not 0 <= self.lazy < 1:
            raise UsageError("--lazy must lie in [0, 1)")
        if self.threads is not None and self.threads < 1:
            raise UsageError("--threads must be >= 1")
        parse_rho(self.rho)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        known = {f.name: f for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        kw = {}
        for k, v in data.items():
            if isinstance(v, list):
                cast = int if k in ("r", "p") else float
                v = tuple(cast(x) for x in v)
            kw[k] = v
        return cls(**kw)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> RunConfig:
        return cls.from_dict(json.loads(text))


def parse_int_grid(text: str) -> tuple[int, ...]:
    """``"1..4"``, ``"2,5,10"`` or a mix such as ``"1..3,8"``; ranges are inclusive."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                a, b = part.split("..")
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise UsageError(f"bad integer grid {text!r}") from None
    return tuple(out)


def parse_float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise UsageError(f"bad number list {text!r}") from None


_EXPONENT = re.compile(r"^log2\((?P<arg>[^)]+)\)$")


def parse_rho(text: str) -> tuple[str, float | str | None]:
    """``none``, ``d``, ``d^X`` (``X`` a number or ``log2(Y)``) or ``file:PATH``."""
    text = text.strip()
    if text == "none":
        return "none", None
    if text == "d":
        return "power", 1.0
    if text.startswith("file:"):
        return "file", text[5:]
    if text.startswith("d^"):
        expo = text[2:]
        m = _EXPONENT.match(expo)
        try:
            value = math.log2(float(m["arg"])) if m else float(expo)
        except ValueError:
            raise UsageError(f"bad rho exponent {expo!r}") from None
        if not value >= 1:
            raise UsageError(f"rho exponent must be >= 1, got {value}")
        return "power", value
    raise UsageError(f"bad --rho {text!r}; expected none, d, d^X or file:PATH")


def load_graph(cfg: RunConfig) -> WeightedGraph:
    g = generate(cfg.generate) if cfg.generate is not None else read_edge_list(cfg.input)
    if cfg.lazy is not None:
        g = lazify(g, cfg.lazy)
    return g


def _threads(cfg: RunConfig) -> int:
    return cfg.threads or os.cpu_count() or 1


def _graph_section(g: WeightedGraph) -> dict:
    c = GraphConstants.of(g)
    return {
        "vertices": g.n,
        "edges": g.edge_count,
        "connected": g.is_connected,
        "loops": g.has_loops,
        "N_dvl": c.N_dvl,
        "C_dvl": c.C_dvl,
        "eps_LB": c.eps_LB,
    }


def volume_section(g: WeightedGraph, cfg: RunConfig) -> dict:
    fit = fit_growth(g, cfg.r_max)
    imp = implication_check(fit)
    searches = []
    for e in cfg.eps:
        view = eps_view(g, e)
        for p in cfg.p:
            try:
                rec = search_all_centers(view, p, cfg.search_n)
                searches.append({"eps": e, "p": p, "found": True, "center": rec.center,
                                 "radius": rec.radius, "mass": rec.mass,
                                 "boundary_mass": rec.boundary_mass, "ratio": rec.ratio})
            except SearchExhausted as exc:
                searches.append({"eps": e, "p": p, "found": False, "best_ratio": exc.best_ratio})
    return {
        "r_max": fit.r_max,
        "C_pdv": fit.C_pdv,
        "d": fit.d,
        "C_dv": fit.C_dv,
        "C_dvl": fit.C_dvl,
        "implication": {
            "dv_pdv_C": imp.dv_pdv_C,
            "dv_pdv_d": imp.dv_pdv_d,
            "dv_pdv_violations": imp.dv_pdv_violations,
            "dvl_from_pdv": imp.dvl_from_pdv,
            "holds": imp.holds,
        },
        "small_boundary_balls": searches,
    }


def witness_rows(g: WeightedGraph, cfg: RunConfig) -> list[dict]:
    consts = GraphConstants.of(g)
    rows = []
    for e in cfg.eps:
        view = eps_view(g, e)
        for p in cfg.p:
            try:
                rec = search_all_centers(view, p, cfg.search_n)
            except SearchExhausted as exc:
                rows.append({"eps": e, "p": p, "r": None, "center": None, "q": None,
                             "defect": None, "bound": None, "holds": None,
                             "note": f"search exhausted, best ratio {exc.best_ratio:.6g}"})
                continue
            ball = EpsBall(rec.center, rec.radius, e, rec.members)
            for q in cfg.q:
                row = {"eps": e, "p": p, "r": rec.radius, "center": rec.center, "q": q}
                try:
                    chk = defect_bound_check(view, ball, p, q, constants=consts)
                    row.update(defect=chk.defect, bound=chk.bound, holds=chk.holds, note=None)
                except ValueError as exc:
                    row.update(defect=None, bound=None, holds=None, note=str(exc))
                rows.append(row)
    return rows


def build_quasidistance(g: WeightedGraph, rho: str):
    kind, arg = parse_rho(rho)
    if kind == "none":
        return None
    if kind == "file":
        return validate_quasidistance(g, read_rho_matrix(arg))
    return power_quasidistance(g, arg)


def riesz_section(g: WeightedGraph, cfg: RunConfig) -> dict:
    qd = build_quasidistance(g, cfg.rho if cfg.rho != "none" else "d^2")
    lemma = lemma_pdv_check(g, qd, n_max=cfg.r_max)
    out: dict = {
        "rho": cfg.rho if cfg.rho != "none" else "d^2",
        "C_rho": qd.C_rho,
        "beta": qd.beta,
        "D_rho": qd.D_rho,
        "tight_triple": None if qd.tight_triple is None else list(qd.tight_triple),
        "sampled": qd.sampled,
        "lemma": {
            "holds": lemma.holds,
            "worst_pair": None if lemma.worst_pair is None else list(lemma.worst_pair),
            "worst_ratio": lemma.worst_ratio,
            "pdv_exponent": lemma.pdv_exponent,
            "pdv_constant": lemma.pdv_constant,
        },
    }
    try:
        fit = ue_fit(g, qd, cfg.k_max)
        out["ue_fit"] = {"C_ue": fit.C_ue, "c_ue": fit.c_ue, "eta": fit.eta,
                         "k_max": fit.k_max, "violation_ratio": fit.violation_ratio}
    except UEFitError as exc:
        out["ue_fit"] = {"error": str(exc)}
    norms = []
    for q in cfg.q:
        if not 1 < q <= 2:
            norms.append({"q": q, "value": None, "certified": False, "trials": None,
                          "note": "q outside (1, 2]"})
            continue
        exact = q == 2
        norms.append({"q": q, "value": riesz_norm(g, q, trials=cfg.trials),
                      "certified": exact, "trials": None if exact else g.n + 2 * cfg.trials})
    out["riesz_norm"] = norms

    l = next((l for l in range(3, DOMINATION_L_MAX + 1, 2) if lb_infimum(g, l - 1)[0] > 0), None)
    if l is None:
        out["domination"] = out["sigma"] = None
        return out
    try:
        C, holds = kernel_domination_check(g, l)
        out["domination"] = {"l": l, "C": C, "holds": holds}
    except DominationFails as exc:
        out["domination"] = {"l": l, "error": str(exc)}
    try:
        sig = sigma_rescale(qd, l)
        out["sigma"] = {"l": l, "valid": True, "C_sigma": sig.C_rho, "max": int(sig.rho.max())}
    except QuasiDistanceError as exc:
        out["sigma"] = {"l": l, "valid": False, "axiom": exc.axiom, "where": list(exc.where),
                        "error": str(exc)}
    return out


def _spectrum_section(g: WeightedGraph, cfg: RunConfig) -> dict:
    if g.n <= cfg.dense_cap:
        rep = spectral_report(g, cfg.n_max, dense_cap=cfg.dense_cap)
        return {"spectrum": rep.eigenvalues, "gap_at_minus_one": rep.gap_at_minus_one,
                "analyticity": {"n_max": cfg.n_max, "a_n": rep.analyticity,
                                "sup": float(rep.analyticity.max())}}
    lo, hi = extremal_eigenvalues(g)
    return {"spectrum": None, "extremal": [float(lo[0]), float(hi[0])],
            "gap_at_minus_one": float(1 + lo[0]), "analyticity": None}


def _bipartite_section(g: WeightedGraph, cfg: RunConfig) -> list[dict]:
    out = []
    for e in cfg.eps:
        view = eps_view(g, e)
        cert = bipartition(view, range(g.n))
        balls = []
        for r in cfg.r:
            hit = next((x for x in range(g.n)
                        if bipartition(view, eps_ball(view, x, r).members).bipartite), None)
            balls.append({"r": r, "exists": hit is not None, "center": hit})
        out.append({"eps": e, "verdict": cert.verdict, "part0": cert.part0, "part1": cert.part1,
                    "witness": None if cert.witness is None else list(cert.witness),
                    "balls": balls})
    return out


def run(cfg: RunConfig) -> tuple[int, str, str | None]:
    """Execute ``cfg``; returns ``(exit status, report text, csv text or None)``."""
    g = load_graph(cfg)
    if cfg.command == "generate":
        return EXIT_OK, format_edge_list(g), None

    status, csv_text = EXIT_OK, None
    if cfg.command == "analyze":
        report = equivalence_report(g, cfg.eps, cfg.r, cfg.odd_k, cfg.q, n_max=cfg.n_max,
                                    threads=_threads(cfg), dense_cap=cfg.dense_cap)
        report["volume"] = volume_section(g, cfg)
        if cfg.rho != "none":
            report["riesz"] = riesz_section(g, cfg)
        if report["verdict"]["status"] == "inconsistent":
            status = EXIT_INCONSISTENT
        csv_text = rows_to_csv(("eps", "r", "q", "defect"),
                               ((w["eps"], w["r"], w["q"], w["defect"]) for w in report["witnesses"]))
    elif cfg.command == "spectrum":
        report = {"graph": _graph_section(g), **_spectrum_section(g, cfg)}
    elif cfg.command == "bipartite":
        report = {"graph": _graph_section(g), "bipartite": _bipartite_section(g, cfg)}
    elif cfg.command == "volume":
        report = {"graph": _graph_section(g), "volume": volume_section(g, cfg)}
    elif cfg.command == "witness":
        rows = witness_rows(g, cfg)
        report = {"graph": _graph_section(g), "witnesses": rows}
        csv_text = rows_to_csv(("eps", "r", "p", "q", "defect", "bound"),
                               ((w["eps"], w["r"], w["p"], w["q"], w["defect"], w["bound"])
                                for w in rows))
    else:
        report = {"graph": _graph_section(g), "riesz": riesz_section(g, cfg)}
    # settings that cannot change any number stay out of the report body
    echo = {k: v for k, v in cfg.to_dict().items() if k not in ("threads", "out", "csv")}
    report = {"config": echo, **report}
    return status, to_json(report), csv_text


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oddwalk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("input", nargs="?", help="edge-list file (or a spec for 'generate')")
        sp.add_argument("--generate", metavar="SPEC", help="e.g. cycle:4, lattice2d:33x33")
        sp.add_argument("--lazy", type=float, metavar="ALPHA", help="add holding probability")
        sp.add_argument("--out", help="report path (default stdout)")
        sp.add_argument("--config", help="read a saved RunConfig (flags override it)")
        sp.add_argument("--save-config", metavar="PATH", help="write the effective config")
        if name == "generate":
            continue
        sp.add_argument("--eps", help="comma list, default 0")
        sp.add_argument("--r", help="radius grid, e.g. 1..4")
        sp.add_argument("--odd-k", type=int, dest="odd_k", help="largest odd power, default 9")
        sp.add_argument("--q", help="comma list of exponents, default 2")
        sp.add_argument("--p", help="boundary levels, default 2,5,10")
        sp.add_argument("--rho", help="none | d | d^X | d^log2(Y) | file:PATH")
        sp.add_argument("--r-max", type=int, dest="r_max", help="growth-fit radius, default 8")
        sp.add_argument("--search-n", type=int, dest="search_n",
                        help="largest radius tried in the boundary search, default 32")
        sp.add_argument("--n-max", type=int, dest="n_max", help="analyticity horizon, default 32")
        sp.add_argument("--k-max", type=int, dest="k_max", help="subgaussian fit horizon, default 16")
        sp.add_argument("--trials", type=int, help="random test functions for q < 2")
        sp.add_argument("--csv", help="write the defect table here as CSV")
        sp.add_argument("--threads", type=int, help="worker threads, default all cores")
        sp.add_argument("--dense-cap", type=int, dest="dense_cap")
    return parser


_CONVERT = {"eps": parse_float_list, "q": parse_float_list, "r": parse_int_grid, "p": parse_int_grid}


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    base: dict = {"command": ns.command}
    if ns.config:
        with open(ns.config, encoding="utf-8") as fh:
            base = RunConfig.loads(fh.read()).to_dict()
        base["command"] = ns.command
    for f in fields(RunConfig):
        if f.name == "command":
            continue
        value = getattr(ns, f.name, None)
        if value is None:
            continue
        if f.name in _CONVERT:
            value = _CONVERT[f.name](value)
        base[f.name] = value
    if ns.command == "generate" and ns.input is not None:
        base["generate"], base["input"] = ns.input, None
    return RunConfig.from_dict(base)


def main(argv: list[str] | None = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(ns)
        if ns.save_config:
            with open(ns.save_config, "w", encoding="utf-8") as fh:
                fh.write(cfg.dumps())
        status, text, csv_text = run(cfg)
        if cfg.out:
            with open(cfg.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        if cfg.csv and csv_text is not None:
            with open(cfg.csv, "w", encoding="utf-8") as fh:
                fh.write(csv_text)
    except FileNotFoundError as exc:
        print(f"oddwalk: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, GraphError, ValueError, OSError, MemoryError) as exc:
        print(f"oddwalk: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return status


if __name__ == "__main__":
    sys.exit(main())
