"""Acceptance suite: one test per criterion, each at its pinned tolerance.

Every test records a PASS/FAIL line; the lines are printed in pytest's
terminal summary (see conftest.py) and when this file is run as a script.
"""

from __future__ import annotations

import math

import numpy as np

import corpus
from oddwalk.eps import EpsBall, bipartition, eps_view, odd_walk_oracle, validate_certificate
from oddwalk.generators import cycle, lazify, path, random_weighted
from oddwalk.graph import apply_laplacian, apply_markov, inner
from oddwalk.kernel import iterate_kernel, lb_infimum
from oddwalk.riesz import (
    energy,
    gaffney_check,
    graph_distance,
    half_inverse_laplacian,
    lemma_pdv_check,
    power_quasidistance,
    riesz_norm,
    sigma_rescale,
    ue_fit,
    validate_quasidistance,
)
from oddwalk.spectral import GAP_TOL, analyticity_constants, build_witness, defect_bound_check, spectrum
from oddwalk.volume import find_small_boundary_ball

RESULTS: list[str] = []


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_c01_stochastic_self_adjoint():
    rng = np.random.default_rng(1)
    worst_row = worst_adj = 0.0
    items = corpus.graphs(max_n=4096)
    for _, g in items:
        worst_row = max(worst_row, float(np.max(np.abs(g.transition.sum(axis=1) - 1))))
        for _ in range(10):
            f, h = rng.standard_normal((2, g.n))
            gap = abs(inner(g, apply_markov(g, f), h) - inner(g, f, apply_markov(g, h)))
            worst_adj = max(worst_adj, gap)
    ok = len(items) >= 30 and worst_row <= 1e-12 and worst_adj <= 1e-10
    record(1, "stochasticity and self-adjointness", ok,
           f"{len(items)} graphs, max row error {worst_row:.2e}, max adjoint error {worst_adj:.2e}")


def test_c02_kernel_recursion():
    worst, count = 0.0, 0
    for _, g in corpus.graphs(max_n=64):
        m = g.measure
        pk = [iterate_kernel(g, k).toarray() for k in range(13)]
        T = g.transition.toarray()
        Tk = [np.linalg.matrix_power(T, k) for k in range(7)]
        for j in range(7):
            for k in range(7):
                expected = (Tk[j] @ Tk[k]) / m[None, :]
                worst = max(worst, float(np.max(np.abs(pk[j + k] - expected))))
                count += 1
    record(2, "kernel recursion equals transition-matrix product", worst <= 1e-10,
           f"{count} (graph, j, k) cases, max error {worst:.2e}")


def test_c03_bipartition_oracle():
    rng = np.random.default_rng(2024)
    eps_grid = (0.0, 0.05, 0.1, 0.2, 0.35)
    mismatches = invalid = cases = 0
    for seed in range(200):
        n = int(rng.integers(2, 13))
        g = random_weighted(n, float(rng.uniform(0, 0.8)), seed, loop_prob=0.15)
        subsets = [frozenset(range(n))]
        while len(subsets) < 21:
            mask = rng.random(n) < rng.uniform(0.2, 0.9)
            if mask.any():
                subsets.append(frozenset(np.flatnonzero(mask).tolist()))
        for e in eps_grid:
            view = eps_view(g, e)
            for E in subsets:
                cert = bipartition(view, E)
                mismatches += cert.bipartite == odd_walk_oracle(view, E)
                invalid += not validate_certificate(view, E, cert)
                cases += 1
    record(3, "bipartition verdict equals the odd-walk oracle", mismatches == 0 and invalid == 0,
           f"{cases} cases, {mismatches} mismatches, {invalid} invalid certificates")


def test_c04_finite_chain():
    violations, names = [], []
    for name, g in corpus.graphs(loop_free=True, connected=True):
        gap_zero = float(1 + spectrum(g)[0]) < GAP_TOL
        bip = bipartition(eps_view(g, 0.0), range(g.n)).bipartite
        lb_zero = all(lb_infimum(g, k)[0] == 0.0 for k in range(1, 10, 2))
        names.append(name)
        if not gap_zero == bip == lb_zero:
            violations.append(name)
    record(4, "gap at -1, bipartiteness and odd return probabilities agree", not violations,
           f"{len(names)} loop-free connected graphs, violations: {violations or 'none'}")


def test_c05_witness_bound():
    g = path(201)
    view = eps_view(g, 0.0)
    rows, ok = [], True
    for p in (2, 5, 10):
        rec = find_small_boundary_ball(view, [100] * 40, p)
        ball = EpsBall(rec.center, rec.radius, 0.0, rec.members)
        for q in (2, 1):
            chk = defect_bound_check(view, ball, p, q)
            ok &= chk.holds and chk.bound == 2 / p
            rows.append(f"p={p} q={q} {chk.defect:.4f}<={chk.bound:.4f}")
    worst_even = 0.0
    for n in (4, 6, 10, 20, 64):
        cv = eps_view(cycle(n), 0.0)
        cert = bipartition(cv, range(n))
        w = build_witness(cv, EpsBall(0, n, 0.0, frozenset(range(n))), (cert.part0, cert.part1), 2)
        worst_even = max(worst_even, w.defect)
    ok &= worst_even <= 1e-12
    record(5, "witness defects within 2/p + 2^(q+1) eps (C_dvl + N_dvl)", ok,
           "; ".join(rows) + f"; even-cycle defect {worst_even:.1e}")


def test_c06_analyticity():
    a = analyticity_constants(cycle(4), 32)
    err = float(np.max(np.abs(a - 2 * np.arange(1, 33))))
    sup = float(analyticity_constants(lazify(cycle(4), 0.5), 64).max())
    record(6, "analyticity constants of C4 and lazy C4", err <= 1e-9 and sup <= 1 + 1e-9,
           f"C4 max |a_n - 2n| = {err:.1e}, lazy C4 sup a_n = {sup:.12f}")


def test_c07_small_boundary_search():
    view = eps_view(path(201), 0.0)
    radii, ok = [], True
    for p in range(1, 11):
        rec = find_small_boundary_ball(view, [100] * 40, p)
        target = math.ceil((2 * p + 1) / 2)
        ok &= rec.boundary_mass * p <= rec.mass and abs(rec.radius - target) <= 1
        radii.append(rec.radius)
    record(7, "small-boundary balls on the path", ok, f"radii for p=1..10: {radii}")


def test_c08_riesz_l2():
    worst_norm = worst_oracle = 0.0
    count = 0
    rng = np.random.default_rng(8)
    for _, g in corpus.graphs(max_n=4096):
        if g.n < 2:
            continue
        worst_norm = max(worst_norm, abs(riesz_norm(g, 2) - math.sqrt(2)))
        f = half_inverse_laplacian(g, rng.standard_normal(g.n))
        double_sum = energy(g, f)
        worst_oracle = max(worst_oracle, abs(double_sum - 2 * inner(g, apply_laplacian(g, f), f))
                           / max(1.0, double_sum))
        count += 1
    ok = worst_norm <= 1e-8 and worst_oracle <= 1e-10
    record(8, "L2 Riesz norm equals sqrt 2", ok,
           f"{count} graphs, max |norm - sqrt2| = {worst_norm:.1e}, energy identity error {worst_oracle:.1e}")


def test_c09_quasidistance_suite():
    failures = []
    for n in (3, 4, 5, 10, 17, 32, 64):
        for kind, g in (("path", path(n)), ("cycle", cycle(n + 1))):
            qd = validate_quasidistance(g, graph_distance(g).astype(np.int64) ** 2)
            x, y, z = qd.tight_triple
            tight = qd.rho[x, y] / (qd.rho[x, z] + qd.rho[z, y])
            if qd.C_rho != 2 or abs(tight - 2) > 1e-12:
                failures.append(f"{kind}{g.n}: C={qd.C_rho}")
    graphs = [(nm, g) for nm, g in corpus.graphs(connected=True) if g.n >= 2]
    for name, g in graphs:
        for m_exp in (1, 2, math.log2(5)):
            if not lemma_pdv_check(g, power_quasidistance(g, m_exp), n_max=4).holds:
                failures.append(f"lemma {name} m={m_exp:.3f}")
        qd = power_quasidistance(g, 2)
        sig = sigma_rescale(qd, 3)
        support = (iterate_kernel(g, 3).toarray() > 0) & ~np.eye(g.n, dtype=bool)
        if not np.all(sig.rho[support] == 1):
            failures.append(f"sigma {name}")
    record(9, "quasidistance constants, comparison lemma and rescaling", not failures,
           f"{len(graphs)} corpus graphs, failures: {failures or 'none'}")


def test_c10_subgaussian_and_gaffney():
    g = path(201)
    fit = ue_fit(g, power_quasidistance(g, 2), 32, eta_grid=(1.0,))
    fit_ok = math.isfinite(fit.C_ue) and math.isfinite(fit.c_ue) and fit.violation_ratio <= 1
    h = path(200)
    qd = power_quasidistance(h, 2)
    E = range(10)
    scan = [gaffney_check(h, qd, E, range(10 + s, 20 + s), 10, 2, 1.0, 0.1, 1.0) for s in (0, 2, 4, 6, 8)]
    ratios = [c.ratio for c in scan]
    mono = all(b <= a * 1.05 for a, b in zip(ratios, ratios[1:]))
    record(10, "subgaussian fit and Gaffney decay", fit_ok and mono,
           f"C_ue={fit.C_ue:.4g} c_ue={fit.c_ue} violation={fit.violation_ratio:.6f}; "
           f"ratios at rho(E,F)={[c.rho_EF for c in scan]}: {[round(r, 4) for r in ratios]}")


def test_c11_spectral_fixtures():
    cases = {
        "triangle": (cycle(3), [-0.5, -0.5, 1]),
        "C4": (cycle(4), [-1, 0, 0, 1]),
        "lazy C4": (lazify(cycle(4), 0.5), [0, 0.5, 0.5, 1]),
    }
    errs = {k: float(np.max(np.abs(spectrum(g) - np.array(v)))) for k, (g, v) in cases.items()}
    record(11, "spectra of triangle, C4 and lazy C4", max(errs.values()) <= 1e-10,
           ", ".join(f"{k} {e:.1e}" for k, e in errs.items()))


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
