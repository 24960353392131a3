import math

import numpy as np
import pytest

from oddwalk.generators import complete, cycle, lazify, path, sierpinski
from oddwalk.graph import apply_laplacian, build_graph, inner, lp_norm
from oddwalk.kernel import iterate_kernel, lb_infimum
from oddwalk.riesz import (
    QuasiDistance,
    QuasiDistanceError,
    gaffney_check,
    generalized_gradient,
    gradient,
    graph_distance,
    half_inverse_laplacian,
    kernel_domination_check,
    lemma_pdv_check,
    power_quasidistance,
    read_rho_matrix,
    rho_volumes,
    riesz_norm,
    sigma_rescale,
    ue_fit,
    validate_quasidistance,
)

SQRT2 = math.sqrt(2)


def test_d_squared_on_path():
    qd = validate_quasidistance(path(10), graph_distance(path(10)) ** 2)
    assert qd.C_rho == 2 and qd.beta == 2
    x, y, z = qd.tight_triple
    assert qd.tight_triple == (0, 2, 1)
    assert qd.rho[x, y] == 2 * (qd.rho[x, z] + qd.rho[z, y])


def test_graph_metric_has_constant_one():
    assert validate_quasidistance(cycle(9), graph_distance(cycle(9))).C_rho == 1


@pytest.mark.parametrize(
    "patch, axiom",
    [
        (lambda R: R.__setitem__((0, 1), 0) or R.__setitem__((1, 0), 0), "i"),
        (lambda R: R.__setitem__((2, 2), 1), "i"),
        (lambda R: R.__setitem__((0, 3), 7), "ii"),
        (lambda R: R.__setitem__((0, 1), 2) or R.__setitem__((1, 0), 2), "v"),
        (lambda R: R.__setitem__((0, 3), -1) or R.__setitem__((3, 0), -1), "iv"),
    ],
    ids=["zero-off-diagonal", "nonzero-diagonal", "asymmetric", "edge-not-one", "negative"],
)
def test_axiom_violations(patch, axiom):
    R = graph_distance(path(5)).astype(np.int64)
    patch(R)
    with pytest.raises(QuasiDistanceError) as info:
        validate_quasidistance(path(5), R)
    assert info.value.axiom == axiom


def test_non_integer_rho_rejected():
    R = graph_distance(path(4)) * 1.5
    R[np.arange(4)[:-1], np.arange(4)[1:]] = 1
    with pytest.raises(QuasiDistanceError):
        validate_quasidistance(path(4), R)


def test_loops_are_not_neighbour_pairs():
    g = lazify(path(5), 0.5)
    assert validate_quasidistance(g, graph_distance(g)).C_rho == 1


def test_tight_triple_attains_constant(corpus_graph):
    g = corpus_graph
    if not g.is_connected or g.n < 2:
        pytest.skip("needs a connected graph")
    qd = power_quasidistance(g, 2)
    x, y, z = qd.tight_triple
    assert qd.rho[x, y] / (qd.rho[x, z] + qd.rho[z, y]) == pytest.approx(qd.C_rho, abs=1e-12)


def test_sampled_mode_flags():
    qd = power_quasidistance(path(30), 2, triple_cap=10, sample_z=8)
    assert qd.sampled and qd.C_rho <= 2


def test_power_quasidistance():
    g = sierpinski(3)
    qd = power_quasidistance(g, math.log2(5))
    assert qd.C_rho >= 1
    d = graph_distance(g)
    assert np.all(qd.rho[d == 1] == 1)
    # floor(2^log2(5)) must be 5, not 4
    assert np.all(qd.rho[d == 2] == 5)
    with pytest.raises(ValueError, match="disconnected"):
        power_quasidistance(build_graph([(0, 1, 1), (2, 3, 1)]), 2)


def test_rho_volumes():
    g = path(5)
    V = rho_volumes(g, graph_distance(g).astype(int), np.array([1, 2, 3]))
    assert V[2].tolist() == [2.0, 6.0, 8.0]


@pytest.mark.parametrize("m_exp", [1, 2])
def test_lemma_on_powers(m_exp):
    g = path(30)
    chk = lemma_pdv_check(g, power_quasidistance(g, m_exp), n_max=8)
    assert chk.holds
    assert chk.pdv_constant is not None and chk.pdv_constant > 0


def test_lemma_detects_bad_constant():
    g = path(4)
    R = graph_distance(g).astype(np.int64)
    R[0, 3] = R[3, 0] = 100
    fake = QuasiDistance(graph=g, rho=R, C_rho=1.0, tight_triple=None)
    chk = lemma_pdv_check(g, fake)
    assert not chk.holds and chk.worst_pair in {(0, 3), (3, 0)}


def test_sigma_arithmetic():
    g = path(10)
    R = graph_distance(g).astype(np.int64) ** 2
    R[0, 9] = R[9, 0] = 72
    qd = QuasiDistance(graph=g, rho=R, C_rho=2.0, tight_triple=None)
    sig = sigma_rescale(qd, 3)
    assert sig.rho[0, 9] == 2
    assert np.all(sig.rho[R <= 36] <= 1)


def test_sigma_on_path_l1():
    g = path(12)
    qd = power_quasidistance(g, 2)
    sig = sigma_rescale(qd, 1)
    d = graph_distance(g)
    off = ~np.eye(g.n, dtype=bool)
    assert np.array_equal(sig.rho[off], np.ceil(d[off] ** 2 / 4).astype(int))


def test_sigma_requires_odd_l():
    qd = power_quasidistance(path(5), 2)
    with pytest.raises(ValueError):
        sigma_rescale(qd, 2)


@pytest.mark.parametrize("l", [1, 3, 5])
def test_sigma_comparability(l):
    g = path(40)
    qd = power_quasidistance(g, 2)
    sig = sigma_rescale(qd, l)
    scale = (2 * l) ** qd.beta
    assert np.all(sig.rho <= qd.rho / scale + 1)
    assert np.all(qd.rho <= scale * sig.rho)
    support = iterate_kernel(g, l).toarray() > 0
    assert np.all(sig.rho[support & ~np.eye(g.n, dtype=bool)] == 1)


def test_gradient_examples():
    assert np.allclose(gradient(path(3), [0, 1, 2]), [1, 1, 1])
    assert np.allclose(gradient(cycle(7), np.full(7, 3.0)), 0)
    assert np.allclose(gradient(cycle(4), [1, -1, 1, -1]), 2)


def test_generalized_gradient():
    g = lazify(path(8), 0.3)
    f = np.arange(8.0)
    assert np.allclose(generalized_gradient(g, f, 1), gradient(g, f))
    assert np.allclose(generalized_gradient(g, np.ones(8), 3), 0)
    p3 = iterate_kernel(g, 3).toarray()
    m = g.measure
    direct = [math.sqrt(sum(p3[x, y] * (f[x] - f[y]) ** 2 * m[y] for y in range(8))) for x in range(8)]
    assert np.allclose(generalized_gradient(g, f, 3), direct)
    with pytest.raises(ValueError):
        generalized_gradient(g, f, 0)


def test_half_inverse_examples():
    tri = cycle(3)
    out = half_inverse_laplacian(tri, [1, -1, 0])
    assert np.allclose(out, np.array([1, -1, 0]) / math.sqrt(1.5))
    out, flag = half_inverse_laplacian(tri, np.ones(3), return_flag=True)
    assert flag and np.allclose(out, 0)
    _, flag = half_inverse_laplacian(tri, [1, -1, 0], return_flag=True)
    assert not flag
    with pytest.raises(ValueError):
        half_inverse_laplacian(path(10), np.zeros(10), dense_cap=5)


def test_half_inverse_on_eigenfunction():
    g = cycle(8)
    f = np.cos(2 * np.pi * np.arange(8) / 8)
    theta = math.cos(2 * np.pi / 8)
    assert np.allclose(half_inverse_laplacian(g, f), f / math.sqrt(1 - theta))


def test_energy_identity(corpus_graph, rng):
    g = corpus_graph
    for _ in range(5):
        f = rng.standard_normal(g.n)
        lhs = float(np.sum(gradient(g, f) ** 2 * g.measure))
        assert lhs == pytest.approx(2 * inner(g, apply_laplacian(g, f), f), abs=1e-10, rel=1e-10)


def test_functional_calculus_coherence(corpus_graph, rng):
    g = corpus_graph
    if not g.is_connected:
        pytest.skip("constant mode only on connected graphs")
    m = g.measure
    f = rng.standard_normal(g.n)
    f_perp = f - np.sum(f * m) / m.sum()
    lhs = lp_norm(g, gradient(g, half_inverse_laplacian(g, f)), 2)
    assert lhs == pytest.approx(SQRT2 * lp_norm(g, f_perp, 2), abs=1e-8)


def test_riesz_norm_l2(corpus_graph):
    if corpus_graph.n < 2:
        assert riesz_norm(corpus_graph, 2) == 0.0
    else:
        assert riesz_norm(corpus_graph, 2) == pytest.approx(SQRT2, abs=1e-8)


def test_riesz_norm_single_edge():
    assert riesz_norm(path(2), 2) == pytest.approx(SQRT2, abs=1e-12)


def test_riesz_norm_sampled():
    est = riesz_norm(path(51), 1.5, trials=50)
    assert math.isfinite(est) and est > 0
    with pytest.raises(ValueError):
        riesz_norm(path(5), 1.0)
    with pytest.raises(ValueError):
        riesz_norm(path(5), 2.5)


def test_gaffney_same_set():
    g = path(30)
    qd = power_quasidistance(g, 2)
    E = range(5, 12)
    chk = gaffney_check(g, qd, E, E, 1, 2, 1.0, 0.5, 1.0)
    assert chk.rho_EF == 0 and chk.rhs == 1.0
    assert chk.lhs <= 2


def test_gaffney_far_sets_vanish():
    g = path(200)
    qd = power_quasidistance(g, 2)
    chk = gaffney_check(g, qd, range(10), range(190, 200), 10, 2, 1.0, 0.1, 1.0)
    assert chk.lhs == 0 and chk.ratio == 0


def test_gaffney_empty_sets():
    qd = power_quasidistance(path(5), 2)
    with pytest.raises(ValueError):
        gaffney_check(path(5), qd, [], [1], 2, 2, 1, 1, 1)


def test_ue_fit_path():
    g = path(201)
    fit = ue_fit(g, power_quasidistance(g, 2), 16, eta_grid=(1.0,))
    assert math.isfinite(fit.C_ue) and fit.eta == 1.0
    assert fit.violation_ratio <= 1


def test_ue_fit_complete():
    g = complete(8)
    fit = ue_fit(g, power_quasidistance(g, 1), 8)
    assert math.isfinite(fit.C_ue) and fit.violation_ratio <= 1


def test_ue_fit_bipartite_zero_entries():
    g = cycle(4)
    fit = ue_fit(g, power_quasidistance(g, 2), 6)
    assert math.isfinite(fit.C_ue) and fit.violation_ratio <= 1


def test_ue_fit_k_max():
    with pytest.raises(ValueError):
        ue_fit(path(5), power_quasidistance(path(5), 2), 1)


@pytest.mark.parametrize(
    "g, C",
    [(lazify(cycle(4), 0.5), None), (cycle(4), 2.0), (cycle(3), 2.0)],
    ids=["lazyC4", "C4", "triangle"],
)
def test_kernel_domination(g, C):
    got, holds = kernel_domination_check(g, 3)
    assert holds
    assert got == pytest.approx(C if C is not None else 1 / lb_infimum(g, 2)[0])


def test_kernel_domination_needs_odd_l():
    with pytest.raises(ValueError):
        kernel_domination_check(cycle(4), 4)
    with pytest.raises(ValueError):
        kernel_domination_check(cycle(4), 1)


def test_read_rho_matrix(tmp_path):
    f = tmp_path / "rho.txt"
    f.write_text("# rho\n0 1 4\n1 0 1\n4 1 0\n")
    R = read_rho_matrix(f)
    assert validate_quasidistance(path(3), R).C_rho == 2
    f.write_text("0 1\n1 0 2\n")
    with pytest.raises(ValueError, match="square"):
        read_rho_matrix(f)
    f.write_text("0 a\n")
    with pytest.raises(ValueError, match="line 1"):
        read_rho_matrix(f)
