import io

import numpy as np
import pytest

from cartan_toeplitz import bergman as bg
from cartan_toeplitz.errors import BasisMismatch, NotUnitary
from cartan_toeplitz.matdomain import RngStream
from cartan_toeplitz.montecarlo import MCConfig, cached_samples
from cartan_toeplitz.polyrep import Polynomial, component, fischer_inner, monomial_basis
from cartan_toeplitz.symbols import Group, compile_symbol

from .conftest import SEED, random_points, random_unitary

LAM2 = 5.0


def test_kernel_examples():
    assert bg.bergman_kernel([[0.5]], [[0.5]], 2.0) == pytest.approx(16 / 9)
    assert bg.bergman_kernel(np.zeros((2, 2)), 0.5 * np.eye(2), 5.0) == pytest.approx(1.0)
    assert bg.bergman_kernel(0.5 * np.eye(2), 0.5 * np.eye(2), 5.0) == pytest.approx((1 / 0.75) ** 10)


def test_kernel_hermitian_symmetry():
    Z, W = random_points(2, 2, 1)
    assert bg.bergman_kernel(Z, W, 4.5) == pytest.approx(np.conj(bg.bergman_kernel(W, Z, 4.5)))
    assert bg.bergman_kernel(Z, Z, 4.5).real > 1


@pytest.mark.parametrize("n, lam", [(1, 1.0), (2, 3.0), (3, 4.9)])
def test_lambda_bound(n, lam):
    with pytest.raises(ValueError):
        bg.bergman_kernel(np.zeros((n, n)), np.zeros((n, n)), lam)


def test_normalizer(samples1, samples2):
    # lam = 2n gives the unweighted measure
    assert bg.estimate_normalizer(1, 2.0, samples1).value == pytest.approx(1.0)
    assert bg.estimate_normalizer(2, 4.0, samples2).value == pytest.approx(1.0)
    # on the disc c_lam = lam - 1
    est = bg.estimate_normalizer(1, 3.0, samples1)
    assert est.z_score(2.0) <= 3


@pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
def test_disc_monomial_norms(samples1, k):
    zk = Polynomial.variable(1, 1, 1) ** k
    est = bg.weighted_inner(zk, zk, 3.0, samples1)
    assert est.z_score(2 / ((k + 1) * (k + 2))) <= 4


def test_weighted_inner_inputs(samples2):
    z = Polynomial.variable(2, 1, 2)
    a = bg.weighted_inner(z, z, LAM2, samples2)
    b = bg.weighted_inner(lambda Zs: Zs[:, 0, 1], z, LAM2, samples2)
    assert a.value == pytest.approx(b.value)
    assert bg.weighted_inner(1, 1, LAM2, samples2, n=2).value == pytest.approx(1.0)
    with pytest.raises(ValueError):
        bg.weighted_inner(1, 1, LAM2, MCConfig(1000))


def test_gram_of_linear_monomials(samples2):
    # the kernel expansion 1 + lam tr(Z W*) + ... gives ||z_ij||^2 = 1/lam
    G = bg.gram_matrix(monomial_basis(2, 1), LAM2, samples2)
    for i in range(4):
        assert G.entry(i, i).z_score(1 / LAM2) <= 4
    off = G.values - np.diag(np.diag(G.values))
    assert np.all(np.abs(off) <= 5 * G.stderr + 1e-15)
    np.testing.assert_allclose(G.values, G.values.conj().T)


def test_gram_stderr_scales_with_samples():
    basis = monomial_basis(2, 1)
    a = bg.gram_matrix(basis, LAM2, MCConfig(100_000, 7))
    b = bg.gram_matrix(basis, LAM2, MCConfig(200_000, 7))
    ratio = np.diag(b.stderr) / np.diag(a.stderr)
    assert np.all(np.abs(ratio - 1 / np.sqrt(2)) < 0.07)


def test_gram_proportional_to_fischer(samples2):
    # two invariant inner products on one irreducible piece are proportional
    for mu in ["1", "2", "1,1", "2,1"]:
        comp = component(2, mu)
        G = bg.gram_matrix(comp, LAM2, samples2).values
        F = np.array([[complex(fischer_inner(q, p)) for q in comp.basis] for p in comp.basis])
        c = np.trace(G).real / np.trace(F).real
        assert np.linalg.norm(G / c - F) / np.linalg.norm(F) <= 5e-2


def test_reproducing_property(samples1):
    W = np.array([[0.3 + 0.2j]])
    p = Polynomial.variable(1, 1, 1) ** 2 + 3
    est = bg.weighted_inner(p, lambda Zs: bg.kernel_batch(Zs, W, 3.0), 3.0, samples1, n=1)
    assert est.z_score(p.evaluate(W)) <= 4


# -- Toeplitz blocks ----------------------------------------------------------


def test_constant_symbol_gives_scalar(samples2):
    B = bg.toeplitz_block(compile_symbol("2", 2), component(2, "2,1"), LAM2, samples2)
    np.testing.assert_allclose(B.matrix, 2 * np.eye(B.dim), atol=1e-10)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_disc_eigenvalues(samples1, k):
    from cartan_toeplitz.verify import disk_eigenvalue_oracle

    B = bg.toeplitz_block(compile_symbol("tr(G)", 1), component(1, str(k)), 3.0, samples1)
    assert disk_eigenvalue_oracle(k, 3.0) == pytest.approx((k + 1) / (k + 3))
    assert B.entry(0, 0).z_score((k + 1) / (k + 3)) <= 4


def test_trace_symbol_on_constants(samples2):
    B = bg.toeplitz_block(compile_symbol("tr(G)", 2), component(2, "0"), LAM2, samples2)
    assert B.entry(0, 0).z_score(4 / LAM2) <= 4


@pytest.mark.parametrize("mu", ["1", "1,1", "2"])
def test_block_matches_direct_quadrature(samples2, mu):
    # independent oracle: plain weighted sums over the same samples
    comp = component(2, mu)
    sym = compile_symbol("tr(G)", 2)
    B = bg.toeplitz_block(sym, comp, LAM2, samples2)
    Z, w = samples2.points, samples2.weight(LAM2)
    E = np.stack([p.evaluate_batch(Z) for p in comp.basis], axis=1)
    t = (np.abs(Z) ** 2).sum(axis=(1, 2))
    G = E.conj().T @ (w[:, None] * E)
    A = E.conj().T @ ((w * t)[:, None] * E)
    ev = np.linalg.eigvals(np.linalg.solve(G, A))
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(B.matrix).real), np.sort(ev.real), atol=1e-10)


def test_uu_symbol_block_is_scalar(samples2):
    B = bg.toeplitz_block(compile_symbol("tr(G)", 2), component(2, "2"), LAM2, samples2)
    # the defect is a norm of noise, so it is biased upward; judge against a tolerance
    assert bg.scalar_defect(B) <= 5e-2
    assert bg.scalar_defect_noise(B) < bg.scalar_defect(B)


def test_adjoint_identity(samples2):
    comp = component(2, "2")
    a = compile_symbol("G[1,2] + 0.5i*s1", 2)
    B = bg.toeplitz_block(a, comp, LAM2, samples2)
    Bc = bg.toeplitz_block(a.conj(), comp, LAM2, samples2)
    np.testing.assert_allclose(Bc.matrix, B.matrix.conj().T, atol=1e-12)


def test_general_symbol_marked(samples2):
    B = bg.toeplitz_block(compile_symbol("Z[1,1]", 2), component(2, "1"), LAM2, samples2)
    assert B.compression_only
    assert not bg.toeplitz_block(compile_symbol("s1", 2), component(2, "1"), LAM2, samples2).compression_only


def test_block_input_validation(samples2):
    with pytest.raises(ValueError):
        bg.toeplitz_block(compile_symbol("s1", 1), component(2, "1"), LAM2, samples2)
    with pytest.raises(ValueError):
        bg.toeplitz_block(compile_symbol("s1", 2), component(2, "1"), 3.0, samples2)


def test_cross_blocks(samples2):
    g12 = compile_symbol("G[1,2]", 2)
    x = bg.cross_block(g12, component(2, "2"), component(2, "1,1"), LAM2, samples2)
    assert x.z_scores().max() <= 5
    z = bg.cross_block(compile_symbol("Z[1,1]", 2), component(2, "1"), component(2, "2"), LAM2, samples2)
    assert z.z_scores().max() > 5
    assert z.estimates()[0, 0].nsamples == len(samples2)
    with pytest.raises(ValueError):
        bg.cross_block(g12, component(2, "1"), component(2, "1"), LAM2, samples2)


# -- defects ------------------------------------------------------------------


def test_defect_examples():
    assert bg.scalar_defect(3 * np.eye(3)) == pytest.approx(0.0)
    assert bg.scalar_defect(np.diag([1.0, 0.0])) == pytest.approx(1 / np.sqrt(2))
    J = np.array([[0, 1], [0, 0]])
    assert bg.normality_defect(J) == pytest.approx(np.sqrt(2))
    assert bg.normality_defect(np.diag([1, 2j])) == 0
    assert bg.commutator_defect(np.diag([1, 2]), np.diag([3, 4])) == 0
    assert bg.commutator_defect(J, J.T) == pytest.approx(np.sqrt(2))


def test_commutator_needs_shared_basis(samples2):
    comp = component(2, "2")
    a = bg.toeplitz_block(compile_symbol("G[1,1]", 2), comp, LAM2, samples2)
    b = bg.toeplitz_block(compile_symbol("G[1,2]", 2), comp, LAM2, MCConfig(20_000, 1))
    with pytest.raises(BasisMismatch):
        bg.commutator_defect(a, b)
    c = bg.toeplitz_block(compile_symbol("G[1,2]", 2), comp, LAM2, samples2)
    assert bg.commutator_defect(a, c) > 5 * bg.commutator_defect_noise(a, c)


def test_self_commutator_is_zero(samples2):
    B = bg.toeplitz_block(compile_symbol("G[1,2]", 2), component(2, "2"), LAM2, samples2)
    assert bg.commutator_defect(B, B) == pytest.approx(0.0, abs=1e-14)


# -- group action ---------------------------------------------------------------


@pytest.fixture(scope="module")
def gram21(samples2):
    comp = component(2, "2,1")
    return comp, bg.gram_matrix(comp, LAM2, samples2)


def test_pi_identity(gram21):
    comp, G = gram21
    np.testing.assert_allclose(bg.pi_matrix(np.eye(2), np.eye(2), comp, G), np.eye(comp.dim), atol=1e-10)


def test_pi_scalar(gram21):
    comp, G = gram21
    t = np.exp(0.7j)
    # p(t^{-1} Z) = t^{-3} p(Z) on degree 3
    P = bg.pi_matrix(t * np.eye(2), np.eye(2), comp, G)
    np.testing.assert_allclose(P, t ** -3 * np.eye(comp.dim), atol=1e-10)


def test_pi_composition(gram21):
    comp, G = gram21
    A1, A2, B1, B2 = (random_unitary(2, s) for s in range(4))
    lhs = bg.pi_matrix(A1, B1, comp, G) @ bg.pi_matrix(A2, B2, comp, G)
    np.testing.assert_allclose(lhs, bg.pi_matrix(A1 @ A2, B1 @ B2, comp, G), atol=1e-9)


def test_pi_nearly_unitary(gram21):
    comp, G = gram21
    P = bg.pi_matrix(random_unitary(2, 5), random_unitary(2, 6), comp, G)
    assert np.linalg.norm(P @ P.conj().T - np.eye(comp.dim)) <= 5e-2


def test_pi_rejects_bad_input(gram21):
    comp, G = gram21
    with pytest.raises(NotUnitary):
        bg.pi_matrix(2 * np.eye(2), np.eye(2), comp, G)
    with pytest.raises(BasisMismatch):
        bg.pi_matrix(np.eye(2), np.eye(2), component(2, "3"), G)


@pytest.mark.parametrize("group", [Group.UUn, Group.UnL, Group.UnR])
def test_group_pair(group):
    U, V = random_unitary(2, 1), random_unitary(2, 2)
    A, B = bg.group_pair(group, U, V)
    assert (A is U) == (group is not Group.UnR) and (B is V) == (group is not Group.UnL)


def test_intertwining(samples2):
    comp = component(2, "2")
    B = bg.toeplitz_block(compile_symbol("G[1,2]", 2), comp, LAM2, samples2)
    res = bg.intertwining_analysis(B, comp, Group.UnL, RngStream(SEED), trials=10)
    assert res.value <= 5e-2 and len(res.per_trial) == 10
    bad = bg.intertwining_analysis(B, comp, "UnR", RngStream(SEED), trials=10)
    assert bad.value > 5 * bad.noise
    assert bg.intertwining_defect(B, comp, "UnL", RngStream(SEED), trials=10) == res.value


# -- export ---------------------------------------------------------------------


def test_csv_export(samples2):
    B = bg.toeplitz_block(compile_symbol("s1", 2), component(2, "1"), LAM2, samples2)
    fh = io.StringIO()
    text = B.to_csv(fh)
    assert fh.getvalue() == text
    lines = text.splitlines()
    assert lines[0] == "row,col,re,im,stderr"
    assert len(lines) == 1 + B.dim**2
    r, c, re, im, se = lines[1 + B.dim + 2].split(",")
    assert (int(r), int(c)) == (1, 2)
    assert complex(float(re), float(im)) == B.matrix[1, 2]
    assert float(se) == B.stderr[1, 2]
