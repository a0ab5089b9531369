import cmath
import math

import numpy as np
import pytest

from reducing_atlas import (BlaschkeProduct, ConfigurationError, InputError, OperatorMatrix, TruncatedBasis,
                            adjoint_residual, bergman_kernel, commutator_residual, component_of, convolve,
                            evaluate, fiber, homomorphism_residual, kernel_norm, minimal_idempotents,
                            nullstellensatz_check, operator_bound, reducing_projections, spectral_norm,
                            toeplitz_family, toeplitz_matrix, weighted_composition_matrix)
from reducing_atlas.bergman import reproducing_pairing, taylor_coefficients
from reducing_atlas.quadrature import QuadratureGrid

from conftest import generic_cubic, mobius, monomial, setup_for


def quadrature_toeplitz(b, N, grid):
    z = grid.points
    e = TruncatedBasis(N).values(z)
    fz = b._f(z)[..., None] * e
    return np.einsum("tri,trj,tr->ij", np.conj(e), fz, grid.weights)


def indicator(atlas, k):
    return np.eye(atlas.orbit_count)[k]


# -- multiplication operators ------------------------------------------------

def test_toeplitz_of_z2_has_the_closed_form():
    T = toeplitz_matrix(monomial(2), TruncatedBasis(12)).entries
    expected = np.zeros((12, 12))
    for i in range(2, 12):
        expected[i, i - 2] = math.sqrt((i - 1) / (i + 1))
    assert np.abs(T - expected).max() < 1e-15


def test_toeplitz_matches_the_quadrature_oracle(grid):
    for b in (monomial(2), mobius(0.5), generic_cubic()):
        T = toeplitz_matrix(b, TruncatedBasis(12)).entries
        assert np.abs(T - quadrature_toeplitz(b, 12, grid)).max() < 1e-10


def test_mobius_first_column_is_the_scaled_taylor_series():
    b = mobius(0.5)
    T = toeplitz_matrix(b, TruncatedBasis(10)).entries
    # (z - a)/(1 - a z) = -a + (1 - a^2) sum_{m>=1} a^(m-1) z^m
    f = np.array([-0.5] + [0.75 * 0.5 ** (m - 1) for m in range(1, 10)])
    assert np.allclose(taylor_coefficients(b, 10), f, atol=1e-15)
    assert np.allclose(T[:, 0], f * np.sqrt(1 / np.arange(1, 11)), atol=1e-15)
    assert toeplitz_matrix(b, TruncatedBasis(10)).trusted_block == 10


def test_product_map_has_one_multiplication_operator_per_variable():
    s = setup_for("z2xz3")
    Ts = toeplitz_family(s.m, TruncatedBasis(6, 2))
    assert len(Ts) == 2 and Ts[0].entries.shape == (36, 36)
    assert commutator_residual(Ts[0], Ts[1]) < 1e-14


# -- weighted composition operators -----------------------------------------

def test_identity_element_gives_the_identity(grid):
    s = setup_for("generic")
    A = weighted_composition_matrix(s.m, s.rep, s.atlas, s.alg.identity, TruncatedBasis(16), grid)
    assert A.trusted_block == 16 - 6
    assert np.abs(A.block() - np.eye(10)).max() < 1e-10


def test_z2_antidiagonal_indicator_is_a_signed_diagonal(grid):
    s = setup_for("z2")
    anti = component_of(s.m, s.rep, s.atlas, 0.3, -0.3)
    A = weighted_composition_matrix(s.m, s.rep, s.atlas, indicator(s.atlas, anti), TruncatedBasis(16), grid)
    expected = np.diag([(-1.0) ** (k + 1) for k in range(16)])
    assert np.abs(A.entries - expected).max() < 1e-9


def test_z3_rotation_class_multiplies_by_powers_of_omega(grid):
    s = setup_for("z3")
    w = cmath.exp(2j * math.pi / 3)
    d1 = component_of(s.m, s.rep, s.atlas, 0.4, 0.4 * w)
    A = weighted_composition_matrix(s.m, s.rep, s.atlas, indicator(s.atlas, d1), TruncatedBasis(18), grid)
    expected = np.diag([w ** (k + 1) for k in range(18)])
    assert np.abs(A.entries - expected).max() < 1e-9


def test_wrong_number_of_coefficients_is_rejected(grid):
    s = setup_for("z2")
    with pytest.raises(InputError):
        weighted_composition_matrix(s.m, s.rep, s.atlas, [1, 0, 0], TruncatedBasis(16), grid)


def test_trusted_block_below_four_is_a_configuration_error(grid):
    s = setup_for("generic")
    with pytest.raises(ConfigurationError):
        weighted_composition_matrix(s.m, s.rep, s.atlas, s.alg.identity, TruncatedBasis(9), grid)


def test_commutator_examples(grid):
    T = toeplitz_matrix(monomial(2), TruncatedBasis(32))
    eye = OperatorMatrix(np.eye(32, dtype=complex), 32)
    assert commutator_residual(T, eye) == 0
    s = setup_for("z2")
    anti = component_of(s.m, s.rep, s.atlas, 0.3, -0.3)
    A = weighted_composition_matrix(s.m, s.rep, s.atlas, indicator(s.atlas, anti), TruncatedBasis(32), grid)
    assert commutator_residual(T, A) < 1e-8
    D = OperatorMatrix(np.diag(np.arange(1, 33)).astype(complex), 32)
    assert commutator_residual(T, D) > 0.5


def test_adjoint_examples(grid):
    s = setup_for("z2")
    basis = TruncatedBasis(32)
    for k in range(2):
        assert adjoint_residual(s.m, s.rep, s.atlas, indicator(s.atlas, k), basis, grid) < 1e-8
    s = setup_for("z3")
    w = cmath.exp(2j * math.pi / 3)
    d1 = component_of(s.m, s.rep, s.atlas, 0.4, 0.4 * w)
    d2 = component_of(s.m, s.rep, s.atlas, 0.4, 0.4 * w * w)
    assert s.atlas.transpose[d1] == d2
    basis = TruncatedBasis(18)
    A1 = weighted_composition_matrix(s.m, s.rep, s.atlas, indicator(s.atlas, d1), basis, grid)
    A2 = weighted_composition_matrix(s.m, s.rep, s.atlas, indicator(s.atlas, d2), basis, grid)
    assert spectral_norm(A1.block().conj().T - A2.block()) < 1e-8
    assert adjoint_residual(s.m, s.rep, s.atlas, indicator(s.atlas, d1), basis, grid) < 1e-8


@pytest.mark.parametrize("name", ["z2", "z3", "mobius", "generic"])
def test_homomorphism_for_random_elements(name, grid):
    s = setup_for(name)
    rng = np.random.default_rng(7)
    q = s.atlas.orbit_count
    a = rng.standard_normal(q) + 1j * rng.standard_normal(q)
    b = rng.standard_normal(q) + 1j * rng.standard_normal(q)
    assert homomorphism_residual(s.m, s.rep, s.atlas, s.alg, a, b, TruncatedBasis(24), grid) < 1e-7


@pytest.mark.parametrize("name", ["z3", "generic"])
def test_operator_norm_bound(name, grid):
    s = setup_for(name)
    for k in range(s.atlas.orbit_count):
        c = indicator(s.atlas, k)
        A = weighted_composition_matrix(s.m, s.rep, s.atlas, c, TruncatedBasis(24), grid)
        assert spectral_norm(A.block()) <= operator_bound(s.m, c) * (1 + 1e-6)


def test_quadrature_doubling_changes_entries_below_1e_9(grid):
    s = setup_for("generic")
    basis = TruncatedBasis(16)
    for k in range(s.atlas.orbit_count):
        c = indicator(s.atlas, k)
        A = weighted_composition_matrix(s.m, s.rep, s.atlas, c, basis, grid)
        B = weighted_composition_matrix(s.m, s.rep, s.atlas, c, basis, grid.refined())
        assert np.abs(A.entries - B.entries).max() < 1e-9


def test_oversampled_products_are_converged(grid):
    # products are formed in a padded basis; more padding must not change them
    s = setup_for("generic")
    basis = TruncatedBasis(24)
    eO = indicator(s.atlas, 1 - s.atlas.diagonal_orbits[0])
    A4 = weighted_composition_matrix(s.m, s.rep, s.atlas, eO, basis, grid, oversample=4)
    A6 = weighted_composition_matrix(s.m, s.rep, s.atlas, eO, basis, grid, oversample=6)
    idx = A4.trusted
    p4 = (A4.padded @ A4.padded)[np.ix_(idx, idx)]
    p6 = (A6.padded @ A6.padded)[np.ix_(idx, idx)]
    assert np.abs(p4 - p6).max() < 1e-10


# -- reducing projections ----------------------------------------------------

def test_z2_projections_are_even_and_odd_diagonals(grid):
    s = setup_for("z2")
    report = reducing_projections(s.m, s.rep, s.atlas, minimal_idempotents(s.alg), TruncatedBasis(16), grid)
    assert report.passed, report.failures
    assert report.ranks == [6, 6]
    supports = []
    for P, _ in report.projections:
        d = np.diag(P.entries).real
        assert np.abs(P.entries - np.diag(np.round(d))).max() < 1e-8
        supports.append(tuple(int(k) for k in np.flatnonzero(np.round(d) == 1)))
    assert sorted(supports) == [tuple(range(0, 16, 2)), tuple(range(1, 16, 2))]
    # traces over the full N block count every monomial
    assert [round(np.trace(P.entries).real) for P, _ in report.projections] == [8, 8]


def test_z3_projections_split_by_residue_mod_3(grid):
    s = setup_for("z3")
    report = reducing_projections(s.m, s.rep, s.atlas, minimal_idempotents(s.alg), TruncatedBasis(18), grid)
    assert report.passed, report.failures
    assert report.ranks == [4, 4, 4]
    supports = sorted(tuple(np.flatnonzero(np.round(np.diag(P.entries).real) == 1)) for P, _ in report.projections)
    assert supports == [tuple(range(r, 18, 3)) for r in range(3)]
    assert [round(np.trace(P.entries).real) for P, _ in report.projections] == [6, 6, 6]


def test_mobius_projection_is_the_identity(grid):
    s = setup_for("mobius")
    report = reducing_projections(s.m, s.rep, s.atlas, minimal_idempotents(s.alg), TruncatedBasis(16), grid)
    assert report.passed
    (P, rank), = report.projections
    assert rank == P.trusted_block == 14
    assert np.abs(P.block() - np.eye(14)).max() < 1e-8


def test_wrong_idempotent_is_reported_not_raised(grid):
    s = setup_for("z2")
    bad = [np.array([0.7, 0.3], dtype=complex), np.array([0.3, -0.3], dtype=complex)]
    report = reducing_projections(s.m, s.rep, s.atlas, bad, TruncatedBasis(16), grid)
    assert not report.passed
    names = {row.name for row in report.failures}
    assert "projection[0].idempotent" in names


def test_product_map_projections_follow_congruence_classes(grid):
    s = setup_for("z2xz3")
    N = 10
    basis = TruncatedBasis(N, 2)
    report = reducing_projections(s.m, s.rep, s.atlas, minimal_idempotents(s.alg), basis, grid)
    assert report.passed, report.failures
    assert len(report.projections) == 6
    classes = set()
    for P, rank in report.projections:
        idx = P.trusted
        B = P.block()
        d = np.round(np.diag(B).real)
        assert np.abs(B - np.diag(d)).max() < 1e-8
        support = {basis.multi_index(int(idx[k])) for k in np.flatnonzero(d == 1)}
        residues = {(a % 2, b % 3) for a, b in support}
        assert len(residues) == 1
        classes |= residues
        assert rank == len(support)
    assert len(classes) == 6


# -- kernel ----------------------------------------------------------------------

def test_kernel_norm_examples():
    basis = TruncatedBasis(64)
    assert kernel_norm(0, basis) == pytest.approx(math.sqrt(1 / math.pi), rel=1e-15)
    assert kernel_norm(0.5, basis) == pytest.approx(1 / (math.sqrt(math.pi) * 0.75), rel=1e-12)
    norms = [kernel_norm(0.1 * k, basis, check_tail=False) for k in range(10)]
    assert all(a < b for a, b in zip(norms, norms[1:]))


def test_kernel_norm_guards():
    with pytest.raises(InputError):
        kernel_norm(0.9995, TruncatedBasis(64))
    with pytest.raises(ConfigurationError):
        kernel_norm(0.9, TruncatedBasis(64))  # tail ~2e-5 of the value
    assert kernel_norm(0.9, TruncatedBasis(400)) == pytest.approx(1 / (math.sqrt(math.pi) * 0.19), rel=1e-10)


def test_kernel_reproduces_point_values(grid):
    g = np.array([0.3, -1j, 0.25, 0.1])
    for w in (0.2, -0.5 + 0.3j):
        val = grid.integrate(np.polynomial.polynomial.polyval(grid.points, g) * np.conj(bergman_kernel(grid.points, w)))
        assert abs(val - np.polynomial.polynomial.polyval(w, g)) < 1e-10


# -- nullstellensatz ---------------------------------------------------------------

def test_nullstellensatz_examples(grid):
    assert nullstellensatz_check(monomial(2), 0.3, [1], grid) < 1e-9
    assert abs(reproducing_pairing(monomial(2), 0.3, [1], -0.3, grid)) < 1e-9
    assert nullstellensatz_check(monomial(3), 0.4, [0, 0, 1], grid) < 1e-9


def test_nullstellensatz_negative_control(grid):
    b = generic_cubic()
    lam, w, g = 0.3, 0.6 - 0.2j, [0, 1]
    got = reproducing_pairing(b, lam, g, w, grid)
    direct = (evaluate(b, w) - evaluate(b, lam)) * w
    assert abs(direct) > 1e-2
    assert abs(got - direct) < 1e-8
