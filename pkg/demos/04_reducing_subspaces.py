"""
Reducing subspaces on the Bergman space
=======================================

Each algebra element c acts on the Bergman space through the weighted
composition operator iota_c, which commutes with multiplication by B.  The
minimal idempotents become orthogonal projections onto reducing subspaces.
"""
import numpy as np

from reducing_atlas import (BlaschkeProduct, TruncatedBasis, build_monodromy, commutator_residual,
                            minimal_idempotents, pair_orbits, reducing_projections, structure_constants,
                            toeplitz_matrix, weighted_composition_matrix)
from reducing_atlas.quadrature import QuadratureGrid

grid = QuadratureGrid(96, 256)
basis = TruncatedBasis(32)

for name, b in [("z^2", BlaschkeProduct.monomial(2)), ("generic cubic", BlaschkeProduct((0, 0.5, -0.3j)))]:
    rep = build_monodromy(b)
    atlas = pair_orbits(rep)
    alg = structure_constants(atlas)
    T = toeplitz_matrix(b, basis)
    for k in range(atlas.orbit_count):
        A = weighted_composition_matrix(b, rep, atlas, np.eye(atlas.orbit_count)[k], basis, grid)
        print(f"{name}: |[T_B, iota_e{k}]| = {commutator_residual(T, A):.1e}")
    report = reducing_projections(b, rep, atlas, minimal_idempotents(alg), basis, grid)
    print(f"{name}: ranks {report.ranks} on a trusted block of {report.projections[0][0].trusted_block}; "
          f"all checks passed: {report.passed}")

# for z^2 the projections are the even and odd monomials
rep = build_monodromy(BlaschkeProduct.monomial(2))
atlas = pair_orbits(rep)
report = reducing_projections(BlaschkeProduct.monomial(2), rep, atlas,
                              minimal_idempotents(structure_constants(atlas)), TruncatedBasis(8), grid)
for P, rank in report.projections:
    print(np.round(np.diag(P.entries).real, 10))
