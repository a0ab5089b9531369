"""
The convolution algebra of the components
=========================================

Indicators of the q components span an algebra under
(a * b)(z, w) = sum_t a(z, t) b(t, w).  For z^n it is the group algebra of
Z_n; for a generic cubic it is two-dimensional with e_O * e_O = 2 e_D + e_O.
"""
import numpy as np

from reducing_atlas import (BlaschkeProduct, build_monodromy, convolve, is_commutative, minimal_idempotents,
                            pair_orbits, structure_constants)

for name, b in [("z^3", BlaschkeProduct.monomial(3)), ("generic cubic", BlaschkeProduct((0, 0.5, -0.3j)))]:
    atlas = pair_orbits(build_monodromy(b))
    alg = structure_constants(atlas)
    print(f"{name}: dim {alg.dim}, commutative {is_commutative(alg)}")
    for O in range(alg.dim):
        for P in range(alg.dim):
            print(f"  e{O} * e{P} = {alg.structure[O, P].tolist()}")
    for p in minimal_idempotents(alg):
        print("  idempotent", np.round(p, 6), " |p*p - p| =", f"{np.abs(convolve(alg, p, p) - p).max():.1e}")
