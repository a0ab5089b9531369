"""
Monodromy and the components of the fiber product
=================================================

Continuing the fiber once around each critical value permutes its points.
The orbits of these permutations acting on label pairs (i, j) are the
connected components of {(z, w) : B(z) = B(w)}; their number is q.
"""
from reducing_atlas import (BlaschkeProduct, ProductMap, build_monodromy, cycle_notation, pair_orbits)

symbols = {
    "z^2": BlaschkeProduct.monomial(2),
    "z^3": BlaschkeProduct.monomial(3),
    "Mobius a=0.5": BlaschkeProduct((0.5,)),
    "generic cubic": BlaschkeProduct((0, 0.5, -0.3j)),
    "(z^2, z^3)": ProductMap((BlaschkeProduct.monomial(2), BlaschkeProduct.monomial(3))),
}

for name, m in symbols.items():
    paths = []
    rep = build_monodromy(m, paths=paths)
    atlas = pair_orbits(rep)
    gens = ", ".join(cycle_notation(g) for g in rep.generators) or "none"
    print(f"{name:15s} q = {atlas.orbit_count}   generators: {gens}")
    print(f"{'':15s} boundary loop {cycle_notation(rep.boundary_perm)}, tracked {sum(len(r) for _, r in paths)} steps")

# the orbit table of the generic cubic: 0 on the diagonal, 1 elsewhere
atlas = pair_orbits(build_monodromy(symbols["generic cubic"]))
print(atlas.as_array())
