"""
Reproducing kernel checks
=========================

The Bergman kernel K_w reproduces point values, so (B - B(lam)) g is
orthogonal to K_w for every w in the fiber of B(lam), and ||K_w|| blows up
as w approaches the circle.
"""
import math

from reducing_atlas import BlaschkeProduct, TruncatedBasis, kernel_norm, nullstellensatz_check
from reducing_atlas.bergman import reproducing_pairing
from reducing_atlas.quadrature import QuadratureGrid

grid = QuadratureGrid(96, 256)
b = BlaschkeProduct((0, 0.5, -0.3j))
for lam in (0.3, 0.4j):
    print(f"lambda={lam}: max |<(B - B(lambda)) z, K_w>| over the fiber = "
          f"{nullstellensatz_check(b, lam, [0, 1], grid):.1e}")
print("off the fiber:", abs(reproducing_pairing(b, 0.3, [0, 1], 0.6 - 0.2j, grid)))

for N in (64, 160):
    basis = TruncatedBasis(N)
    for w in (0.5, 0.9):
        exact = 1 / (math.sqrt(math.pi) * (1 - w * w))
        got = kernel_norm(w, basis, check_tail=False)
        print(f"N={N:3d} |w|={w}: ||K_w|| = {got:.12f}, relative gap {abs(got - exact) / exact:.1e}")
