"""
Fibers and critical points of a Blaschke product
================================================

A finite Blaschke product maps the unit disc onto itself n-to-1.  Away from
its critical values every point has exactly n preimages.
"""
import numpy as np

from reducing_atlas import BlaschkeProduct, critical_points, derivative, evaluate, fiber
from reducing_atlas.symbol import argument_principle_count

b = BlaschkeProduct((0, 0.5, -0.3j))
print(b)

# critical points: zeros of B' inside the disc, n - 1 of them counted with multiplicity
for c, mult in critical_points(b):
    print(f"critical point {c:.6f} (multiplicity {mult}) -> value {evaluate(b, c):.6f}")
print("argument-principle count:", round(argument_principle_count(b), 6))

# the fiber over a regular value
y = 0.2 + 0.1j
ws = fiber(b, y)
print("fiber over", y)
for w in ws:
    print(f"  {w:.6f}   |B(w) - y| = {abs(evaluate(b, w) - y):.1e}   B'(w) = {derivative(b, w):.4f}")

# on the unit circle |B| = 1
z = np.exp(2j * np.pi * np.linspace(0, 1, 7))
print("|B| on the circle:", np.round(np.abs(evaluate(b, z)), 12))
