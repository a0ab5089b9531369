"""Finite Blaschke products on the unit disc and coordinatewise products of them.

A Blaschke product of degree n is

    B(z) = e^{i theta} prod_k (z - a_k) / (1 - conj(a_k) z),   |a_k| < 1,

which we store through its numerator P(z) = e^{i theta} prod (z - a_k) and
denominator Q(z) = prod (1 - conj(a_k) z) as ascending coefficient arrays.
All root finding goes through companion-matrix eigenvalues followed by a
Newton polish on the defining polynomial.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as npoly

from .config import DEFAULTS, Tolerances
from .errors import InputError, NumericalError, PreconditionError

_DOMAIN_SLACK = 1e-9


def polynomial_roots(coeffs) -> np.ndarray:
    """Roots of an ascending-coefficient polynomial via its companion matrix."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    if len(c) < 2:
        return np.empty(0, dtype=complex)
    if len(c) == 2:
        return np.array([-c[0] / c[1]])
    return np.linalg.eigvals(npoly.polycompanion(c))


def newton_polish(coeffs, root: complex, steps: int = 50, tol: float = 1e-10):
    """Polish ``root`` of the polynomial ``coeffs`` (ascending).

    Returns ``(root, relative_residual)``; the residual is |p(r)| scaled by
    sum |c_k| |r|^k so that it is comparable across polynomial scalings.
    """
    c = np.asarray(coeffs, dtype=complex)
    dc = npoly.polyder(c)
    scale_c = np.abs(c)
    r = complex(root)
    for _ in range(steps):
        val = npoly.polyval(r, c)
        res = abs(val) / max(npoly.polyval(abs(r), scale_c), 1e-300)
        if res <= 1e-15:
            break
        d = npoly.polyval(r, dc)
        if d == 0:
            break
        step = val / d
        r -= step
        if abs(step) <= 1e-16 * max(abs(r), 1e-300):
            break
    val = npoly.polyval(r, c)
    res = abs(val) / max(npoly.polyval(abs(r), scale_c), 1e-300)
    return complex(r), float(res)


@dataclass(frozen=True)
class BlaschkeProduct:
    """A finite Blaschke product ``rotation * prod (z - a)/(1 - conj(a) z)``."""

    zeros: tuple
    rotation: complex = 1.0 + 0j

    def __post_init__(self):
        zeros = tuple(complex(a) for a in self.zeros)
        rotation = complex(self.rotation)
        if not zeros:
            raise InputError("a Blaschke product needs at least one zero")
        for a in zeros:
            if not abs(a) < 1 - 1e-9:
                raise InputError(f"zero {a} is not inside the open unit disc")
        if abs(abs(rotation) - 1) > 1e-12:
            raise InputError(f"rotation {rotation} is not unimodular")
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "rotation", rotation)

    @classmethod
    def from_angle(cls, zeros: Sequence[complex], angle: float = 0.0) -> "BlaschkeProduct":
        return cls(tuple(zeros), cmath.exp(1j * angle))

    @classmethod
    def monomial(cls, n: int) -> "BlaschkeProduct":
        return cls((0j,) * n)

    @property
    def degree(self) -> int:
        return len(self.zeros)

    def __repr__(self):
        zs = ", ".join(f"{a:.6g}" for a in self.zeros)
        return f"BlaschkeProduct([{zs}], rotation={self.rotation:.6g})"

    # -- polynomial data ---------------------------------------------------
    @cached_property
    def numerator(self) -> np.ndarray:
        return self.rotation * npoly.polyfromroots(self.zeros).astype(complex)

    @cached_property
    def denominator(self) -> np.ndarray:
        q = np.array([1.0 + 0j])
        for a in self.zeros:
            q = npoly.polymul(q, [1.0, -np.conj(a)])
        return q

    @cached_property
    def critical_numerator(self) -> np.ndarray:
        """P'Q - PQ', whose zeros in the disc are the critical points."""
        p, q = self.numerator, self.denominator
        c = npoly.polysub(npoly.polymul(npoly.polyder(p), q), npoly.polymul(p, npoly.polyder(q)))
        c = np.asarray(c, dtype=complex)
        cut = 1e-15 * np.max(np.abs(c))
        while len(c) > 1 and abs(c[-1]) <= cut:
            c = c[:-1]
        return c

    @cached_property
    def _dp(self):
        return npoly.polyder(self.numerator)

    @cached_property
    def _dq(self):
        return npoly.polyder(self.denominator)

    # -- evaluation without domain checks (hot paths) -----------------------
    def _f(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.rotation, dtype=complex)
        for a in self.zeros:
            out = out * (z - a) / (1 - np.conj(a) * z)
        return out

    def _df(self, z):
        z = np.asarray(z, dtype=complex)
        p = npoly.polyval(z, self.numerator)
        q = npoly.polyval(z, self.denominator)
        dp = npoly.polyval(z, self._dp)
        dq = npoly.polyval(z, self._dq)
        return (dp * q - p * dq) / (q * q)

    def __call__(self, z):
        return evaluate(self, z)

    # -- critical data -----------------------------------------------------
    @cached_property
    def _critical(self):
        return _critical_points_1d(self, DEFAULTS)

    @cached_property
    def critical_values(self) -> tuple:
        """Distinct critical values, coincident ones merged."""
        vals = []
        for c, _ in self._critical:
            v = complex(self._f(c))
            if all(abs(v - u) > 1e-9 for u in vals):
                vals.append(v)
        return tuple(vals)

    @cached_property
    def exceptional_points(self) -> np.ndarray:
        """The finite set Z = B^{-1}(critical values) inside the disc."""
        pts = []
        for v in self.critical_values:
            for r in polynomial_roots(npoly.polysub(self.numerator, v * self.denominator)):
                if all(abs(r - s) > 1e-7 for s in pts):
                    pts.append(complex(r))
        return np.array(pts, dtype=complex)


@dataclass(frozen=True)
class ProductMap:
    """Coordinatewise map ``(z_1..z_d) -> (B_1(z_1), .., B_d(z_d))`` on the polydisc."""

    factors: tuple

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise InputError("a product map needs at least one factor")
        if not all(isinstance(b, BlaschkeProduct) for b in factors):
            raise InputError("product map factors must be BlaschkeProduct instances")
        object.__setattr__(self, "factors", factors)

    @property
    def dim(self) -> int:
        return len(self.factors)

    @property
    def degree(self) -> int:
        """Total fiber cardinality, the product of the factor degrees."""
        return math.prod(b.degree for b in self.factors)

    @property
    def degrees(self) -> tuple:
        return tuple(b.degree for b in self.factors)


SymbolMap = Union[BlaschkeProduct, ProductMap]


def _check_disc(z, what="point"):
    if np.any(np.abs(z) > 1 + _DOMAIN_SLACK):
        raise InputError(f"{what} lies outside the closed unit disc")


def _coords(m: ProductMap, z):
    z = tuple(z)
    if len(z) != m.dim:
        raise InputError(f"expected a point with {m.dim} coordinates, got {len(z)}")
    return z


def evaluate(m: SymbolMap, z):
    """Evaluate the symbol at ``z`` (a complex number/array, or a tuple for product maps)."""
    if isinstance(m, ProductMap):
        z = _coords(m, z)
        return tuple(evaluate(b, zi) for b, zi in zip(m.factors, z))
    _check_disc(z)
    out = m._f(z)
    return complex(out) if np.ndim(out) == 0 else out


def derivative(m: SymbolMap, z):
    """Jacobian determinant: B'(z), or prod_i B_i'(z_i) for product maps."""
    if isinstance(m, ProductMap):
        z = _coords(m, z)
        out = 1.0 + 0j
        for b, zi in zip(m.factors, z):
            out = out * derivative(b, zi)
        return out
    _check_disc(z)
    out = m._df(z)
    return complex(out) if np.ndim(out) == 0 else out


def _critical_points_1d(b: BlaschkeProduct, tol: Tolerances):
    n = b.degree
    if n == 1:
        return []
    c = b.critical_numerator
    raw = [r for r in polynomial_roots(c) if abs(r) < 1]
    # group coincident roots before polishing; a cluster of size m is a root
    # of multiplicity m and is polished on the (m-1)-th derivative
    clusters: list[list[complex]] = []
    for r in sorted(raw, key=lambda r: (r.real, r.imag)):
        for cl in clusters:
            if abs(np.mean(cl) - r) <= tol.multiplicity_cluster:
                cl.append(r)
                break
        else:
            clusters.append([r])
    out = []
    for cl in clusters:
        mult = len(cl)
        target = c
        for _ in range(mult - 1):
            target = npoly.polyder(target)
        root, res = newton_polish(target, complex(np.mean(cl)), tol.root_newton_steps)
        if res > tol.root_residual:
            raise NumericalError(f"critical point {root} did not polish (residual {res:.3g})")
        if abs(root) < 1e-14:
            root = 0j
        out.append((root, mult))
    total = sum(m for _, m in out)
    if total != n - 1:
        raise NumericalError(f"found {total} critical points in the disc, expected {n - 1}")
    return sorted(out, key=lambda t: (t[0].real, t[0].imag))


def critical_points(m: SymbolMap, tol: Tolerances = DEFAULTS):
    """Critical points in the open disc as ``(point, multiplicity)`` pairs.

    For a :class:`ProductMap` the result is one such list per factor.
    """
    if isinstance(m, ProductMap):
        return [critical_points(b, tol) for b in m.factors]
    if tol is DEFAULTS:
        return list(m._critical)
    return _critical_points_1d(m, tol)


def critical_values(m: SymbolMap):
    if isinstance(m, ProductMap):
        return [b.critical_values for b in m.factors]
    return list(m.critical_values)


def fiber(m: SymbolMap, y, tol: Tolerances = DEFAULTS):
    """All preimages of ``y``.

    For a Blaschke product these are the n roots of P(z) - y Q(z), sorted
    lexicographically by (real, imag).  For a product map the result is the
    cartesian product of the factor fibers in row-major order.
    """
    if isinstance(m, ProductMap):
        y = _coords(m, y)
        parts = [fiber(b, yi, tol) for b, yi in zip(m.factors, y)]
        return [tuple(p) for p in itertools.product(*parts)]
    y = complex(y)
    if abs(y) >= 1:
        raise InputError(f"value {y} is not inside the open unit disc")
    for v in m.critical_values:
        if abs(y - v) <= tol.regular_value_margin:
            raise PreconditionError(f"{y} is within {tol.regular_value_margin} of critical value {v}")
    return [complex(r) for r in _fiber_roots(m, y, tol)]


def _fiber_roots(b: BlaschkeProduct, y: complex, tol: Tolerances = DEFAULTS) -> np.ndarray:
    poly = npoly.polysub(b.numerator, y * b.denominator)
    roots = []
    for r in polynomial_roots(poly):
        r, res = newton_polish(poly, r, tol.root_newton_steps)
        if res > tol.root_residual:
            raise NumericalError(f"fiber point {r} did not polish (residual {res:.3g})")
        roots.append(r)
    roots = np.array(sorted(roots, key=lambda r: (r.real, r.imag)), dtype=complex)
    if len(roots) != b.degree:
        raise NumericalError(f"fiber has {len(roots)} points, expected {b.degree}")
    if b.degree > 1:
        d = np.abs(roots[:, None] - roots[None, :])
        d[np.diag_indices_from(d)] = np.inf
        if d.min() <= tol.collision:
            raise NumericalError(f"fiber over {y} has colliding points (distance {d.min():.3g})")
    return roots


def argument_principle_count(b: BlaschkeProduct, radius: float = 1 - 1e-3, samples: int = 4096) -> float:
    """(1/2 pi i) * contour integral of B''/B' over |z| = radius (trapezoid rule).

    B' has no poles in the disc, so this counts critical points with multiplicity.
    """
    c = b.critical_numerator
    q = b.denominator
    dc, dq = npoly.polyder(c), npoly.polyder(q)
    theta = 2 * np.pi * np.arange(samples) / samples
    z = radius * np.exp(1j * theta)
    # B' = C / Q^2, so B''/B' = C'/C - 2 Q'/Q
    logder = npoly.polyval(z, dc) / npoly.polyval(z, c) - 2 * npoly.polyval(z, dq) / npoly.polyval(z, q)
    integral = np.mean(logder * z)  # dz = i z dtheta, the i cancels with 1/(2 pi i)
    return float(integral.real)


def symbol_from_json(doc) -> SymbolMap:
    """Build a symbol from ``{"factors": [{"zeros": [[re, im], ..], "rotation_angle": t}, ..]}``."""
    try:
        factors = doc["factors"]
        built = []
        for f in factors:
            zeros = [complex(float(re), float(im)) for re, im in f["zeros"]]
            built.append(BlaschkeProduct.from_angle(zeros, float(f.get("rotation_angle", 0.0))))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed symbol description: {exc}") from exc
    if not built:
        raise InputError("symbol description has no factors")
    return built[0] if len(built) == 1 else ProductMap(tuple(built))


def symbol_to_json(m: SymbolMap) -> dict:
    factors = m.factors if isinstance(m, ProductMap) else (m,)
    return {
        "factors": [
            {
                "zeros": [[a.real, a.imag] for a in b.zeros],
                "rotation_angle": cmath.phase(b.rotation),
            }
            for b in factors
        ]
    }
