"""Monodromy of the covering B: D' -> B(D') and the components of the fiber product.

Labels always refer to positions in the base fiber (sorted lexicographically by
(real, imag)).  A permutation ``p`` is stored as a tuple with ``p[i] = j`` when
continuing base-fiber point ``i`` around the loop ends at base-fiber point ``j``.
Loops compose left to right: ``compose(p, q)`` is "first p, then q".

Components of the fiber product correspond to orbits of the diagonal
monodromy action on label pairs, so the whole atlas is combinatorial once the
generator permutations are known.
"""
from __future__ import annotations

import cmath
import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import DEFAULTS, Tolerances
from .continuation import Arc, Line, Path, circle_loop, lasso, track
from .errors import ConfigurationError, NumericalError, PreconditionError
from .symbol import BlaschkeProduct, ProductMap, SymbolMap, _fiber_roots

BASE_RADII = tuple(round(0.05 * k, 2) for k in range(1, 20))
BASE_ANGLES = tuple(math.pi * k / 17 for k in range(34))


# -- permutations -------------------------------------------------------------

def identity_perm(n: int) -> tuple:
    return tuple(range(n))


def compose(*perms) -> tuple:
    """Permutation of the concatenated loop: apply ``perms[0]`` first."""
    out = identity_perm(len(perms[0]))
    for p in perms:
        out = tuple(p[i] for i in out)
    return out


def inverse(p) -> tuple:
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


def cycles(p) -> list:
    seen, out = set(), []
    for i in range(len(p)):
        if i in seen:
            continue
        cyc, j = [], i
        while j not in seen:
            seen.add(j)
            cyc.append(j)
            j = p[j]
        out.append(tuple(cyc))
    return out


def cycle_notation(p) -> str:
    cs = [c for c in cycles(p) if len(c) > 1]
    if not cs:
        return "()"
    return "".join("(" + " ".join(map(str, c)) + ")" for c in cs)


def generated_group(gens, n: int) -> set:
    """All elements of the permutation group generated by ``gens`` (BFS closure)."""
    e = identity_perm(n)
    group = {e}
    frontier = [e]
    while frontier:
        nxt = []
        for g in frontier:
            for s in gens:
                h = compose(g, s)
                if h not in group:
                    group.add(h)
                    nxt.append(h)
        frontier = nxt
    return group


# -- data types ---------------------------------------------------------------

@dataclass(frozen=True)
class MonodromyRep:
    """Monodromy data of a symbol.

    ``generators[k]`` is the permutation of the lasso around
    ``critical_values[k]``; ``boundary_order`` lists generator indices in the
    order whose composite loop is the positively oriented boundary loop.  For a
    product map the generators act on flat (row-major) multi-index labels and
    ``factors`` holds the per-factor representations.
    """

    base_point: object
    base_fiber: tuple
    critical_values: tuple
    generators: tuple
    boundary_perm: tuple
    boundary_order: tuple = ()
    factors: tuple = ()

    @property
    def degree(self) -> int:
        return len(self.base_fiber)

    def boundary_product(self) -> tuple:
        gens = [self.generators[k] for k in self.boundary_order]
        return compose(*gens) if gens else identity_perm(self.degree)


@dataclass(frozen=True)
class ComponentAtlas:
    """Partition of label pairs into diagonal-monodromy orbits."""

    orbit_of: tuple  # orbit_of[i][j]
    orbit_count: int
    canonical_reps: tuple
    transpose: tuple  # orbit id of the transposed orbit

    @property
    def n(self) -> int:
        return len(self.orbit_of)

    @property
    def diagonal_orbits(self) -> tuple:
        return tuple(sorted({self.orbit_of[i][i] for i in range(self.n)}))

    def members(self, orbit: int) -> list:
        return [(i, j) for i in range(self.n) for j in range(self.n) if self.orbit_of[i][j] == orbit]

    def partition(self) -> frozenset:
        return frozenset(frozenset(self.members(o)) for o in range(self.orbit_count))

    def as_array(self) -> np.ndarray:
        return np.array(self.orbit_of, dtype=int)


# -- base point and loops -----------------------------------------------------

def _lasso_radius(tol: Tolerances) -> float:
    return 10 * tol.loop_clearance


def _admissible(p: complex, cvs, tol: Tolerances) -> bool:
    rho = _lasso_radius(tol)
    if any(abs(p - v) <= 10 * tol.regular_value_margin for v in cvs):
        return False
    if any(abs(p - v) <= 2 * rho for v in cvs):
        return False
    if any(abs(v) >= tol.boundary_radius - rho for v in cvs):
        return False
    exit_ray = Line(p, tol.boundary_radius * cmath.exp(1j * cmath.phase(p)))
    if any(exit_ray.distance_to(v) <= 2 * rho for v in cvs):
        return False
    for k, v in enumerate(cvs):
        stem = Line(p, v)
        for j, u in enumerate(cvs):
            if j != k and stem.distance_to(u) <= 2 * rho:
                return False
    return True


def base_candidates():
    for r in BASE_RADII:
        for a in BASE_ANGLES:
            yield r * cmath.exp(1j * a)


def choose_base(m: SymbolMap, skip: int = 0, tol: Tolerances = DEFAULTS):
    """Deterministic base point and its lexicographically sorted fiber.

    Candidates ``r * exp(i pi k / 17)`` are scanned with r = 0.05, 0.10, ...
    (outer loop) and k = 0..33 (inner loop); the ``skip``-th admissible one is
    returned.  Admissible means far from every critical value and such that all
    lassos and the exit ray to the boundary circle stay clear of the other
    critical values.
    """
    if isinstance(m, ProductMap):
        parts = [choose_base(b, skip, tol) for b in m.factors]
        base = tuple(p for p, _ in parts)
        fib = tuple(itertools.product(*[f for _, f in parts]))
        return base, fib
    cvs = m.critical_values
    seen = 0
    for p in base_candidates():
        if _admissible(p, cvs, tol):
            if seen == skip:
                return p, tuple(complex(z) for z in _fiber_roots(m, p, tol))
            seen += 1
    raise ConfigurationError(f"no admissible base point found for {m}")


def _match(end, fiber, tol: Tolerances, what="loop") -> tuple:
    """Nearest-neighbour matching of ``end`` points onto ``fiber`` with an ambiguity margin."""
    end = np.asarray(end)
    fiber = np.asarray(fiber)
    d = np.abs(end[:, None] - fiber[None, :])
    perm = []
    for i in range(len(end)):
        order = np.argsort(d[i])
        if len(order) > 1 and d[i, order[1]] < tol.ambiguity_ratio * d[i, order[0]]:
            raise NumericalError(
                f"ambiguous endpoint matching after {what}: distances {d[i, order[0]]:.3g} and "
                f"{d[i, order[1]]:.3g}; try a smaller loop clearance"
            )
        perm.append(int(order[0]))
    if sorted(perm) != list(range(len(fiber))):
        raise NumericalError(f"endpoint matching after {what} is not a bijection: {perm}")
    return tuple(perm)


def generator_loop(base: complex, v: complex, tol: Tolerances = DEFAULTS) -> Path:
    return lasso(base, v, _lasso_radius(tol))


def _loop_perm(b: BlaschkeProduct, base, fiber, path: Path, tol, record=None, what="loop"):
    end = track(b, path, fiber, tol, record)
    return _match(end, fiber, tol, what)


def loop_permutation(m: BlaschkeProduct, rep: MonodromyRep, critical_value_index: int,
                     tol: Tolerances = DEFAULTS, record=None) -> tuple:
    """Permutation of the base fiber induced by the lasso around one critical value."""
    v = rep.critical_values[critical_value_index]
    path = generator_loop(rep.base_point, v, tol)
    return _loop_perm(m, rep.base_point, rep.base_fiber, path, tol, record, f"lasso around {v:.6g}")


def boundary_loop(base: complex, tol: Tolerances = DEFAULTS) -> Path:
    return circle_loop(base, tol.boundary_radius)


def boundary_permutation(m: BlaschkeProduct, base=None, fiber=None, tol: Tolerances = DEFAULTS,
                         record=None) -> tuple:
    """Permutation from continuing the base fiber once around |y| = boundary_radius."""
    if isinstance(m, ProductMap):
        raise PreconditionError("boundary_permutation expects a single Blaschke factor")
    if base is None:
        base, fiber = choose_base(m, tol=tol)
    try:
        return _loop_perm(m, base, fiber, boundary_loop(base, tol), tol, record, "boundary loop")
    except NumericalError as exc:
        raise NumericalError(f"{exc}; consider lowering boundary_radius") from exc


def _angular_key(base: complex, v: complex) -> float:
    return (cmath.phase(v - base) - cmath.phase(base)) % (2 * math.pi)


def _flat_strides(degrees) -> list:
    strides, s = [], 1
    for d in reversed(degrees):
        strides.append(s)
        s *= d
    return list(reversed(strides))


def lift_permutation(perm, factor: int, degrees) -> tuple:
    """Act with ``perm`` on digit ``factor`` of row-major multi-index labels."""
    out = []
    for digits in itertools.product(*[range(d) for d in degrees]):
        digits = list(digits)
        digits[factor] = perm[digits[factor]]
        flat = 0
        for dgt, s in zip(digits, _flat_strides(degrees)):
            flat += dgt * s
        out.append(flat)
    return tuple(out)


def build_monodromy(m: SymbolMap, base_point=None, order: Optional[Sequence[int]] = None,
                    skip: int = 0, tol: Tolerances = DEFAULTS, paths=None) -> MonodromyRep:
    """Compute the monodromy representation of ``m``.

    ``order`` optionally permutes the stored critical values (and generators);
    the boundary consistency check is independent of it.  When ``paths`` is a
    list, every tracked loop is appended as ``(name, records)``.
    """
    if isinstance(m, ProductMap):
        reps = []
        for k, b in enumerate(m.factors):
            sub = [] if paths is not None else None
            reps.append(build_monodromy(b, None if base_point is None else base_point[k], None, skip, tol, sub))
            if paths is not None:
                paths.extend((f"factor[{k}].{name}", rec) for name, rec in sub)
        degrees = m.degrees
        gens, cvs, border = [], [], []
        for k, r in enumerate(reps):
            for j in r.boundary_order:
                border.append(len(gens) + j)
            for v, g in zip(r.critical_values, r.generators):
                cvs.append((k, v))
                gens.append(lift_permutation(g, k, degrees))
        if order is not None:
            order = list(order)
            inv = {old: new for new, old in enumerate(order)}
            gens = [gens[i] for i in order]
            cvs = [cvs[i] for i in order]
            border = [inv[i] for i in border]
        bperm = compose(*[lift_permutation(r.boundary_perm, k, degrees) for k, r in enumerate(reps)])
        fib = tuple(itertools.product(*[r.base_fiber for r in reps]))
        return MonodromyRep(tuple(r.base_point for r in reps), fib, tuple(cvs), tuple(gens),
                            bperm, tuple(border), tuple(reps))

    if base_point is None:
        base, fib = choose_base(m, skip, tol)
    else:
        base = complex(base_point)
        if not _admissible(base, m.critical_values, tol):
            raise ConfigurationError(f"base point {base} is not admissible")
        fib = tuple(complex(z) for z in _fiber_roots(m, base, tol))
    cvs = list(m.critical_values)
    angular = sorted(range(len(cvs)), key=lambda k: _angular_key(base, cvs[k]))
    cvs = [cvs[k] for k in angular]  # default storage order is the composite-loop order
    gens = []
    for k, v in enumerate(cvs):
        rec = [] if paths is not None else None
        path = generator_loop(base, v, tol)
        gens.append(_loop_perm(m, base, fib, path, tol, rec, f"lasso around {v:.6g}"))
        if paths is not None:
            paths.append((f"lasso[{k}]", rec))
    rec = [] if paths is not None else None
    bperm = boundary_permutation(m, base, fib, tol, rec)
    if paths is not None:
        paths.append(("boundary", rec))
    border = list(range(len(cvs)))
    if order is not None:
        order = list(order)
        if sorted(order) != border:
            raise ValueError("order must be a permutation of the critical value indices")
        inv = {old: new for new, old in enumerate(order)}
        gens = [gens[i] for i in order]
        cvs = [cvs[i] for i in order]
        border = [inv[i] for i in border]
    rep = MonodromyRep(base, fib, tuple(cvs), tuple(gens), bperm, tuple(border))
    if rep.boundary_product() != bperm:
        raise NumericalError(
            f"boundary permutation {cycle_notation(bperm)} differs from the composite lasso "
            f"product {cycle_notation(rep.boundary_product())}; tracking is unreliable"
        )
    return rep


# -- fiber-product components ---------------------------------------------------

def pair_orbits(rep: MonodromyRep) -> ComponentAtlas:
    """Orbits of the diagonal monodromy action on label pairs (BFS).

    Seeds are visited in lexicographic order, so orbit ids follow first
    discovery and each orbit's canonical representative is its seed.
    """
    n = rep.degree
    orbit = [[-1] * n for _ in range(n)]
    reps = []
    gens = list(rep.generators)
    for i, j in itertools.product(range(n), repeat=2):
        if orbit[i][j] >= 0:
            continue
        oid = len(reps)
        reps.append((i, j))
        orbit[i][j] = oid
        queue = deque([(i, j)])
        while queue:
            a, c = queue.popleft()
            for g in gens:
                for s in (g, inverse(g)):
                    pa, pc = s[a], s[c]
                    if orbit[pa][pc] < 0:
                        orbit[pa][pc] = oid
                        queue.append((pa, pc))
    transpose = tuple(orbit[j][i] for i, j in reps)
    return ComponentAtlas(tuple(tuple(r) for r in orbit), len(reps), tuple(reps), transpose)


def plan_path(start: complex, target: complex, cvs, clearance: float) -> Path:
    """Radial-then-rotational path from ``start`` to ``target`` avoiding critical values.

    Falls back to rotational-then-radial and to arcs on intermediate circles when
    the direct route passes too close to a critical value.  Near an endpoint the
    required clearance shrinks to half that endpoint's distance, so targets close
    to (but not on) a critical value can still be reached.
    """
    for v in cvs:
        if abs(target - v) <= 1e-12:
            raise PreconditionError(f"target {target} is a critical value")
    req = [min(clearance, 0.5 * abs(start - v), 0.5 * abs(target - v)) for v in cvs]
    rs, a_s = abs(start), cmath.phase(start)
    rt = abs(target)
    a_t = cmath.phase(target) if rt > 0 else a_s
    dt = (a_t - a_s + math.pi) % (2 * math.pi) - math.pi
    turns = [dt] if dt == 0 else [dt, dt - math.copysign(2 * math.pi, dt)]
    candidates = []
    for turn in turns:
        candidates.append((Line(start, rt * cmath.exp(1j * a_s)), Arc(0j, rt, a_s, a_s + turn)))
        candidates.append((Arc(0j, rs, a_s, a_s + turn), Line(rs * cmath.exp(1j * a_t), target)))
    for rho in BASE_RADII:
        for turn in turns:
            candidates.append((Line(start, rho * cmath.exp(1j * a_s)), Arc(0j, rho, a_s, a_s + turn),
                               Line(rho * cmath.exp(1j * a_t), target)))
    for pieces in candidates:
        path = Path(pieces)
        if not path.pieces:
            return path
        if abs(path.end - target) > 1e-12:
            # arcs carry rounding in their endpoints; snap the final line
            continue
        if all(pc.distance_to(v) >= r for pc in path.pieces for v, r in zip(cvs, req)):
            return path
    raise ConfigurationError(f"no path from {start:.6g} to {target:.6g} clears the critical values")


def transport(m: BlaschkeProduct, rep: MonodromyRep, y: complex, tol: Tolerances = DEFAULTS,
              record=None) -> np.ndarray:
    """The fiber over ``y`` labelled by continuation of the base fiber."""
    path = plan_path(rep.base_point, complex(y), rep.critical_values, tol.loop_clearance)
    return track(m, path, rep.base_fiber, tol, record)


def label_of(point, fiber, tol: Tolerances = DEFAULTS) -> int:
    fiber = np.asarray(fiber)
    d = np.abs(fiber - point)
    order = np.argsort(d)
    if len(order) > 1 and d[order[1]] < tol.ambiguity_ratio * d[order[0]]:
        raise NumericalError(f"ambiguous identification of {point} in the transported fiber")
    return int(order[0])


def component_of(m: SymbolMap, rep: MonodromyRep, atlas: ComponentAtlas, z, w,
                 tol: Tolerances = DEFAULTS) -> int:
    """Orbit id of the fiber-product component containing ``(z, w)``."""
    if isinstance(m, ProductMap):
        labels_z, labels_w = [], []
        for k, b in enumerate(m.factors):
            lz, lw = _labels_1d(b, rep.factors[k], z[k], w[k], tol)
            labels_z.append(lz)
            labels_w.append(lw)
        strides = _flat_strides(m.degrees)
        fz = sum(d * s for d, s in zip(labels_z, strides))
        fw = sum(d * s for d, s in zip(labels_w, strides))
        return atlas.orbit_of[fz][fw]
    lz, lw = _labels_1d(m, rep, z, w, tol)
    return atlas.orbit_of[lz][lw]


def _labels_1d(b: BlaschkeProduct, rep: MonodromyRep, z, w, tol):
    z, w = complex(z), complex(w)
    fz, fw = complex(b._f(z)), complex(b._f(w))
    if abs(fz - fw) > 1e-8:
        raise PreconditionError(f"B(z)={fz:.6g} and B(w)={fw:.6g} differ")
    fib = transport(b, rep, fz, tol)
    return label_of(z, fib, tol), label_of(w, fib, tol)


def factor_orbits(rep: MonodromyRep, atlas: ComponentAtlas, factor_atlases) -> list:
    """For a product-map atlas, the tuple of factor orbit ids of each product orbit."""
    degrees = [r.degree for r in rep.factors]
    strides = _flat_strides(degrees)

    def digits(flat):
        return [(flat // s) % d for s, d in zip(strides, degrees)]

    out = []
    for i, j in atlas.canonical_reps:
        di, dj = digits(i), digits(j)
        out.append(tuple(fa.orbit_of[a][c] for fa, a, c in zip(factor_atlases, di, dj)))
    return out


def identify_fibers(m: SymbolMap, rep_from: MonodromyRep, rep_to: MonodromyRep,
                    tol: Tolerances = DEFAULTS) -> tuple:
    """Label bijection between two base fibers of the same symbol.

    The base fiber of ``rep_from`` is continued to the base point of
    ``rep_to``; entry i of the result is the ``rep_to`` label reached by
    ``rep_from`` label i.  The bijection depends on the path only up to the
    monodromy action, so orbit partitions carried through it are well defined.
    For a product map the factor bijections act on the digits of flat labels.
    """
    if isinstance(m, ProductMap):
        perms = [identify_fibers(b, ra, rb, tol) for b, ra, rb in zip(m.factors, rep_from.factors, rep_to.factors)]
        strides = _flat_strides(m.degrees)
        out = []
        for digits in itertools.product(*[range(d) for d in m.degrees]):
            out.append(sum(p[dg] * st for p, dg, st in zip(perms, digits, strides)))
        return tuple(out)
    path = plan_path(rep_from.base_point, rep_to.base_point, rep_from.critical_values, tol.loop_clearance)
    end = track(m, path, rep_from.base_fiber, tol)
    return _match(end, rep_to.base_fiber, tol, "base point transfer")


def relabel_partition(atlas: ComponentAtlas, perm) -> frozenset:
    """The orbit partition with every label i replaced by ``perm[i]``."""
    return frozenset(frozenset((perm[i], perm[j]) for i, j in atlas.members(o))
                     for o in range(atlas.orbit_count))
