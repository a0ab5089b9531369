"""Finite sections of operators on the Bergman space of the disc (and polydisc).

The orthonormal basis is ``e_k(z) = sqrt((k+1)/pi) z^k``.  Multiplication
operators are assembled from Taylor coefficients; weighted composition
operators

    (iota_c phi)(z) = sum_{w : B(w) = B(z)} c(z, w) B'(z)/B'(w) phi(w)

are assembled by quadrature on a polar grid whose fibers are labelled by
continuation from the base fiber, so that the component of every pair (z, w)
can be read off the atlas.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .config import DEFAULTS, Tolerances
from .continuation import detour, track, track_lines
from .errors import ConfigurationError, InputError, NumericalError, TrackingError
from .hecke import ConvolutionAlgebra, convolve
from .monodromy import ComponentAtlas, MonodromyRep, factor_orbits, pair_orbits, transport
from .quadrature import QuadratureGrid, excluded_weights
from .symbol import BlaschkeProduct, ProductMap, SymbolMap, evaluate, fiber

PHASES = (0.0, 0.5, 0.25, 0.75, 0.125, 0.375, 0.625, 0.875)
# products of sections are formed in a basis this many times larger, then cut back
OVERSAMPLE = 4
# padded product-map sections larger than this (per side) are not formed
PAD_LIMIT = 2048


@dataclass(frozen=True)
class TruncatedBasis:
    """Monomial orthonormal basis truncated at degree ``N - 1`` in each of ``d`` variables."""

    N: int
    d: int = 1

    def __post_init__(self):
        if self.N < 1 or self.d < 1:
            raise ValueError("basis needs N >= 1 and d >= 1")

    @property
    def size(self) -> int:
        return self.N ** self.d

    def values(self, z) -> np.ndarray:
        """``e_k(z)`` for k < N, stacked on a new last axis (one variable)."""
        z = np.asarray(z, dtype=complex)
        k = np.arange(self.N)
        return np.sqrt((k + 1) / math.pi) * z[..., None] ** k

    def multi_index(self, flat: int) -> tuple:
        return tuple(int(x) for x in np.unravel_index(flat, (self.N,) * self.d))


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Finite section of an operator together with the indices it is trusted on.

    ``padded`` optionally holds a larger section of the same operator, with the
    rows/columns of ``entries`` sitting at positions ``embed``.  Products are
    formed in the padded basis so that the sum over intermediate indices is not
    cut at N.
    """

    entries: np.ndarray
    trusted: np.ndarray
    padded: Optional[np.ndarray] = None
    embed: Optional[np.ndarray] = None

    def __post_init__(self):
        trusted = np.asarray(self.trusted, dtype=int)
        if trusted.ndim == 0:
            trusted = np.arange(int(trusted))
        if len(trusted) < 1:
            raise ConfigurationError("an operator matrix needs a non-empty trusted block")
        object.__setattr__(self, "trusted", trusted)
        if self.padded is not None:
            embed = np.arange(len(self.entries)) if self.embed is None else np.asarray(self.embed, dtype=int)
            object.__setattr__(self, "embed", embed)

    @property
    def trusted_block(self) -> int:
        return len(self.trusted)

    def block(self, index=None) -> np.ndarray:
        idx = self.trusted if index is None else index
        return self.entries[np.ix_(idx, idx)]


def _product_block(A: OperatorMatrix, B: OperatorMatrix, idx) -> np.ndarray:
    """``(AB)[idx, idx]``, using the padded sections when both operators carry them."""
    if (A.padded is not None and B.padded is not None and A.padded.shape == B.padded.shape
            and np.array_equal(A.embed, B.embed)):
        e = A.embed[idx]
        return A.padded[e, :] @ B.padded[:, e]
    return A.entries[idx, :] @ B.entries[:, idx]


def spectral_norm(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def _common(*ops) -> np.ndarray:
    idx = ops[0].trusted
    for op in ops[1:]:
        idx = np.intersect1d(idx, op.trusted)
    if len(idx) == 0:
        raise ConfigurationError("trusted blocks do not intersect")
    return idx


# -- multiplication operators -------------------------------------------------

def taylor_coefficients(b: BlaschkeProduct, count: int) -> np.ndarray:
    """First ``count`` Taylor coefficients of B at 0 by power-series division P / Q."""
    p = np.zeros(count, dtype=complex)
    p[: min(count, len(b.numerator))] = b.numerator[:count]
    q = np.zeros(count, dtype=complex)
    q[: min(count, len(b.denominator))] = b.denominator[:count]
    out = np.zeros(count, dtype=complex)
    for m in range(count):
        out[m] = p[m] - np.dot(q[1 : m + 1], out[m - 1 :: -1][:m]) if m else p[0]
    if not np.all(np.isfinite(out)):
        raise ConfigurationError("Taylor series of the symbol overflowed; reduce N")
    return out


def taylor_tail_bound(b: BlaschkeProduct, N: int) -> float:
    """Bound on sum_{m >= N} |f_m| from Cauchy estimates on the circle of radius R."""
    rho = max(abs(a) for a in b.zeros)
    if rho == 0:
        return 0.0
    R = 0.5 * (1 + 1 / rho)
    z = R * np.exp(2j * math.pi * np.arange(256) / 256)
    M = float(np.abs(b._f(z)).max())
    return M * R ** (-N) / (1 - 1 / R)


def toeplitz_matrix(b: BlaschkeProduct, basis: TruncatedBasis, oversample: int = OVERSAMPLE) -> OperatorMatrix:
    """``<B e_j, e_i> = f_{i-j} sqrt((j+1)/(i+1))`` for i >= j, zero above the diagonal."""
    if isinstance(b, ProductMap):
        raise InputError("use toeplitz_family for product maps")
    N = basis.N
    P = oversample * N
    f = taylor_coefficients(b, P)
    i, j = np.indices((P, P))
    T = np.where(i >= j, f[np.clip(i - j, 0, P - 1)] * np.sqrt((j + 1) / (i + 1)), 0).astype(complex)
    return OperatorMatrix(T[:N, :N].copy(), N, T)


def _embedding(N: int, P: int, d: int) -> np.ndarray:
    return np.ravel_multi_index(np.unravel_index(np.arange(N ** d), (N,) * d), (P,) * d)


def toeplitz_family(m: SymbolMap, basis: TruncatedBasis, oversample: int = OVERSAMPLE) -> list:
    """One multiplication operator per coordinate function of the symbol."""
    if isinstance(m, BlaschkeProduct):
        return [toeplitz_matrix(m, basis, oversample)]
    N, d = basis.N, m.dim
    P = oversample * N
    pad = P ** d <= PAD_LIMIT
    embed = _embedding(N, P, d)
    out = []
    for k, b in enumerate(m.factors):
        T = toeplitz_matrix(b, TruncatedBasis(N), oversample)
        mats = [np.eye(N)] * d
        mats[k] = T.entries
        padded = None
        if pad:
            big = [np.eye(P)] * d
            big[k] = T.padded
            padded = _kron(big)
        out.append(OperatorMatrix(_kron(mats), basis.size, padded, embed if pad else None))
    return out


def _kron(mats):
    out = np.array([[1.0 + 0j]])
    for a in mats:
        out = np.kron(out, a)
    return out


# -- fiber field on the quadrature grid ------------------------------------------

@dataclass(frozen=True, eq=False)
class FiberField:
    """Labelled fibers over every node of a quadrature grid."""

    grid: QuadratureGrid
    weights: np.ndarray  # (T, R), zero at dropped nodes
    keep: np.ndarray  # (T, R)
    fibers: np.ndarray  # (T, R, n), column k carries label k
    labels: np.ndarray  # (T, R), label of the node itself within its fiber


def _choose_phase(grid: QuadratureGrid, Z, radius: float) -> QuadratureGrid:
    if len(Z) == 0:
        return grid
    best, best_drop = grid, None
    for ph in PHASES:
        g = grid.with_phase(grid.phase + ph)
        drop = int((~excluded_weights(g, Z, radius)[1]).sum())
        if best_drop is None or drop < best_drop:
            best, best_drop = g, drop
        if drop == 0:
            break
    return best


def _segment_clearance(a, c, v):
    d = c - a
    den = np.where(np.abs(d) > 0, np.abs(d) ** 2, 1.0)
    s = np.clip(((v - a) * np.conj(d)).real / den, 0, 1)
    return np.abs(v - (a + s * d))


def _needs_detour(a, c, cvs, clearance):
    bad = np.zeros(len(a), dtype=bool)
    for v in cvs:
        req = np.minimum(clearance, 0.5 * np.minimum(np.abs(a - v), np.abs(c - v)))
        bad |= _segment_clearance(a, c, v) < req
    return bad


def _routed_track(b, a, c, fib, cvs, tol, where):
    req = [min(tol.loop_clearance, 0.5 * abs(a - v), 0.5 * abs(c - v)) for v in cvs]
    try:
        return track(b, detour(a, c, cvs, req), fib, tol)
    except (TrackingError, ConfigurationError) as exc:
        raise NumericalError(f"fiber transport failed near grid point {where}: {exc}") from exc


def fiber_field(b: BlaschkeProduct, rep: MonodromyRep, grid: QuadratureGrid,
                tol: Tolerances = DEFAULTS) -> FiberField:
    """Transport the base fiber to every grid node.

    The outermost ring is reached by one transport from the base point followed
    by a chain of short segments around the ring; every angular ray is then
    advanced inward node by node, all rays in one batch.  Nodes within
    ``tol.z_exclusion`` of the exceptional set are dropped (after choosing the
    angular phase that drops the fewest).
    """
    Z = b.exceptional_points
    grid = _choose_phase(grid, Z, tol.z_exclusion)
    weights, keep = excluded_weights(grid, Z, tol.z_exclusion) if len(Z) else (grid.weights, np.ones(grid.weights.shape, bool))
    pts = grid.points
    T, R = pts.shape
    n = b.degree
    if n == 1:
        return FiberField(grid, weights, keep, pts[..., None].copy(), np.zeros((T, R), dtype=int))
    if not keep[:, -1].all():
        raise ConfigurationError("the outermost quadrature ring passes through the exceptional set")
    cvs = list(rep.critical_values)
    ys = b._f(pts)
    fibers = np.full((T, R, n), np.nan + 0j)

    cur = transport(b, rep, ys[0, -1], tol)
    fibers[0, -1] = cur
    for j in range(1, T):
        cur = _routed_track(b, ys[j - 1, -1], ys[j, -1], cur, cvs, tol, pts[j, -1])
        fibers[j, -1] = cur

    cur = fibers[:, -1].copy()
    cur_y = ys[:, -1].copy()
    for k in range(R - 2, -1, -1):
        rows = np.flatnonzero(keep[:, k])
        if len(rows) == 0:
            continue
        a, c = cur_y[rows], ys[rows, k]
        bad = _needs_detour(a, c, cvs, tol.loop_clearance)
        good = rows[~bad]
        try:
            new = track_lines(b, cur_y[good], ys[good, k], cur[good], tol)
        except TrackingError:
            new = np.array([_routed_track(b, cur_y[r], ys[r, k], cur[r], cvs, tol, pts[r, k]) for r in good])
        cur[good] = new
        for r in rows[bad]:
            cur[r] = _routed_track(b, cur_y[r], ys[r, k], cur[r], cvs, tol, pts[r, k])
        cur_y[rows] = c
        fibers[rows, k] = cur[rows]

    dist = np.abs(fibers - pts[..., None])
    order = np.argsort(np.where(np.isnan(dist), np.inf, dist), axis=-1)
    labels = order[..., 0]
    d1 = np.take_along_axis(dist, order[..., :1], -1)[..., 0]
    d2 = np.take_along_axis(dist, order[..., 1:2], -1)[..., 0]
    ambiguous = keep & ~(d2 >= tol.ambiguity_ratio * d1)
    if ambiguous.any():
        t, r = np.argwhere(ambiguous)[0]
        raise NumericalError(f"ambiguous fiber label at grid point {pts[t, r]:.6g}")
    labels = np.where(keep, labels, 0)
    return FiberField(grid, weights, keep, fibers, labels)


@lru_cache(maxsize=32)
def _fiber_field_cached(b, rep, grid, tol):
    return fiber_field(b, rep, grid, tol)


@lru_cache(maxsize=32)
def orbit_operators(b: BlaschkeProduct, rep: MonodromyRep, atlas: ComponentAtlas, N: int,
                    grid: QuadratureGrid, tol: Tolerances = DEFAULTS) -> np.ndarray:
    """Stack ``A[O]`` of the N x N sections of ``iota_{e_O}`` for every orbit O."""
    ff = _fiber_field_cached(b, rep, grid, tol)
    basis = TruncatedBasis(N)
    q = atlas.orbit_count
    n = b.degree
    orbit_of = atlas.as_array()
    pts = ff.grid.points
    A = np.zeros((q, N, N), dtype=complex)
    chunk = max(1, 2 ** 20 // (pts.shape[1] * n * N))
    for t0 in range(0, pts.shape[0], chunk):
        sl = slice(t0, t0 + chunk)
        keep = ff.keep[sl]
        z = pts[sl]
        fib = np.where(keep[..., None], ff.fibers[sl], 0)
        with np.errstate(all="ignore"):
            ratio = b._df(z)[..., None] / b._df(fib)
        ratio = np.where(keep[..., None], ratio, 0)
        lab = orbit_of[ff.labels[sl][..., None], np.arange(n)]
        Ew = basis.values(fib)
        Ez = np.conj(basis.values(z)) * ff.weights[sl][..., None]
        for O in range(q):
            G = np.einsum("trk,trkj->trj", np.where(lab == O, ratio, 0), Ew)
            A[O] += np.einsum("tri,trj->ij", Ez, G)
    A.setflags(write=False)
    return A


def _trusted_1d(b: BlaschkeProduct, N: int) -> int:
    M = N - 2 * b.degree
    if M < 4:
        raise ConfigurationError(f"trusted block {M} < 4; increase N (currently {N})")
    return M


def _product_trusted(m: ProductMap, N: int) -> np.ndarray:
    Ms = [_trusted_1d(b, N) for b in m.factors]
    idx = [i for i in range(N ** m.dim)
           if all(d < M for d, M in zip(np.unravel_index(i, (N,) * m.dim), Ms))]
    return np.array(idx, dtype=int)


def _coefficients(atlas: ComponentAtlas, c) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    if c.shape != (atlas.orbit_count,):
        raise InputError(f"expected {atlas.orbit_count} coefficients, got {c.shape}")
    return c


def _product_stacks(m: ProductMap, rep: MonodromyRep, atlas: ComponentAtlas, N: int, grid, tol):
    fatl = [pair_orbits(r) for r in rep.factors]
    stacks = [orbit_operators(b, r, a, N, grid, tol) for b, r, a in zip(m.factors, rep.factors, fatl)]
    return factor_orbits(rep, atlas, fatl), stacks


def weighted_composition_matrix(m: SymbolMap, rep: MonodromyRep, atlas: ComponentAtlas, c,
                                basis: TruncatedBasis, grid: QuadratureGrid,
                                tol: Tolerances = DEFAULTS, oversample: int = OVERSAMPLE) -> OperatorMatrix:
    """Finite section of ``iota_c`` for the algebra element with orbit coefficients ``c``."""
    c = _coefficients(atlas, c)
    N = basis.N
    P = oversample * N
    if isinstance(m, ProductMap):
        fo, stacks = _product_stacks(m, rep, atlas, P, grid, tol)
        pad = P ** m.dim <= PAD_LIMIT
        out = np.zeros((basis.size, basis.size), dtype=complex)
        padded = np.zeros((P ** m.dim,) * 2, dtype=complex) if pad else None
        for Q, coef in enumerate(c):
            if coef != 0:
                out += coef * _kron([s[o][:N, :N] for s, o in zip(stacks, fo[Q])])
                if pad:
                    padded += coef * _kron([s[o] for s, o in zip(stacks, fo[Q])])
        embed = _embedding(N, P, m.dim) if pad else None
        return OperatorMatrix(out, _product_trusted(m, N), padded, embed)
    M = _trusted_1d(m, N)
    A = np.einsum("o,oij->ij", c, orbit_operators(m, rep, atlas, P, grid, tol))
    return OperatorMatrix(A[:N, :N].copy(), M, A)


def adjoint_coefficients(atlas: ComponentAtlas, c) -> np.ndarray:
    c = _coefficients(atlas, c)
    out = np.empty_like(c)
    out[list(atlas.transpose)] = np.conj(c)
    return out


# -- residuals ------------------------------------------------------------------

@dataclass(frozen=True)
class ResidualRow:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual < self.tolerance)


def commutator_residual(A: OperatorMatrix, B: OperatorMatrix) -> float:
    """Spectral norm of ``AB - BA`` on the common trusted block."""
    idx = _common(A, B)
    return spectral_norm(_product_block(A, B, idx) - _product_block(B, A, idx))


def adjoint_residual(m: SymbolMap, rep, atlas, c, basis, grid, tol: Tolerances = DEFAULTS) -> float:
    """Spectral norm of ``matrix(iota_c)^H - matrix(iota_{c*})`` on the trusted block."""
    A = weighted_composition_matrix(m, rep, atlas, c, basis, grid, tol)
    As = weighted_composition_matrix(m, rep, atlas, adjoint_coefficients(atlas, c), basis, grid, tol)
    idx = _common(A, As)
    return spectral_norm((A.entries.conj().T - As.entries)[np.ix_(idx, idx)])


def homomorphism_residual(m: SymbolMap, rep, atlas, alg: ConvolutionAlgebra, a, b, basis, grid,
                          tol: Tolerances = DEFAULTS) -> float:
    """Spectral norm of ``matrix(iota_{a*b}) - matrix(iota_a) matrix(iota_b)`` on the trusted block."""
    Aa = weighted_composition_matrix(m, rep, atlas, a, basis, grid, tol)
    Ab = weighted_composition_matrix(m, rep, atlas, b, basis, grid, tol)
    Aab = weighted_composition_matrix(m, rep, atlas, convolve(alg, a, b), basis, grid, tol)
    idx = _common(Aa, Ab, Aab)
    return spectral_norm(Aab.block(idx) - _product_block(Aa, Ab, idx))


@dataclass
class ProjectionReport:
    projections: list  # of (OperatorMatrix, rank)
    residuals: list = field(default_factory=list)

    @property
    def ranks(self) -> list:
        return [r for _, r in self.projections]

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.residuals)

    @property
    def failures(self) -> list:
        return [row for row in self.residuals if not row.passed]


def reducing_projections(m: SymbolMap, rep, atlas, idempotents, basis, grid,
                         tol: Tolerances = DEFAULTS) -> ProjectionReport:
    """Realise minimal idempotents as projections and verify them on the trusted block.

    Failing checks are reported in the returned rows; nothing is raised.
    """
    vt = tol.verification
    Ts = toeplitz_family(m, basis)
    report = ProjectionReport([])
    mats = []
    for k, p in enumerate(idempotents):
        P = weighted_composition_matrix(m, rep, atlas, p, basis, grid, tol)
        idx = P.trusted
        B = P.block()
        sq = spectral_norm(_product_block(P, P, idx) - B)
        adj = spectral_norm(B.conj().T - B)
        comm = max(commutator_residual(T, P) for T in Ts)
        rank = int(round(np.trace(B).real))
        report.projections.append((P, rank))
        report.residuals += [ResidualRow(f"projection[{k}].idempotent", sq, vt),
                             ResidualRow(f"projection[{k}].self_adjoint", adj, vt),
                             ResidualRow(f"projection[{k}].commutes_with_T", comm, vt)]
        mats.append(P)
    if mats:
        idx = _common(*mats)
        total = sum(P.entries for P in mats)[np.ix_(idx, idx)]
        report.residuals.append(ResidualRow("projections.completeness",
                                            spectral_norm(total - np.eye(len(idx))), vt))
        worst = 0.0
        for i, P in enumerate(mats):
            for j, Q in enumerate(mats):
                if i != j:
                    worst = max(worst, spectral_norm(_product_block(P, Q, idx)))
        report.residuals.append(ResidualRow("projections.orthogonality", worst, vt))
        rank_gap = abs(sum(report.ranks) - len(idx))
        report.residuals.append(ResidualRow("projections.rank_sum", float(rank_gap), 0.5))
    return report


# -- reproducing kernel -----------------------------------------------------------

def bergman_kernel(z, w):
    """``K_w(z) = 1 / (pi (1 - z conj(w))^2)``, so that ``<g, K_w> = g(w)``."""
    return 1.0 / (math.pi * (1 - np.asarray(z) * np.conj(w)) ** 2)


def kernel_norm(w, basis: TruncatedBasis, check_tail: bool = True, rel_tol: float = 1e-10) -> float:
    """``||K_w||`` from the partial sum over the truncated basis.

    The neglected tail sum_{k >= N} (k+1) x^k = x^N (N + 1 - N x) / (1 - x)^2 with
    x = |w|^2 is known in closed form; when it exceeds ``rel_tol`` of the partial
    sum a :class:`ConfigurationError` asks for a larger N.
    """
    if basis.d != 1:
        ws = tuple(w)
        return math.prod(kernel_norm(wi, TruncatedBasis(basis.N), check_tail, rel_tol) for wi in ws)
    x = abs(complex(w)) ** 2
    if x > 0.999 ** 2 + 1e-15:
        raise InputError(f"|w| = {math.sqrt(x):.6g} exceeds 0.999")
    N = basis.N
    k = np.arange(N)
    s = float(np.sum((k + 1) * x ** k)) / math.pi
    if check_tail:
        tail = x ** N * (N + 1 - N * x) / (1 - x) ** 2 / math.pi
        if tail > rel_tol * s:
            raise ConfigurationError(
                f"kernel series tail {tail / s:.3g} (relative) exceeds {rel_tol:g} at |w|={math.sqrt(x):.4g}; raise N"
            )
    return math.sqrt(s)


def reproducing_pairing(b: BlaschkeProduct, lam, g: Sequence[complex], w, grid: QuadratureGrid) -> complex:
    """``<(B - B(lam)) g, K_w>`` by quadrature; ``g`` holds ascending polynomial coefficients."""
    z = grid.points
    h = (b._f(z) - complex(b._f(lam))) * npoly.polyval(z, np.asarray(g, dtype=complex))
    return complex(grid.integrate(h * np.conj(bergman_kernel(z, w))))


def nullstellensatz_check(b: BlaschkeProduct, lam, g: Sequence[complex], grid: QuadratureGrid,
                          tol: Tolerances = DEFAULTS) -> float:
    """Largest ``|<(B - B(lam)) g, K_w>|`` over the fiber of ``B(lam)``; exactly zero in theory."""
    if isinstance(b, ProductMap):
        raise InputError("nullstellensatz_check expects a single Blaschke factor")
    ws = fiber(b, evaluate(b, lam), tol)
    return max(abs(reproducing_pairing(b, lam, g, w, grid)) for w in ws)


def operator_bound(m: SymbolMap, c) -> float:
    """``m * max|c|``, the bound on ``||iota_c||`` where m is the number of sheets."""
    return m.degree * float(np.max(np.abs(c)))
