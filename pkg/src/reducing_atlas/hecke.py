"""The convolution algebra of locally constant functions on the fiber product.

Elements are complex coefficient vectors over the orbit indicators ``e_O``.  The
product ``(a * b)(z, w) = sum_t a(z, t) b(t, w)`` is encoded by the integer
structure tensor ``structure[O, P, Q]`` = number of intermediate labels t with
``(i, t) in O`` and ``(t, j) in P`` for any ``(i, j) in Q``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULTS, Tolerances
from .errors import ConsistencyError, InputError, NumericalError, UnsupportedError
from .monodromy import ComponentAtlas


@dataclass(frozen=True, eq=False)
class ConvolutionAlgebra:
    structure: np.ndarray  # (q, q, q) int64
    identity: np.ndarray  # (q,)
    involution: tuple  # orbit -> transposed orbit
    reps: tuple = ()

    @property
    def dim(self) -> int:
        return self.structure.shape[0]

    def basis(self, k: int) -> np.ndarray:
        e = np.zeros(self.dim, dtype=complex)
        e[k] = 1
        return e


def structure_constants(atlas: ComponentAtlas) -> ConvolutionAlgebra:
    """Exact integer structure tensor of the algebra spanned by the orbit indicators."""
    lab = atlas.as_array()
    n, q = atlas.n, atlas.orbit_count
    c = np.zeros((q, q, q), dtype=np.int64)
    for Q, (i, j) in enumerate(atlas.canonical_reps):
        np.add.at(c[:, :, Q], (lab[i, :], lab[:, j]), 1)
    # the count must not depend on the representative of Q
    for i in range(n):
        for j in range(n):
            Q = lab[i, j]
            counts = np.zeros((q, q), dtype=np.int64)
            np.add.at(counts, (lab[i, :], lab[:, j]), 1)
            if not np.array_equal(counts, c[:, :, Q]):
                raise ConsistencyError(f"structure constants depend on the representative of orbit {Q}")
    identity = np.zeros(q, dtype=complex)
    identity[list(atlas.diagonal_orbits)] = 1
    return ConvolutionAlgebra(c, identity, tuple(atlas.transpose), tuple(atlas.canonical_reps))


def _check(alg: ConvolutionAlgebra, *xs):
    for x in xs:
        if np.shape(x) != (alg.dim,):
            raise InputError(f"element of length {np.shape(x)} does not match algebra dimension {alg.dim}")


def convolve(alg: ConvolutionAlgebra, a, b) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _check(alg, a, b)
    return np.einsum("o,p,opq->q", a, b, alg.structure)


def involution(alg: ConvolutionAlgebra, a) -> np.ndarray:
    """``a*``: conjugate the coefficients and move each to the transposed orbit."""
    a = np.asarray(a, dtype=complex)
    _check(alg, a)
    out = np.empty_like(a)
    out[list(alg.involution)] = np.conj(a)
    return out


def is_commutative(alg: ConvolutionAlgebra) -> bool:
    return bool(np.array_equal(alg.structure, alg.structure.transpose(1, 0, 2)))


def regular_representation(alg: ConvolutionAlgebra, a) -> np.ndarray:
    """Matrix of left multiplication by ``a``: column P holds the coordinates of ``a * e_P``."""
    a = np.asarray(a, dtype=complex)
    _check(alg, a)
    return np.einsum("o,opq->qp", a, alg.structure)


def law_violations(alg: ConvolutionAlgebra) -> dict:
    """Exact integer defects of the associativity, identity and involution laws."""
    c = alg.structure
    assoc = np.einsum("opq,qrs->oprs", c, c) - np.einsum("prq,oqs->oprs", c, c)
    q = alg.dim
    ident = 0.0
    for k in range(q):
        e = alg.basis(k)
        ident = max(ident, np.abs(convolve(alg, alg.identity, e) - e).max(),
                    np.abs(convolve(alg, e, alg.identity) - e).max())
    inv = np.array(alg.involution)
    anti = c - c[inv][:, inv][:, :, inv].transpose(1, 0, 2)
    return {
        "associativity": int(np.abs(assoc).max()),
        "identity": float(ident),
        "involution": int(np.abs(anti).max()),
        "involutive": int(any(inv[inv[k]] != k for k in range(q))),
    }


def tensor_product(a: ConvolutionAlgebra, b: ConvolutionAlgebra) -> ConvolutionAlgebra:
    """Tensor product algebra; basis index ``i * b.dim + j`` stands for ``e_i (x) e_j``."""
    c = np.einsum("abc,xyz->axbycz", a.structure, b.structure)
    qa, qb = a.dim, b.dim
    c = c.reshape(qa * qb, qa * qb, qa * qb)
    inv = tuple(i * qb + j for i in a.involution for j in b.involution)
    return ConvolutionAlgebra(c, np.kron(a.identity, b.identity), inv)


def _self_adjoint_probe(alg, rng):
    # complex coefficients: a real self-adjoint element cannot separate a character
    # from its complex conjugate (e.g. in the group algebra of Z_n)
    r = rng.standard_normal(alg.dim) + 1j * rng.standard_normal(alg.dim)
    return r + involution(alg, r)


def minimal_idempotents(alg: ConvolutionAlgebra, seed: int = 0, probes: int = 20,
                        tol: Tolerances = DEFAULTS) -> list:
    """Minimal self-adjoint idempotents of a commutative semisimple algebra.

    A generic self-adjoint element x has a regular representation with ``dim``
    distinct (real) eigenvalues; its eigenprojections applied to the identity
    are the minimal idempotents.  Results are checked to ``tol.idempotent``.
    """
    if not is_commutative(alg):
        raise UnsupportedError("the convolution algebra is not commutative; idempotents are not extracted")
    q = alg.dim
    rng = np.random.default_rng(seed)
    for _ in range(probes):
        x = _self_adjoint_probe(alg, rng)
        L = regular_representation(alg, x)
        lam, V = np.linalg.eig(L)
        scale = max(1.0, np.abs(lam).max())
        gaps = np.abs(lam[:, None] - lam[None, :])
        gaps[np.diag_indices(q)] = np.inf
        if q == 1 or gaps.min() > 1e-6 * scale:
            break
    else:
        raise NumericalError(f"no self-adjoint probe separated the spectrum after {probes} attempts")
    order = np.argsort(lam.real, kind="stable")
    coeff = np.linalg.solve(V, alg.identity)
    ps = []
    for k in order:
        p = V[:, k] * coeff[k]
        p = 0.5 * (p + involution(alg, p))
        # one Newton-Schulz style refinement step: p <- 3p^2 - 2p^3
        p2 = convolve(alg, p, p)
        p = 3 * p2 - 2 * convolve(alg, p2, p)
        ps.append(p)
    _verify_idempotents(alg, ps, tol.idempotent)
    return ps


def idempotent_residuals(alg: ConvolutionAlgebra, ps) -> dict:
    worst_sq = worst_cross = worst_adj = 0.0
    for k, p in enumerate(ps):
        worst_sq = max(worst_sq, np.abs(convolve(alg, p, p) - p).max())
        worst_adj = max(worst_adj, np.abs(involution(alg, p) - p).max())
        for j, r in enumerate(ps):
            if j != k:
                worst_cross = max(worst_cross, np.abs(convolve(alg, p, r)).max())
    total = np.abs(np.sum(ps, axis=0) - alg.identity).max() if ps else np.inf
    return {"square": float(worst_sq), "orthogonality": float(worst_cross),
            "self_adjoint": float(worst_adj), "completeness": float(total)}


def _verify_idempotents(alg, ps, tol):
    res = idempotent_residuals(alg, ps)
    bad = {k: v for k, v in res.items() if v > tol}
    if bad:
        raise NumericalError(f"idempotent verification failed: {bad}")
