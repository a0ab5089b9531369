"""Predictor-corrector continuation of Blaschke fibers along paths in the image disc.

A path is a sequence of pieces (straight :class:`Line` segments and circular
:class:`Arc` pieces), each parametrised over ``t in [0, 1]``.  Every fiber
point is advanced with the first-order predictor ``dz = dy / B'(z)`` and then
corrected by Newton's method on ``B(z) - y``.  Steps are halved when Newton
needs too many iterations, when two tracked points come close, or when the
correction is large compared to the fiber separation (which would signal a
jump onto another branch); they are doubled after a run of easy steps.

The tracker is batch-native: :func:`track_lines` advances many independent
fibers along many straight segments at once, which is what the quadrature
layer uses to sweep a polar grid.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import DEFAULTS, Tolerances
from .errors import ConfigurationError, NumericalError, TrackingError
from .symbol import BlaschkeProduct


@dataclass(frozen=True)
class Line:
    start: complex
    end: complex

    def at(self, t):
        return self.start + (self.end - self.start) * t

    def distance_to(self, p: complex) -> float:
        d = self.end - self.start
        if d == 0:
            return abs(p - self.start)
        s = ((p - self.start) * d.conjugate()).real / abs(d) ** 2
        s = min(1.0, max(0.0, s))
        return abs(p - (self.start + s * d))

    def reversed(self) -> "Line":
        return Line(self.end, self.start)

    @property
    def length(self) -> float:
        return abs(self.end - self.start)


@dataclass(frozen=True)
class Arc:
    """Circle arc ``center + radius * exp(i theta)``, theta from ``theta0`` to ``theta1``."""

    center: complex
    radius: float
    theta0: float
    theta1: float

    def at(self, t):
        return self.center + self.radius * np.exp(1j * (self.theta0 + (self.theta1 - self.theta0) * t))

    @property
    def start(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * self.theta0)

    @property
    def end(self) -> complex:
        return self.center + self.radius * cmath.exp(1j * self.theta1)

    def distance_to(self, p: complex) -> float:
        rel = p - self.center
        lo, hi = sorted((self.theta0, self.theta1))
        if hi - lo >= 2 * math.pi:
            return abs(abs(rel) - self.radius)
        ang = cmath.phase(rel) if rel != 0 else lo
        # bring the angle into [lo, lo + 2 pi)
        ang = lo + (ang - lo) % (2 * math.pi)
        if ang <= hi:
            return abs(abs(rel) - self.radius)
        return min(abs(p - self.start), abs(p - self.end))

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.theta1, self.theta0)

    @property
    def length(self) -> float:
        return abs(self.theta1 - self.theta0) * self.radius


@dataclass(frozen=True)
class Path:
    """A continuous path in the image disc made of consecutive pieces."""

    pieces: tuple

    def __post_init__(self):
        pieces = tuple(p for p in self.pieces if p.length > 0)
        for a, b in zip(pieces, pieces[1:]):
            if abs(a.end - b.start) > 1e-12:
                raise ValueError("path pieces are not contiguous")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def polyline(cls, vertices: Sequence[complex]) -> "Path":
        vs = [complex(v) for v in vertices]
        return cls(tuple(Line(a, b) for a, b in zip(vs, vs[1:])))

    @property
    def start(self):
        return self.pieces[0].start if self.pieces else None

    @property
    def end(self):
        return self.pieces[-1].end if self.pieces else None

    @property
    def is_closed(self) -> bool:
        return not self.pieces or abs(self.start - self.end) <= 1e-12

    def clearance(self, points) -> float:
        """Minimum distance from the path to any of ``points``."""
        d = math.inf
        for p in points:
            for piece in self.pieces:
                d = min(d, piece.distance_to(complex(p)))
        return d

    def reversed(self) -> "Path":
        return Path(tuple(p.reversed() for p in reversed(self.pieces)))

    def __add__(self, other: "Path") -> "Path":
        return Path(self.pieces + other.pieces)


# a closed path; the invariant (closure, clearance) is checked where loops are built
Loop = Path


def lasso(base: complex, center: complex, radius: float) -> Path:
    """Segment from ``base`` towards ``center``, one positive turn around it, and back."""
    direction = base - center
    if abs(direction) <= radius:
        raise ConfigurationError("base point lies inside the lasso circle")
    phi = cmath.phase(direction)
    touch = center + radius * cmath.exp(1j * phi)
    return Path((Line(base, touch), Arc(center, radius, phi, phi + 2 * math.pi), Line(touch, base)))


def circle_loop(base: complex, radius: float) -> Path:
    """Radial segment from ``base`` to the circle |y| = radius, one positive turn, and back."""
    phi = cmath.phase(base) if base != 0 else 0.0
    touch = radius * cmath.exp(1j * phi)
    return Path((Line(base, touch), Arc(0j, radius, phi, phi + 2 * math.pi), Line(touch, base)))


def _min_separation(z: np.ndarray) -> np.ndarray:
    """Minimum pairwise distance within each row of ``z`` (shape (B, n))."""
    n = z.shape[1]
    if n < 2:
        return np.full(z.shape[0], np.inf)
    d = np.abs(z[:, :, None] - z[:, None, :])
    d[:, np.arange(n), np.arange(n)] = np.inf
    return d.min(axis=(1, 2))


def _advance(b: BlaschkeProduct, piece_at, z0: np.ndarray, tol: Tolerances, record=None, label=""):
    """Advance fibers ``z0`` (shape (B, n)) from t=0 to t=1 of ``piece_at(t, rows)``."""
    z = np.array(z0, dtype=complex, copy=True)
    B = z.shape[0]
    t = np.zeros(B)
    h = np.full(B, tol.initial_step)
    easy = np.zeros(B, dtype=int)
    y_cur = piece_at(t, np.arange(B))
    active = np.ones(B, dtype=bool)
    reason = np.array([""] * B, dtype=object)
    while active.any():
        rows = np.flatnonzero(active)
        t_new = np.minimum(t[rows] + h[rows], 1.0)
        y_new = piece_at(t_new, rows)
        zc = z[rows]
        with np.errstate(all="ignore"):
            zp = zc + (y_new - y_cur[rows])[:, None] / b._df(zc)
            zn = zp.copy()
            iters = np.full(len(rows), tol.max_newton + 1)
            pending = np.ones(len(rows), dtype=bool)
            for k in range(1, tol.max_newton + 2):
                if not pending.any():
                    break
                idx = np.flatnonzero(pending)
                zi = zn[idx]
                r = b._f(zi) - y_new[idx, None]
                d = r / b._df(zi)
                zi = zi - d
                zn[idx] = zi
                small = np.abs(d) <= tol.tracking_step * np.maximum(np.abs(zi), 1e-3)
                done = (np.abs(r) <= tol.tracking_residual).all(axis=1) & small.all(axis=1)
                iters[idx[done]] = k
                pending[idx[done]] = False
            sep = _min_separation(zn)
            jump = np.abs(zn - zp).max(axis=1)
        finite = np.isfinite(zn).all(axis=1)
        converged = finite & (iters <= tol.max_newton)
        apart = sep > 10 * tol.collision
        no_jump = jump <= 0.25 * sep
        ok = converged & apart & no_jump
        acc = rows[ok]
        z[acc] = zn[ok]
        t[acc] = t_new[ok]
        y_cur[acc] = y_new[ok]
        easy[acc] += 1
        grow = acc[(easy[acc] >= 3)]
        h[grow] = np.minimum(2 * h[grow], tol.max_step)
        easy[grow] = 0
        if record is not None and ok.any():
            for j in np.flatnonzero(ok):
                record.append((int(rows[j]), float(t_new[j]), complex(y_new[j]), zn[j].copy()))
        rej = rows[~ok]
        h[rej] /= 2
        easy[rej] = 0
        reason[rows[~ok & converged & ~apart]] = "collision"
        reason[rows[~ok & (~converged | apart)]] = "underflow"
        if np.any(h[rej] < tol.min_step):
            bad = rej[h[rej] < tol.min_step][0]
            what = "branch collision" if reason[bad] == "collision" else "step size underflow"
            raise TrackingError(
                f"{what} while tracking {label or 'segment'} at t={t[bad]:.6g}, y={y_cur[bad]:.6g}"
            )
        active = t < 1.0
    return z


def track(b: BlaschkeProduct, path: Path, start_fiber, tol: Tolerances = DEFAULTS, record=None):
    """Continue ``start_fiber`` (the fiber over ``path.start``) along ``path``.

    Index j of the result is the continuation of index j of ``start_fiber``.
    When ``record`` is a list, every accepted step is appended to it as
    ``(step, y, fiber)``.
    """
    z = np.asarray(start_fiber, dtype=complex).reshape(1, -1)
    if not path.pieces:
        return z[0].copy()
    y0 = path.start
    res = np.abs(b._f(z[0]) - y0).max()
    if res > 1e-8:
        raise NumericalError(f"start fiber does not lie over the path start (residual {res:.3g})")
    if record is not None:
        record.append((0, complex(y0), z[0].copy()))
    for k, piece in enumerate(path.pieces):
        steps = [] if record is not None else None
        z = _advance(b, lambda t, rows, p=piece: p.at(t), z, tol, steps, label=f"piece {k} ({piece})")
        if record is not None:
            for _, _, y, zz in steps:
                record.append((len(record), y, zz))
    return z[0]


def track_lines(b: BlaschkeProduct, starts, ends, fibers, tol: Tolerances = DEFAULTS):
    """Batch version of :func:`track` for straight segments ``starts[i] -> ends[i]``."""
    a = np.asarray(starts, dtype=complex)
    d = np.asarray(ends, dtype=complex) - a
    z = np.asarray(fibers, dtype=complex)
    if len(a) == 0:
        return z.copy()
    return _advance(b, lambda t, rows: a[rows] + d[rows] * t, z, tol, label="batched segment")


def detour(a: complex, c: complex, points, required) -> Path:
    """A path from ``a`` to ``c`` keeping distance ``required[k]`` from ``points[k]``.

    Tries the straight segment first, then two-leg polylines through waypoints
    offset perpendicular to the segment on either side of the offending point.
    """
    straight = Path((Line(a, c),))
    pts = [complex(p) for p in points]
    req = list(required)

    def ok(path):
        return all(
            piece.distance_to(p) >= r for piece in path.pieces for p, r in zip(pts, req)
        )

    if ok(straight):
        return straight
    seg = Line(a, c)
    direction = c - a
    normal = 1j * direction / abs(direction) if direction != 0 else 1j
    candidates = []
    for p, r in zip(pts, req):
        if seg.distance_to(p) >= r:
            continue
        s = ((p - a) * direction.conjugate()).real / max(abs(direction) ** 2, 1e-300)
        foot = a + min(1.0, max(0.0, s)) * direction
        for scale in (3.0, 10.0, 30.0):
            for sign in (1, -1):
                candidates.append(foot + sign * scale * r * normal)
    for w in candidates:
        path = Path.polyline([a, w, c])
        if ok(path):
            return path
    raise ConfigurationError(f"no detour from {a:.6g} to {c:.6g} clears the critical values")
