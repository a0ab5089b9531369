"""Polar product quadrature on a disc: Gauss-Legendre in r, uniform in theta."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class QuadratureGrid:
    m_r: int
    m_theta: int
    r_max: float = 1.0
    phase: float = 0.0  # angular offset, in units of the angular spacing

    def __post_init__(self):
        if self.m_r < 1 or self.m_theta < 1:
            raise ValueError("quadrature needs at least one node in each direction")
        if not 0 < self.r_max <= 1:
            raise ValueError(f"r_max must lie in (0, 1], got {self.r_max}")

    @cached_property
    def radii(self) -> np.ndarray:
        x, _ = np.polynomial.legendre.leggauss(self.m_r)
        return 0.5 * self.r_max * (x + 1)

    @cached_property
    def radial_weights(self) -> np.ndarray:
        """Weights for the radial integral of ``g(r) r dr``."""
        _, w = np.polynomial.legendre.leggauss(self.m_r)
        return 0.5 * self.r_max * w * self.radii

    @cached_property
    def angles(self) -> np.ndarray:
        return 2 * math.pi * (np.arange(self.m_theta) + self.phase) / self.m_theta

    @cached_property
    def points(self) -> np.ndarray:
        """Nodes of shape (m_theta, m_r): one row per angular ray, radii increasing."""
        return self.radii[None, :] * np.exp(1j * self.angles)[:, None]

    @cached_property
    def weights(self) -> np.ndarray:
        return np.broadcast_to(self.radial_weights * (2 * math.pi / self.m_theta),
                               (self.m_theta, self.m_r)).copy()

    def integrate(self, values) -> complex:
        """Area integral of samples taken at :attr:`points`."""
        return np.sum(self.weights * values)

    def with_phase(self, phase: float) -> "QuadratureGrid":
        return QuadratureGrid(self.m_r, self.m_theta, self.r_max, phase)

    def refined(self) -> "QuadratureGrid":
        return QuadratureGrid(2 * self.m_r, 2 * self.m_theta, self.r_max, self.phase)


def excluded_weights(grid: QuadratureGrid, points, radius: float):
    """Weights with nodes within ``radius`` of ``points`` dropped.

    The dropped weight is redistributed proportionally over the remaining nodes,
    so the total area is preserved.  Returns ``(weights, keep_mask)``.
    """
    w = grid.weights.copy()
    keep = np.ones(w.shape, dtype=bool)
    for p in np.atleast_1d(points):
        keep &= np.abs(grid.points - p) > radius
    if keep.all():
        return w, keep
    total = w.sum()
    w[~keep] = 0
    w *= total / w.sum()
    return w, keep
