"""Numerical tolerances used across the package.

All defaults live in :data:`DEFAULTS`; pass a modified copy (``dataclasses.replace``)
to any operation that accepts ``tol=`` to override them.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # symbol
    regular_value_margin: float = 1e-6
    collision: float = 1e-9
    root_residual: float = 1e-10
    root_newton_steps: int = 50
    multiplicity_cluster: float = 1e-7
    # continuation
    tracking_residual: float = 1e-12
    tracking_step: float = 1e-12
    loop_clearance: float = 1e-4
    min_step: float = 1e-12
    initial_step: float = 1.0 / 16
    max_step: float = 1.0 / 8
    max_newton: int = 5
    ambiguity_ratio: float = 10.0
    boundary_radius: float = 0.999
    # quadrature
    z_exclusion: float = 1e-4
    # verification
    verification: float = 1e-8
    homomorphism: float = 1e-7
    idempotent: float = 1e-10

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if value <= 0:
                raise ValueError(f"tolerance {name} must be positive, got {value}")


DEFAULTS = Tolerances()
