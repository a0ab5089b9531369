"""Reducing subspaces of Toeplitz operators with Blaschke-product symbols.

The pipeline runs symbol -> monodromy -> convolution algebra -> Bergman-space
verification: fibers of a finite Blaschke product are continued around its
critical values, the diagonal monodromy orbits on label pairs give the
components of the fiber product, their indicators span a convolution algebra,
and the algebra is realised by weighted composition operators that commute
with the multiplication operator T_B.
"""
from .bergman import (OperatorMatrix, ProjectionReport, ResidualRow, TruncatedBasis, adjoint_residual,
                      bergman_kernel, commutator_residual, homomorphism_residual, kernel_norm,
                      nullstellensatz_check, operator_bound, reducing_projections, spectral_norm,
                      taylor_coefficients, toeplitz_family, toeplitz_matrix, weighted_composition_matrix)
from .config import DEFAULTS, Tolerances
from .continuation import Arc, Line, Loop, Path, circle_loop, lasso, track, track_lines
from .errors import (AtlasError, ConfigurationError, ConsistencyError, InputError, NumericalError,
                     PreconditionError, TrackingError, UnsupportedError)
from .hecke import (ConvolutionAlgebra, convolve, idempotent_residuals, involution, is_commutative,
                    law_violations, minimal_idempotents, regular_representation, structure_constants,
                    tensor_product)
from .monodromy import (ComponentAtlas, MonodromyRep, boundary_permutation, build_monodromy,
                        choose_base, component_of, compose, cycle_notation, cycles, generated_group,
                        inverse, loop_permutation, pair_orbits, transport)
from .quadrature import QuadratureGrid
from .symbol import (BlaschkeProduct, ProductMap, critical_points, critical_values, derivative,
                     evaluate, fiber, symbol_from_json, symbol_to_json)

__version__ = "0.1.0"
