"""Moving-frame calculus for almost-Hermitian metric pairs on flat tori.

The package computes, on :math:`T^2` and :math:`T^4`:

* almost complex structures, taming and compatible 2-forms, and the metrics
  they induce (:mod:`cyframe.structures`),
* the canonical connection of a unitary coframe, its torsion and curvature,
  and the covariant-derivative calculus (:mod:`cyframe.connection`),
* a certification suite for the structure-equation and Bianchi-type
  identities of that calculus (:mod:`cyframe.identities`),
* the two-metric machinery (transition matrices, their derivatives, trace
  and determinant Laplacian identities, curvature-positivity scans,
  potentials and exponential integrals) (:mod:`cyframe.pairs`),
* a damped-Newton solver for the torus Monge-Ampere equation
  :math:`\\det \\tilde g = e^{2F} \\det g` in a fixed Kahler class
  (:mod:`cyframe.solver`),
* deterministic scenario configs, reports and a CLI (:mod:`cyframe.scenarios`,
  :mod:`cyframe.reporting`, :mod:`cyframe.cli`).

Everything is spectral (Fourier collocation) and deterministic; residual
norms are sup-norms normalized by the largest term of the identity under
test.
"""

from cyframe.grid import (
    GridSpec,
    PeriodicField,
    PoissonResult,
    partial_derivative,
    integrate,
    grid_mean,
    solve_poisson,
    refinement_order,
)

__version__ = "0.1.0"

__all__ = [
    "GridSpec",
    "PeriodicField",
    "PoissonResult",
    "partial_derivative",
    "integrate",
    "grid_mean",
    "solve_poisson",
    "refinement_order",
    "__version__",
]
