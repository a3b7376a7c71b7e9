"""striplab: lattice Schrodinger operators with random surface disorder.

Discretizes strip-restricted operators H = -Delta + V with alloy-type
surface randomness, and provides the spectral machinery to check the
identities this model forces (ground-state boundary invariance, averaged
transverse reduction, band parabolicity, gap comparisons) and to measure
what it only promises statistically (surface-state density curves,
Lifshits-tail exponents, Wegner-type window probabilities, localization
diagnostics).
"""

__version__ = "0.1.0"

from .grid import (
    Arm,
    Bloch,
    BoundarySpec,
    Dirichlet,
    GridSpec,
    Mezincescu,
    Neumann,
    bc_all_dirichlet,
    bc_all_neumann,
    build_grid,
    neighbors,
)
from .instances import SurfaceModel, classical_model, default_model, pinned_model
from .operator import GroundStateRef, Hamiltonian, assemble, quadratic_form
from .potential import (
    CompactProfile,
    IidUniformBulk,
    NoBulk,
    PotentialField,
    PowerLawProfile,
    TwoPointCouplings,
    UniformCouplings,
    estimate_bulk_bottom,
    periodic_bulk,
    sample_bulk,
    sample_surface,
    surface_floor,
)
from .spectral import (
    SpectralResult,
    count_below,
    lowest_k,
    rayleigh_ritz_upper,
    temple_lower_bound,
    variational_count_bound,
)
