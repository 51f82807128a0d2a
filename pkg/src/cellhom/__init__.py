"""Periodic homogenization of planar elastic cells with holes and phases."""

__version__ = "0.1.0"

from .elastic_tensor import (  # noqa: E402
    E_MAT,
    HOMOGENEOUS_D,
    GeometricModulus,
    IsotropicModuli,
    VoigtMatrix,
    check_d_inequalities,
    classify_symmetry,
    clm_shift,
    dna_relations,
    effective_gradients,
    extract_D,
    invert,
    is_positive_definite,
    isotropic_compliance,
    isotropic_stiffness,
    moduli_from_engineering,
    reconstruct_Cstar,
    vigdergauz_constants,
)
from .errors import *  # noqa: E402,F401,F403
from .fem import CellProblem, MaterialField, SolverOptions, energy_bilinear, flux_line_integral, solve_cell, stress_field  # noqa: E402
from .geometry import CellGeometry, Circle, Ellipse, Polygon, Region, clear_line, contains_material, material_area, paper_cell, validate  # noqa: E402
from .homog import (  # noqa: E402
    bc_mode_comparison,
    clm_shift_check,
    effective_stiffness,
    extract_D_geomrepr,
    line_identity_check,
    michell_invariance_check,
    moduli_sweep,
    quasiperiod_path_diagnostic,
    square_symmetry_report,
    two_phase_paper_cell,
)
from .mesh import generate as generate_mesh, quality_report  # noqa: E402
