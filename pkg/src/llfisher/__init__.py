"""Exact few-boson Lieb-Liniger states and their Fisher information.

Solves the Bethe equations for N repulsive bosons on a ring or in a box,
evaluates the eigenfunctions and Gaudin-determinant norms, computes the
quantum and classical Fisher information of the interaction strength,
and models a finite-resolution absorption-imaging measurement of the
atom positions.
"""

from .bethe import (
    BetheSolution,
    BoundaryCondition,
    ModelParams,
    NormData,
    SolverError,
    StateSpec,
    bethe_residual,
    dk_dc,
    dnorm_sq_dc,
    gaudin_matrix,
    ground_state,
    momentum,
    momentum_of,
    norm_sq,
    solve_bethe,
    type1_excitation,
    type2_excitation,
)
from .fisher import (
    BracketError,
    FisherReport,
    SweepResult,
    cfi,
    fisher_report,
    lmax,
    ordered_overlap,
    qfi_analytic,
    qfi_overlap_oracle,
    sweep,
)
from .imaging import (
    AbsorptionImage,
    ImageDistribution,
    PixelGrid,
    enumerate_images,
    image_distribution,
    imaging_cfi,
    load_shots,
    mle_estimate,
    multiplicity,
    sample_images,
    save_shots,
    uniform_grid,
)
from .integrals import (
    ExpPolyTerm,
    ResourceLimitError,
    SimplexIntegralRequest,
    antiderivative,
    box_quadrature,
    simplex_exp_integral,
    simplex_quadrature,
)
from .wavefunction import (
    AmplitudeTable,
    DegenerateStateError,
    PhaseClass,
    PointEval,
    amplitudes,
    eval_ordered,
    eval_symmetric,
    global_phase_class,
)

__version__ = "0.1.0"

__all__ = [
    "AbsorptionImage",
    "AmplitudeTable",
    "BetheSolution",
    "BoundaryCondition",
    "BracketError",
    "DegenerateStateError",
    "ExpPolyTerm",
    "FisherReport",
    "ImageDistribution",
    "ModelParams",
    "NormData",
    "PhaseClass",
    "PixelGrid",
    "PointEval",
    "ResourceLimitError",
    "SimplexIntegralRequest",
    "SolverError",
    "StateSpec",
    "SweepResult",
    "amplitudes",
    "antiderivative",
    "bethe_residual",
    "box_quadrature",
    "cfi",
    "dk_dc",
    "dnorm_sq_dc",
    "enumerate_images",
    "eval_ordered",
    "eval_symmetric",
    "fisher_report",
    "gaudin_matrix",
    "global_phase_class",
    "ground_state",
    "image_distribution",
    "imaging_cfi",
    "lmax",
    "load_shots",
    "mle_estimate",
    "momentum",
    "momentum_of",
    "multiplicity",
    "norm_sq",
    "ordered_overlap",
    "qfi_analytic",
    "qfi_overlap_oracle",
    "sample_images",
    "save_shots",
    "simplex_exp_integral",
    "simplex_quadrature",
    "solve_bethe",
    "sweep",
    "type1_excitation",
    "type2_excitation",
    "uniform_grid",
    "__version__",
]
