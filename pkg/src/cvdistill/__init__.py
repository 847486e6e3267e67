"""Continuous-variable entanglement distillation with coherent photon
addition/subtraction under thermal loss."""

from .chi_core import (
    ChannelParams,
    CoherentOp,
    DegreeOverflowError,
    GaussianKernel,
    MomentEngine,
    PolyGaussianChi,
    SingularKernelError,
    ZeroStateError,
    apply_coherent_op,
    apply_thermal_channel,
    evaluate_chi,
    gaussian_monomial_integral,
    normalize,
    tmsv_chi,
)
from .entanglement import (
    CovarianceMatrix,
    EigenConvergenceError,
    InvalidCovarianceError,
    MeasureRecord,
    covariance_from_chi,
    gaussian_log_negativity,
    jacobi_eigvalsh,
    log_negativity,
    partial_transpose,
    separation_eta,
    separation_time,
    success_probability,
    teleportation_fidelity,
    thermal_occupation,
)
from .fock_recon import (
    FockDensityMatrix,
    FockMatrixBuilder,
    QuadratureGrid,
    displacement_fock_poly,
    fock_element,
    fock_matrix,
    quadrature_fock_element,
    quadrature_fock_elements,
)
from .scenarios import (
    OptimizeResult,
    ScenarioConfig,
    Strategy,
    SweepRecord,
    default_eta_grid,
    evaluate_point,
    optimize_t,
    run_strategy,
    sweep_eta,
)

__version__ = "0.1.0"
