"""Quasi-probability cancellation of photon loss in truncated Fock spaces.

The package simulates bosonic states under photon loss, decomposes the
(non-physical) inverse loss map into physically realisable amplification
plus photon-subtraction channels with signed weights, and assembles
mitigated estimators of loss-free expectation values, both analytically
and from simulated single-shot experiments.
"""

from .errors import (
    ConfigError,
    DegenerateNormalizationError,
    DimensionOverflowError,
    DivergenceError,
    EmptyDecompositionError,
    GainOverflowError,
    LeakageError,
    LossCancelError,
    MissingChannelError,
    SpaceMismatchError,
    UnphysicalAmplificationError,
)
from .fock import (
    LEAKAGE_TOL,
    MAX_TOTAL_DIM,
    BosonicOperator,
    FockSpace,
    FockState,
    TwoModeBeamSplitter,
    annihilation,
    beam_splitter_unitary,
    cat_state,
    check_leakage,
    coherent_state,
    covariance_matrix,
    creation,
    entangled_coherent_state,
    expectation,
    fidelity_with_pure,
    fock_basis_state,
    gain_op,
    make_space,
    number_op,
    partial_trace,
    quadrature_p,
    quadrature_x,
    squeezed_vacuum,
    tensor,
    top_level_mass,
    trace_distance,
    two_mode_squeezed_vacuum,
)
from .channels import (
    DephasingParams,
    InverseDecomposition,
    KrausSet,
    LossParams,
    TmsvWeightWarning,
    apply_dephasing,
    apply_loss,
    decompose_inverse,
    dephasing_kraus,
    inverse_dephasing_exact,
    inverse_loss_exact,
    kraus_set,
    loss_kraus,
    tmsv_convergence_ratio,
    tmsv_omega,
)
from .observables import (
    MatrixObservable,
    Observable,
    ProductObservable,
    ProjectorObservable,
    covariance_entry_observable,
    number_observable,
)
from .protocol import (
    AnalyticReport,
    DiscretizedGaussianGamma,
    EstimatorReport,
    GammaDistribution,
    HeraldingSetup,
    JSet,
    MonteCarloPlan,
    PointMassGamma,
    ShotRecord,
    SingleShotChannelWarning,
    amplified_squeezing,
    analytic_expectations,
    beam_splitter_herald,
    build_heralding,
    derive_rng,
    herald_probabilities,
    heralded_state,
    mitigated_estimator,
    monte_carlo_run,
    monte_carlo_state_plan,
    optimize_mu,
    simulate_shots,
)
from .calibration import (
    GammaEstimate,
    LossyDevice,
    ProbeConfig,
    estimate_gamma,
    estimate_gamma_averaged,
    plan_shots,
    predicted_variance,
)

__version__ = "0.1.0"
