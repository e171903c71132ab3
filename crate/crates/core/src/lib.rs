//! Qubit state estimation: Bloch-vector states, fidelity-family metrics,
//! add-beta eigenvalue estimation, adaptive and collective estimators, and a
//! deterministic Monte Carlo risk harness.

pub mod binomial;
pub mod collective;
pub mod error;
pub mod local_adaptive;
pub mod metrics;
pub mod risk;
pub mod special;
pub mod states;
pub mod stream;

pub use binomial::{
    add_beta, bayes_sqrt_estimate, bayes_sqrt_risk, hellinger_risk_exact, kl_risk_exact,
    kl_risk_sup, lambda_sup_grid, poisson_sqrt_risk, standard_frequency,
    standard_frequency_clamped, GammaPrior, PoissonRiskPoint,
};
pub use collective::{
    build_block_state, gaussian_displaced_thermal, k_factor, lan_trace_distance,
    local_minimax_constant, ml_ball_estimate, quadrature_means, run_collective, typical_two_j,
    BlockDistribution, Branch, CollectiveConfig, CollectiveResult, CollectiveSampler,
    HeterodyneModel,
};
pub use error::{Error, Result};
pub use local_adaptive::{
    local_adaptive_risk, run_local_adaptive, stage_two_probability, LocalAdaptiveConfig,
    LocalAdaptiveResult,
};
pub use metrics::{
    bures_sq, bures_sq_expansion, bures_weight_bloch, bures_weight_local, fidelity,
    fisher_pauli, hellinger_sq, kl, qre, qre_expansion, BinaryDist, LossDecomposition,
};
pub use risk::{
    build_grid, concentration_check, fit_loglog, max_risk_sweep, monte_carlo_risk, scaling_fit,
    ConcentrationCase, ConcentrationReport, EstimatorSpec, GridSpec, Loss, RiskEstimate,
    ScalingFit, SweepResult,
};
pub use states::{
    bloch_from_counts, density_matrix, local_coordinates, project_to_ball, reconstruct,
    sample_pauli_outcomes, BlochState, LocalTheta, OutcomeCounts, Rotation,
};
pub use stream::{mix_seed, trial_rng};
