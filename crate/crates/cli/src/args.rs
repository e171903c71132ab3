//! Flag surface: global options, one struct per subcommand, and the JSON
//! config file that can supply defaults for any long flag.
//!
//! Precedence everywhere is flag > config file > built-in default; the
//! resolved values are echoed into the JSON sidecar so a run can always be
//! reproduced from its own output.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "blochlab",
    version,
    about = "Qubit state estimation experiments: exact risks, Monte Carlo sweeps, scaling fits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Master seed; every randomized trial derives its stream from this.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output basename; writes <out>.csv and <out>.json. Defaults to the
    /// command name inside $BLOCHLAB_OUT (or the working directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for the Monte Carlo loops (default: one per core).
    /// Results do not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// JSON file supplying defaults for any long flag; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact Hellinger risk of square-root estimation in the Poisson
    /// regime, minimax and Bayes, over a log-spaced mu grid.
    PoissonRisk(PoissonRiskArgs),
    /// Monte Carlo risk of one estimator: worst case over a state grid,
    /// or pointwise at --truth.
    Risk(RiskArgs),
    /// Log-log fit of the risk across sample sizes.
    Scaling(ScalingArgs),
    /// Trace distance between a rotated spin block and its Gaussian limit.
    LanCheck(LanCheckArgs),
    /// Empirical tail frequency of stage-one errors against the
    /// corresponding analytic bound.
    Concentration(ConcentrationArgs),
    /// Remainder sweep of the Bures and relative-entropy expansions.
    MetricsCheck(MetricsCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Local,
    Collective,
    Naive,
    TruthOracle,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    Bures,
    Qre,
    Hellinger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseKind {
    Raw,
    Projected,
}

#[derive(Debug, Args)]
pub struct PoissonRiskArgs {
    /// Smallest mean on the grid.
    #[arg(long)]
    pub mu_min: Option<f64>,

    /// Largest mean on the grid.
    #[arg(long)]
    pub mu_max: Option<f64>,

    /// Number of log-spaced grid points (at least 2).
    #[arg(long)]
    pub steps: Option<usize>,

    /// Gamma prior shape; requires --beta and adds a Bayes risk column.
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Gamma prior rate; requires --alpha.
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorKind>,

    #[arg(long, value_enum)]
    pub loss: Option<LossKind>,

    /// Total number of copies handed to the estimator.
    #[arg(long)]
    pub n: Option<u64>,

    /// Monte Carlo trials per state (at least 100).
    #[arg(long)]
    pub trials: Option<u64>,

    /// "default", or comma-separated z-axis radii such as "0,0.5,0.9".
    #[arg(long)]
    pub grid: Option<String>,

    /// Bloch vector "x,y,z": evaluate pointwise there instead of sweeping.
    #[arg(long)]
    pub truth: Option<String>,

    /// Stage-one fraction of the two-step local estimator.
    #[arg(long)]
    pub fraction: Option<f64>,

    /// Stage-one exponent of the collective estimator (n1 ~ n^(1-kappa)).
    #[arg(long)]
    pub kappa: Option<f64>,

    /// Dispatch radius below which the collective estimator keeps its
    /// ball-projected preliminary estimate.
    #[arg(long)]
    pub delta: Option<f64>,

    /// Synthetic risk scale (calibration hook).
    #[arg(long)]
    pub synthetic_c: Option<f64>,

    /// Synthetic risk exponent (calibration hook).
    #[arg(long)]
    pub synthetic_power: Option<f64>,

    /// Multiply the synthetic risk by ln n (calibration hook).
    #[arg(long)]
    pub synthetic_log: bool,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorKind>,

    #[arg(long, value_enum)]
    pub loss: Option<LossKind>,

    /// Comma-separated sample sizes, strictly increasing, spanning at
    /// least 1.5 decades.
    #[arg(long)]
    pub ns: Option<String>,

    /// Monte Carlo trials per state and size.
    #[arg(long)]
    pub trials: Option<u64>,

    /// "default", or comma-separated z-axis radii.
    #[arg(long)]
    pub grid: Option<String>,

    /// Bloch vector "x,y,z": fit the pointwise risk there instead of the
    /// grid maximum.
    #[arg(long)]
    pub truth: Option<String>,

    /// Stage-one fraction of the two-step local estimator.
    #[arg(long)]
    pub fraction: Option<f64>,

    /// Stage-one exponent of the collective estimator.
    #[arg(long)]
    pub kappa: Option<f64>,

    /// Dispatch radius of the collective estimator.
    #[arg(long)]
    pub delta: Option<f64>,

    /// Synthetic risk scale (calibration hook).
    #[arg(long)]
    pub synthetic_c: Option<f64>,

    /// Synthetic risk exponent (calibration hook).
    #[arg(long)]
    pub synthetic_power: Option<f64>,

    /// Multiply the synthetic risk by ln n (calibration hook).
    #[arg(long)]
    pub synthetic_log: bool,
}

#[derive(Debug, Args)]
pub struct LanCheckArgs {
    /// Comma-separated qubit counts.
    #[arg(long)]
    pub ns: Option<String>,

    /// Smaller eigenvalue of the source state, in (0, 1/2).
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Rotation parameters "u,v" scaled into the block by 1/sqrt(n).
    #[arg(long)]
    pub w: Option<String>,

    /// Fock-space truncation used for the Gaussian limit.
    #[arg(long)]
    pub cutoff: Option<usize>,

    /// Shift the examined block away from the typical one in steps of 2
    /// units of total spin.
    #[arg(long)]
    pub j_offset: Option<i64>,
}

#[derive(Debug, Args)]
pub struct ConcentrationArgs {
    /// Which tail event: raw stage-one eigenvalue inversion, or the
    /// ball-projected variant on a vanishing fraction of the copies.
    #[arg(long, value_enum)]
    pub case: Option<CaseKind>,

    /// Copies used by the checked stage.
    #[arg(long)]
    pub n: Option<u64>,

    /// Localization exponent in (0, 1/2].
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Independent repetitions (at least 1000).
    #[arg(long)]
    pub reps: Option<u64>,

    /// Truth Bloch vector "x,y,z".
    #[arg(long)]
    pub truth: Option<String>,
}

#[derive(Debug, Args)]
pub struct MetricsCheckArgs {}

/// Defaults file. Keys mirror the long flag names; unknown keys are
/// rejected so typos fail loudly instead of being ignored.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub mu_min: Option<f64>,
    pub mu_max: Option<f64>,
    pub steps: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub estimator: Option<EstimatorKind>,
    pub loss: Option<LossKind>,
    pub n: Option<u64>,
    pub ns: Option<String>,
    pub trials: Option<u64>,
    pub grid: Option<String>,
    pub truth: Option<String>,
    pub fraction: Option<f64>,
    pub kappa: Option<f64>,
    pub delta: Option<f64>,
    pub synthetic_c: Option<f64>,
    pub synthetic_power: Option<f64>,
    pub synthetic_log: Option<bool>,
    pub lambda: Option<f64>,
    pub w: Option<String>,
    pub cutoff: Option<usize>,
    pub j_offset: Option<i64>,
    pub case: Option<CaseKind>,
    pub epsilon: Option<f64>,
    pub reps: Option<u64>,
}
