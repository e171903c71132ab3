//! Monte Carlo risk harness: pointwise risk, worst-case grid sweeps,
//! log-log scaling fits, and empirical checks of the concentration bounds
//! the two-stage estimators rest on.
//!
//! Every trial gets its own RNG keyed by (master seed, sample size, stream,
//! trial index), so results do not depend on the worker count and no random
//! numbers are shared between sample sizes or grid states.

use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::collective::{CollectiveConfig, CollectiveSampler};
use crate::error::{Error, Result};
use crate::local_adaptive::{run_local_adaptive, LocalAdaptiveConfig};
use crate::metrics::{bures_sq, hellinger_sq, qre, BinaryDist};
use crate::states::{bloch_from_counts, project_to_ball, sample_pauli_outcomes, BlochState};
use crate::stream::{mix_seed, trial_rng};

// Stream tags reserved for non-trial draws. Grid directions get their own
// stream so they stay fixed when n or the trial budget changes.
const DIRECTION_STREAM: u64 = u64::MAX;
const CONCENTRATION_STREAM: u64 = u64::MAX - 1;

/// Loss functions the harness can average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    BuresSq,
    Qre,
    HellingerEigen,
}

impl Loss {
    pub fn name(self) -> &'static str {
        match self {
            Loss::BuresSq => "bures_sq",
            Loss::Qre => "qre",
            Loss::HellingerEigen => "hellinger_eigen",
        }
    }

    /// Loss of `est` against `truth`, plus whether a pure estimate had to
    /// be pulled inside the ball to keep the relative entropy finite.
    fn evaluate(self, truth: &BlochState, est: &BlochState) -> (f64, bool) {
        match self {
            Loss::BuresSq => (bures_sq(truth, est), false),
            Loss::HellingerEigen => (
                hellinger_sq(&BinaryDist::eigen_of(truth), &BinaryDist::eigen_of(est)),
                false,
            ),
            Loss::Qre => {
                if est.is_pure() && (truth.r() - est.r()).norm() >= 1e-12 {
                    let pulled = BlochState::new(est.r() * (1.0 - 1e-9))
                        .expect("shrunk vector stays inside the ball");
                    (qre(truth, &pulled), true)
                } else {
                    (qre(truth, est), false)
                }
            }
        }
    }
}

/// Estimator families the harness can drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorSpec {
    /// Two-stage separable scheme: direction from the first stage, radius
    /// from measuring along it.
    Local { fraction: f64 },
    /// Block sampling plus frame-local Gaussian read-out, with an ML
    /// fallback near the centre of the ball.
    Collective { kappa: f64, delta: f64 },
    /// Even xyz split, linear inversion, projection onto the ball.
    Naive,
    /// Returns the truth itself; calibrates the harness.
    TruthOracle,
    /// Deterministic risk c * n^power (times ln n when asked), for
    /// validating the fitting pipeline end to end.
    Synthetic { c: f64, power: f64, with_log: bool },
}

impl EstimatorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorSpec::Local { .. } => "local",
            EstimatorSpec::Collective { .. } => "collective",
            EstimatorSpec::Naive => "naive",
            EstimatorSpec::TruthOracle => "truth_oracle",
            EstimatorSpec::Synthetic { .. } => "synthetic",
        }
    }
}

// Everything that can be set up once per (truth, n) and shared read-only
// across trials.
enum Prepared {
    Local(LocalAdaptiveConfig),
    Collective(Box<CollectiveSampler>),
    Naive { per_axis: u64 },
    TruthOracle,
    Synthetic { risk: f64 },
}

impl Prepared {
    fn build(spec: &EstimatorSpec, truth: &BlochState, n: u64) -> Result<Self> {
        match *spec {
            EstimatorSpec::Local { fraction } => {
                Ok(Self::Local(LocalAdaptiveConfig::new(n, fraction)?))
            }
            EstimatorSpec::Collective { kappa, delta } => Ok(Self::Collective(Box::new(
                CollectiveSampler::new(*truth, CollectiveConfig::new(n, kappa, delta)?)?,
            ))),
            EstimatorSpec::Naive => {
                if n < 3 {
                    return Err(Error::Domain(format!("naive estimator needs n >= 3, got {n}")));
                }
                Ok(Self::Naive { per_axis: n / 3 })
            }
            EstimatorSpec::TruthOracle => Ok(Self::TruthOracle),
            EstimatorSpec::Synthetic { c, power, with_log } => {
                if n < 2 {
                    return Err(Error::Domain("synthetic risk needs n >= 2".into()));
                }
                let nf = n as f64;
                let mut risk = c * nf.powf(power);
                if with_log {
                    risk *= nf.ln();
                }
                Ok(Self::Synthetic { risk })
            }
        }
    }

    fn estimate<R: Rng + ?Sized>(&self, truth: &BlochState, rng: &mut R) -> Result<BlochState> {
        match self {
            Self::Local(cfg) => Ok(run_local_adaptive(truth, cfg, rng).estimate),
            Self::Collective(sampler) => Ok(sampler.run(rng)?.estimate),
            Self::Naive { per_axis } => Ok(project_to_ball(bloch_from_counts(
                &sample_pauli_outcomes(truth, *per_axis, rng),
            ))),
            Self::TruthOracle => Ok(*truth),
            Self::Synthetic { .. } => unreachable!("synthetic risk never draws samples"),
        }
    }
}

/// Monte Carlo estimate of a pointwise risk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub n: u64,
    pub loss_name: String,
    pub estimator_name: String,
    /// Hash of everything that determines the run; equal fingerprints mean
    /// bit-identical output.
    pub config_fingerprint: String,
    /// Trials whose pure estimate was nudged inward before the QRE.
    pub qre_nudged: u64,
}

fn fingerprint(
    spec: &EstimatorSpec,
    loss: Loss,
    truth: &BlochState,
    n: u64,
    trials: u64,
    master_seed: u64,
    stream: u64,
) -> String {
    #[derive(Serialize)]
    struct Record<'a> {
        estimator: &'a EstimatorSpec,
        loss: &'static str,
        truth: [f64; 3],
        n: u64,
        trials: u64,
        master_seed: u64,
        stream: u64,
    }
    let r = truth.r();
    let json = serde_json::to_string(&Record {
        estimator: spec,
        loss: loss.name(),
        truth: [r.x, r.y, r.z],
        n,
        trials,
        master_seed,
        stream,
    })
    .expect("fingerprint record serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Mean loss of an estimator at a fixed truth over independent trials.
pub fn monte_carlo_risk(
    spec: &EstimatorSpec,
    truth: &BlochState,
    n: u64,
    trials: u64,
    loss: Loss,
    master_seed: u64,
) -> Result<RiskEstimate> {
    mc_risk_stream(spec, truth, n, trials, loss, master_seed, 0)
}

fn mc_risk_stream(
    spec: &EstimatorSpec,
    truth: &BlochState,
    n: u64,
    trials: u64,
    loss: Loss,
    master_seed: u64,
    stream: u64,
) -> Result<RiskEstimate> {
    if trials < 100 {
        return Err(Error::Domain(format!("trials {trials} below the floor of 100")));
    }
    let prepared = Prepared::build(spec, truth, n)?;
    let config_fingerprint = fingerprint(spec, loss, truth, n, trials, master_seed, stream);
    if let Prepared::Synthetic { risk } = prepared {
        return Ok(RiskEstimate {
            mean: risk,
            stderr: 0.0,
            trials,
            n,
            loss_name: loss.name().to_string(),
            estimator_name: spec.name().to_string(),
            config_fingerprint,
            qre_nudged: 0,
        });
    }
    let seed = mix_seed(master_seed, n);
    let samples = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, stream, t);
            let est = prepared.estimate(truth, &mut rng)?;
            let (l, nudged) = loss.evaluate(truth, &est);
            if !l.is_finite() {
                return Err(Error::Numeric(format!("trial {t} produced loss {l}")));
            }
            Ok((l, nudged))
        })
        .collect::<Result<Vec<_>>>()?;
    let tf = trials as f64;
    let mut sum = 0.0;
    let mut qre_nudged = 0u64;
    for &(l, nd) in &samples {
        sum += l;
        qre_nudged += u64::from(nd);
    }
    let mean = sum / tf;
    let ss: f64 = samples.iter().map(|&(l, _)| (l - mean) * (l - mean)).sum();
    let stderr = (ss / (tf - 1.0) / tf).sqrt();
    Ok(RiskEstimate {
        mean,
        stderr,
        trials,
        n,
        loss_name: loss.name().to_string(),
        estimator_name: spec.name().to_string(),
        config_fingerprint,
        qre_nudged,
    })
}

/// How to lay out truth states for a worst-case sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    /// Radii {0, 0.3, 0.6, 0.9, 0.99, 1 - 1/n, 1} along +z plus three
    /// fixed random directions at radius 0.99.
    Default,
    /// Given radii along +z.
    ZAxis { radii: Vec<f64> },
    /// Explicit Bloch vectors.
    Explicit { states: Vec<[f64; 3]> },
}

/// Truth states for a sweep; at least three.
pub fn build_grid(spec: &GridSpec, n: u64, master_seed: u64) -> Result<Vec<BlochState>> {
    let states = match spec {
        GridSpec::Default => {
            if n == 0 {
                return Err(Error::Domain("default grid needs n >= 1".into()));
            }
            let mut v = Vec::with_capacity(10);
            for s in [0.0, 0.3, 0.6, 0.9, 0.99, 1.0 - 1.0 / n as f64, 1.0] {
                v.push(BlochState::from_xyz(0.0, 0.0, s)?);
            }
            for i in 0..3u64 {
                let mut rng = trial_rng(master_seed, DIRECTION_STREAM, i);
                let dir: [f64; 3] = UnitSphere.sample(&mut rng);
                v.push(BlochState::from_xyz(0.99 * dir[0], 0.99 * dir[1], 0.99 * dir[2])?);
            }
            v
        }
        GridSpec::ZAxis { radii } => radii
            .iter()
            .map(|&s| BlochState::from_xyz(0.0, 0.0, s))
            .collect::<Result<Vec<_>>>()?,
        GridSpec::Explicit { states } => states
            .iter()
            .map(|v| BlochState::from_xyz(v[0], v[1], v[2]))
            .collect::<Result<Vec<_>>>()?,
    };
    if states.len() < 3 {
        return Err(Error::Domain(format!(
            "grid has {} states, need at least 3",
            states.len()
        )));
    }
    Ok(states)
}

/// Risk on every grid state plus the maximiser (first index on ties).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub grid: Vec<[f64; 3]>,
    pub per_state: Vec<RiskEstimate>,
    pub max_state: usize,
    pub max_risk: f64,
}

/// Worst-case risk over a grid of truths. State i draws from stream i, so
/// enlarging the grid appends work without disturbing earlier states.
pub fn max_risk_sweep(
    spec: &EstimatorSpec,
    grid: &GridSpec,
    n: u64,
    trials: u64,
    loss: Loss,
    master_seed: u64,
) -> Result<SweepResult> {
    let states = build_grid(grid, n, master_seed)?;
    let mut per_state = Vec::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        per_state.push(mc_risk_stream(spec, s, n, trials, loss, master_seed, i as u64)?);
    }
    let mut max_state = 0;
    for (i, r) in per_state.iter().enumerate() {
        if r.mean > per_state[max_state].mean {
            max_state = i;
        }
    }
    let max_risk = per_state[max_state].mean;
    Ok(SweepResult {
        grid: states.iter().map(|s| [s.r().x, s.r().y, s.r().z]).collect(),
        per_state,
        max_state,
        max_risk,
    })
}

/// Max-risk at each sample size with a log-log line through the results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingFit {
    pub ns: Vec<u64>,
    pub max_risks: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Sweeps the grid at each n and fits ln(max risk) against ln n.
///
/// Needs at least three strictly increasing sizes spanning 1.5 decades,
/// otherwise the exponent is not identifiable in the noise.
pub fn scaling_fit(
    spec: &EstimatorSpec,
    grid: &GridSpec,
    ns: &[u64],
    trials: u64,
    loss: Loss,
    master_seed: u64,
) -> Result<ScalingFit> {
    if ns.len() < 3 {
        return Err(Error::Domain("scaling fit needs at least 3 sample sizes".into()));
    }
    if !ns.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Domain("sample sizes must be strictly increasing".into()));
    }
    let span = ns[ns.len() - 1] as f64 / ns[0] as f64;
    if span < 10f64.powf(1.5) * (1.0 - 1e-9) {
        return Err(Error::Domain(format!(
            "sample sizes span a factor of {span:.3}, need at least 10^1.5"
        )));
    }
    let mut max_risks = Vec::with_capacity(ns.len());
    for &n in ns {
        max_risks.push(max_risk_sweep(spec, grid, n, trials, loss, master_seed)?.max_risk);
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let (slope, intercept, r_squared) = fit_loglog(&xs, &max_risks)?;
    Ok(ScalingFit {
        ns: ns.to_vec(),
        max_risks,
        slope,
        intercept,
        r_squared,
    })
}

/// Unweighted least-squares line through (ln x, ln y); returns
/// (slope, intercept, r_squared). Inputs must be positive.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Domain("need matching xs/ys with at least 2 points".into()));
    }
    if xs.iter().chain(ys).any(|&v| !v.is_finite() || v <= 0.0) {
        return Err(Error::Domain("log-log fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("xs are all equal, slope undefined".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|v| (v - my) * (v - my)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((slope, intercept, r_squared))
}

/// Which tail bound to exercise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcentrationCase {
    /// Raw linear inversion from n copies split over three axes:
    /// P(|r_hat - r|^2 > 6 n^(2e-1)) <= 6 exp(-2 n^(2e) / 3).
    RawStageOne,
    /// Ball projection of the inversion from ceil(n^0.9) of the n copies:
    /// P(|r_hat - r|^2 > 3 n^(2e-1)) <= 6 exp(-2 ceil(n^0.9) n^(2e-1) / 3).
    ProjectedVanishing,
}

impl ConcentrationCase {
    pub fn name(self) -> &'static str {
        match self {
            ConcentrationCase::RawStageOne => "raw_stage_one",
            ConcentrationCase::ProjectedVanishing => "projected_vanishing",
        }
    }
}

/// Outcome of one empirical tail check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub case_name: String,
    pub n: u64,
    pub epsilon: f64,
    pub repetitions: u64,
    /// Squared-distance level the bound is stated at.
    pub threshold: f64,
    /// Theoretical tail bound. Can exceed 1, in which case the check is
    /// vacuous and passes by construction; it is still reported as is.
    pub bound: f64,
    /// Fraction of repetitions exceeding the threshold.
    pub empirical: f64,
    pub stderr: f64,
    pub pass: bool,
}

/// Measures how often the estimation error exceeds the stated threshold
/// and compares against the tail bound with three binomial standard errors
/// of slack.
pub fn concentration_check(
    case: ConcentrationCase,
    n: u64,
    epsilon: f64,
    repetitions: u64,
    truth: &BlochState,
    master_seed: u64,
) -> Result<ConcentrationReport> {
    if repetitions < 1000 {
        return Err(Error::Domain(format!(
            "repetitions {repetitions} below the floor of 1000"
        )));
    }
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::Domain(format!("epsilon {epsilon} outside (0, 1/2]")));
    }
    let nf = n as f64;
    let (threshold, bound, per_axis, project) = match case {
        ConcentrationCase::RawStageOne => (
            6.0 * nf.powf(2.0 * epsilon - 1.0),
            6.0 * (-2.0 * nf.powf(2.0 * epsilon) / 3.0).exp(),
            n / 3,
            false,
        ),
        ConcentrationCase::ProjectedVanishing => {
            let ntilde = (nf.powf(0.9) - 1e-9).ceil();
            (
                3.0 * nf.powf(2.0 * epsilon - 1.0),
                6.0 * (-2.0 * ntilde * nf.powf(2.0 * epsilon - 1.0) / 3.0).exp(),
                ntilde as u64 / 3,
                true,
            )
        }
    };
    if per_axis == 0 {
        return Err(Error::Domain(format!("n {n} too small to split over three axes")));
    }
    let seed = mix_seed(master_seed, n);
    let exceed: u64 = (0..repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = trial_rng(seed, CONCENTRATION_STREAM, rep);
            let raw = bloch_from_counts(&sample_pauli_outcomes(truth, per_axis, &mut rng));
            let err = if project {
                project_to_ball(raw).r() - truth.r()
            } else {
                raw - truth.r()
            };
            u64::from(err.norm_squared() > threshold)
        })
        .sum();
    let empirical = exceed as f64 / repetitions as f64;
    let stderr = (empirical * (1.0 - empirical) / repetitions as f64).sqrt();
    let pass = empirical <= bound + 3.0 * stderr;
    Ok(ConcentrationReport {
        case_name: case.name().to_string(),
        n,
        epsilon,
        repetitions,
        threshold,
        bound,
        empirical,
        stderr,
        pass,
    })
}
