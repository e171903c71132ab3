//! Two-stage collective estimation: a small preliminary sample fixes a
//! frame, then the remaining copies are measured jointly. Far from the
//! center the joint measurement is a which-block draw for the eigenvalue
//! plus a Gaussian-limit heterodyne for the rotation; near the center it
//! falls back to maximum likelihood over the Bloch ball.

pub mod block;
pub mod lan;

pub use block::{k_factor, BlockDistribution};
pub use lan::{
    build_block_state, gaussian_displaced_thermal, lan_trace_distance, quadrature_means,
    typical_two_j, BLOCK_DIM_CAP,
};

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::binomial::add_beta;
use crate::error::{Error, Result};
use crate::states::{
    bloch_from_counts, local_coordinates, project_to_ball, sample_pauli_outcomes, BlochState,
    LocalTheta, OutcomeCounts, Rotation,
};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CollectiveConfig {
    pub n: u64,
    /// Stage-one share exponent: n^(1-kappa) copies go to the preliminary
    /// estimate.
    pub kappa: f64,
    /// Preliminary-norm threshold deciding ball-ML vs frame-local mode.
    pub delta: f64,
}

impl CollectiveConfig {
    pub fn new(n: u64, kappa: f64, delta: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 0.5) {
            return Err(Error::Domain(format!("kappa {kappa} outside (0, 1/2)")));
        }
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::Domain(format!("delta {delta} outside (0, 1/2)")));
        }
        let cfg = Self { n, kappa, delta };
        let (n1, n2) = cfg.split();
        if n1 < 9 {
            return Err(Error::Domain(format!("stage one gets {n1} copies, needs >= 9")));
        }
        if n2 < 4 {
            return Err(Error::Domain(format!("stage two gets {n2} copies, needs >= 4")));
        }
        Ok(cfg)
    }

    pub fn with_defaults(n: u64) -> Result<Self> {
        Self::new(n, 0.1, 0.1)
    }

    /// (stage-one, stage-two) copy counts: ceil(n^(1-kappa)) and the rest.
    /// The small backoff keeps exact powers from rounding up.
    pub fn split(&self) -> (u64, u64) {
        let n1 = ((self.n as f64).powf(1.0 - self.kappa) - 1e-9).ceil() as u64;
        let n1 = n1.min(self.n);
        (n1, self.n - n1)
    }
}

/// Which stage-two mode a run took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Preliminary norm at or below delta: product-binomial ML over the ball.
    BallMl,
    /// Preliminary norm above delta: which-block + heterodyne in its frame.
    FrameLocal,
}

#[derive(Debug, Clone)]
pub struct CollectiveResult {
    pub estimate: BlochState,
    pub branch: Branch,
    pub prelim: BlochState,
}

/// Gaussian limit of the heterodyne measurement on the rotation
/// coordinates: each of (u, v) picks up independent noise of this
/// variance.
#[derive(Debug, Clone, Copy)]
pub struct HeterodyneModel {
    pub lambda: f64,
    pub variance_per_component: f64,
}

impl HeterodyneModel {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&lambda) {
            return Err(Error::Domain(format!("lambda {lambda} outside [0, 1/2)")));
        }
        let variance_per_component = (1.0 - lambda) / (2.0 * (1.0 - 2.0 * lambda).powi(2));
        Ok(Self { lambda, variance_per_component })
    }
}

/// Pointwise optimum of the local model at eigenvalue lambda0: the
/// classical Fisher term contributes 1/4 and the heterodyne term 1-lambda0,
/// assembled from the quadratic-form weights as G00 v0 + 2 G11 w0.
pub fn local_minimax_constant(lambda0: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&lambda0) {
        return Err(Error::Domain(format!("lambda0 {lambda0} outside [0, 1/2)")));
    }
    let eigen_term = if lambda0 == 0.0 {
        // limit of v0/(4 l (1-l)) with v0 = l(1-l)
        0.25
    } else {
        let g = crate::metrics::bures_weight_local(lambda0)?;
        g[(0, 0)] * lambda0 * (1.0 - lambda0)
    };
    let g11 = (1.0 - 2.0 * lambda0).powi(2);
    let w0 = HeterodyneModel::new(lambda0)?.variance_per_component;
    Ok(eigen_term + 2.0 * g11 * w0)
}

/// Exact maximum-likelihood Bloch vector for independent Pauli counts.
/// Linear inversion is the interior stationary point; when it lands
/// outside the ball the likelihood is maximized over the closed ball by
/// projected gradient ascent.
pub fn ml_ball_estimate(counts: &OutcomeCounts) -> BlochState {
    let raw = bloch_from_counts(counts);
    if raw.norm() <= 1.0 {
        return BlochState::new(raw).expect("linear inversion inside the ball");
    }
    let m = counts.n_per_axis as f64;
    let ks = [
        counts.plus_counts[0] as f64,
        counts.plus_counts[1] as f64,
        counts.plus_counts[2] as f64,
    ];
    let obj = |r: &Vector3<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            if ks[i] > 0.0 {
                s += ks[i] * r[i].ln_1p();
            }
            if m - ks[i] > 0.0 {
                s += (m - ks[i]) * (-r[i]).ln_1p();
            }
        }
        s
    };
    let grad = |r: &Vector3<f64>| -> Vector3<f64> {
        let mut g = Vector3::zeros();
        for i in 0..3 {
            if ks[i] > 0.0 {
                g[i] += ks[i] / (1.0 + r[i]);
            }
            if m - ks[i] > 0.0 {
                g[i] -= (m - ks[i]) / (1.0 - r[i]);
            }
        }
        g
    };
    let mut r = raw / raw.norm() * 0.999;
    let mut f = obj(&r);
    let mut step = 0.5 / m;
    for _ in 0..10_000 {
        let g = grad(&r);
        let mut s = step;
        let mut advanced = false;
        for _ in 0..60 {
            let cand = project_to_ball(r + g * s).r();
            let fc = obj(&cand);
            if fc > f {
                let moved = (cand - r).norm();
                r = cand;
                f = fc;
                step = s * 2.0;
                advanced = true;
                if moved <= 1e-10 {
                    return BlochState::new(r).expect("projected point");
                }
                break;
            }
            s *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    BlochState::new(r).expect("projected point")
}

/// Prepared two-stage run for a fixed truth: the stage-two block
/// distribution and heterodyne noise depend only on the truth's
/// eigenvalue, so they are built once and shared across trials.
pub struct CollectiveSampler {
    truth: BlochState,
    config: CollectiveConfig,
    n1_per_axis: u64,
    n2: u64,
    dist: BlockDistribution,
    noise: Normal<f64>,
}

impl CollectiveSampler {
    pub fn new(truth: BlochState, config: CollectiveConfig) -> Result<Self> {
        let (n1, n2) = config.split();
        let n1_per_axis = n1 / 3;
        // back lambda off 1/2 just enough to keep the block distribution
        // and the heterodyne variance finite for maximally mixed truth
        let lambda_used = truth.lambda_min().min(0.5 - 1.0 / (4.0 * n2 as f64));
        let dist = BlockDistribution::new(n2, lambda_used)?;
        let w0 = HeterodyneModel::new(lambda_used)?.variance_per_component;
        let noise = Normal::new(0.0, w0.sqrt()).expect("finite sd");
        Ok(Self { truth, config, n1_per_axis, n2, dist, noise })
    }

    pub fn block_distribution(&self) -> &BlockDistribution {
        &self.dist
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CollectiveResult> {
        let counts1 = sample_pauli_outcomes(&self.truth, self.n1_per_axis, rng);
        let prelim = project_to_ball(bloch_from_counts(&counts1));
        if prelim.norm() <= self.config.delta {
            let counts2 = sample_pauli_outcomes(&self.truth, self.n2 / 3, rng);
            return Ok(CollectiveResult {
                estimate: ml_ball_estimate(&counts2),
                branch: Branch::BallMl,
                prelim,
            });
        }
        let frame = Rotation::taking_to_z(prelim.r())?;
        let theta = if self.truth.norm() == 0.0 {
            LocalTheta { lambda: 0.5, u: 0.0, v: 0.0, n: self.n2, frame }
        } else {
            local_coordinates(&self.truth, &frame, self.n2)?
        };
        let k = self.dist.sample_k(rng);
        let lambda_hat = add_beta(self.n2, k)?;
        let u_hat = theta.u + self.noise.sample(rng);
        let v_hat = theta.v + self.noise.sample(rng);
        let estimate = crate::states::reconstruct(&LocalTheta {
            lambda: lambda_hat,
            u: u_hat,
            v: v_hat,
            n: self.n2,
            frame,
        });
        Ok(CollectiveResult { estimate, branch: Branch::FrameLocal, prelim })
    }
}

/// One-shot convenience wrapper; batch callers should build a
/// CollectiveSampler and reuse it.
pub fn run_collective<R: Rng + ?Sized>(
    truth: &BlochState,
    config: CollectiveConfig,
    rng: &mut R,
) -> Result<CollectiveResult> {
    CollectiveSampler::new(*truth, config)?.run(rng)
}
