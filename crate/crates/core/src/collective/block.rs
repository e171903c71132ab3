//! Exact distribution of the total-spin block index when n copies of a
//! qubit state with smaller eigenvalue lambda are decomposed into SU(2)
//! irreducible blocks, plus its binomial factorization.

use rand::Rng;

use crate::error::{Error, Result};
use crate::special::ln_choose;

/// Which-block distribution over j in {n/2, n/2 - 1, ...}, stored by the
/// index k = n/2 - j (so k runs over 0..=floor(n/2) and 2j = n - 2k keeps
/// the right parity for odd n).
#[derive(Debug, Clone)]
pub struct BlockDistribution {
    n: u64,
    lambda: f64,
    log_weights: Vec<f64>,
    cdf: Vec<f64>,
}

impl BlockDistribution {
    /// log p(j) = log n_j - log(1-2l) + k log l + (n-k+1) log(1-l)
    ///          + log(1 - p^(2j+1)), p = l/(1-l), k = n/2 - j,
    /// with multiplicities n_j = C(n,k) - C(n,k-1). The lambda = 0 limit is
    /// a point mass on the top block j = n/2.
    pub fn new(n: u64, lambda: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("n must be positive".into()));
        }
        if !(0.0..0.5).contains(&lambda) {
            return Err(Error::Domain(format!("lambda {lambda} outside [0, 1/2)")));
        }
        let kmax = (n / 2) as usize;
        let mut log_weights = vec![f64::NEG_INFINITY; kmax + 1];
        if lambda == 0.0 {
            log_weights[0] = 0.0;
        } else {
            let nf = n as f64;
            let ln_lam = lambda.ln();
            let ln_one = (-lambda).ln_1p();
            let ln_p = ln_lam - ln_one;
            for (k, lw) in log_weights.iter_mut().enumerate() {
                let kf = k as f64;
                let two_j_plus_1 = nf - 2.0 * kf + 1.0;
                // n_j = C(n,k) (n-2k+1)/(n-k+1)
                let ln_mult =
                    ln_choose(n, k as u64) + (two_j_plus_1 / (nf - kf + 1.0)).ln();
                *lw = ln_mult - (-2.0 * lambda).ln_1p() + kf * ln_lam
                    + (nf - kf + 1.0) * ln_one
                    + (-(two_j_plus_1 * ln_p).exp()).ln_1p();
            }
        }
        let mut cdf = Vec::with_capacity(kmax + 1);
        let mut acc = 0.0;
        for &lw in &log_weights {
            acc += lw.exp();
            cdf.push(acc);
        }
        Ok(Self { n, lambda, log_weights, cdf })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of support points, floor(n/2) + 1.
    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn prob(&self, k: u64) -> f64 {
        self.log_weights[k as usize].exp()
    }

    /// 2j of the block at index k.
    pub fn two_j(&self, k: u64) -> u64 {
        self.n - 2 * k
    }

    /// Total mass; 1 within 1e-10 by construction.
    pub fn total_mass(&self) -> f64 {
        *self.cdf.last().expect("non-empty")
    }

    /// Inverse-CDF draw of the block index k = n/2 - j.
    pub fn sample_k<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random::<f64>() * self.total_mass();
        self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1) as u64
    }
}

/// Ratio between the block probability and the plain binomial pmf at
/// k = n/2 - j:
/// K = (1 - p^(2j+1)) (n + (2(j-j_n)+1)/(1-2l)) / (n + (j-j_n+1)/(1-l)),
/// j_n = n(1/2 - l). Near-1 on the bulk blocks, which is what lets the
/// eigenvalue channel inherit binomial risk results.
pub fn k_factor(two_j: u64, n: u64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::Domain(format!("lambda {lambda} outside (0, 1/2)")));
    }
    if two_j > n || (n - two_j) % 2 != 0 {
        return Err(Error::Domain(format!("2j = {two_j} not in the support for n = {n}")));
    }
    let nf = n as f64;
    let j = two_j as f64 / 2.0;
    let j_n = nf * (0.5 - lambda);
    let p = lambda / (1.0 - lambda);
    let tail = 1.0 - p.powf(two_j as f64 + 1.0);
    let num = nf + (2.0 * (j - j_n) + 1.0) / (1.0 - 2.0 * lambda);
    let den = nf + (j - j_n + 1.0) / (1.0 - lambda);
    Ok(tail * num / den)
}
