//! Estimators of a binomial/Poisson parameter and their exact risks: the
//! five-branch add-beta estimator, the frequency estimator, Gamma-prior
//! Bayes estimation of sqrt(mu), and square-root-loss risk curves in the
//! Poisson regime.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{hellinger_sq, kl, BinaryDist};
use crate::special::{ln_choose, ln_gamma};

/// Minimax-motivated estimator of a binomial success probability with
/// boundary cells pulled strictly inside (0, 1).
pub fn add_beta(n: u64, k: u64) -> Result<f64> {
    if n < 4 {
        return Err(Error::Domain(format!("add_beta needs n >= 4, got {n}")));
    }
    if k > n {
        return Err(Error::Domain(format!("k = {k} > n = {n}")));
    }
    let nf = n as f64;
    let v = if k == 0 {
        0.5 / (nf + 1.25)
    } else if k == 1 {
        2.0 / (nf + 1.75)
    } else if k == n - 1 {
        (nf - 0.25) / (nf + 1.75)
    } else if k == n {
        (nf + 0.75) / (nf + 1.25)
    } else {
        (k as f64 + 0.75) / (nf + 1.5)
    };
    Ok(v)
}

/// Plain frequency estimate k/n.
pub fn standard_frequency(n: u64, k: u64) -> f64 {
    k as f64 / n as f64
}

/// Frequency estimate clamped to [1/n, 1 - 1/n], the minimal regularization
/// that keeps its KL risk finite.
pub fn standard_frequency_clamped(n: u64, k: u64) -> f64 {
    let nf = n as f64;
    (k as f64 / nf).clamp(1.0 / nf, 1.0 - 1.0 / nf)
}

/// log Binomial(n, lam) pmf at each k, handling the degenerate endpoints.
fn binomial_log_pmf(n: u64, lam: f64, ln_choose_row: &[f64]) -> Vec<f64> {
    let nf = n as f64;
    (0..=n)
        .map(|k| {
            let kf = k as f64;
            if lam == 0.0 {
                return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
            }
            if lam == 1.0 {
                return if k == n { 0.0 } else { f64::NEG_INFINITY };
            }
            ln_choose_row[k as usize] + kf * lam.ln() + (nf - kf) * (-lam).ln_1p()
        })
        .collect()
}

fn risk_exact(
    n: u64,
    lam: f64,
    est: &(impl Fn(u64) -> f64 + ?Sized),
    loss: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    if !(0.0..=1.0).contains(&lam) {
        return Err(Error::Domain(format!("lambda {lam} outside [0, 1]")));
    }
    let row: Vec<f64> = (0..=n).map(|k| ln_choose(n, k)).collect();
    let log_pmf = binomial_log_pmf(n, lam, &row);
    let mut total = 0.0;
    for k in 0..=n {
        let w = log_pmf[k as usize].exp();
        if w == 0.0 {
            continue;
        }
        total += w * loss(lam, est(k));
    }
    Ok(total)
}

/// Exact E_k[KL((lam, 1-lam), (est(k), 1-est(k)))] under Binomial(n, lam).
pub fn kl_risk_exact(n: u64, lam: f64, est: impl Fn(u64) -> f64) -> Result<f64> {
    risk_exact(n, lam, &est, |p, q| {
        kl(
            &BinaryDist::new(p).expect("validated"),
            &BinaryDist::new(q).expect("estimator output in [0,1]"),
        )
    })
}

/// Exact squared-Hellinger risk under Binomial(n, lam).
pub fn hellinger_risk_exact(n: u64, lam: f64, est: impl Fn(u64) -> f64) -> Result<f64> {
    risk_exact(n, lam, &est, |p, q| {
        hellinger_sq(
            &BinaryDist::new(p).expect("validated"),
            &BinaryDist::new(q).expect("estimator output in [0,1]"),
        )
    })
}

/// Grid on which risk suprema over lambda are taken: 400 log-spaced points
/// in [1e-6, 1/2] plus the Poisson-regime points mu/n for
/// mu in {0.5, 1, 1.11, 2, 5}, where the supremum of the KL risk lives.
pub fn lambda_sup_grid(n: u64) -> Vec<f64> {
    let (lo, hi) = (1e-6f64.ln(), 0.5f64.ln());
    let mut grid: Vec<f64> = (0..400)
        .map(|i| (lo + i as f64 / 399.0 * (hi - lo)).exp())
        .collect();
    for mu in [0.5, 1.0, 1.11, 2.0, 5.0] {
        let lam = mu / n as f64;
        if lam <= 0.5 {
            grid.push(lam);
        }
    }
    grid
}

/// Supremum of the exact KL risk over the lambda grid; returns
/// (sup risk, argmax lambda).
pub fn kl_risk_sup(n: u64, est: impl Fn(u64) -> f64 + Sync) -> Result<(f64, f64)> {
    let grid = lambda_sup_grid(n);
    let row: Vec<f64> = (0..=n).map(|k| ln_choose(n, k)).collect();
    let risks: Vec<f64> = grid
        .par_iter()
        .map(|&lam| {
            let log_pmf = binomial_log_pmf(n, lam, &row);
            let mut total = 0.0;
            for k in 0..=n {
                let w = log_pmf[k as usize].exp();
                if w == 0.0 {
                    continue;
                }
                let q = est(k);
                total += w
                    * kl(
                        &BinaryDist::new(lam).expect("grid value"),
                        &BinaryDist::new(q).expect("estimator output"),
                    );
            }
            total
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, 0.0);
    for (i, &r) in risks.iter().enumerate() {
        if r > best.0 {
            best = (r, grid[i]);
        }
    }
    Ok(best)
}

/// Gamma(alpha, beta) prior on a Poisson mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    alpha: f64,
    beta: f64,
}

impl GammaPrior {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(Error::Domain(format!(
                "Gamma prior needs alpha, beta > 0, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// One point of a Poisson-regime risk curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonRiskPoint {
    pub mu: f64,
    pub risk: f64,
}

/// Iterate Poisson(mu) pmf values until the cumulative mass passes
/// 1 - 1e-12 and k has cleared the mean.
fn poisson_sum(mu: f64, mut term: impl FnMut(u64, f64)) {
    let mut cum = 0.0;
    let mut k = 0u64;
    let cap = (10.0 * mu + 200.0) as u64;
    loop {
        let lp = -mu + k as f64 * mu.ln() - ln_gamma(k as f64 + 1.0);
        let w = lp.exp();
        cum += w;
        term(k, w);
        if (cum >= 1.0 - 1e-12 && k as f64 > mu) || k > cap {
            break;
        }
        k += 1;
    }
}

/// Risk of estimating sqrt(mu) by sqrt(K), K ~ Poisson(mu):
/// E[(sqrt(K) - sqrt(mu))^2] = 2 mu - 2 sqrt(mu) E[sqrt(K)].
pub fn poisson_sqrt_risk(mu: f64) -> Result<PoissonRiskPoint> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("mu must be positive, got {mu}")));
    }
    let mut e_sqrt = 0.0;
    poisson_sum(mu, |k, w| e_sqrt += w * (k as f64).sqrt());
    let risk = (2.0 * mu - 2.0 * mu.sqrt() * e_sqrt).max(0.0);
    Ok(PoissonRiskPoint { mu, risk })
}

/// Posterior mean of sqrt(mu) given K = k under a Gamma prior:
/// Gamma(k + alpha + 1/2)/Gamma(k + alpha) * sqrt(beta / (beta + 1)),
/// evaluated through log-gamma differences.
pub fn bayes_sqrt_estimate(k: u64, prior: &GammaPrior) -> f64 {
    let a = k as f64 + prior.alpha;
    (ln_gamma(a + 0.5) - ln_gamma(a)).exp() * (prior.beta / (prior.beta + 1.0)).sqrt()
}

/// Exact risk of the Bayes sqrt estimator at a fixed mu.
pub fn bayes_sqrt_risk(mu: f64, prior: &GammaPrior) -> Result<PoissonRiskPoint> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("mu must be positive, got {mu}")));
    }
    let root = mu.sqrt();
    let mut risk = 0.0;
    poisson_sum(mu, |k, w| {
        let d = bayes_sqrt_estimate(k, prior) - root;
        risk += w * d * d;
    });
    Ok(PoissonRiskPoint { mu, risk })
}
