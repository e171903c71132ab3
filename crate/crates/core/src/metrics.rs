//! Loss functions between qubit states: fidelity, squared Bures distance,
//! classical Hellinger/KL on binary distributions, quantum relative entropy,
//! the small-tilt expansions of the quantum losses, and the weight matrices
//! that govern their local quadratic behaviour.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::xlogx;
use crate::states::BlochState;

/// Binary probability distribution (lambda, 1 - lambda).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryDist {
    lambda: f64,
}

impl BinaryDist {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Domain(format!("lambda {lambda} outside [0, 1]")));
        }
        Ok(Self { lambda })
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Distribution of the eigenvalues (lambda_min, 1 - lambda_min).
    pub fn eigen_of(state: &BlochState) -> Self {
        Self { lambda: state.lambda_min() }
    }
}

/// A quantum loss split into its eigenvalue part, its tilt part, and the
/// measured size of everything the two leading terms leave out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossDecomposition {
    pub eigen_term: f64,
    pub rotation_term: f64,
    /// |exact - (eigen_term + rotation_term)|, computed, not symbolic.
    pub remainder_bound: f64,
}

/// Uhlmann fidelity for qubits,
/// F = (1 + sqrt((1-|a|^2)(1-|b|^2)) + a.b) / 2.
pub fn fidelity(a: &BlochState, b: &BlochState) -> f64 {
    let ra = a.r();
    let rb = b.r();
    let ta = (1.0 - ra.norm_squared()).max(0.0);
    let tb = (1.0 - rb.norm_squared()).max(0.0);
    let f = 0.5 * (1.0 + (ta * tb).sqrt() + ra.dot(&rb));
    f.clamp(0.0, 1.0)
}

/// Squared Bures distance 2(1 - sqrt(F)).
pub fn bures_sq(a: &BlochState, b: &BlochState) -> f64 {
    (2.0 * (1.0 - fidelity(a, b).sqrt())).max(0.0)
}

/// Squared Hellinger distance between two binary distributions.
pub fn hellinger_sq(p: &BinaryDist, q: &BinaryDist) -> f64 {
    let d0 = p.lambda().sqrt() - q.lambda().sqrt();
    let d1 = (1.0 - p.lambda()).sqrt() - (1.0 - q.lambda()).sqrt();
    d0 * d0 + d1 * d1
}

fn kl_term(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else if q == 0.0 {
        f64::INFINITY
    } else {
        p * (p / q).ln()
    }
}

/// KL divergence between two binary distributions; +inf on support
/// violation, 0 log 0 = 0.
pub fn kl(p: &BinaryDist, q: &BinaryDist) -> f64 {
    kl_term(p.lambda(), q.lambda()) + kl_term(1.0 - p.lambda(), 1.0 - q.lambda())
}

/// Quantum relative entropy S(a || b) = Tr[rho_a (ln rho_a - ln rho_b)].
///
/// Bloch form: (1/2)[ln(1-|a|^2) - ln(1-|b|^2) + |a| ln((1+|a|)/(1-|a|))
/// - |a| cos(Phi) ln((1+|b|)/(1-|b|))] with Phi the angle between the two
/// Bloch vectors. The |a| -> 1 limit is taken through
/// ln(1-x^2) + x ln((1+x)/(1-x)) = (1+x)ln(1+x) + (1-x)ln(1-x), and a pure
/// second argument gives +inf unless the states coincide.
pub fn qre(a: &BlochState, b: &BlochState) -> f64 {
    let ra = a.r();
    let rb = b.r();
    let na = ra.norm();
    let nb = rb.norm();
    if b.is_pure() {
        return if (ra - rb).norm() < 1e-12 { 0.0 } else { f64::INFINITY };
    }
    let eigen_a = xlogx(1.0 + na) + xlogx(1.0 - na);
    let log_b = (1.0 - nb * nb).ln();
    let ratio_b = nb.ln_1p() - (-nb).ln_1p();
    let dot_term = if nb > 0.0 { ra.dot(&rb) / nb * ratio_b } else { 0.0 };
    let v = 0.5 * (eigen_a - log_b - dot_term);
    debug_assert!(v > -1e-9, "qre produced {v}");
    v.max(0.0)
}

fn check_half_interval(name: &str, x: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&x) {
        return Err(Error::Domain(format!("{name} = {x} outside [0, 1/2]")));
    }
    Ok(())
}

/// State with smaller eigenvalue `lam`, tilted by `phi` from +z in the xz
/// plane. Pairs of these realise any (lam, lam_hat, phi) loss configuration.
fn tilted_state(lam: f64, phi: f64) -> BlochState {
    let len = 1.0 - 2.0 * lam;
    BlochState::from_xyz(len * phi.sin(), 0.0, len * phi.cos()).expect("inside ball")
}

/// Second-order expansion of the squared Bures distance in the tilt angle:
/// Hellinger part plus (1/4)(1-2l)(1-2l')/(sqrt((1-l)(1-l')) + sqrt(l l'))
/// * phi^2, with the measured quartic remainder.
pub fn bures_sq_expansion(lam: f64, lam_hat: f64, phi: f64) -> Result<LossDecomposition> {
    check_half_interval("lambda", lam)?;
    check_half_interval("lambda_hat", lam_hat)?;
    let eigen_term = hellinger_sq(&BinaryDist::new(lam)?, &BinaryDist::new(lam_hat)?);
    let denom = ((1.0 - lam) * (1.0 - lam_hat)).sqrt() + (lam * lam_hat).sqrt();
    let rotation_term =
        0.25 * (1.0 - 2.0 * lam) * (1.0 - 2.0 * lam_hat) / denom * phi * phi;
    let exact = bures_sq(&tilted_state(lam, 0.0), &tilted_state(lam_hat, phi));
    let remainder_bound = (exact - eigen_term - rotation_term).abs();
    Ok(LossDecomposition { eigen_term, rotation_term, remainder_bound })
}

/// Second-order expansion of the quantum relative entropy in the tilt
/// angle: KL part plus ((1-2l)/4) phi^2 ln((1-l')/l'), with the measured
/// remainder. The expansion point must have lam_hat > 0; the divergence at
/// lam_hat = 0 is a feature of the loss, not of the expansion.
pub fn qre_expansion(lam: f64, lam_hat: f64, phi: f64) -> Result<LossDecomposition> {
    check_half_interval("lambda", lam)?;
    check_half_interval("lambda_hat", lam_hat)?;
    if lam_hat == 0.0 {
        return Err(Error::Domain("expansion point lambda_hat = 0".into()));
    }
    let eigen_term = kl(&BinaryDist::new(lam)?, &BinaryDist::new(lam_hat)?);
    let rotation_term =
        (1.0 - 2.0 * lam) / 4.0 * phi * phi * ((1.0 - lam_hat) / lam_hat).ln();
    let exact = qre(&tilted_state(lam, 0.0), &tilted_state(lam_hat, phi));
    let remainder_bound = (exact - eigen_term - rotation_term).abs();
    Ok(LossDecomposition { eigen_term, rotation_term, remainder_bound })
}

/// Fisher information of the three Pauli frequency coordinates,
/// diag(1/(1-r_i^2)).
pub fn fisher_pauli(state: &BlochState) -> Result<Matrix3<f64>> {
    let r = state.r();
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        let t = (1.0 + r[i]) * (1.0 - r[i]);
        if t <= 0.0 {
            return Err(Error::Singular(format!("|r_{i}| = 1")));
        }
        m[(i, i)] = 1.0 / t;
    }
    Ok(m)
}

/// Weight matrix of the squared Bures distance in Bloch coordinates,
/// G_ii = (1/4)(1 + r_i^2/(1-|r|^2)).
pub fn bures_weight_bloch(state: &BlochState) -> Result<Matrix3<f64>> {
    let r = state.r();
    let t = 1.0 - r.norm_squared();
    if t <= 0.0 {
        return Err(Error::Singular("|r| = 1".into()));
    }
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        m[(i, i)] = 0.25 * (1.0 + r[i] * r[i] / t);
    }
    Ok(m)
}

/// Weight matrix of the squared Bures distance in the local
/// eigenvalue/rotation coordinates at an interior point:
/// diag(1/(4 l (1-l)), (1-2l)^2, (1-2l)^2).
pub fn bures_weight_local(lam0: f64) -> Result<Matrix3<f64>> {
    check_half_interval("lambda_0", lam0)?;
    if lam0 == 0.0 || lam0 == 0.5 {
        return Err(Error::Singular(format!("local weight degenerate at lambda_0 = {lam0}")));
    }
    Ok(Matrix3::from_diagonal(&nalgebra::Vector3::new(
        1.0 / (4.0 * lam0 * (1.0 - lam0)),
        (1.0 - 2.0 * lam0) * (1.0 - 2.0 * lam0),
        (1.0 - 2.0 * lam0) * (1.0 - 2.0 * lam0),
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{reconstruct, LocalTheta, Rotation};
    use crate::stream::trial_rng;
    use approx::assert_relative_eq;
    use nalgebra::{UnitQuaternion, Vector3};
    use rand::Rng;
    use rand_distr::Distribution;

    fn random_state(rng: &mut impl Rng, max_norm: f64) -> BlochState {
        let dir: [f64; 3] = rand_distr::UnitSphere.sample(rng);
        let mag: f64 = rng.random_range(0.0..max_norm);
        BlochState::new(Vector3::from(dir) * mag).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = trial_rng(23, 0, 0);
        for _ in 0..20 {
            let s = random_state(&mut rng, 1.0);
            assert_relative_eq!(fidelity(&s, &s), 1.0, epsilon = 1e-12);
        }
        let up = BlochState::on_z(1.0).unwrap();
        let down = BlochState::on_z(-1.0).unwrap();
        assert_relative_eq!(fidelity(&up, &down), 0.0, epsilon = 1e-15);
        let mixed = BlochState::maximally_mixed();
        assert_relative_eq!(fidelity(&mixed, &up), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn bures_examples() {
        let up = BlochState::on_z(1.0).unwrap();
        let down = BlochState::on_z(-1.0).unwrap();
        let mixed = BlochState::maximally_mixed();
        assert_relative_eq!(bures_sq(&up, &up), 0.0, epsilon = 1e-15);
        assert_relative_eq!(bures_sq(&up, &down), 2.0, epsilon = 1e-15);
        assert_relative_eq!(
            bures_sq(&mixed, &up),
            2.0 * (1.0 - 0.5f64.sqrt()),
            epsilon = 1e-12
        );
    }

    #[test]
    fn hellinger_examples() {
        let zero = BinaryDist::new(0.0).unwrap();
        let one = BinaryDist::new(1.0).unwrap();
        let half = BinaryDist::new(0.5).unwrap();
        assert_eq!(hellinger_sq(&half, &half), 0.0);
        assert_relative_eq!(hellinger_sq(&zero, &one), 2.0, epsilon = 1e-15);
        assert_relative_eq!(hellinger_sq(&zero, &half), 2.0 - 2.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn kl_examples() {
        let half = BinaryDist::new(0.5).unwrap();
        let quarter = BinaryDist::new(0.25).unwrap();
        let zero = BinaryDist::new(0.0).unwrap();
        assert_eq!(kl(&half, &half), 0.0);
        assert_relative_eq!(kl(&half, &quarter), 0.5 * (4.0f64 / 3.0).ln(), epsilon = 1e-14);
        assert_eq!(kl(&half, &zero), f64::INFINITY);
        assert_eq!(kl(&zero, &half), 2.0f64.ln());
        assert_eq!(kl(&zero, &zero), 0.0);
    }

    #[test]
    fn qre_examples() {
        let up = BlochState::on_z(1.0).unwrap();
        let mixed = BlochState::maximally_mixed();
        assert_eq!(qre(&up, &up), 0.0);
        assert_relative_eq!(qre(&up, &mixed), 2.0f64.ln(), epsilon = 1e-14);
        assert_eq!(qre(&mixed, &up), f64::INFINITY);
        // nearly pure second argument stays finite
        let nudged = BlochState::on_z(1.0 - 1e-9).unwrap();
        assert!(qre(&mixed, &nudged).is_finite());
    }

    #[test]
    fn qre_is_asymmetric_and_nonnegative() {
        let mut rng = trial_rng(29, 0, 0);
        let mut saw_asymmetry = false;
        for _ in 0..100 {
            let a = random_state(&mut rng, 0.999);
            let b = random_state(&mut rng, 0.999);
            let ab = qre(&a, &b);
            let ba = qre(&b, &a);
            assert!(ab >= 0.0 && ba >= 0.0);
            if (ab - ba).abs() > 1e-6 {
                saw_asymmetry = true;
            }
        }
        assert!(saw_asymmetry);
    }

    #[test]
    fn qre_matches_dense_matrix_computation() {
        // cross-check the Bloch formula against Tr[rho_a(ln rho_a - ln rho_b)]
        // assembled by eigendecomposition of the 2x2 density matrices
        use crate::states::density_matrix;
        use nalgebra::{Complex, Matrix2};

        fn ln_density(s: &BlochState) -> Matrix2<Complex<f64>> {
            let eig = nalgebra::SymmetricEigen::new(density_matrix(s));
            let mut d = Matrix2::zeros();
            for i in 0..2 {
                d[(i, i)] = Complex::new(eig.eigenvalues[i].ln(), 0.0);
            }
            &eig.eigenvectors * d * eig.eigenvectors.adjoint()
        }

        let mut rng = trial_rng(31, 0, 0);
        for _ in 0..25 {
            let a = random_state(&mut rng, 0.98);
            let b = random_state(&mut rng, 0.98);
            let prod = density_matrix(&a) * (ln_density(&a) - ln_density(&b));
            let dense = (prod[(0, 0)] + prod[(1, 1)]).re;
            assert_relative_eq!(qre(&a, &b), dense, epsilon = 1e-10, max_relative = 1e-8);
        }
    }

    #[test]
    fn hellinger_bounded_by_kl_and_total_variation_on_grid() {
        for i in 0..200 {
            for j in 0..200 {
                let lp = i as f64 / 199.0;
                let lq = j as f64 / 199.0;
                let p = BinaryDist::new(lp).unwrap();
                let q = BinaryDist::new(lq).unwrap();
                let h2 = hellinger_sq(&p, &q);
                assert!(h2 <= kl(&p, &q) + 1e-14, "H2 > KL at ({lp}, {lq})");
                assert!(h2 <= 2.0 * (lp - lq).abs() + 1e-14, "H2 > 2|d| at ({lp}, {lq})");
            }
        }
    }

    #[test]
    fn hellinger_distance_triangle_inequality() {
        let mut rng = trial_rng(37, 0, 0);
        for _ in 0..300 {
            let a = BinaryDist::new(rng.random_range(0.0..=1.0)).unwrap();
            let b = BinaryDist::new(rng.random_range(0.0..=1.0)).unwrap();
            let c = BinaryDist::new(rng.random_range(0.0..=1.0)).unwrap();
            let ab = hellinger_sq(&a, &b).sqrt();
            let bc = hellinger_sq(&b, &c).sqrt();
            let ac = hellinger_sq(&a, &c).sqrt();
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn quantum_losses_symmetric_and_rotation_invariant() {
        let mut rng = trial_rng(41, 0, 0);
        for _ in 0..50 {
            let a = random_state(&mut rng, 1.0);
            let b = random_state(&mut rng, 1.0);
            assert_relative_eq!(fidelity(&a, &b), fidelity(&b, &a), epsilon = 1e-15);
            assert_relative_eq!(bures_sq(&a, &b), bures_sq(&b, &a), epsilon = 1e-15);

            let axis: [f64; 3] = rand_distr::UnitSphere.sample(&mut rng);
            let rot = Rotation::from_quaternion(UnitQuaternion::from_axis_angle(
                &nalgebra::Unit::new_normalize(Vector3::from(axis)),
                rng.random_range(-3.0..3.0),
            ));
            let ra = BlochState::new(rot.apply(a.r())).unwrap();
            let rb = BlochState::new(rot.apply(b.r())).unwrap();
            assert_relative_eq!(fidelity(&ra, &rb), fidelity(&a, &b), epsilon = 1e-12);
            assert_relative_eq!(bures_sq(&ra, &rb), bures_sq(&a, &b), epsilon = 1e-12);
        }
    }

    #[test]
    fn bures_expansion_basics() {
        let d = bures_sq_expansion(0.25, 0.25, 0.0).unwrap();
        assert_eq!(d.eigen_term, 0.0);
        assert_eq!(d.rotation_term, 0.0);
        assert!(d.remainder_bound < 1e-15);

        // pure-pure coefficient: rotation term phi^2 / 4
        let phi = 0.2;
        let d = bures_sq_expansion(0.0, 0.0, phi).unwrap();
        assert_relative_eq!(d.rotation_term, phi * phi / 4.0, epsilon = 1e-14);

        assert!(bures_sq_expansion(-0.01, 0.2, 0.1).is_err());
        assert!(bures_sq_expansion(0.2, 0.51, 0.1).is_err());
    }

    #[test]
    fn bures_expansion_quartic_envelope() {
        for i in 0..=9 {
            for j in 0..=9 {
                for phi in [0.01, 0.05, 0.1, 0.2, 0.3] {
                    let lam = 0.05 * i as f64;
                    let lam_hat = 0.05 * j as f64;
                    let d = bures_sq_expansion(lam, lam_hat, phi).unwrap();
                    assert!(
                        d.remainder_bound <= phi.powi(4),
                        "remainder {} > phi^4 {} at ({lam}, {lam_hat}, {phi})",
                        d.remainder_bound,
                        phi.powi(4)
                    );
                }
            }
        }
    }

    #[test]
    fn qre_expansion_basics() {
        let d = qre_expansion(0.3, 0.3, 0.0).unwrap();
        assert_eq!(d.eigen_term, 0.0);
        assert_eq!(d.rotation_term, 0.0);
        assert!(d.remainder_bound < 1e-15);
        assert!(qre_expansion(0.3, 0.0, 0.1).is_err());
    }

    #[test]
    fn qre_expansion_remainder_is_the_cosine_tail() {
        // exact - (KL + rotation) = ((1-2l)/2) L (cos phi - 1 + phi^2/2)
        for (lam, lam_hat, phi) in
            [(0.0, 0.1, 0.3), (0.2, 0.05, 0.25), (0.4, 0.45, 0.5), (0.1, 0.3, 0.01)]
        {
            let d = qre_expansion(lam, lam_hat, phi).unwrap();
            let l: f64 = ((1.0 - lam_hat) / lam_hat).ln();
            let predicted =
                (1.0 - 2.0 * lam) / 2.0 * l * (phi.powi(2) / 2.0 - 1.0 + phi.cos());
            assert_relative_eq!(d.remainder_bound, predicted.abs(), epsilon = 1e-12);
            assert!(d.remainder_bound <= phi.powi(4) * (1.0 / lam_hat).ln());
        }
    }

    #[test]
    fn fisher_pauli_examples() {
        let m = fisher_pauli(&BlochState::maximally_mixed()).unwrap();
        assert_eq!(m, Matrix3::identity());
        let m = fisher_pauli(&BlochState::on_z(0.8).unwrap()).unwrap();
        assert_relative_eq!(m[(0, 0)], 1.0, epsilon = 1e-15);
        assert_relative_eq!(m[(2, 2)], 1.0 / 0.36, epsilon = 1e-12);
        assert!(fisher_pauli(&BlochState::on_z(1.0).unwrap()).is_err());

        let mut rng = trial_rng(43, 0, 0);
        for _ in 0..100 {
            let s = random_state(&mut rng, 0.999);
            let m = fisher_pauli(&s).unwrap();
            for i in 0..3 {
                assert!(m[(i, i)] >= 1.0);
            }
        }
    }

    #[test]
    fn bures_weight_bloch_examples() {
        let m = bures_weight_bloch(&BlochState::maximally_mixed()).unwrap();
        assert_eq!(m, Matrix3::identity() * 0.25);
        let m = bures_weight_bloch(&BlochState::on_z(0.6).unwrap()).unwrap();
        assert_relative_eq!(m[(0, 0)], 0.25, epsilon = 1e-15);
        assert_relative_eq!(m[(2, 2)], 0.390625, epsilon = 1e-12);
        assert!(bures_weight_bloch(&BlochState::on_z(1.0).unwrap()).is_err());
    }

    #[test]
    fn bures_weight_bloch_is_the_local_quadratic_form() {
        // The matrix is diagonal, so each entry is probed along its own
        // axis; off-axis directions pick up r_i r_j cross terms that the
        // diagonal form does not claim to carry.
        let mut rng = trial_rng(47, 0, 0);
        let delta = 1e-4;
        for _ in 0..100 {
            let s = random_state(&mut rng, 0.8);
            let g = bures_weight_bloch(&s).unwrap();
            for i in 0..3 {
                let mut d = Vector3::zeros();
                d[i] = delta;
                let shifted = BlochState::new(s.r() + d).unwrap();
                let exact = bures_sq(&s, &shifted);
                let quad = delta * delta * g[(i, i)];
                assert!(
                    (exact - quad).abs() <= 50.0 * delta.powi(3),
                    "axis {i} mismatch: exact {exact}, quadratic {quad}"
                );
            }
        }
    }

    #[test]
    fn bures_weight_local_examples() {
        let m = bures_weight_local(0.25).unwrap();
        assert_relative_eq!(m[(0, 0)], 4.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(m[(1, 1)], 0.25, epsilon = 1e-15);
        assert_relative_eq!(m[(2, 2)], 0.25, epsilon = 1e-15);
        assert!(bures_weight_local(0.0).is_err());
        assert!(bures_weight_local(0.5).is_err());
        // rotation weights vanish toward the fully mixed point
        let m = bures_weight_local(0.4999).unwrap();
        assert!(m[(1, 1)] < 1e-7);
    }

    #[test]
    fn bures_weight_local_matches_scaled_distance() {
        // n * bures_sq between nearby local parameter points approaches the
        // quadratic form in (sqrt(n) d_lambda, d_u, d_v)
        let n = 100_000_000u64;
        let sqrt_n = (n as f64).sqrt();
        let lam0 = 0.25;
        let (t, u, v) = (0.3, 0.2, -0.1);
        let base = LocalTheta::new(lam0, 0.0, 0.0, n, Rotation::identity()).unwrap();
        let moved =
            LocalTheta::new(lam0 + t / sqrt_n, u, v, n, Rotation::identity()).unwrap();
        let scaled = n as f64 * bures_sq(&reconstruct(&base), &reconstruct(&moved));
        let g = bures_weight_local(lam0).unwrap();
        let dv = Vector3::new(t, u, v);
        let quad = (dv.transpose() * g * dv)[(0, 0)];
        assert!(
            (scaled - quad).abs() < 0.01,
            "n-scaled distance {scaled} vs quadratic {quad}"
        );
    }
}
