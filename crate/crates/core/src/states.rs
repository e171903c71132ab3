//! Qubit states as Bloch vectors, frame rotations, the local eigenvalue and
//! rotation parametrization, and sampling of Pauli measurement outcomes on
//! product states.

use nalgebra::{Complex, Matrix2, Matrix3, UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A qubit density matrix (1/2)(I + r . sigma), stored as its Bloch vector.
///
/// Physical iff |r| <= 1. Construction accepts up to 1e-12 of float slop
/// above 1 and clamps it back onto the ball; anything larger is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    r: Vector3<f64>,
}

impl BlochState {
    pub fn new(r: Vector3<f64>) -> Result<Self> {
        let n = r.norm();
        if !n.is_finite() {
            return Err(Error::Domain("non-finite Bloch vector".into()));
        }
        if n > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("Bloch vector norm {n} > 1")));
        }
        let r = if n > 1.0 { r / n } else { r };
        Ok(Self { r })
    }

    pub fn from_xyz(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(Vector3::new(x, y, z))
    }

    pub fn maximally_mixed() -> Self {
        Self { r: Vector3::zeros() }
    }

    /// State with Bloch vector mag * z_hat; mag may be negative.
    pub fn on_z(mag: f64) -> Result<Self> {
        Self::from_xyz(0.0, 0.0, mag)
    }

    #[inline]
    pub fn r(&self) -> Vector3<f64> {
        self.r
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.r.norm()
    }

    /// Eigenvalues ((1+|r|)/2, (1-|r|)/2) of the density matrix.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let n = self.norm();
        ((1.0 + n) / 2.0, (1.0 - n) / 2.0)
    }

    /// Smaller eigenvalue (1-|r|)/2, in [0, 1/2].
    #[inline]
    pub fn lambda_min(&self) -> f64 {
        ((1.0 - self.norm()) / 2.0).max(0.0)
    }

    pub fn is_pure(&self) -> bool {
        self.norm() >= 1.0 - 1e-12
    }
}

/// Closest physical state to a raw (possibly unphysical) Bloch vector.
///
/// For qubits the trace distance between two states equals the Euclidean
/// distance of their Bloch vectors, so the trace-norm minimiser over the
/// state space is the radial projection onto the unit ball.
pub fn project_to_ball(raw: Vector3<f64>) -> BlochState {
    let n = raw.norm();
    if n <= 1.0 {
        BlochState { r: raw }
    } else {
        BlochState { r: raw / n }
    }
}

/// A Bloch-sphere rotation together with its SU(2) representative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    q: UnitQuaternion<f64>,
}

impl Rotation {
    pub fn identity() -> Self {
        Self { q: UnitQuaternion::identity() }
    }

    pub fn from_quaternion(q: UnitQuaternion<f64>) -> Self {
        Self { q }
    }

    /// Rotation that maps the direction of `dir` onto +z.
    pub fn taking_to_z(dir: Vector3<f64>) -> Result<Self> {
        let n = dir.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DirectionUndefined);
        }
        let d = dir / n;
        let z = Vector3::z();
        match UnitQuaternion::rotation_between(&d, &z) {
            Some(q) => Ok(Self { q }),
            // antiparallel: any half-turn through the equator works; fix x
            None => Ok(Self {
                q: UnitQuaternion::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI),
            }),
        }
    }

    #[inline]
    pub fn apply(&self, v: Vector3<f64>) -> Vector3<f64> {
        self.q * v
    }

    #[inline]
    pub fn inverse_apply(&self, v: Vector3<f64>) -> Vector3<f64> {
        self.q.inverse() * v
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.q.to_rotation_matrix().into_inner()
    }

    /// SU(2) representative U with U (v.sigma) U* = (Rv).sigma.
    pub fn su2(&self) -> Matrix2<Complex<f64>> {
        let q = self.q.quaternion();
        let (w, x, y, z) = (q.w, q.i, q.j, q.k);
        // U = w I - i (x sx + y sy + z sz)
        Matrix2::new(
            Complex::new(w, -z),
            Complex::new(-y, -x),
            Complex::new(y, -x),
            Complex::new(w, z),
        )
    }
}

/// Number of +1 outcomes from n_per_axis projective measurements of each
/// Pauli observable on fresh copies of a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub n_per_axis: u64,
    pub plus_counts: [u64; 3],
}

impl OutcomeCounts {
    pub fn new(n_per_axis: u64, plus_counts: [u64; 3]) -> Result<Self> {
        if n_per_axis == 0 {
            return Err(Error::Domain("n_per_axis must be positive".into()));
        }
        if plus_counts.iter().any(|&c| c > n_per_axis) {
            return Err(Error::Domain("count exceeds n_per_axis".into()));
        }
        Ok(Self { n_per_axis, plus_counts })
    }
}

/// Independent Binomial(n_per_axis, (1+r_i)/2) draws, one per Pauli axis.
pub fn sample_pauli_outcomes<R: Rng + ?Sized>(
    state: &BlochState,
    n_per_axis: u64,
    rng: &mut R,
) -> OutcomeCounts {
    assert!(n_per_axis >= 1, "n_per_axis must be positive");
    let r = state.r();
    let mut plus_counts = [0u64; 3];
    for (i, c) in plus_counts.iter_mut().enumerate() {
        let p = ((1.0 + r[i]) / 2.0).clamp(0.0, 1.0);
        *c = Binomial::new(n_per_axis, p).expect("valid binomial").sample(rng);
    }
    OutcomeCounts { n_per_axis, plus_counts }
}

/// Linear-inversion Bloch vector 2 k_i / n - 1; may land outside the ball.
pub fn bloch_from_counts(counts: &OutcomeCounts) -> Vector3<f64> {
    let n = counts.n_per_axis as f64;
    Vector3::new(
        2.0 * counts.plus_counts[0] as f64 / n - 1.0,
        2.0 * counts.plus_counts[1] as f64 / n - 1.0,
        2.0 * counts.plus_counts[2] as f64 / n - 1.0,
    )
}

/// Eigenvalue/rotation coordinates (lambda, u, v) of a state relative to a
/// frame whose +z axis carries the reference direction.
///
/// The state is U(w/sqrt(n)) diag(1-lambda, lambda) U(w/sqrt(n))* with
/// U(w) = exp(i(u sx + v sy)); the tilt angle away from +z is
/// Phi = 2|w|/sqrt(n) and the azimuth is phi = Arg(-v + iu).
#[derive(Debug, Clone)]
pub struct LocalTheta {
    pub lambda: f64,
    pub u: f64,
    pub v: f64,
    pub n: u64,
    pub frame: Rotation,
}

impl LocalTheta {
    pub fn new(lambda: f64, u: f64, v: f64, n: u64, frame: Rotation) -> Result<Self> {
        if !(0.0..=0.5).contains(&lambda) {
            return Err(Error::Domain(format!("lambda {lambda} outside [0, 1/2]")));
        }
        if n == 0 {
            return Err(Error::Domain("n must be positive".into()));
        }
        Ok(Self { lambda, u, v, n, frame })
    }

    pub fn w_norm(&self) -> f64 {
        self.u.hypot(self.v)
    }
}

/// Invert `reconstruct`: coordinates of `state` in `frame`.
///
/// Total for tilt angles in [0, pi); only a zero-length Bloch vector has no
/// direction to measure the tilt from. At an exact antipode (tilt pi) the
/// azimuth is arbitrary and fixed to phi = 0.
pub fn local_coordinates(state: &BlochState, frame: &Rotation, n: u64) -> Result<LocalTheta> {
    assert!(n >= 1, "n must be positive");
    let b = frame.apply(state.r());
    let rnorm = b.norm();
    if rnorm == 0.0 {
        return Err(Error::DirectionUndefined);
    }
    let lambda = ((1.0 - rnorm) / 2.0).max(0.0);
    let b_perp = b.x.hypot(b.y);
    let phi_tilt = b_perp.atan2(b.z);
    let w_norm = (n as f64).sqrt() * phi_tilt / 2.0;
    let (u, v) = if b_perp > 0.0 {
        (w_norm * b.y / b_perp, -w_norm * b.x / b_perp)
    } else if b.z > 0.0 {
        (0.0, 0.0)
    } else {
        (0.0, -w_norm)
    };
    Ok(LocalTheta { lambda, u, v, n, frame: *frame })
}

/// State U(w/sqrt(n)) diag(1-lambda, lambda) U(w/sqrt(n))*, mapped back to
/// the lab frame.
pub fn reconstruct(theta: &LocalTheta) -> BlochState {
    debug_assert!((0.0..=0.5 + 1e-12).contains(&theta.lambda));
    let len = 1.0 - 2.0 * theta.lambda;
    let w_norm = theta.w_norm();
    let b = if w_norm == 0.0 {
        Vector3::new(0.0, 0.0, len)
    } else {
        let phi_tilt = 2.0 * w_norm / (theta.n as f64).sqrt();
        let (s, c) = phi_tilt.sin_cos();
        Vector3::new(
            len * s * (-theta.v / w_norm),
            len * s * (theta.u / w_norm),
            len * c,
        )
    };
    let lab = theta.frame.inverse_apply(b);
    project_to_ball(lab)
}

/// 2x2 complex density matrix of a state; used by the dense validation ops.
pub fn density_matrix(state: &BlochState) -> Matrix2<Complex<f64>> {
    let r = state.r();
    let half = Complex::new(0.5, 0.0);
    Matrix2::new(
        half * (1.0 + r.z),
        half * Complex::new(r.x, -r.y),
        half * Complex::new(r.x, r.y),
        half * (1.0 - r.z),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::trial_rng;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn construction_clamps_slop_and_rejects_garbage() {
        let s = BlochState::from_xyz(0.0, 0.0, 1.0 + 5e-13).unwrap();
        assert!(s.norm() <= 1.0);
        assert!(BlochState::from_xyz(0.0, 0.0, 1.1).is_err());
        assert!(BlochState::from_xyz(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn eigenvalues_lie_in_unit_interval() {
        for mag in [0.0, 0.3, 0.999, 1.0] {
            let (hi, lo) = BlochState::on_z(mag).unwrap().eigenvalues();
            assert!((0.0..=1.0).contains(&hi));
            assert!((0.0..=1.0).contains(&lo));
            assert_relative_eq!(hi + lo, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn pure_eigenstate_counts_are_deterministic() {
        let mut rng = trial_rng(1, 0, 0);
        let up = BlochState::on_z(1.0).unwrap();
        let c = sample_pauli_outcomes(&up, 100, &mut rng);
        assert_eq!(c.plus_counts[2], 100);
        let down = BlochState::on_z(-1.0).unwrap();
        let c = sample_pauli_outcomes(&down, 50, &mut rng);
        assert_eq!(c.plus_counts[2], 0);
    }

    #[test]
    fn mixed_state_frequencies_concentrate() {
        // Binomial(1e5, 1/2): |k/n - 1/2| <= 0.006 fails with prob ~1.4e-4,
        // so 100 seeded repetitions allow at most one miss.
        let s = BlochState::maximally_mixed();
        let mut misses = 0;
        for t in 0..100 {
            let mut rng = trial_rng(7, 1, t);
            let c = sample_pauli_outcomes(&s, 100_000, &mut rng);
            let f = c.plus_counts[0] as f64 / 100_000.0;
            if !(0.494..=0.506).contains(&f) {
                misses += 1;
            }
        }
        assert!(misses <= 1, "{misses} misses");
    }

    #[test]
    fn bloch_from_counts_examples() {
        let c = OutcomeCounts::new(10, [5, 5, 5]).unwrap();
        assert_eq!(bloch_from_counts(&c), Vector3::zeros());
        let c = OutcomeCounts::new(10, [10, 10, 10]).unwrap();
        let r = bloch_from_counts(&c);
        assert_eq!(r, Vector3::new(1.0, 1.0, 1.0));
        assert!(r.norm() > 1.0);
        let c = OutcomeCounts::new(10, [7, 5, 9]).unwrap();
        let r = bloch_from_counts(&c);
        assert_relative_eq!(r.x, 0.4, epsilon = 1e-15);
        assert_relative_eq!(r.y, 0.0, epsilon = 1e-15);
        assert_relative_eq!(r.z, 0.8, epsilon = 1e-15);
    }

    #[test]
    fn projection_examples() {
        let s = project_to_ball(Vector3::new(0.3, 0.0, 0.0));
        assert_eq!(s.r(), Vector3::new(0.3, 0.0, 0.0));
        let s = project_to_ball(Vector3::new(2.0, 0.0, 0.0));
        assert_eq!(s.r(), Vector3::new(1.0, 0.0, 0.0));
        let s = project_to_ball(Vector3::new(1.0, 1.0, 1.0));
        let w = 1.0 / 3.0_f64.sqrt();
        assert_relative_eq!(s.r().x, w, epsilon = 1e-15);
        assert_relative_eq!(s.norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn projection_is_trace_norm_optimal_on_boundary_grid() {
        // For a raw vector outside the ball, no boundary state beats the
        // radial projection in Euclidean (= trace) distance.
        let raw = Vector3::new(1.0, 1.0, 1.0);
        let proj = project_to_ball(raw);
        let best = (raw - proj.r()).norm();
        let steps = 60;
        for a in 0..steps {
            for b in 0..(2 * steps) {
                let th = std::f64::consts::PI * a as f64 / steps as f64;
                let ph = std::f64::consts::PI * b as f64 / steps as f64;
                let cand = Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
                assert!((raw - cand).norm() >= best - 1e-12);
            }
        }
    }

    #[test]
    fn rotation_is_orthogonal_and_su2_consistent() {
        let mut rng = trial_rng(11, 0, 0);
        for _ in 0..50 {
            let axis: [f64; 3] = rand_distr::UnitSphere.sample(&mut rng);
            let angle: f64 = rng.random_range(-3.0..3.0);
            let rot = Rotation::from_quaternion(UnitQuaternion::from_axis_angle(
                &nalgebra::Unit::new_normalize(Vector3::from(axis)),
                angle,
            ));
            let m = rot.matrix();
            let err = (m.transpose() * m - Matrix3::identity()).norm();
            assert!(err < 1e-12);
            assert_relative_eq!(m.determinant(), 1.0, epsilon = 1e-12);

            // U (v.sigma) U* must equal (Rv).sigma
            let v: [f64; 3] = rand_distr::UnitSphere.sample(&mut rng);
            let v = Vector3::from(v);
            let u = rot.su2();
            let vs = Matrix2::new(
                Complex::new(v.z, 0.0),
                Complex::new(v.x, -v.y),
                Complex::new(v.x, v.y),
                Complex::new(-v.z, 0.0),
            );
            let lhs = u * vs * u.adjoint();
            let rv = rot.apply(v);
            let rhs = Matrix2::new(
                Complex::new(rv.z, 0.0),
                Complex::new(rv.x, -rv.y),
                Complex::new(rv.x, rv.y),
                Complex::new(-rv.z, 0.0),
            );
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn aligned_coordinates_are_trivial() {
        let s = BlochState::on_z(0.5).unwrap();
        let t = local_coordinates(&s, &Rotation::identity(), 100).unwrap();
        assert_relative_eq!(t.lambda, 0.25, epsilon = 1e-15);
        assert_eq!(t.u, 0.0);
        assert_eq!(t.v, 0.0);
    }

    #[test]
    fn tilt_angle_sets_w_norm() {
        // tilt 0.02 rad at n = 1e4 gives |w| = sqrt(n) * tilt / 2 = 1
        let tilt: f64 = 0.02;
        let s = BlochState::from_xyz(0.6 * tilt.sin(), 0.0, 0.6 * tilt.cos()).unwrap();
        let t = local_coordinates(&s, &Rotation::identity(), 10_000).unwrap();
        assert_relative_eq!(t.w_norm(), 1.0, epsilon = 1e-10);
        let back = reconstruct(&t);
        assert!((back.r() - s.r()).norm() < 1e-12);
    }

    #[test]
    fn reconstruct_examples() {
        let t = LocalTheta::new(0.0, 0.0, 0.0, 10, Rotation::identity()).unwrap();
        assert_eq!(reconstruct(&t).r(), Vector3::new(0.0, 0.0, 1.0));

        let t = LocalTheta::new(0.5, 1.3, -0.4, 10, Rotation::identity()).unwrap();
        assert_eq!(reconstruct(&t).norm(), 0.0);

        // u = sqrt(n) * 0.01, v = 0: tilt 0.02 toward +y (azimuth Arg(iu) = pi/2)
        let n = 400u64;
        let t = LocalTheta::new(0.1, (n as f64).sqrt() * 0.01, 0.0, n, Rotation::identity())
            .unwrap();
        let r = reconstruct(&t).r();
        assert_relative_eq!(r.norm(), 0.8, epsilon = 1e-12);
        assert_relative_eq!(r.y, 0.8 * 0.02_f64.sin(), epsilon = 1e-12);
        assert_relative_eq!(r.z, 0.8 * 0.02_f64.cos(), epsilon = 1e-12);
        assert!(r.x.abs() < 1e-15);
    }

    #[test]
    fn zero_vector_has_no_direction() {
        let s = BlochState::maximally_mixed();
        assert!(matches!(
            local_coordinates(&s, &Rotation::identity(), 10),
            Err(Error::DirectionUndefined)
        ));
    }

    #[test]
    fn reconstruct_preserves_spectrum() {
        let mut rng = trial_rng(13, 0, 0);
        for _ in 0..200 {
            let lambda: f64 = rng.random_range(0.0..0.5);
            let u: f64 = rng.random_range(-3.0..3.0);
            let v: f64 = rng.random_range(-3.0..3.0);
            let axis: [f64; 3] = rand_distr::UnitSphere.sample(&mut rng);
            let frame = Rotation::from_quaternion(UnitQuaternion::from_axis_angle(
                &nalgebra::Unit::new_normalize(Vector3::from(axis)),
                rng.random_range(-3.0..3.0),
            ));
            let t = LocalTheta::new(lambda, u, v, 50, frame).unwrap();
            let s = reconstruct(&t);
            let (hi, lo) = s.eigenvalues();
            assert_relative_eq!(lo, lambda, epsilon = 1e-12);
            assert_relative_eq!(hi, 1.0 - lambda, epsilon = 1e-12);
        }
    }

    #[test]
    fn round_trip_state_to_coordinates() {
        let mut rng = trial_rng(17, 0, 0);
        for _ in 0..1000 {
            let dir: [f64; 3] = rand_distr::UnitSphere.sample(&mut rng);
            let mag: f64 = rng.random_range(0.01..1.0);
            let s = BlochState::new(Vector3::from(dir) * mag).unwrap();
            let axis: [f64; 3] = rand_distr::UnitSphere.sample(&mut rng);
            let frame = Rotation::from_quaternion(UnitQuaternion::from_axis_angle(
                &nalgebra::Unit::new_normalize(Vector3::from(axis)),
                rng.random_range(-3.0..3.0),
            ));
            let n = rng.random_range(1..10_000u64);
            let t = local_coordinates(&s, &frame, n).unwrap();
            let back = reconstruct(&t);
            assert!(
                (back.r() - s.r()).norm() < 1e-12,
                "round trip drifted by {}",
                (back.r() - s.r()).norm()
            );
        }
    }

    proptest! {
        #[test]
        fn coordinates_round_trip_on_parameters(
            lambda in 0.001f64..0.499,
            w_norm in 0.0f64..1.0,
            phase in 0.0f64..(2.0 * std::f64::consts::PI),
            n in 4u64..100_000,
        ) {
            // |w| up to sqrt(n) * pi / 4 stays inside the invertible range
            let w = w_norm * (n as f64).sqrt() * std::f64::consts::FRAC_PI_4;
            let (u, v) = (w * phase.sin(), -w * phase.cos());
            let t = LocalTheta::new(lambda, u, v, n, Rotation::identity()).unwrap();
            let s = reconstruct(&t);
            let t2 = local_coordinates(&s, &Rotation::identity(), n).unwrap();
            prop_assert!((t2.lambda - lambda).abs() < 1e-10);
            prop_assert!((t2.u - u).abs() < 1e-10 * (1.0 + w));
            prop_assert!((t2.v - v).abs() < 1e-10 * (1.0 + w));
        }

        #[test]
        fn projection_idempotent_and_contractive(
            ax in -3.0f64..3.0, ay in -3.0f64..3.0, az in -3.0f64..3.0,
            bx in -3.0f64..3.0, by in -3.0f64..3.0, bz in -3.0f64..3.0,
        ) {
            let a = Vector3::new(ax, ay, az);
            let b = Vector3::new(bx, by, bz);
            let pa = project_to_ball(a);
            let pb = project_to_ball(b);
            let again = project_to_ball(pa.r());
            prop_assert!((again.r() - pa.r()).norm() < 1e-15);
            prop_assert!((pa.r() - pb.r()).norm() <= (a - b).norm() + 1e-12);
        }
    }
}
