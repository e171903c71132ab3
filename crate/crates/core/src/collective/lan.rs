//! Finite-n spin blocks against their displaced-thermal Gaussian limit.
//!
//! A block of total spin j carries a truncated geometric spectrum rotated
//! by exp(2i(u Jx + v Jy)/sqrt(n)); as n grows it converges in trace norm
//! to a bosonic thermal state displaced by sqrt(1-2l)(-v+iu). The distance
//! between the two at finite n is the quantity everything here computes.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

/// Largest block dimension (2j+1) we are willing to exponentiate.
pub const BLOCK_DIM_CAP: usize = 512;

/// Truncated-tail mass above which a Fock cutoff is rejected.
const CUTOFF_TAIL: f64 = 1e-8;

type CMatrix = DMatrix<Complex<f64>>;

fn cx(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

/// Raising operator on a spin-j block in the k = j - m basis (k = 0 is the
/// highest-weight state): element (k-1, k) = sqrt(k(2j-k+1)).
fn ladder_plus(two_j: u64) -> CMatrix {
    let dim = two_j as usize + 1;
    let mut jp = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        let kf = k as f64;
        jp[(k - 1, k)] = cx((kf * (two_j as f64 - kf + 1.0)).sqrt(), 0.0);
    }
    jp
}

/// Fock-space annihilation operator truncated to `cutoff` levels:
/// element (k-1, k) = sqrt(k).
fn annihilator(cutoff: usize) -> CMatrix {
    let mut a = CMatrix::zeros(cutoff, cutoff);
    for k in 1..cutoff {
        a[(k - 1, k)] = cx((k as f64).sqrt(), 0.0);
    }
    a
}

/// Density matrix of the spin-j block of n copies: geometric diagonal
/// (1-p)p^k / (1-p^(2j+1)) with p = l/(1-l), conjugated by
/// U = exp(2i(u Jx + v Jy)/sqrt(n)).
pub fn build_block_state(two_j: u64, n: u64, lambda: f64, w: (f64, f64)) -> Result<CMatrix> {
    let dim = two_j as usize + 1;
    if dim > BLOCK_DIM_CAP {
        return Err(Error::DimensionCap { dim, cap: BLOCK_DIM_CAP });
    }
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::Domain(format!("lambda {lambda} outside (0, 1/2)")));
    }
    if n < two_j || (n - two_j) % 2 != 0 {
        return Err(Error::Domain(format!("2j = {two_j} not a block of n = {n}")));
    }
    let p = lambda / (1.0 - lambda);
    let ln_p = lambda.ln() - (-lambda).ln_1p();
    let norm = (1.0 - p) / (1.0 - (ln_p * (two_j as f64 + 1.0)).exp());
    let mut rho = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        rho[(k, k)] = cx(norm * (ln_p * k as f64).exp(), 0.0);
    }
    let (u, v) = w;
    if u == 0.0 && v == 0.0 {
        return Ok(rho);
    }
    let jp = ladder_plus(two_j);
    let jm = jp.transpose(); // real entries, so transpose = adjoint
    let scale = 2.0 / (n as f64).sqrt();
    // i * 2(u Jx + v Jy)/sqrt(n) = (scale/2) [ (iu+v) J+ + (iu-v) J- ]
    let gen = (&jp * cx(0.5 * scale * v, 0.5 * scale * u))
        + (&jm * cx(-0.5 * scale * v, 0.5 * scale * u));
    let unitary = gen.exp();
    Ok(&unitary * rho * unitary.adjoint())
}

/// Thermal state of mean-parameter p = l/(1-l), truncated at `cutoff`
/// Fock levels and displaced by beta = sqrt(1-2l)(-v+iu).
pub fn gaussian_displaced_thermal(lambda: f64, w: (f64, f64), cutoff: usize) -> Result<CMatrix> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::Domain(format!("lambda {lambda} outside (0, 1/2)")));
    }
    if cutoff == 0 {
        return Err(Error::Domain("cutoff must be positive".into()));
    }
    let p = lambda / (1.0 - lambda);
    let ln_p = lambda.ln() - (-lambda).ln_1p();
    let tail = (ln_p * cutoff as f64).exp();
    if tail > CUTOFF_TAIL {
        let needed = (CUTOFF_TAIL.ln() / ln_p).ceil() as usize;
        return Err(Error::CutoffTooSmall { cutoff, kept: 1.0 - tail, needed });
    }
    let mut phi = CMatrix::zeros(cutoff, cutoff);
    for k in 0..cutoff {
        phi[(k, k)] = cx((1.0 - p) * (ln_p * k as f64).exp(), 0.0);
    }
    let (u, v) = w;
    if u == 0.0 && v == 0.0 {
        return Ok(phi);
    }
    let beta = cx(-v, u) * cx((1.0 - 2.0 * lambda).sqrt(), 0.0);
    let a = annihilator(cutoff);
    let gen = a.adjoint() * beta - &a * beta.conj();
    let disp = gen.exp();
    Ok(&disp * phi * disp.adjoint())
}

/// (Re, Im) of Tr[a phi]: the two quadrature means of a Fock-truncated
/// state. For a displaced thermal state this recovers the displacement.
pub fn quadrature_means(phi: &CMatrix) -> (f64, f64) {
    let mut acc = cx(0.0, 0.0);
    for k in 1..phi.nrows() {
        acc += cx((k as f64).sqrt(), 0.0) * phi[(k, k - 1)];
    }
    (acc.re, acc.im)
}

/// Trace distance between the spin-j block state and its Gaussian limit,
/// both embedded in the Fock basis (the block basis k = j - m maps to
/// Fock level k directly, so the embedding is zero-padding).
pub fn lan_trace_distance(
    two_j: u64,
    n: u64,
    lambda: f64,
    w: (f64, f64),
    cutoff: usize,
) -> Result<f64> {
    let rho = build_block_state(two_j, n, lambda, w)?;
    let phi = gaussian_displaced_thermal(lambda, w, cutoff)?;
    let bdim = two_j as usize + 1;
    let dim = bdim.max(cutoff);
    let mut diff = CMatrix::zeros(dim, dim);
    diff.view_mut((0, 0), (bdim, bdim)).copy_from(&rho);
    for r in 0..cutoff {
        for c in 0..cutoff {
            diff[(r, c)] -= phi[(r, c)];
        }
    }
    // Geometric tails leave entries ~1e-200 whose squares go denormal and
    // derail the QR iteration; anything 90 orders under the norm is dust.
    let maxabs = diff.iter().map(|e| e.norm()).fold(0.0f64, f64::max);
    let thresh = maxabs * 1e-90;
    for e in diff.iter_mut() {
        if e.norm() < thresh {
            *e = cx(0.0, 0.0);
        }
    }
    let eigs = diff.symmetric_eigen().eigenvalues;
    Ok(0.5 * eigs.iter().map(|e| e.abs()).sum::<f64>())
}

/// The block index where the distribution concentrates: the integer
/// nearest n(1-2l) with the parity of n, ties resolved upward.
pub fn typical_two_j(n: u64, lambda: f64) -> Result<u64> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    if !(0.0..0.5).contains(&lambda) {
        return Err(Error::Domain(format!("lambda {lambda} outside [0, 1/2)")));
    }
    let t = n as f64 * (1.0 - 2.0 * lambda);
    let par = (n % 2) as i64;
    let f = t.floor() as i64;
    let lo = f - (f - par).rem_euclid(2);
    let hi = lo + 2;
    let pick = if t - (lo as f64) < hi as f64 - t { lo } else { hi };
    Ok(pick.clamp(par, n as i64) as u64)
}
