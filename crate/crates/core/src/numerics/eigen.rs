use nalgebra::linalg::Schur;
use nalgebra::DMatrix;

use super::{ensure_finite, ensure_square, Complex, Matrix, NumericsError, Result};

const MAX_SCHUR_SWEEPS: usize = 10_000;

/// All eigenvalues of a real square matrix (real Schur form).
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex>> {
    let n = ensure_square("eigenvalues", m)?;
    ensure_finite("eigenvalues", m)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, MAX_SCHUR_SWEEPS)
        .ok_or(NumericsError::EigenNonConvergence)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(m: &Matrix) -> Result<f64> {
    let ev = eigenvalues(m)?;
    if ev.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Unit vector spanning the (numerical) null space of `m − λI`, taken as the
/// right singular vector of the smallest singular value.
pub fn null_vector(m: &Matrix, lambda: Complex) -> Result<Vec<Complex>> {
    let n = ensure_square("null_vector", m)?;
    let shifted = DMatrix::<Complex>::from_fn(n, n, |i, j| {
        let v = Complex::new(m[(i, j)], 0.0);
        if i == j {
            v - lambda
        } else {
            v
        }
    });
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.ok_or(NumericsError::EigenNonConvergence)?;
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    // v_t holds Vᴴ: the k-th right singular vector is the conjugate of row k.
    let mut v: Vec<Complex> = (0..n).map(|j| v_t[(k, j)].conj()).collect();
    // Fix the phase so the largest component is real positive.
    let (imax, _) = v
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
    let phase = v[imax] / v[imax].norm();
    for z in &mut v {
        *z /= phase;
    }
    Ok(v)
}
