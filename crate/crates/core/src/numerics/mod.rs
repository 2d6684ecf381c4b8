//! Dense small-matrix kernels: matrix exponential, Lyapunov and Riccati
//! solvers, eigenvalues, and conserved-mode splitting.
//!
//! Sizes in this crate stay below a few dozen states, so everything is dense
//! and allocation-happy.

mod care;
mod eigen;
mod expm;
mod lyapunov;
mod modes;
#[cfg(test)]
pub(crate) mod test_support;

pub use care::{care_residual, solve_care, solve_care_with, CareOptions, CareSolution};
pub use eigen::{eigenvalues, null_vector, spectral_abscissa};
pub use expm::expm;
pub use lyapunov::{lyapunov_residual, solve_lyapunov};
pub use modes::{stabilizable, ConservedModes};

use thiserror::Error;

pub type Matrix = nalgebra::DMatrix<f64>;
pub type Complex = nalgebra::Complex<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("{what}: expected a square matrix, got {rows}x{cols}")]
    NotSquare {
        what: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("{what}: dimension mismatch ({detail})")]
    DimensionMismatch { what: &'static str, detail: String },
    #[error("{what}: matrix contains non-finite entries")]
    NonFinite { what: &'static str },
    #[error("{what}: matrix is not symmetric")]
    NotSymmetric { what: &'static str },
    #[error("{what}: matrix is not positive definite")]
    NotPositiveDefinite { what: &'static str },
    #[error("Lyapunov operator is not Hurwitz (spectral abscissa {abscissa:e})")]
    NotHurwitz { abscissa: f64 },
    #[error("singular linear system in {what}")]
    Singular { what: &'static str },
    #[error("Lyapunov residual {residual:e} above tolerance {tolerance:e}")]
    LyapunovResidual { residual: f64, tolerance: f64 },
    #[error("eigenvalue iteration did not converge")]
    EigenNonConvergence,
    #[error("no stabilizing initial gain found")]
    NoStabilizingInitializer,
    #[error("Newton iteration diverged (residual grew for 3 consecutive steps, last {residual:e})")]
    Diverged { residual: f64 },
    #[error("Newton iteration hit {iterations} iterations with residual {residual:e}")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("Riccati solution is not stabilizing (closed-loop abscissa {abscissa:e})")]
    NotStabilizing { abscissa: f64 },
}

pub type Result<T> = std::result::Result<T, NumericsError>;

pub(crate) fn ensure_square(what: &'static str, m: &Matrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(NumericsError::NotSquare {
            what,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub(crate) fn ensure_finite(what: &'static str, m: &Matrix) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NumericsError::NonFinite { what })
    }
}

pub(crate) fn ensure_symmetric(what: &'static str, m: &Matrix, rel_tol: f64) -> Result<()> {
    let scale = 1.0 + m.amax();
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > rel_tol * scale {
                return Err(NumericsError::NotSymmetric { what });
            }
        }
    }
    Ok(())
}

/// Abscissa below which a matrix counts as Hurwitz: `−1e-9·(1 + max|m_ij|)`.
/// Keeps roundoff-level eigenvalues of structural zeros from passing as stable.
pub fn hurwitz_threshold(m: &Matrix) -> f64 {
    -1e-9 * (1.0 + m.amax())
}

pub fn is_hurwitz(m: &Matrix) -> Result<bool> {
    Ok(spectral_abscissa(m)? < hurwitz_threshold(m))
}

/// Frobenius norm.
pub fn fro(m: &Matrix) -> f64 {
    m.norm()
}

/// `(M + Mᵀ)/2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Block-assemble a matrix from a grid of optional blocks; `None` is a zero
/// block. Row/column sizes are inferred from the present blocks.
pub fn block(rows: &[usize], cols: &[usize], blocks: &[&[Option<&Matrix>]]) -> Matrix {
    let total_r: usize = rows.iter().sum();
    let total_c: usize = cols.iter().sum();
    let mut out = Matrix::zeros(total_r, total_c);
    let mut r0 = 0;
    for (bi, &nr) in rows.iter().enumerate() {
        let mut c0 = 0;
        for (bj, &nc) in cols.iter().enumerate() {
            if let Some(b) = blocks[bi][bj] {
                assert_eq!((b.nrows(), b.ncols()), (nr, nc), "block ({bi},{bj}) shape");
                out.view_mut((r0, c0), (nr, nc)).copy_from(b);
            }
            c0 += nc;
        }
        r0 += nr;
    }
    out
}
