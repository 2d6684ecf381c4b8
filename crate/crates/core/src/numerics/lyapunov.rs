use nalgebra::DVector;

use super::{
    ensure_finite, ensure_square, ensure_symmetric, fro, spectral_abscissa, symmetrize, Matrix,
    NumericsError, Result,
};

const RESIDUAL_TOL: f64 = 1e-10;
const REFINEMENT_STEPS: usize = 3;

/// `AᵀX + XA + Q`.
pub fn lyapunov_residual(a: &Matrix, q: &Matrix, x: &Matrix) -> Matrix {
    a.transpose() * x + x * a + q
}

/// Kronecker form of `X ↦ AᵀX + XA` acting on column-major `vec(X)`:
/// `I ⊗ Aᵀ + Aᵀ ⊗ I`.
fn kron_operator(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut k = Matrix::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            for kk in 0..n {
                // (I ⊗ Aᵀ): couples X(kk, j) with coefficient A(kk, i)
                k[(row, j * n + kk)] += a[(kk, i)];
                // (Aᵀ ⊗ I): couples X(i, l) with coefficient A(l, j)
                k[(row, kk * n + i)] += a[(kk, j)];
            }
        }
    }
    k
}

/// Solve `AᵀX + XA + Q = 0` for Hurwitz `A` and symmetric `Q`.
///
/// Vectorized Kronecker system with LU partial pivoting, followed by a few
/// rounds of residual refinement. The returned `X` is exactly symmetric.
pub fn solve_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    let n = ensure_square("lyapunov A", a)?;
    let nq = ensure_square("lyapunov Q", q)?;
    if n != nq {
        return Err(NumericsError::DimensionMismatch {
            what: "lyapunov",
            detail: format!("A is {n}x{n}, Q is {nq}x{nq}"),
        });
    }
    ensure_finite("lyapunov A", a)?;
    ensure_finite("lyapunov Q", q)?;
    ensure_symmetric("lyapunov Q", q, 1e-12)?;
    let abscissa = spectral_abscissa(a)?;
    if abscissa >= 0.0 {
        return Err(NumericsError::NotHurwitz { abscissa });
    }

    let lu = kron_operator(a).lu();
    let solve = |rhs: &Matrix| -> Result<Matrix> {
        let b = DVector::from_iterator(n * n, rhs.iter().map(|v| -v));
        let x = lu
            .solve(&b)
            .ok_or(NumericsError::Singular { what: "lyapunov" })?;
        Ok(symmetrize(&Matrix::from_vec(n, n, x.as_slice().to_vec())))
    };

    let tolerance = RESIDUAL_TOL * (1.0 + fro(q));
    let mut x = solve(q)?;
    let mut residual = fro(&lyapunov_residual(a, q, &x));
    for _ in 0..REFINEMENT_STEPS {
        if residual <= tolerance * 1e-3 {
            break;
        }
        let r = symmetrize(&lyapunov_residual(a, q, &x));
        let candidate = &x + solve(&r)?;
        let cand_res = fro(&lyapunov_residual(a, q, &candidate));
        if cand_res >= residual {
            break;
        }
        x = candidate;
        residual = cand_res;
    }
    if residual > tolerance {
        return Err(NumericsError::LyapunovResidual {
            residual,
            tolerance,
        });
    }
    Ok(x)
}
