use nalgebra::DMatrix;

use super::{eigenvalues, ensure_square, Complex, Matrix, NumericsError, Result};

const RANK_TOL: f64 = 1e-10;

/// Linear combinations `w·x` that no input can move: the left null space of
/// `[A | inputs…]`.
///
/// Rows of `conserved` are orthonormal vectors `w` with `wA = 0` and
/// `w·input = 0`; columns of `basis` are an orthonormal complement `T`. Since
/// `range(A) ⊆ null(W)`, the subspace spanned by `T` is invariant and
/// `A T = T (Tᵀ A T)` exactly, so the spectrum of `A` is that of `TᵀAT` plus
/// one zero per conserved row.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservedModes {
    conserved: Matrix,
    basis: Matrix,
}

impl ConservedModes {
    pub fn new(a: &Matrix, inputs: &[&Matrix]) -> Result<Self> {
        let n = ensure_square("conserved modes", a)?;
        let width = n + inputs.iter().map(|b| b.ncols()).sum::<usize>();
        let mut stacked = Matrix::zeros(n, width);
        stacked.view_mut((0, 0), (n, n)).copy_from(a);
        let mut c0 = n;
        for b in inputs {
            if b.nrows() != n {
                return Err(NumericsError::DimensionMismatch {
                    what: "conserved modes",
                    detail: format!("input has {} rows, A has {n}", b.nrows()),
                });
            }
            stacked.view_mut((0, c0), (n, b.ncols())).copy_from(b);
            c0 += b.ncols();
        }
        if n == 0 {
            return Ok(Self {
                conserved: Matrix::zeros(0, 0),
                basis: Matrix::zeros(0, 0),
            });
        }
        let svd = stacked.svd(true, false);
        let u = svd.u.ok_or(NumericsError::EigenNonConvergence)?;
        let sv = &svd.singular_values;
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let cutoff = RANK_TOL * smax.max(1.0) * n as f64;
        // u is n×n because width ≥ n.
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for i in 0..n {
            if sv[i] > cutoff {
                kept.push(i);
            } else {
                dropped.push(i);
            }
        }
        if dropped.is_empty() {
            return Ok(Self {
                conserved: Matrix::zeros(0, n),
                basis: Matrix::identity(n, n),
            });
        }
        let basis = Matrix::from_fn(n, kept.len(), |i, j| u[(i, kept[j])]);
        let mut conserved = Matrix::from_fn(dropped.len(), n, |i, j| u[(j, dropped[i])]);
        // Canonical sign: largest-magnitude entry of each row positive.
        for mut row in conserved.row_iter_mut() {
            let idx = (0..row.len())
                .max_by(|&i, &j| row[i].abs().total_cmp(&row[j].abs()))
                .unwrap_or(0);
            if row[idx] < 0.0 {
                row *= -1.0;
            }
        }
        Ok(Self { conserved, basis })
    }

    pub fn count(&self) -> usize {
        self.conserved.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// `W`, one conserved combination per row.
    pub fn conserved(&self) -> &Matrix {
        &self.conserved
    }

    /// `T`, orthonormal basis of the invariant complement (identity when
    /// nothing is conserved).
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// `TᵀMT`; returns `M` untouched when nothing is conserved.
    pub fn reduce_square(&self, m: &Matrix) -> Matrix {
        if self.is_empty() {
            m.clone()
        } else {
            self.basis.transpose() * m * &self.basis
        }
    }

    /// `TᵀM` for a matrix acting on state rows.
    pub fn reduce_rows(&self, m: &Matrix) -> Matrix {
        if self.is_empty() {
            m.clone()
        } else {
            self.basis.transpose() * m
        }
    }

    /// `MT` for a matrix acting on state columns.
    pub fn reduce_cols(&self, m: &Matrix) -> Matrix {
        if self.is_empty() {
            m.clone()
        } else {
            m * &self.basis
        }
    }

    /// `MTᵀ`: lift a row-acting reduced matrix (e.g. a gain) to full state.
    pub fn lift_cols(&self, m: &Matrix) -> Matrix {
        if self.is_empty() {
            m.clone()
        } else {
            m * self.basis.transpose()
        }
    }

    /// `TM`: lift a reduced state-valued matrix (e.g. an estimator gain).
    pub fn lift_rows(&self, m: &Matrix) -> Matrix {
        if self.is_empty() {
            m.clone()
        } else {
            &self.basis * m
        }
    }

    /// Spectral abscissa of `A` restricted to the invariant complement.
    pub fn reduced_abscissa(&self, a: &Matrix) -> Result<f64> {
        super::spectral_abscissa(&self.reduce_square(a))
    }
}

/// PBH test on every closed-right-half-plane eigenvalue: `rank [A − λI, B]`
/// must be full. Returns the offending eigenvalues (empty when stabilizable).
pub fn stabilizable(a: &Matrix, b: &Matrix) -> Result<Vec<Complex>> {
    let n = ensure_square("stabilizable", a)?;
    if b.nrows() != n {
        return Err(NumericsError::DimensionMismatch {
            what: "stabilizable",
            detail: format!("B has {} rows, A has {n}", b.nrows()),
        });
    }
    let scale = 1.0 + a.amax() + b.amax();
    let mut bad = Vec::new();
    for lambda in eigenvalues(a)? {
        if lambda.re < -1e-9 * scale {
            continue;
        }
        let pencil = DMatrix::<Complex>::from_fn(n, n + b.ncols(), |i, j| {
            if j < n {
                let v = Complex::new(a[(i, j)], 0.0);
                if i == j {
                    v - lambda
                } else {
                    v
                }
            } else {
                Complex::new(b[(i, j - n)], 0.0)
            }
        });
        let smin = pencil
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if smin < 1e-8 * scale {
            bad.push(lambda);
        }
    }
    Ok(bad)
}
