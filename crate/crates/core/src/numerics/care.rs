use super::{
    ensure_finite, ensure_square, ensure_symmetric, fro, solve_lyapunov, spectral_abscissa,
    symmetrize, hurwitz_threshold, is_hurwitz, Matrix, NumericsError, Result,
};

/// Newton–Kleinman controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CareOptions {
    /// Converged when `‖res‖_F ≤ tolerance·(1 + ‖X‖_F²)`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CareOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 50,
        }
    }
}

/// Stabilizing solution of `AᵀX + XA − XBR⁻¹BᵀX + Q = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CareSolution {
    pub x: Matrix,
    /// `R⁻¹BᵀX`
    pub gain: Matrix,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Residual after each Newton step, in order.
    pub residual_history: Vec<f64>,
}

/// CARE residual `AᵀX + XA − XBR⁻¹BᵀX + Q` with `G = BR⁻¹Bᵀ` precomputed.
fn residual_with(a: &Matrix, g: &Matrix, q: &Matrix, x: &Matrix) -> Matrix {
    a.transpose() * x + x * a - x * g * x + q
}

pub fn care_residual(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, x: &Matrix) -> Result<Matrix> {
    let r_inv = spd_inverse("care R", r)?;
    let g = b * r_inv * b.transpose();
    Ok(residual_with(a, &g, q, x))
}

fn spd_inverse(what: &'static str, m: &Matrix) -> Result<Matrix> {
    ensure_symmetric(what, m, 1e-12)?;
    let chol = symmetrize(m)
        .cholesky()
        .ok_or(NumericsError::NotPositiveDefinite { what })?;
    Ok(symmetrize(&chol.inverse()))
}

/// Bass stabilizing gain. With β chosen so that `−(A + βI)` is Hurwitz, the
/// solution of `−(A+βI)Z − Z(A+βI)ᵀ + 2BR⁻¹Bᵀ = 0` gives `K = R⁻¹BᵀZ⁻¹` and
/// every eigenvalue of `A − BK` has real part `−β`.
fn bass_gain(a: &Matrix, b: &Matrix, r_inv: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    let beta = spectral_abscissa(&(-a))?.max(0.0) + 0.5;
    let shifted = -(a + Matrix::identity(n, n) * beta);
    let g2 = symmetrize(&(b * r_inv * b.transpose() * 2.0));
    let z = solve_lyapunov(&shifted.transpose(), &g2)
        .map_err(|_| NumericsError::NoStabilizingInitializer)?;
    let z_inv = symmetrize(&z)
        .cholesky()
        .ok_or(NumericsError::NoStabilizingInitializer)?
        .inverse();
    let k = r_inv * b.transpose() * z_inv;
    if !k.iter().all(|v| v.is_finite()) || !is_hurwitz(&(a - b * &k))? {
        return Err(NumericsError::NoStabilizingInitializer);
    }
    Ok(k)
}

pub fn solve_care(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<CareSolution> {
    solve_care_with(a, b, q, r, &CareOptions::default())
}

/// Newton–Kleinman iteration. Each step solves the Lyapunov equation
/// `(A − BK)ᵀX + X(A − BK) + Q + KᵀRK = 0` and updates `K = R⁻¹BᵀX`.
/// Starts from `K = 0` when `A` is Hurwitz, otherwise from a Bass gain,
/// falling back to a shift continuation if that start fails.
pub fn solve_care_with(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    opts: &CareOptions,
) -> Result<CareSolution> {
    let n = ensure_square("care A", a)?;
    let m = ensure_square("care R", r)?;
    if b.nrows() != n || b.ncols() != m || q.shape() != (n, n) {
        return Err(NumericsError::DimensionMismatch {
            what: "care",
            detail: format!(
                "A {n}x{n}, B {}x{}, Q {}x{}, R {m}x{m}",
                b.nrows(),
                b.ncols(),
                q.nrows(),
                q.ncols()
            ),
        });
    }
    for (what, mat) in [("care A", a), ("care B", b), ("care Q", q), ("care R", r)] {
        ensure_finite(what, mat)?;
    }
    ensure_symmetric("care Q", q, 1e-12)?;
    let q = symmetrize(q);
    let r_inv = spd_inverse("care R", r)?;
    let g = b * &r_inv * b.transpose();

    if is_hurwitz(a)? {
        return newton(a, b, &q, r, &r_inv, &g, Matrix::zeros(m, n), opts);
    }
    let bass = bass_gain(a, b, &r_inv).and_then(|k0| newton(a, b, &q, r, &r_inv, &g, k0, opts));
    match bass {
        Ok(sol) => Ok(sol),
        Err(
            NumericsError::NoStabilizingInitializer
            | NumericsError::NotHurwitz { .. }
            | NumericsError::LyapunovResidual { .. }
            | NumericsError::Diverged { .. }
            | NumericsError::NotStabilizing { .. },
        ) => continuation(a, b, &q, r, &r_inv, &g, opts),
        Err(e) => Err(e),
    }
}

/// Fallback when the Bass gain is too ill-conditioned to start Newton
/// (typically single-input, high-order, strongly unstable plants). Solves
/// the CARE for `A − σI`, which `K = 0` stabilizes, then walks σ down to 0,
/// each time by half the closed-loop stability margin so the previous gain
/// still stabilizes.
fn continuation(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    r_inv: &Matrix,
    g: &Matrix,
    opts: &CareOptions,
) -> Result<CareSolution> {
    const MAX_STAGES: usize = 200;
    let n = a.nrows();
    let id = Matrix::identity(n, n);
    let min_margin = 1e-8 * (1.0 + a.amax());
    let mut sigma = spectral_abscissa(a)?.max(0.0) + 1.0;
    let mut k = Matrix::zeros(b.ncols(), n);
    for _ in 0..MAX_STAGES {
        let shifted = a - &id * sigma;
        let sol = newton(&shifted, b, q, r, r_inv, g, k, opts)
            .map_err(|_| NumericsError::NoStabilizingInitializer)?;
        if sigma == 0.0 {
            return Ok(sol);
        }
        let margin = -spectral_abscissa(&(&shifted - b * &sol.gain))?;
        if margin < min_margin {
            return Err(NumericsError::NoStabilizingInitializer);
        }
        sigma = if sigma <= 0.5 * margin { 0.0 } else { sigma - 0.5 * margin };
        k = sol.gain;
    }
    Err(NumericsError::NoStabilizingInitializer)
}

#[allow(clippy::too_many_arguments)]
fn newton(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    r_inv: &Matrix,
    g: &Matrix,
    mut k: Matrix,
    opts: &CareOptions,
) -> Result<CareSolution> {
    let (q_norm, a_norm, g_norm) = (fro(q), fro(a), fro(g));
    let mut history = Vec::with_capacity(opts.max_iterations);
    let mut growth_streak = 0;
    for it in 1..=opts.max_iterations {
        let ak = a - b * &k;
        let qk = symmetrize(&(q + k.transpose() * r * &k));
        let x = solve_lyapunov(&ak, &qk)?;
        k = r_inv * b.transpose() * &x;
        let res = fro(&residual_with(a, g, q, &x));
        let prev = history.last().copied();
        if let Some(prev) = prev {
            if res > prev {
                growth_streak += 1;
            } else {
                growth_streak = 0;
            }
        }
        history.push(res);
        let xn = fro(&x);
        // The absolute test alone is met by the first iterate whenever X is
        // large, so also require the residual to be small relative to the
        // terms it balances, or Newton to have stalled at roundoff.
        let scale = q_norm + 2.0 * a_norm * xn + g_norm * xn * xn;
        let settled = res <= 1e-12 * scale || prev.is_some_and(|p| res > 0.5 * p);
        if res <= opts.tolerance * (1.0 + xn * xn) && settled {
            let closed = a - b * &k;
            let abscissa = spectral_abscissa(&closed)?;
            if abscissa >= hurwitz_threshold(&closed) {
                return Err(NumericsError::NotStabilizing { abscissa });
            }
            return Ok(CareSolution {
                x,
                gain: k,
                residual_norm: res,
                iterations: it,
                residual_history: history,
            });
        }
        if growth_streak >= 3 {
            return Err(NumericsError::Diverged { residual: res });
        }
    }
    Err(NumericsError::MaxIterations {
        iterations: opts.max_iterations,
        residual: history.last().copied().unwrap_or(f64::NAN),
    })
}
