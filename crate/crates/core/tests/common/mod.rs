//! Oracles and fixtures shared by the integration tests. Everything here is
//! computed without the library's LU, Schur, or expm paths.
#![allow(dead_code, clippy::needless_range_loop)]

use lfc::cli::{preset, ConfigFile, PRESET_THREE_AREA};
use lfc::model::{build_plant, PlantModel};
use lfc::numerics::Complex;
use lfc::synthesis::{assemble_closed_loop, design_lqg, ClosedLoopSystem, LqgController};
use lfc::Matrix;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn preset_config() -> ConfigFile {
    preset(PRESET_THREE_AREA).expect("preset exists")
}

pub fn preset_plant() -> PlantModel {
    let c = preset_config();
    build_plant(&c.areas, &c.ties).unwrap()
}

pub struct Lqg {
    pub plant: PlantModel,
    pub ctrl: LqgController,
    pub system: ClosedLoopSystem,
}

pub fn preset_lqg() -> Lqg {
    let plant = preset_plant();
    let ctrl = design_lqg(&plant, None, None).unwrap();
    let system = assemble_closed_loop(&plant, &ctrl).unwrap();
    Lqg { plant, ctrl, system }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in [−1, 1].
pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Classical RK4 on `ẋ = A x + B u` with `u` held, `steps` substeps of `h`.
pub fn rk4(a: &Matrix, b: &Matrix, x0: &DVector<f64>, u: &DVector<f64>, h: f64, steps: usize) -> DVector<f64> {
    let bu = b * u;
    let f = |x: &DVector<f64>| a * x + &bu;
    let mut x = x0.clone();
    for _ in 0..steps {
        let k1 = f(&x);
        let k2 = f(&(&x + &k1 * (h / 2.0)));
        let k3 = f(&(&x + &k2 * (h / 2.0)));
        let k4 = f(&(&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    x
}

/// Characteristic polynomial det(λI − M) by Faddeev–LeVerrier, highest
/// power first.
pub fn char_poly(m: &Matrix) -> Vec<f64> {
    let n = m.nrows();
    let mut coeffs = vec![1.0];
    let mut mk = Matrix::zeros(n, n);
    let id = Matrix::identity(n, n);
    let mut c = 1.0;
    for k in 1..=n {
        mk = m * (&mk + &id * c);
        c = -mk.trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

/// Durand–Kerner roots with Newton polishing.
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex> {
    let lead = coeffs[0];
    let c: Vec<f64> = coeffs.iter().map(|v| v / lead).collect();
    let deg = c.len() - 1;
    let eval = |z: Complex| c.iter().fold(Complex::new(0.0, 0.0), |acc, &k| acc * z + k);
    let deval = |z: Complex| {
        c.iter()
            .take(deg)
            .enumerate()
            .fold(Complex::new(0.0, 0.0), |acc, (i, &k)| acc * z + k * (deg - i) as f64)
    };
    let radius = 1.0 + c.iter().skip(1).map(|v| v.abs()).fold(0.0, f64::max);
    let seed = Complex::new(0.4, 0.9);
    let mut z: Vec<Complex> = (0..deg).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..10_000 {
        let mut delta = 0.0f64;
        for i in 0..deg {
            let mut den = Complex::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * radius {
            break;
        }
    }
    for zi in &mut z {
        for _ in 0..3 {
            let d = deval(*zi);
            if d.norm() > 0.0 {
                *zi -= eval(*zi) / d;
            }
        }
    }
    z
}

/// Greedy nearest matching of two eigenvalue multisets; returns the worst
/// matched distance, or infinity on a size mismatch.
pub fn multiset_distance(a: &[Complex], b: &[Complex]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (y - x).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("same length");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Solve `AᵀX + XA + Q = 0` through the n²×n² Kronecker system with
/// Gauss–Jordan elimination and partial pivoting.
pub fn kron_lyapunov(a: &Matrix, q: &Matrix) -> Matrix {
    let n = a.nrows();
    let nn = n * n;
    // vec(AᵀX + XA) = (I ⊗ Aᵀ + Aᵀ ⊗ I) vec(X), column-major vec.
    let mut m = vec![vec![0.0; nn + 1]; nn];
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            for k in 0..n {
                m[row][j * n + k] += a[(k, i)];
                m[row][k * n + i] += a[(k, j)];
            }
            m[row][nn] = -q[(i, j)];
        }
    }
    for col in 0..nn {
        let piv = (col..nn).max_by(|&r, &s| m[r][col].abs().total_cmp(&m[s][col].abs())).unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..nn {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in col..=nn {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    Matrix::from_fn(n, n, |i, j| m[j * n + i][nn])
}

/// CARE residual by direct substitution, with R⁻¹ from Gauss–Jordan.
pub fn care_residual(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, x: &Matrix) -> f64 {
    let r_inv = gauss_jordan_inverse(r);
    (a.transpose() * x + x * a - x * b * r_inv * b.transpose() * x + q).norm()
}

pub fn gauss_jordan_inverse(m: &Matrix) -> Matrix {
    let n = m.nrows();
    let mut aug = vec![vec![0.0; 2 * n]; n];
    for i in 0..n {
        for j in 0..n {
            aug[i][j] = m[(i, j)];
        }
        aug[i][n + i] = 1.0;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| aug[r][col].abs().total_cmp(&aug[s][col].abs())).unwrap();
        aug.swap(col, piv);
        let p = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                for c in 0..2 * n {
                    aug[r][c] -= f * aug[col][c];
                }
            }
        }
    }
    Matrix::from_fn(n, n, |i, j| aug[i][n + j])
}

/// Hurwitz test by the Lyapunov criterion: AᵀX + XA + I = 0 has a
/// positive-definite solution, checked with the Kronecker oracle.
pub fn lyapunov_hurwitz(a: &Matrix) -> bool {
    let x = kron_lyapunov(a, &Matrix::identity(a.nrows(), a.nrows()));
    let sym = (&x + x.transpose()) * 0.5;
    sym.cholesky().is_some()
}
