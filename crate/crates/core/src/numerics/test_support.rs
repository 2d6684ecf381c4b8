//! Independent oracles for unit tests.

use super::Complex;

/// Roots of a polynomial (coefficients highest power first) by
/// Durand–Kerner, polished with Newton steps.
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
    for _ in 0..5000 {
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

pub fn cubic_roots(c: [f64; 4]) -> Vec<Complex> {
    poly_roots(&c)
}

/// Greedy nearest matching of two eigenvalue multisets.
pub fn multiset_match(a: &[Complex], b: &[Complex], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    for x in a {
        let best = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .min_by(|(_, p), (_, q)| (*p - x).norm().total_cmp(&(*q - x).norm()));
        match best {
            Some((j, y)) if (y - x).norm() <= tol => used[j] = true,
            _ => return false,
        }
    }
    true
}
