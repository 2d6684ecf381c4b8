use super::{ensure_finite, ensure_square, Matrix, NumericsError, Result};

// Padé degree thresholds on the 1-norm (Higham, 2005).
const THETA_3: f64 = 1.495_585_217_958_292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504_178_996_162_932e-1;
const THETA_9: f64 = 2.097_847_961_257_068e0;
const THETA_13: f64 = 5.371_920_351_148_152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn norm1(m: &Matrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Odd/even split of a low-degree Padé numerator: returns (U, V) with
/// `U = A·Σ b_{2k+1} A^{2k}` and `V = Σ b_{2k} A^{2k}`.
fn pade_low(a: &Matrix, b: &[f64]) -> (Matrix, Matrix) {
    let n = a.nrows();
    let a2 = a * a;
    let mut u = Matrix::zeros(n, n);
    let mut v = Matrix::zeros(n, n);
    let mut pow = Matrix::identity(n, n);
    for k in 0..b.len() / 2 {
        u += &pow * b[2 * k + 1];
        v += &pow * b[2 * k];
        pow = &pow * &a2;
    }
    (a * u, v)
}

fn pade13(a: &Matrix) -> (Matrix, Matrix) {
    let n = a.nrows();
    let b = &B13;
    let id = Matrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];
    (u, v)
}

/// Matrix exponential by scaling and squaring with a Padé approximant of
/// degree 3–13, chosen from the 1-norm.
pub fn expm(m: &Matrix) -> Result<Matrix> {
    let n = ensure_square("expm", m)?;
    ensure_finite("expm", m)?;
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let nrm = norm1(m);
    let (u, v, squarings) = if nrm <= THETA_3 {
        let (u, v) = pade_low(m, &B3);
        (u, v, 0)
    } else if nrm <= THETA_5 {
        let (u, v) = pade_low(m, &B5);
        (u, v, 0)
    } else if nrm <= THETA_7 {
        let (u, v) = pade_low(m, &B7);
        (u, v, 0)
    } else if nrm <= THETA_9 {
        let (u, v) = pade_low(m, &B9);
        (u, v, 0)
    } else {
        let s = (nrm / THETA_13).log2().ceil().max(0.0) as i32;
        let scaled = m * 2f64.powi(-s);
        let (u, v) = pade13(&scaled);
        (u, v, s)
    };
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or(NumericsError::Singular { what: "expm" })?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}
