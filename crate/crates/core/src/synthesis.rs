//! Integral-augmented LQG synthesis and closed-loop assembly.
//!
//! Controller: `u = −K_x x̂ − K_i x_i`, with integrators `ẋ_i = −S y`
//! (S picks the frequency outputs) and a Luenberger/Kalman estimator
//! `x̂' = A x̂ + B u + L (y − C x̂)`.
//!
//! Plants built from tie states carry conserved combinations (tie-power sums,
//! and after augmentation, tie power plus the Laplacian-weighted integrator
//! states) that no input can move. Gains are designed on the invariant
//! complement of those combinations and lifted back; see
//! [`ConservedModes`].

use std::ops::Range;

use thiserror::Error;

use crate::model::{augment_integrators, ModelError, PlantModel};
use crate::numerics::{
    self, block, eigenvalues, hurwitz_threshold, solve_care, CareSolution, Complex, ConservedModes, Matrix,
    NumericsError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("Riccati solve failed: {0}")]
    Numerics(#[from] NumericsError),
    #[error("{0}")]
    Dimensions(String),
    #[error("plant must be integrator-augmented for LQR design")]
    NotAugmented,
    #[error("plant is already augmented; pass the unaugmented plant")]
    Augmented,
    #[error("(A, B) is not stabilizable: uncontrollable modes at {0:?}")]
    NotStabilizable(Vec<Complex>),
    #[error("(A, C) is not detectable: unobservable modes at {0:?}")]
    NotDetectable(Vec<Complex>),
    #[error("{what} is not Hurwitz (abscissa {abscissa:e})")]
    NotHurwitz { what: &'static str, abscissa: f64 },
    #[error("{0}")]
    InvalidWeights(String),
}

type Result<T> = std::result::Result<T, SynthesisError>;

/// LQR cost weights over the augmented state and the control inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrWeights {
    pub q: Matrix,
    pub r_u: Matrix,
}

impl LqrWeights {
    /// 500 on each frequency state, 1 on the other plant states, 1000 on each
    /// integrator; `R_u = I`.
    pub fn defaults(plant_aug: &PlantModel) -> Self {
        let n = plant_aug.plant_states();
        let k = plant_aug.regulated();
        let total = plant_aug.n_states();
        let q = Matrix::from_fn(total, total, |i, j| {
            if i != j {
                0.0
            } else if i < k {
                500.0
            } else if i < n {
                1.0
            } else {
                1000.0
            }
        });
        Self {
            q,
            r_u: Matrix::identity(plant_aug.n_inputs(), plant_aug.n_inputs()),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            q: &self.q * c,
            r_u: &self.r_u * c,
        }
    }
}

/// Process noise over the disturbance channels and measurement noise over
/// the outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    /// q×q, pu².
    pub w: Matrix,
    /// p×p, output units².
    pub v: Matrix,
}

impl NoiseModel {
    /// `W = 0.01·I`, `V = 1e-6·I`.
    pub fn defaults(plant: &PlantModel) -> Self {
        Self {
            w: Matrix::identity(plant.n_disturbances(), plant.n_disturbances()) * 0.01,
            v: Matrix::identity(plant.n_outputs(), plant.n_outputs()) * 1e-6,
        }
    }
}

fn check_psd(what: &str, m: &Matrix, n: usize, strict: bool) -> Result<()> {
    if m.shape() != (n, n) {
        return Err(SynthesisError::InvalidWeights(format!(
            "{what} must be {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = 1.0 + m.amax();
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(SynthesisError::InvalidWeights(format!("{what} is not symmetric")));
    }
    let ev = numerics::symmetrize(m).symmetric_eigenvalues();
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let ok = if strict { min > 0.0 } else { min >= -1e-12 * scale };
    if !ok {
        let kind = if strict { "positive definite" } else { "positive semidefinite" };
        return Err(SynthesisError::InvalidWeights(format!("{what} is not {kind}")));
    }
    Ok(())
}

/// State-feedback part of the LQG design.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrDesign {
    /// m × n, acting on plant states.
    pub k_x: Matrix,
    /// m × N, acting on integrators.
    pub k_i: Matrix,
    /// `[K_x K_i]` as produced by the (lifted) Riccati gain.
    pub gain: Matrix,
    /// Riccati solution in reduced coordinates.
    pub care: CareSolution,
    pub modes: ConservedModes,
    /// Spectral abscissa of `A_aug − B_aug·gain` excluding conserved modes.
    pub closed_loop_abscissa: f64,
}

/// LQR on the augmented plant; `gain` is split at column `n`.
pub fn design_lqr(plant_aug: &PlantModel, weights: &LqrWeights) -> Result<LqrDesign> {
    if !plant_aug.is_augmented() {
        return Err(SynthesisError::NotAugmented);
    }
    let total = plant_aug.n_states();
    check_psd("Q", &weights.q, total, false)?;
    check_psd("R_u", &weights.r_u, plant_aug.n_inputs(), true)?;

    let modes = ConservedModes::new(plant_aug.a(), &[plant_aug.b(), plant_aug.f()])?;
    let a_r = modes.reduce_square(plant_aug.a());
    let b_r = modes.reduce_rows(plant_aug.b());
    let q_r = numerics::symmetrize(&modes.reduce_square(&weights.q));
    let bad = numerics::stabilizable(&a_r, &b_r)?;
    if !bad.is_empty() {
        return Err(SynthesisError::NotStabilizable(bad));
    }
    let care = solve_care(&a_r, &b_r, &q_r, &weights.r_u)?;
    let gain = modes.lift_cols(&care.gain);
    let n = plant_aug.plant_states();
    let k_x = gain.columns(0, n).into_owned();
    let k_i = gain.columns(n, total - n).into_owned();
    let closed = plant_aug.a() - plant_aug.b() * &gain;
    let closed_loop_abscissa = modes.reduced_abscissa(&closed)?;
    if closed_loop_abscissa >= hurwitz_threshold(&closed) {
        return Err(SynthesisError::NotHurwitz {
            what: "regulator loop",
            abscissa: closed_loop_abscissa,
        });
    }
    Ok(LqrDesign {
        k_x,
        k_i,
        gain,
        care,
        modes,
        closed_loop_abscissa,
    })
}

/// Estimator part of the LQG design.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanDesign {
    /// n × p.
    pub l: Matrix,
    /// Dual Riccati solution in reduced coordinates.
    pub care: CareSolution,
    pub modes: ConservedModes,
    /// Spectral abscissa of `A − L·C` excluding conserved modes.
    pub estimator_abscissa: f64,
}

/// Kalman gain from the dual Riccati equation with process noise mapped
/// through the disturbance channels: `L = solve_care(Aᵀ, Cᵀ, F W Fᵀ, V).gainᵀ`.
pub fn design_kalman(plant: &PlantModel, noise: &NoiseModel) -> Result<KalmanDesign> {
    if plant.is_augmented() {
        return Err(SynthesisError::Augmented);
    }
    check_psd("W", &noise.w, plant.n_disturbances(), false)?;
    check_psd("V", &noise.v, plant.n_outputs(), true)?;

    let modes = ConservedModes::new(plant.a(), &[plant.f()])?;
    let a_r = modes.reduce_square(plant.a());
    let c_r = modes.reduce_cols(plant.c());
    let f_r = modes.reduce_rows(plant.f());
    let qn = numerics::symmetrize(&(&f_r * &noise.w * f_r.transpose()));
    let a_t = a_r.transpose();
    let c_t = c_r.transpose();
    let bad = numerics::stabilizable(&a_t, &c_t)?;
    if !bad.is_empty() {
        return Err(SynthesisError::NotDetectable(bad));
    }
    let care = solve_care(&a_t, &c_t, &qn, &noise.v)?;
    let l = modes.lift_rows(&care.gain.transpose());
    let est = plant.a() - &l * plant.c();
    let estimator_abscissa = modes.reduced_abscissa(&est)?;
    if estimator_abscissa >= hurwitz_threshold(&est) {
        return Err(SynthesisError::NotHurwitz {
            what: "estimator",
            abscissa: estimator_abscissa,
        });
    }
    Ok(KalmanDesign {
        l,
        care,
        modes,
        estimator_abscissa,
    })
}

/// Gains and stability verdicts of an integral-augmented LQG controller.
#[derive(Debug, Clone, PartialEq)]
pub struct LqgController {
    pub k_x: Matrix,
    pub k_i: Matrix,
    pub l: Matrix,
    /// `A − B K_x − L C`.
    pub estimator_a: Matrix,
    /// Regulator loop abscissa, conserved modes excluded.
    pub regulator_abscissa: f64,
    pub estimator_abscissa: f64,
    /// Both loops Hurwitz (below [`hurwitz_threshold`]).
    pub certified: bool,
    pub state_labels: Vec<String>,
}

impl LqgController {
    /// Wrap arbitrary gains and compute their stability verdicts.
    pub fn from_gains(plant: &PlantModel, k_x: Matrix, k_i: Matrix, l: Matrix) -> Result<Self> {
        check_controller_dims(plant, &k_x, &k_i, &l)?;
        let aug = augment_integrators(plant)?;
        let gain = hstack(&k_x, &k_i);
        let reg_modes = ConservedModes::new(aug.a(), &[aug.b(), aug.f()])?;
        let est_modes = ConservedModes::new(plant.a(), &[plant.f()])?;
        let reg = aug.a() - aug.b() * &gain;
        let est = plant.a() - &l * plant.c();
        let regulator_abscissa = reg_modes.reduced_abscissa(&reg)?;
        let estimator_abscissa = est_modes.reduced_abscissa(&est)?;
        let certified = regulator_abscissa < hurwitz_threshold(&reg)
            && estimator_abscissa < hurwitz_threshold(&est);
        let estimator_a = plant.a() - plant.b() * &k_x - &l * plant.c();
        Ok(Self {
            k_x,
            k_i,
            l,
            estimator_a,
            regulator_abscissa,
            estimator_abscissa,
            certified,
            state_labels: plant.state_labels().to_vec(),
        })
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }
}

fn hstack(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

fn check_controller_dims(plant: &PlantModel, k_x: &Matrix, k_i: &Matrix, l: &Matrix) -> Result<()> {
    let (n, m, p, k) = (
        plant.n_states(),
        plant.n_inputs(),
        plant.n_outputs(),
        plant.regulated(),
    );
    if k_x.shape() != (m, n) || k_i.shape() != (m, k) || l.shape() != (n, p) {
        return Err(SynthesisError::Dimensions(format!(
            "expected K_x {m}x{n}, K_i {m}x{k}, L {n}x{p}; got {:?}, {:?}, {:?}",
            k_x.shape(),
            k_i.shape(),
            l.shape()
        )));
    }
    Ok(())
}

/// Full LQG design on an unaugmented plant.
pub fn design_lqg(
    plant: &PlantModel,
    weights: Option<&LqrWeights>,
    noise: Option<&NoiseModel>,
) -> Result<LqgController> {
    if plant.is_augmented() {
        return Err(SynthesisError::Augmented);
    }
    let aug = augment_integrators(plant)?;
    let default_weights;
    let weights = match weights {
        Some(w) => w,
        None => {
            default_weights = LqrWeights::defaults(&aug);
            &default_weights
        }
    };
    let default_noise;
    let noise = match noise {
        Some(n) => n,
        None => {
            default_noise = NoiseModel::defaults(plant);
            &default_noise
        }
    };
    let lqr = design_lqr(&aug, weights)?;
    let kf = design_kalman(plant, noise)?;
    let estimator_a = plant.a() - plant.b() * &lqr.k_x - &kf.l * plant.c();
    Ok(LqgController {
        k_x: lqr.k_x,
        k_i: lqr.k_i,
        l: kf.l,
        estimator_a,
        regulator_abscissa: lqr.closed_loop_abscissa,
        estimator_abscissa: kf.estimator_abscissa,
        certified: true,
        state_labels: plant.state_labels().to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    Droop,
    Lqg,
}

impl ControllerKind {
    pub fn id(self) -> &'static str {
        match self {
            ControllerKind::Droop => "droop",
            ControllerKind::Lqg => "lqg",
        }
    }
}

/// Index ranges of each signal group within the closed-loop state and
/// output vectors. Empty ranges for groups a controller does not have.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalLayout {
    pub plant: Range<usize>,
    pub integrators: Range<usize>,
    pub estimates: Range<usize>,
    pub outputs: Range<usize>,
    pub controls: Range<usize>,
    pub errors: Range<usize>,
}

/// Closed loop `ż = A z + B d + B_v v`, `w = C z`, where `d` are load
/// disturbances and `v` measurement noise added to `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopSystem {
    pub a: Matrix,
    /// Disturbance input.
    pub b: Matrix,
    /// Measurement-noise input (p columns).
    pub b_noise: Matrix,
    /// Rows: true outputs, controls, estimation errors (LQG only).
    pub c: Matrix,
    pub state_labels: Vec<String>,
    pub output_labels: Vec<String>,
    pub disturbance_labels: Vec<String>,
    /// Labels of the measured (noisy) outputs, same order as `y`.
    pub measured_labels: Vec<String>,
    pub layout: SignalLayout,
    pub controller: ControllerKind,
    /// `C` of the plant, to form measured outputs.
    pub plant_c: Matrix,
}

impl ClosedLoopSystem {
    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }
}

/// Stack plant, integrators, and estimator for a certified controller.
pub fn assemble_closed_loop(plant: &PlantModel, ctrl: &LqgController) -> Result<ClosedLoopSystem> {
    if !ctrl.is_certified() {
        return Err(SynthesisError::NotHurwitz {
            what: "controller",
            abscissa: ctrl.regulator_abscissa.max(ctrl.estimator_abscissa),
        });
    }
    assemble_closed_loop_uncertified(plant, ctrl)
}

/// As [`assemble_closed_loop`] without the Hurwitz certification check.
///
/// ```text
///       [ x  ]   [ A      −B K_i   −B K_x          ]      [ F ]      [ 0  ]
/// d/dt  [ x_i] = [ −S C    0        0              ] z +  [ 0 ] d +  [ −S ] v
///       [ x̂  ]   [ L C    −B K_i   A − B K_x − L C ]      [ 0 ]      [ L  ]
/// ```
pub fn assemble_closed_loop_uncertified(
    plant: &PlantModel,
    ctrl: &LqgController,
) -> Result<ClosedLoopSystem> {
    if plant.is_augmented() {
        return Err(SynthesisError::Augmented);
    }
    check_controller_dims(plant, &ctrl.k_x, &ctrl.k_i, &ctrl.l)?;
    if plant.d().amax() != 0.0 {
        return Err(SynthesisError::Dimensions("plant D must be zero".into()));
    }
    let (n, m, p, k, q) = (
        plant.n_states(),
        plant.n_inputs(),
        plant.n_outputs(),
        plant.regulated(),
        plant.n_disturbances(),
    );
    let (a, b, c, f) = (plant.a(), plant.b(), plant.c(), plant.f());
    let sel = plant.frequency_selector();
    let bki = -(b * &ctrl.k_i);
    let bkx = -(b * &ctrl.k_x);
    let sc = -(&sel * c);
    let lc = &ctrl.l * c;
    let est = a - b * &ctrl.k_x - &lc;

    let sizes = [n, k, n];
    let a_cl = block(
        &sizes,
        &sizes,
        &[
            &[Some(a), Some(&bki), Some(&bkx)],
            &[Some(&sc), None, None],
            &[Some(&lc), Some(&bki), Some(&est)],
        ],
    );
    let b_cl = block(&sizes, &[q], &[&[Some(f)], &[None], &[None]]);
    let neg_sel = -&sel;
    let b_noise = block(&sizes, &[p], &[&[None], &[Some(&neg_sel)], &[Some(&ctrl.l)]]);
    let neg_kx = -&ctrl.k_x;
    let neg_ki = -&ctrl.k_i;
    let id = Matrix::identity(n, n);
    let neg_id = -&id;
    let c_cl = block(
        &[p, m, n],
        &sizes,
        &[
            &[Some(c), None, None],
            &[None, Some(&neg_ki), Some(&neg_kx)],
            &[Some(&id), None, Some(&neg_id)],
        ],
    );

    let mut state_labels = plant.state_labels().to_vec();
    state_labels.extend((1..=k).map(|i| format!("xi{i}")));
    state_labels.extend(plant.state_labels().iter().map(|s| format!("xhat_{s}")));
    let mut output_labels = plant.output_labels().to_vec();
    output_labels.extend(control_labels(m));
    output_labels.extend(plant.state_labels().iter().map(|s| format!("e_{s}")));

    Ok(ClosedLoopSystem {
        a: a_cl,
        b: b_cl,
        b_noise,
        c: c_cl,
        state_labels,
        output_labels,
        disturbance_labels: plant.disturbance_labels().to_vec(),
        measured_labels: measured_labels(plant),
        layout: SignalLayout {
            plant: 0..n,
            integrators: n..n + k,
            estimates: n + k..2 * n + k,
            outputs: 0..p,
            controls: p..p + m,
            errors: p + m..p + m + n,
        },
        controller: ControllerKind::Lqg,
        plant_c: c.clone(),
    })
}

fn control_labels(m: usize) -> impl Iterator<Item = String> {
    (1..=m).map(|i| format!("u{i}"))
}

fn measured_labels(plant: &PlantModel) -> Vec<String> {
    plant
        .output_labels()
        .iter()
        .map(|s| match s.strip_prefix("y_") {
            Some(rest) => format!("ym_{rest}"),
            None => format!("ym_{s}"),
        })
        .collect()
}

/// Primary droop response only: `u = 0`. Controls are reported as zero rows
/// so traces line up with LQG runs.
pub fn make_droop_baseline(plant: &PlantModel) -> Result<ClosedLoopSystem> {
    if plant.is_augmented() {
        return Err(SynthesisError::Augmented);
    }
    let (n, m, p) = (plant.n_states(), plant.n_inputs(), plant.n_outputs());
    let c_cl = block(&[p, m], &[n], &[&[Some(plant.c())], &[None]]);
    let mut output_labels = plant.output_labels().to_vec();
    output_labels.extend(control_labels(m));
    Ok(ClosedLoopSystem {
        a: plant.a().clone(),
        b: plant.f().clone(),
        b_noise: Matrix::zeros(n, p),
        c: c_cl,
        state_labels: plant.state_labels().to_vec(),
        output_labels,
        disturbance_labels: plant.disturbance_labels().to_vec(),
        measured_labels: measured_labels(plant),
        layout: SignalLayout {
            plant: 0..n,
            integrators: n..n,
            estimates: n..n,
            outputs: 0..p,
            controls: p..p + m,
            errors: p + m..p + m,
        },
        controller: ControllerKind::Droop,
        plant_c: plant.c().clone(),
    })
}

/// Eigenvalues of the regulator loop and the estimator, for separation
/// checks.
pub fn design_spectra(plant: &PlantModel, ctrl: &LqgController) -> Result<(Vec<Complex>, Vec<Complex>)> {
    let aug = augment_integrators(plant)?;
    let gain = hstack(&ctrl.k_x, &ctrl.k_i);
    let reg = eigenvalues(&(aug.a() - aug.b() * gain))?;
    let est = eigenvalues(&(plant.a() - &ctrl.l * plant.c()))?;
    Ok((reg, est))
}
