//! Continuous-time state-space plant of an N-area interconnected system.
//!
//! State ordering (n = 4N): area frequency deviations `Δf`, generated powers
//! `ΔP_G`, valve/command powers `ΔP_V`, then tie-line powers `ΔP_tie`.
//! Inputs are the commanded powers `ΔP_C`, disturbances the load changes
//! `ΔP_D`, and outputs the measurable frequencies followed by tie powers.
//!
//! Per area i the rows realize
//!
//! ```text
//! Δḟ_i      = (−Δf_i + K_P,i (ΔP_G,i − ΔP_D,i − ΔP_tie,i)) / T_P,i
//! ΔṖ_V,i    = (−ΔP_V,i + ΔP_C,i − Δf_i / R_i) / T_S,i
//! ΔṖ_G,i    = (−ΔP_G,i + ΔP_V,i) / T_TG,i
//! ΔṖ_tie,i  = Σ_j 2π T⁰_ij (Δf_i − Δf_j)
//! ```

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AreaKind {
    WindInverter,
    SolarInverter,
    CombustionTurbine,
}

impl AreaKind {
    pub fn is_inverter(self) -> bool {
        matches!(self, AreaKind::WindInverter | AreaKind::SolarInverter)
    }
}

/// Per-area physical and control constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaParams {
    pub name: String,
    pub kind: AreaKind,
    /// Power-system gain, Hz/pu.
    pub k_p: f64,
    /// Power-system time constant, s.
    pub t_p: f64,
    /// Governor / inverter command time constant, s.
    pub t_s: f64,
    /// Turbine / inverter power time constant, s.
    pub t_tg: f64,
    /// Droop, Hz/pu.
    pub r: f64,
    /// Nameplate capacity, MW. Reporting only.
    pub rating_mw: f64,
}

impl AreaParams {
    /// Textbook-typical constants (K_P = 120 Hz/pu, T_P = 20 s, R = 2.4 Hz/pu),
    /// with fast command/power time constants for inverter-interfaced areas.
    pub fn with_defaults(name: impl Into<String>, kind: AreaKind, rating_mw: f64) -> Self {
        let (t_s, t_tg) = if kind.is_inverter() {
            (0.05, 0.025)
        } else {
            (0.4, 0.5)
        };
        Self {
            name: name.into(),
            kind,
            k_p: 120.0,
            t_p: 20.0,
            t_s,
            t_tg,
            r: 2.4,
            rating_mw,
        }
    }

    fn fields(&self) -> [(&'static str, f64); 6] {
        [
            ("k_p", self.k_p),
            ("t_p", self.t_p),
            ("t_s", self.t_s),
            ("t_tg", self.t_tg),
            ("r", self.r),
            ("rating_mw", self.rating_mw),
        ]
    }
}

/// Default synchronizing coefficient, pu/rad.
pub const DEFAULT_TIE_T0: f64 = 0.0707;

/// Tie line between two areas, stored on the unordered pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TieLine {
    pub from_area: usize,
    pub to_area: usize,
    /// Synchronizing coefficient T⁰, pu/rad.
    #[serde(default = "default_t0")]
    pub t0: f64,
}

fn default_t0() -> f64 {
    DEFAULT_TIE_T0
}

impl TieLine {
    pub fn new(from_area: usize, to_area: usize, t0: f64) -> Self {
        Self {
            from_area,
            to_area,
            t0,
        }
    }

    fn pair(&self) -> (usize, usize) {
        (
            self.from_area.min(self.to_area),
            self.from_area.max(self.to_area),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Where the problem is, e.g. `areas[1] (pv).t_p` or `ties[0]`.
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn warning(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}: {}", self.location, self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("at least one area is required")]
    NoAreas,
    #[error("areas[{area}] ({name}).{field} must be positive and finite, got {value}")]
    NonPositiveParameter {
        area: usize,
        name: String,
        field: &'static str,
        value: f64,
    },
    #[error("ties[{tie}] references area {area}, but only {areas} areas exist")]
    IndexOutOfRange {
        tie: usize,
        area: usize,
        areas: usize,
    },
    #[error("ties[{tie}] connects area {area} to itself")]
    SelfTie { tie: usize, area: usize },
    #[error("ties[{tie}] duplicates the tie between areas {a} and {b}")]
    DuplicateTie { tie: usize, a: usize, b: usize },
    #[error("ties[{tie}].t0 must be positive and finite, got {value}")]
    NonPositiveTie { tie: usize, value: f64 },
    #[error("plant is already integrator-augmented")]
    AlreadyAugmented,
    #[error("plant matrices have inconsistent dimensions: {0}")]
    Dimensions(String),
}

fn area_location(i: usize, a: &AreaParams) -> String {
    format!("areas[{i}] ({})", a.name)
}

/// Hard invariant violations (errors) and soft inconsistencies (warnings).
///
/// Warnings: an inverter area whose `t_s` or `t_tg` exceeds the smallest
/// corresponding turbine constant, and areas with no tie path to area 0.
pub fn validate_params(areas: &[AreaParams], ties: &[TieLine]) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if areas.is_empty() {
        out.push(Diagnostic::error("areas", "at least one area is required"));
    }
    for (i, a) in areas.iter().enumerate() {
        for (field, value) in a.fields() {
            if !(value.is_finite() && value > 0.0) {
                out.push(Diagnostic::error(
                    format!("{}.{field}", area_location(i, a)),
                    format!("{field} must be positive and finite, got {value}"),
                ));
            }
        }
    }

    let turbine_min = |get: fn(&AreaParams) -> f64| {
        areas
            .iter()
            .filter(|a| !a.kind.is_inverter())
            .map(get)
            .fold(f64::INFINITY, f64::min)
    };
    let turbine_t_s = turbine_min(|a| a.t_s);
    let turbine_t_tg = turbine_min(|a| a.t_tg);
    for (i, a) in areas.iter().enumerate().filter(|(_, a)| a.kind.is_inverter()) {
        for (field, value, limit) in [("t_s", a.t_s, turbine_t_s), ("t_tg", a.t_tg, turbine_t_tg)] {
            if value > limit {
                out.push(Diagnostic::warning(
                    format!("{}.{field}", area_location(i, a)),
                    format!(
                        "inverter {field} = {value} s exceeds turbine {field} = {limit} s; \
                         inverter areas are expected to respond faster"
                    ),
                ));
            }
        }
    }

    let mut seen = BTreeSet::new();
    for (k, t) in ties.iter().enumerate() {
        let loc = format!("ties[{k}]");
        let mut ok = true;
        for area in [t.from_area, t.to_area] {
            if area >= areas.len() {
                out.push(Diagnostic::error(
                    &loc,
                    format!("area index {area} out of range ({} areas)", areas.len()),
                ));
                ok = false;
            }
        }
        if t.from_area == t.to_area {
            out.push(Diagnostic::error(&loc, "tie connects an area to itself"));
            ok = false;
        }
        if !(t.t0.is_finite() && t.t0 > 0.0) {
            out.push(Diagnostic::error(
                format!("{loc}.t0"),
                format!("t0 must be positive and finite, got {}", t.t0),
            ));
        }
        if ok && !seen.insert(t.pair()) {
            out.push(Diagnostic::error(
                &loc,
                format!(
                    "duplicate tie between areas {} and {}",
                    t.pair().0,
                    t.pair().1
                ),
            ));
        }
    }

    if areas.len() > 1 {
        let reach = reachable_from_first(areas.len(), ties);
        for (i, a) in areas.iter().enumerate() {
            if !reach[i] {
                out.push(Diagnostic::warning(
                    area_location(i, a),
                    "area has no tie path to the rest of the system",
                ));
            }
        }
    }
    out
}

fn reachable_from_first(n: usize, ties: &[TieLine]) -> Vec<bool> {
    let mut reach = vec![false; n];
    reach[0] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for t in ties {
            if t.from_area >= n || t.to_area >= n {
                continue;
            }
            if reach[t.from_area] != reach[t.to_area] {
                reach[t.from_area] = true;
                reach[t.to_area] = true;
                changed = true;
            }
        }
    }
    reach
}

/// Continuous-time plant `ẋ = Ax + Bu + Fd`, `y = Cx + Du` with labeled
/// orderings.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    a: Matrix,
    b: Matrix,
    f: Matrix,
    c: Matrix,
    d: Matrix,
    state_labels: Vec<String>,
    input_labels: Vec<String>,
    disturbance_labels: Vec<String>,
    output_labels: Vec<String>,
    regulated: usize,
    plant_states: usize,
    augmented: bool,
}

impl PlantModel {
    /// Generic plant (no area layout). The first `regulated` outputs are the
    /// ones integral action acts on. `D` is always zero.
    pub fn from_matrices(
        a: Matrix,
        b: Matrix,
        f: Matrix,
        c: Matrix,
        regulated: usize,
    ) -> Result<Self, ModelError> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || f.nrows() != n || c.ncols() != n {
            return Err(ModelError::Dimensions(format!(
                "A {:?}, B {:?}, F {:?}, C {:?}",
                a.shape(),
                b.shape(),
                f.shape(),
                c.shape()
            )));
        }
        if regulated > c.nrows() {
            return Err(ModelError::Dimensions(format!(
                "{regulated} regulated outputs but only {} outputs",
                c.nrows()
            )));
        }
        let label = |p: &str, k: usize| (1..=k).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
        let d = Matrix::zeros(c.nrows(), b.ncols());
        Ok(Self {
            state_labels: label("x", n),
            input_labels: label("u", b.ncols()),
            disturbance_labels: label("d", f.ncols()),
            output_labels: label("y", c.nrows()),
            a,
            b,
            f,
            c,
            d,
            regulated,
            plant_states: n,
            augmented: false,
        })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    pub fn f(&self) -> &Matrix {
        &self.f
    }
    pub fn c(&self) -> &Matrix {
        &self.c
    }
    pub fn d(&self) -> &Matrix {
        &self.d
    }
    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }
    pub fn input_labels(&self) -> &[String] {
        &self.input_labels
    }
    pub fn disturbance_labels(&self) -> &[String] {
        &self.disturbance_labels
    }
    pub fn output_labels(&self) -> &[String] {
        &self.output_labels
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn n_disturbances(&self) -> usize {
        self.f.ncols()
    }
    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Number of integrated (frequency) outputs; equals the area count for
    /// plants from [`build_plant`].
    pub fn regulated(&self) -> usize {
        self.regulated
    }

    /// States of the physical plant, excluding integrators.
    pub fn plant_states(&self) -> usize {
        self.plant_states
    }

    pub fn is_augmented(&self) -> bool {
        self.augmented
    }

    /// `regulated × p` selector of the frequency outputs.
    pub fn frequency_selector(&self) -> Matrix {
        Matrix::from_fn(self.regulated, self.n_outputs(), |i, j| {
            if i == j {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// Assemble the plant for `areas` interconnected by `ties`.
pub fn build_plant(areas: &[AreaParams], ties: &[TieLine]) -> Result<PlantModel, ModelError> {
    check_params(areas, ties)?;
    let big_n = areas.len();
    let n = 4 * big_n;
    let f_ix = |i: usize| i;
    let pg_ix = |i: usize| big_n + i;
    let pv_ix = |i: usize| 2 * big_n + i;
    let tie_ix = |i: usize| 3 * big_n + i;

    let mut a = Matrix::zeros(n, n);
    let mut b = Matrix::zeros(n, big_n);
    let mut f = Matrix::zeros(n, big_n);
    for (i, p) in areas.iter().enumerate() {
        let gain = p.k_p / p.t_p;
        a[(f_ix(i), f_ix(i))] = -1.0 / p.t_p;
        a[(f_ix(i), pg_ix(i))] = gain;
        a[(f_ix(i), tie_ix(i))] = -gain;
        f[(f_ix(i), i)] = -gain;

        a[(pv_ix(i), pv_ix(i))] = -1.0 / p.t_s;
        a[(pv_ix(i), f_ix(i))] = -1.0 / (p.r * p.t_s);
        b[(pv_ix(i), i)] = 1.0 / p.t_s;

        a[(pg_ix(i), pg_ix(i))] = -1.0 / p.t_tg;
        a[(pg_ix(i), pv_ix(i))] = 1.0 / p.t_tg;
    }
    for t in ties {
        let k = 2.0 * PI * t.t0;
        let (i, j) = (t.from_area, t.to_area);
        a[(tie_ix(i), f_ix(i))] += k;
        a[(tie_ix(i), f_ix(j))] -= k;
        a[(tie_ix(j), f_ix(j))] += k;
        a[(tie_ix(j), f_ix(i))] -= k;
    }

    let mut c = Matrix::zeros(2 * big_n, n);
    for i in 0..big_n {
        c[(i, f_ix(i))] = 1.0;
        c[(big_n + i, tie_ix(i))] = 1.0;
    }

    let idx = |p: &str| (1..=big_n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let mut state_labels = idx("df");
    state_labels.extend(idx("dpg"));
    state_labels.extend(idx("dpv"));
    state_labels.extend(idx("dptie"));
    let mut output_labels: Vec<String> = idx("y_df");
    output_labels.extend(idx("y_dptie"));

    Ok(PlantModel {
        d: Matrix::zeros(2 * big_n, big_n),
        a,
        b,
        f,
        c,
        state_labels,
        input_labels: idx("dpc"),
        disturbance_labels: idx("dpd"),
        output_labels,
        regulated: big_n,
        plant_states: n,
        augmented: false,
    })
}

fn check_params(areas: &[AreaParams], ties: &[TieLine]) -> Result<(), ModelError> {
    if areas.is_empty() {
        return Err(ModelError::NoAreas);
    }
    for (i, a) in areas.iter().enumerate() {
        for (field, value) in a.fields() {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::NonPositiveParameter {
                    area: i,
                    name: a.name.clone(),
                    field,
                    value,
                });
            }
        }
    }
    let mut seen = BTreeSet::new();
    for (k, t) in ties.iter().enumerate() {
        for area in [t.from_area, t.to_area] {
            if area >= areas.len() {
                return Err(ModelError::IndexOutOfRange {
                    tie: k,
                    area,
                    areas: areas.len(),
                });
            }
        }
        if t.from_area == t.to_area {
            return Err(ModelError::SelfTie {
                tie: k,
                area: t.from_area,
            });
        }
        if !(t.t0.is_finite() && t.t0 > 0.0) {
            return Err(ModelError::NonPositiveTie {
                tie: k,
                value: t.t0,
            });
        }
        let (a, b) = t.pair();
        if !seen.insert((a, b)) {
            return Err(ModelError::DuplicateTie { tie: k, a, b });
        }
    }
    Ok(())
}

/// Append one integrator per regulated output, `ẋ_i = −y_i` (zero reference).
///
/// ```text
/// A_aug = [ A     0 ]   B_aug = [B]   F_aug = [F]   C_aug = [C 0]
///         [ −S·C  0 ]           [0]           [0]
/// ```
pub fn augment_integrators(plant: &PlantModel) -> Result<PlantModel, ModelError> {
    if plant.augmented {
        return Err(ModelError::AlreadyAugmented);
    }
    let n = plant.n_states();
    let k = plant.regulated;
    let sel = plant.frequency_selector() * &plant.c;
    let mut a = Matrix::zeros(n + k, n + k);
    a.view_mut((0, 0), (n, n)).copy_from(&plant.a);
    a.view_mut((n, 0), (k, n)).copy_from(&(-sel));
    let extend_rows = |m: &Matrix| {
        let mut out = Matrix::zeros(n + k, m.ncols());
        out.view_mut((0, 0), (n, m.ncols())).copy_from(m);
        out
    };
    let mut c = Matrix::zeros(plant.n_outputs(), n + k);
    c.view_mut((0, 0), (plant.n_outputs(), n)).copy_from(&plant.c);

    let mut state_labels = plant.state_labels.clone();
    state_labels.extend((1..=k).map(|i| format!("xi{i}")));
    Ok(PlantModel {
        a,
        b: extend_rows(&plant.b),
        f: extend_rows(&plant.f),
        c,
        d: plant.d.clone(),
        state_labels,
        input_labels: plant.input_labels.clone(),
        disturbance_labels: plant.disturbance_labels.clone(),
        output_labels: plant.output_labels.clone(),
        regulated: k,
        plant_states: n,
        augmented: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{eigenvalues, expm};
    use proptest::prelude::*;

    fn single_area() -> AreaParams {
        AreaParams::with_defaults("ct", AreaKind::CombustionTurbine, 800.0)
    }

    fn three_identical() -> (Vec<AreaParams>, Vec<TieLine>) {
        let areas = (0..3)
            .map(|i| AreaParams::with_defaults(format!("a{i}"), AreaKind::CombustionTurbine, 500.0))
            .collect();
        let ties = vec![
            TieLine::new(0, 1, DEFAULT_TIE_T0),
            TieLine::new(0, 2, DEFAULT_TIE_T0),
            TieLine::new(1, 2, DEFAULT_TIE_T0),
        ];
        (areas, ties)
    }

    #[test]
    fn single_area_entries() {
        let p = build_plant(&[single_area()], &[]).unwrap();
        // ordering [f, P_G, P_V, P_tie]
        assert_eq!(p.a()[(0, 0)], -0.05);
        assert_eq!(p.a()[(0, 1)], 6.0);
        assert_eq!(p.f()[(0, 0)], -6.0);
        assert!(p.a().row(3).iter().all(|&v| v == 0.0));
        assert_eq!(p.d(), &Matrix::zeros(2, 1));
        assert_eq!(p.state_labels(), &["df1", "dpg1", "dpv1", "dptie1"]);
    }

    #[test]
    fn no_ties_means_zero_tie_block() {
        let (areas, _) = three_identical();
        let p = build_plant(&areas, &[]).unwrap();
        for i in 9..12 {
            assert!(p.a().row(i).iter().all(|&v| v == 0.0));
            // Only the frequency row's own -K_P/T_P coupling remains in the column.
            for r in 0..12 {
                let want = if r == i - 9 { -6.0 } else { 0.0 };
                assert_eq!(p.a()[(r, i)], want);
            }
        }
    }

    #[test]
    fn symmetric_three_area_is_singular() {
        let (areas, ties) = three_identical();
        let p = build_plant(&areas, &ties).unwrap();
        let ev = eigenvalues(p.a()).unwrap();
        assert!(ev.iter().any(|z| z.norm() < 1e-10));
        let sv = p.a().clone().svd(false, false).singular_values;
        let rank = sv.iter().filter(|&&s| s > 1e-10).count();
        assert!(rank <= 11, "rank {rank}");
        // Tie rows sum to zero.
        let sum: f64 = (9..12).map(|i| p.a().row(i).sum()).sum();
        for j in 0..12 {
            let col: f64 = (9..12).map(|i| p.a()[(i, j)]).sum();
            assert!(col.abs() < 1e-15);
        }
        assert!(sum.abs() < 1e-15);
    }

    #[test]
    fn output_selection() {
        let (areas, ties) = three_identical();
        let p = build_plant(&areas, &ties).unwrap();
        for row in p.c().row_iter() {
            assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|&&v| v != 0.0).count(), 1);
        }
        assert_eq!(p.c()[(3, 9)], 1.0);
    }

    #[test]
    fn build_errors() {
        assert_eq!(build_plant(&[], &[]).unwrap_err(), ModelError::NoAreas);
        let (areas, _) = three_identical();
        let dup = [TieLine::new(0, 1, 0.1), TieLine::new(1, 0, 0.1)];
        assert!(matches!(
            build_plant(&areas, &dup),
            Err(ModelError::DuplicateTie { tie: 1, a: 0, b: 1 })
        ));
        assert!(matches!(
            build_plant(&areas, &[TieLine::new(0, 3, 0.1)]),
            Err(ModelError::IndexOutOfRange { area: 3, .. })
        ));
        let mut bad = areas.clone();
        bad[1].t_tg = 0.0;
        assert!(matches!(
            build_plant(&bad, &[]),
            Err(ModelError::NonPositiveParameter { area: 1, field: "t_tg", .. })
        ));
    }

    #[test]
    fn augment_single_area() {
        let p = build_plant(&[single_area()], &[]).unwrap();
        let aug = augment_integrators(&p).unwrap();
        assert_eq!(aug.n_states(), 5);
        let row: Vec<f64> = aug.a().row(4).iter().copied().collect();
        assert_eq!(row, vec![-1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(aug.b().row(4).iter().all(|&v| v == 0.0));
        assert_eq!(aug.state_labels().last().unwrap(), "xi1");
        assert_eq!(augment_integrators(&aug).unwrap_err(), ModelError::AlreadyAugmented);
    }

    #[test]
    fn augment_adds_zero_eigenvalues() {
        let (areas, ties) = three_identical();
        let p = build_plant(&areas, &ties).unwrap();
        let aug = augment_integrators(&p).unwrap();
        assert_eq!(aug.n_states(), 15);
        let mut base: Vec<_> = eigenvalues(p.a()).unwrap();
        base.extend([crate::numerics::Complex::new(0.0, 0.0); 3]);
        let got = eigenvalues(aug.a()).unwrap();
        assert!(crate::numerics::test_support::multiset_match(&base, &got, 1e-7));
    }

    #[test]
    fn validation() {
        let (areas, ties) = three_identical();
        assert!(validate_params(&areas, &ties).is_empty());

        let mut bad = areas.clone();
        bad[0].t_p = 0.0;
        let d = validate_params(&bad, &ties);
        assert_eq!(d.len(), 1);
        assert!(d[0].is_error() && d[0].location.contains("t_p"));

        let mixed = vec![
            AreaParams {
                t_tg: 0.5,
                ..AreaParams::with_defaults("w", AreaKind::WindInverter, 600.0)
            },
            AreaParams {
                t_tg: 0.3,
                ..AreaParams::with_defaults("c", AreaKind::CombustionTurbine, 800.0)
            },
        ];
        let d = validate_params(&mixed, &[TieLine::new(0, 1, 0.1)]);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Warning);
        assert!(d[0].location.contains("t_tg"));

        let d = validate_params(&areas, &[TieLine::new(0, 1, 0.1)]);
        assert_eq!(d.len(), 1);
        assert!(!d[0].is_error() && d[0].location.contains("a2"));
    }

    /// Step response of Δf to ΔP_D for one area, by partial fractions of
    /// G(s)/s with G(s) = −K_P R (1+sT_S)(1+sT_TG) / den(s),
    /// den(s) = R(1+sT_P)(1+sT_S)(1+sT_TG) + K_P.
    fn laplace_step(p: &AreaParams, t: f64) -> f64 {
        use crate::numerics::Complex;
        let (kp, tp, ts, tg, r) = (p.k_p, p.t_p, p.t_s, p.t_tg, p.r);
        // den coefficients, highest power first
        let c3 = r * tp * ts * tg;
        let c2 = r * (tp * ts + tp * tg + ts * tg);
        let c1 = r * (tp + ts + tg);
        let c0 = r + kp;
        let poles = crate::numerics::test_support::cubic_roots([c3, c2, c1, c0]);
        let num = |s: Complex| -(Complex::new(kp * r, 0.0)) * (s * ts + 1.0) * (s * tg + 1.0);
        let dden = |s: Complex| s * s * (3.0 * c3) + s * (2.0 * c2) + c1;
        // residue at s = 0 plus residues at the poles of G(s)/s
        let mut y = Complex::new(-kp * r / c0, 0.0);
        for &pk in &poles {
            y += num(pk) / (dden(pk) * pk) * (pk * t).exp();
        }
        y.re
    }

    #[test]
    fn single_area_step_matches_partial_fractions() {
        let area = single_area();
        let p = build_plant(std::slice::from_ref(&area), &[]).unwrap();
        let d = 0.01;
        for &t in &[0.1, 0.5, 1.0, 2.5, 7.0, 15.0, 40.0] {
            // x(t) = ∫₀ᵗ e^{Aτ} F d dτ via the augmented exponential.
            let mut m = Matrix::zeros(5, 5);
            m.view_mut((0, 0), (4, 4)).copy_from(p.a());
            m.view_mut((0, 4), (4, 1)).copy_from(p.f());
            let e = expm(&(m * t)).unwrap();
            let f_ss = e[(0, 4)] * d;
            let want = laplace_step(&area, t) * d;
            assert!((f_ss - want).abs() < 1e-8, "t={t}: {f_ss} vs {want}");
        }
    }

    proptest! {
        #[test]
        fn frequency_rows(
            k_p in 10.0f64..200.0, t_p in 1.0f64..40.0,
            t_s in 0.01f64..1.0, t_tg in 0.01f64..1.0, r in 0.5f64..5.0,
            t0 in 0.01f64..0.5,
        ) {
            let areas = vec![
                AreaParams { k_p, t_p, t_s, t_tg, r, ..single_area() },
                AreaParams { k_p: k_p * 0.7, t_p: t_p * 1.3, ..single_area() },
            ];
            let p = build_plant(&areas, &[TieLine::new(0, 1, t0)]).unwrap();
            for (i, a) in areas.iter().enumerate() {
                prop_assert_eq!(p.a()[(i, i)], -1.0 / a.t_p);
                prop_assert_eq!(p.a()[(i, 2 + i)], a.k_p / a.t_p);
                prop_assert_eq!(p.a()[(i, 6 + i)], -a.k_p / a.t_p);
                prop_assert_eq!(p.a()[(6 + i, 6 + i)], 0.0);
            }
        }
    }
}
