//! Exact zero-order-hold simulation of closed-loop systems.
//!
//! Each step advances `z_{k+1} = A_d z_k + B_d d_k + B_v v_k`, with the load
//! disturbance `d_k` and measurement noise `v_k` held over `[t_k, t_{k+1})`.
//! Recorded signals at `t_k` are taken before the step.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::Diagnostic;
use crate::numerics::{expm, Matrix, NumericsError};
use crate::synthesis::ClosedLoopSystem;

/// States above this magnitude abort the run.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// RNG stream reserved for measurement noise; disturbance streams are
/// numbered from the channel and primitive index.
const MEASUREMENT_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid scenario: {}", join(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("{0}")]
    Dimensions(String),
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("discretization failed: {0}")]
    Numerics(#[from] NumericsError),
    #[error("simulation diverged at t = {time} s: state `{state}` = {value:e}")]
    Diverged { time: f64, state: String, value: f64 },
}

fn join(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .filter(|d| d.is_error())
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

type Result<T> = std::result::Result<T, SimulationError>;

/// One additive component of a disturbance channel, in pu.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Primitive {
    /// `magnitude` from `time` on.
    Step { time: f64, magnitude: f64 },
    /// Linear from 0 at `start` to `magnitude` at `end`, then held.
    Ramp { start: f64, end: f64, magnitude: f64 },
    /// First-order low-pass filtered white noise with stationary standard
    /// deviation `sigma` and corner frequency `bandwidth` (Hz).
    Gauss {
        sigma: f64,
        bandwidth: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

/// Disturbance primitives per channel (one channel per area).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    pub channels: Vec<Vec<Primitive>>,
}

impl DisturbanceSpec {
    pub fn zeros(channels: usize) -> Self {
        Self {
            channels: vec![Vec::new(); channels],
        }
    }

    /// A single step on one channel.
    pub fn step(channels: usize, channel: usize, time: f64, magnitude: f64) -> Self {
        let mut spec = Self::zeros(channels);
        spec.channels[channel].push(Primitive::Step { time, magnitude });
        spec
    }

    /// Structural checks. `horizon` enables the within-horizon warning;
    /// `fallback_seed` is the scenario seed that unseeded gauss primitives
    /// draw from.
    pub fn validate(&self, horizon: Option<f64>, fallback_seed: Option<u64>) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for (c, prims) in self.channels.iter().enumerate() {
            for (i, p) in prims.iter().enumerate() {
                let loc = format!("disturbances.channels[{c}][{i}]");
                let mut times = Vec::new();
                match *p {
                    Primitive::Step { time, magnitude } => {
                        times.push(("time", time));
                        if !magnitude.is_finite() {
                            out.push(Diagnostic::error(&loc, "magnitude must be finite"));
                        }
                    }
                    Primitive::Ramp { start, end, magnitude } => {
                        times.push(("start", start));
                        times.push(("end", end));
                        if !magnitude.is_finite() {
                            out.push(Diagnostic::error(&loc, "magnitude must be finite"));
                        }
                        if end < start {
                            out.push(Diagnostic::error(&loc, "ramp end precedes start"));
                        }
                    }
                    Primitive::Gauss { sigma, bandwidth, seed } => {
                        if !(sigma.is_finite() && sigma >= 0.0) {
                            out.push(Diagnostic::error(&loc, "sigma must be finite and ≥ 0"));
                        }
                        if !(bandwidth.is_finite() && bandwidth > 0.0) {
                            out.push(Diagnostic::error(&loc, "bandwidth must be finite and > 0"));
                        }
                        if sigma > 0.0 && seed.is_none() && fallback_seed.is_none() {
                            out.push(Diagnostic::error(&loc, "seed required when sigma > 0"));
                        }
                    }
                }
                for (field, t) in times {
                    if !(t.is_finite() && t >= 0.0) {
                        out.push(Diagnostic::error(format!("{loc}.{field}"), "time must be finite and ≥ 0"));
                    } else if let Some(h) = horizon {
                        if t > h {
                            out.push(Diagnostic::warning(
                                format!("{loc}.{field}"),
                                format!("{t} s is after the {h} s horizon and has no effect"),
                            ));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Sample a disturbance spec at `times` (ascending). Returns one vector per
/// channel. Unseeded gauss primitives draw from `fallback_seed`; each
/// primitive gets its own RNG stream, so adding one never perturbs another.
pub fn render_disturbance(
    spec: &DisturbanceSpec,
    times: &[f64],
    fallback_seed: Option<u64>,
) -> Result<Vec<Vec<f64>>> {
    let diags = spec.validate(None, fallback_seed);
    if diags.iter().any(Diagnostic::is_error) {
        return Err(SimulationError::Invalid(diags));
    }
    let mut out = Vec::with_capacity(spec.channels.len());
    for (c, prims) in spec.channels.iter().enumerate() {
        let mut signal = vec![0.0; times.len()];
        for (i, p) in prims.iter().enumerate() {
            match *p {
                Primitive::Step { time, magnitude } => {
                    for (s, &t) in signal.iter_mut().zip(times) {
                        if reached(t, time) {
                            *s += magnitude;
                        }
                    }
                }
                Primitive::Ramp { start, end, magnitude } => {
                    for (s, &t) in signal.iter_mut().zip(times) {
                        if reached(t, end) {
                            *s += magnitude;
                        } else if reached(t, start) {
                            *s += magnitude * (t - start) / (end - start);
                        }
                    }
                }
                Primitive::Gauss { sigma, bandwidth, seed } => {
                    if sigma == 0.0 {
                        continue;
                    }
                    let seed = seed.or(fallback_seed).expect("validated");
                    let stream = ((c as u64) << 32) | i as u64;
                    add_ou(&mut signal, times, sigma, bandwidth, seed, stream);
                }
            }
        }
        out.push(signal);
    }
    Ok(out)
}

/// Event times are compared with a relative slack so that grid points
/// computed as `k·dt` land on events they are meant to hit.
fn reached(t: f64, event: f64) -> bool {
    t >= event - 1e-12 * (1.0 + event.abs())
}

/// Exact discretization of `dx = −2π·bw·x dt + σ√(4π·bw) dW`, started in
/// its stationary distribution.
fn add_ou(signal: &mut [f64], times: &[f64], sigma: f64, bandwidth: f64, seed: u64, stream: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut x = sigma * draw();
    for k in 0..signal.len() {
        if k > 0 {
            let phi = (-2.0 * std::f64::consts::PI * bandwidth * (times[k] - times[k - 1])).exp();
            x = phi * x + sigma * (1.0 - phi * phi).sqrt() * draw();
        }
        signal[k] += x;
    }
}

/// Group or single-name selection of recorded signals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SignalSelector {
    /// Plant states.
    Plant,
    Integrators,
    Estimates,
    /// Every closed-loop state.
    States,
    /// True plant outputs.
    Outputs,
    Controls,
    /// Estimation errors `x − x̂`.
    Errors,
    Disturbances,
    /// Plant outputs plus measurement noise.
    Measured,
    Named(String),
}

impl SignalSelector {
    /// Plant and integrator states, outputs, controls, and disturbances.
    pub fn defaults() -> Vec<Self> {
        vec![
            Self::Plant,
            Self::Integrators,
            Self::Outputs,
            Self::Controls,
            Self::Disturbances,
        ]
    }
}

impl FromStr for SignalSelector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "plant" => Self::Plant,
            "integrators" => Self::Integrators,
            "estimates" => Self::Estimates,
            "states" => Self::States,
            "outputs" => Self::Outputs,
            "controls" => Self::Controls,
            "errors" => Self::Errors,
            "disturbances" => Self::Disturbances,
            "measured" => Self::Measured,
            "" => return Err("empty signal name".into()),
            other => Self::Named(other.to_string()),
        })
    }
}

impl TryFrom<String> for SignalSelector {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<SignalSelector> for String {
    fn from(s: SignalSelector) -> String {
        s.to_string()
    }
}

impl fmt::Display for SignalSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Plant => "plant",
            Self::Integrators => "integrators",
            Self::Estimates => "estimates",
            Self::States => "states",
            Self::Outputs => "outputs",
            Self::Controls => "controls",
            Self::Errors => "errors",
            Self::Disturbances => "disturbances",
            Self::Measured => "measured",
            Self::Named(n) => n,
        };
        f.write_str(s)
    }
}

/// Per-sample Gaussian noise on the measured outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementNoise {
    /// p×p covariance of each held sample, rows as nested arrays.
    pub covariance: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Seconds.
    pub horizon: f64,
    /// Seconds.
    pub dt: f64,
    #[serde(default)]
    pub disturbances: DisturbanceSpec,
    /// Full closed-loop state; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<f64>>,
    #[serde(default = "SignalSelector::defaults")]
    pub record: Vec<SignalSelector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement_noise: Option<MeasurementNoise>,
    /// Seed for unseeded gauss primitives and measurement noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn new(horizon: f64, dt: f64, disturbances: DisturbanceSpec) -> Self {
        Self {
            horizon,
            dt,
            disturbances,
            initial_state: None,
            record: SignalSelector::defaults(),
            measurement_noise: None,
            seed: None,
        }
    }

    /// Number of steps; the grid is `k·dt` for `k = 0..=steps`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt + 1e-9).floor() as usize
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps()).map(|k| k as f64 * self.dt).collect()
    }

    /// `min_time_constant` (smallest plant time constant) enables the
    /// step-size warning.
    pub fn validate(&self, min_time_constant: Option<f64>) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if !(self.dt.is_finite() && self.dt > 0.0) {
            out.push(Diagnostic::error("scenario.dt", "dt must be finite and > 0"));
        }
        if !(self.horizon.is_finite() && self.dt <= self.horizon) {
            out.push(Diagnostic::error("scenario.horizon", "horizon must be finite and ≥ dt"));
        }
        if let Some(tau) = min_time_constant {
            if self.dt > tau / 4.0 {
                out.push(Diagnostic::warning(
                    "scenario.dt",
                    format!("dt = {} s exceeds a quarter of the smallest time constant ({tau} s)", self.dt),
                ));
            }
        }
        if let Some(noise) = &self.measurement_noise {
            let p = noise.covariance.len();
            if noise.covariance.iter().any(|r| r.len() != p) {
                out.push(Diagnostic::error("scenario.measurement_noise.covariance", "must be square"));
            } else if covariance_factor(&noise.covariance).is_none() {
                out.push(Diagnostic::error(
                    "scenario.measurement_noise.covariance",
                    "must be symmetric positive semidefinite",
                ));
            }
        }
        out.extend(self.disturbances.validate(Some(self.horizon), self.seed));
        out
    }

    /// SHA-256 over everything that affects the simulated values.
    pub fn hash(&self) -> String {
        #[derive(Serialize)]
        struct Hashed<'a> {
            horizon: f64,
            dt: f64,
            disturbances: &'a DisturbanceSpec,
            initial_state: &'a Option<Vec<f64>>,
            measurement_noise: &'a Option<MeasurementNoise>,
            seed: Option<u64>,
        }
        let bytes = serde_json::to_vec(&Hashed {
            horizon: self.horizon,
            dt: self.dt,
            disturbances: &self.disturbances,
            initial_state: &self.initial_state,
            measurement_noise: &self.measurement_noise,
            seed: self.seed,
        })
        .expect("scenario serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// Lower-triangular `F` with `F Fᵀ = V`, tolerating singular `V`.
fn covariance_factor(rows: &[Vec<f64>]) -> Option<Matrix> {
    let p = rows.len();
    let v = Matrix::from_fn(p, p, |i, j| rows[i][j]);
    if !v.iter().all(|x| x.is_finite()) || (&v - v.transpose()).amax() > 1e-12 * (1.0 + v.amax()) {
        return None;
    }
    let eig = v.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l < -1e-12 * (1.0 + v.amax())) {
        return None;
    }
    let sqrt = Matrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    Some(&eig.eigenvectors * sqrt)
}

/// ZOH realization over one step.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSystem {
    pub ad: Matrix,
    /// Disturbance input.
    pub bd: Matrix,
    /// Measurement-noise input.
    pub bn: Matrix,
    pub dt: f64,
}

/// `exp([[A, B, B_v], [0, 0, 0]]·dt)`: `A_d` is the top-left block and the
/// input matrices the top-right blocks.
pub fn discretize(system: &ClosedLoopSystem, dt: f64) -> Result<DiscreteSystem> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SimulationError::Invalid(vec![Diagnostic::error("dt", "dt must be finite and > 0")]));
    }
    let n = system.n_states();
    let q = system.b.ncols();
    let p = system.b_noise.ncols();
    if system.b.nrows() != n || system.b_noise.nrows() != n {
        return Err(SimulationError::Dimensions("input matrices do not match A".into()));
    }
    let mut m = Matrix::zeros(n + q + p, n + q + p);
    m.view_mut((0, 0), (n, n)).copy_from(&(&system.a * dt));
    m.view_mut((0, n), (n, q)).copy_from(&(&system.b * dt));
    m.view_mut((0, n + q), (n, p)).copy_from(&(&system.b_noise * dt));
    let e = expm(&m)?;
    Ok(DiscreteSystem {
        ad: e.view((0, 0), (n, n)).into_owned(),
        bd: e.view((0, n), (n, q)).into_owned(),
        bn: e.view((0, n + q), (n, p)).into_owned(),
        dt,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub scenario_hash: String,
    pub seed: Option<u64>,
    pub controller: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub times: Vec<f64>,
    pub columns: Vec<Column>,
    pub metadata: TraceMetadata,
}

impl SimTrace {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }
}

#[derive(Debug, Clone, Copy)]
enum Source {
    State(usize),
    Output(usize),
    Disturbance(usize),
    Measured(usize),
}

fn resolve(system: &ClosedLoopSystem, record: &[SignalSelector]) -> Result<Vec<(String, Source)>> {
    let l = &system.layout;
    let mut picks: Vec<(&str, Source)> = Vec::new();
    let states = |r: std::ops::Range<usize>| r.map(|i| (system.state_labels[i].as_str(), Source::State(i)));
    let outputs = |r: std::ops::Range<usize>| r.map(|i| (system.output_labels[i].as_str(), Source::Output(i)));
    for sel in record {
        match sel {
            SignalSelector::Plant => picks.extend(states(l.plant.clone())),
            SignalSelector::Integrators => picks.extend(states(l.integrators.clone())),
            SignalSelector::Estimates => picks.extend(states(l.estimates.clone())),
            SignalSelector::States => picks.extend(states(0..system.n_states())),
            SignalSelector::Outputs => picks.extend(outputs(l.outputs.clone())),
            SignalSelector::Controls => picks.extend(outputs(l.controls.clone())),
            SignalSelector::Errors => picks.extend(outputs(l.errors.clone())),
            SignalSelector::Disturbances => picks.extend(
                system
                    .disturbance_labels
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.as_str(), Source::Disturbance(i))),
            ),
            SignalSelector::Measured => picks.extend(
                system
                    .measured_labels
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.as_str(), Source::Measured(i))),
            ),
            SignalSelector::Named(name) => {
                let find = |labels: &[String]| labels.iter().position(|s| s == name);
                let src = if let Some(i) = find(&system.state_labels) {
                    Source::State(i)
                } else if let Some(i) = find(&system.output_labels) {
                    Source::Output(i)
                } else if let Some(i) = find(&system.disturbance_labels) {
                    Source::Disturbance(i)
                } else if let Some(i) = find(&system.measured_labels) {
                    Source::Measured(i)
                } else {
                    return Err(SimulationError::UnknownSignal(name.clone()));
                };
                picks.push((name.as_str(), src));
            }
        }
    }
    let mut seen = HashSet::new();
    Ok(picks
        .into_iter()
        .filter(|(name, _)| seen.insert(*name))
        .map(|(name, src)| (name.to_string(), src))
        .collect())
}

/// March the ZOH-discretized closed loop over the scenario grid.
pub fn simulate(system: &ClosedLoopSystem, scenario: &Scenario) -> Result<SimTrace> {
    let diags = scenario.validate(None);
    if diags.iter().any(Diagnostic::is_error) {
        return Err(SimulationError::Invalid(diags));
    }
    let n = system.n_states();
    let q = system.b.ncols();
    let p = system.b_noise.ncols();
    if scenario.disturbances.channels.len() != q {
        return Err(SimulationError::Dimensions(format!(
            "scenario has {} disturbance channels, system has {q}",
            scenario.disturbances.channels.len()
        )));
    }
    let mut z = match &scenario.initial_state {
        None => nalgebra::DVector::zeros(n),
        Some(v) if v.len() == n => nalgebra::DVector::from_column_slice(v),
        Some(v) => {
            return Err(SimulationError::Dimensions(format!(
                "initial_state has {} entries, system has {n} states",
                v.len()
            )))
        }
    };
    let noise_factor = match &scenario.measurement_noise {
        None => None,
        Some(noise) if noise.covariance.len() == p => covariance_factor(&noise.covariance),
        Some(noise) => {
            return Err(SimulationError::Dimensions(format!(
                "measurement noise covariance is {0}x{0}, system has {p} outputs",
                noise.covariance.len()
            )))
        }
    };

    let times = scenario.times();
    let dist = render_disturbance(&scenario.disturbances, &times, scenario.seed)?;
    let disc = discretize(system, scenario.dt)?;
    let sources = resolve(system, &scenario.record)?;

    let mut noise_rng = ChaCha8Rng::seed_from_u64(scenario.seed.unwrap_or(0));
    noise_rng.set_stream(MEASUREMENT_STREAM);

    let steps = times.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(steps); sources.len()];
    let mut d = nalgebra::DVector::zeros(q);
    let mut v = nalgebra::DVector::zeros(p);
    for k in 0..steps {
        for (j, ch) in dist.iter().enumerate() {
            d[j] = ch[k];
        }
        if let Some(f) = &noise_factor {
            let white = nalgebra::DVector::from_fn(p, |_, _| StandardNormal.sample(&mut noise_rng));
            v = f * white;
        }
        let w = &system.c * &z;
        let y = &system.plant_c * z.rows(0, system.layout.plant.len());
        for (col, (_, src)) in columns.iter_mut().zip(&sources) {
            col.push(match *src {
                Source::State(i) => z[i],
                Source::Output(i) => w[i],
                Source::Disturbance(i) => d[i],
                Source::Measured(i) => y[i] + v[i],
            });
        }
        if k + 1 == steps {
            break;
        }
        z = &disc.ad * &z + &disc.bd * &d + &disc.bn * &v;
        if let Some(i) = z.iter().position(|x| !x.is_finite() || x.abs() > DIVERGENCE_LIMIT) {
            return Err(SimulationError::Diverged {
                time: times[k + 1],
                state: system.state_labels[i].clone(),
                value: z[i],
            });
        }
    }

    Ok(SimTrace {
        times,
        columns: sources
            .into_iter()
            .zip(columns)
            .map(|((name, _), values)| Column { name, values })
            .collect(),
        metadata: TraceMetadata {
            scenario_hash: scenario.hash(),
            seed: scenario.seed,
            controller: system.controller.id().to_string(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_plant, AreaKind, AreaParams};
    use crate::synthesis::make_droop_baseline;

    fn scalar_system(a: f64, b: f64) -> ClosedLoopSystem {
        let mut sys = make_droop_baseline(
            &build_plant(&[AreaParams::with_defaults("ct", AreaKind::CombustionTurbine, 800.0)], &[]).unwrap(),
        )
        .unwrap();
        sys.a = Matrix::from_element(1, 1, a);
        sys.b = Matrix::from_element(1, 1, b);
        sys.b_noise = Matrix::zeros(1, 0);
        sys
    }

    #[test]
    fn integrator_zoh() {
        let d = discretize(&scalar_system(0.0, 3.0), 0.1).unwrap();
        assert_eq!(d.ad[(0, 0)], 1.0);
        assert!((d.bd[(0, 0)] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn scalar_zoh() {
        let d = discretize(&scalar_system(-2.0, 1.0), 0.5).unwrap();
        let e = (-1.0f64).exp();
        assert!((d.ad[(0, 0)] - e).abs() < 1e-15);
        assert!((d.bd[(0, 0)] - (1.0 - e) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn step_sampling() {
        let spec = DisturbanceSpec::step(1, 0, 1.0, -0.2);
        let times: Vec<f64> = (0..5).map(|k| k as f64 * 0.5).collect();
        let s = render_disturbance(&spec, &times, None).unwrap();
        assert_eq!(s[0], vec![0.0, 0.0, -0.2, -0.2, -0.2]);
    }

    #[test]
    fn ramp_sampling() {
        let spec = DisturbanceSpec {
            channels: vec![vec![Primitive::Ramp {
                start: 1.0,
                end: 3.0,
                magnitude: 0.4,
            }]],
        };
        let s = render_disturbance(&spec, &[0.0, 1.0, 2.0, 3.0, 4.0], None).unwrap();
        assert_eq!(s[0], vec![0.0, 0.0, 0.2, 0.4, 0.4]);
    }

    #[test]
    fn zero_sigma_gauss_is_zero() {
        let spec = DisturbanceSpec {
            channels: vec![vec![Primitive::Gauss {
                sigma: 0.0,
                bandwidth: 0.3,
                seed: Some(7),
            }]],
        };
        let s = render_disturbance(&spec, &[0.0, 0.1, 0.2], None).unwrap();
        assert!(s[0].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gauss_needs_seed() {
        let spec = DisturbanceSpec {
            channels: vec![vec![Primitive::Gauss {
                sigma: 0.1,
                bandwidth: 0.3,
                seed: None,
            }]],
        };
        assert!(matches!(
            render_disturbance(&spec, &[0.0], None),
            Err(SimulationError::Invalid(_))
        ));
        assert!(render_disturbance(&spec, &[0.0], Some(1)).is_ok());
    }

    #[test]
    fn late_events_warn() {
        let spec = DisturbanceSpec::step(1, 0, 5.0, 0.1);
        let diags = Scenario::new(1.0, 0.1, spec).validate(None);
        assert_eq!(diags.len(), 1);
        assert!(!diags[0].is_error());
    }

    #[test]
    fn selector_round_trip() {
        for s in ["plant", "measured", "df1"] {
            let sel: SignalSelector = s.parse().unwrap();
            assert_eq!(sel.to_string(), s);
        }
        let json = serde_json::to_string(&SignalSelector::Named("u2".into())).unwrap();
        assert_eq!(json, "\"u2\"");
    }

    #[test]
    fn hash_ignores_record() {
        let mut a = Scenario::new(1.0, 0.1, DisturbanceSpec::zeros(1));
        let h = a.hash();
        a.record = vec![SignalSelector::States];
        assert_eq!(a.hash(), h);
        a.seed = Some(3);
        assert_ne!(a.hash(), h);
    }
}
