//! Stability verdicts, transient metrics, and controller comparisons.

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::numerics::{
    eigenvalues, hurwitz_threshold, null_vector, spectral_abscissa, Complex, ConservedModes, Matrix,
    NumericsError,
};
use crate::simulation::SimTrace;
use crate::synthesis::ClosedLoopSystem;

/// Fraction of the horizon averaged for the steady-state value.
pub const STEADY_STATE_FRACTION: f64 = 0.05;
/// Default settling band for frequencies, Hz.
pub const FREQUENCY_BAND: f64 = 0.005;
/// Default settling band for tie powers and everything else, pu.
pub const POWER_BAND: f64 = 0.005;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("settling band must be finite and > 0, got {0}")]
    InvalidBand(f64),
    #[error("trace is empty")]
    Empty,
    #[error("traces do not share a time grid: {0}")]
    GridMismatch(String),
    #[error("traces come from different scenarios ({baseline} vs {lqg})")]
    ScenarioMismatch { baseline: String, lqg: String },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

type Result<T> = std::result::Result<T, AnalysisError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransientMetrics {
    /// max |signal|.
    pub peak_deviation: f64,
    pub peak_time: f64,
    /// `None` when the signal has not stayed in band long enough before the
    /// end of the trace.
    pub settling_time: Option<f64>,
    /// Mean over the final 5% of the horizon.
    pub steady_state: f64,
    /// Trapezoidal ∫ signal² dt.
    pub ise: f64,
}

/// Time a signal must remain in band before the end of the trace for its
/// settling time to count: `max(1 s, 5% of the horizon)`.
pub fn confirmation_window(horizon: f64) -> f64 {
    (0.05 * horizon).max(1.0)
}

pub fn default_band(signal: &str) -> f64 {
    if signal.contains("df") {
        FREQUENCY_BAND
    } else {
        POWER_BAND
    }
}

pub fn metrics(trace: &SimTrace, signal: &str, band: f64) -> Result<TransientMetrics> {
    let values = trace
        .column(signal)
        .ok_or_else(|| AnalysisError::UnknownSignal(signal.to_string()))?;
    metrics_of(&trace.times, values, band)
}

/// Metrics of a sampled signal; `times` ascending, same length as `values`.
pub fn metrics_of(times: &[f64], values: &[f64], band: f64) -> Result<TransientMetrics> {
    if !(band.is_finite() && band > 0.0) {
        return Err(AnalysisError::InvalidBand(band));
    }
    if values.is_empty() || times.len() != values.len() {
        return Err(AnalysisError::Empty);
    }
    let t0 = times[0];
    let t_end = times[times.len() - 1];

    let (mut peak, mut peak_idx) = (0.0, 0);
    for (i, v) in values.iter().enumerate() {
        if v.abs() > peak {
            peak = v.abs();
            peak_idx = i;
        }
    }

    let tail_start = t_end - STEADY_STATE_FRACTION * (t_end - t0);
    let tail: Vec<f64> = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= tail_start)
        .map(|(_, &v)| v)
        .collect();
    let steady_state = tail.iter().sum::<f64>() / tail.len() as f64;

    // Index of the first sample after the last excursion.
    let settle_idx = values
        .iter()
        .rposition(|v| (v - steady_state).abs() > band)
        .map_or(0, |i| i + 1);
    let settling_time = (settle_idx < values.len())
        .then(|| times[settle_idx])
        .filter(|&ts| t_end - ts >= confirmation_window(t_end - t0));

    let ise = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] * v[0] + v[1] * v[1]))
        .sum();

    Ok(TransientMetrics {
        peak_deviation: peak,
        peak_time: times[peak_idx],
        settling_time,
        steady_state,
        ise,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex> for ComplexValue {
    fn from(c: Complex) -> Self {
        Self { re: c.re, im: c.im }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    /// Over the whole spectrum.
    pub spectral_abscissa: f64,
    /// Over the spectrum with conserved (input-unreachable) modes removed.
    pub reduced_abscissa: f64,
    pub conserved_modes: usize,
    pub hurwitz: bool,
    /// Rightmost eigenvalue of the reduced spectrum and its eigenvector.
    pub dominant_eigenvalue: Option<ComplexValue>,
    pub dominant_eigenvector: Vec<ComplexValue>,
    /// Smallest `−Re λ / |λ|` over complex modes; 1.0 when all are real.
    pub least_damping_ratio: f64,
}

pub fn stability_report(system: &ClosedLoopSystem) -> Result<StabilityReport> {
    stability_report_of(&system.a, &[&system.b])
}

/// Verdict for `ẋ = A x` driven through `inputs`; modes no input can reach
/// are counted separately and excluded from the Hurwitz verdict.
pub fn stability_report_of(a: &Matrix, inputs: &[&Matrix]) -> Result<StabilityReport> {
    let full = spectral_abscissa(a)?;
    let modes = ConservedModes::new(a, inputs)?;
    let reduced = modes.reduce_square(a);
    let spectrum = eigenvalues(&reduced)?;
    let dominant = spectrum.iter().copied().max_by(|x, y| x.re.total_cmp(&y.re));
    let dominant_eigenvector = match dominant {
        Some(l) => null_vector(a, l)?.into_iter().map(ComplexValue::from).collect(),
        None => Vec::new(),
    };
    let reduced_abscissa = dominant.map_or(f64::NEG_INFINITY, |l| l.re);
    let scale = 1.0 + a.amax();
    let least_damping_ratio = spectrum
        .iter()
        .filter(|l| l.im.abs() > 1e-9 * scale)
        .map(|l| -l.re / l.norm())
        .fold(1.0, f64::min);
    Ok(StabilityReport {
        spectral_abscissa: full,
        reduced_abscissa,
        conserved_modes: modes.count(),
        hurwitz: reduced_abscissa < hurwitz_threshold(a),
        dominant_eigenvalue: dominant.map(ComplexValue::from),
        dominant_eigenvector,
        least_damping_ratio,
    })
}

/// `baseline / lqg` for a metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(f64),
    /// The LQG value vanishes against a positive baseline.
    Unbounded,
    /// Baseline is zero or the metric is missing on either side.
    Undefined,
}

impl Ratio {
    pub fn of(baseline: f64, lqg: f64) -> Self {
        let (b, l) = (baseline.abs(), lqg.abs());
        if b == 0.0 || !b.is_finite() || !l.is_finite() {
            Ratio::Undefined
        } else if b == l {
            Ratio::Finite(1.0)
        } else if l <= 1e-12 * b {
            Ratio::Unbounded
        } else {
            Ratio::Finite(b / l)
        }
    }

    fn of_opt(baseline: Option<f64>, lqg: Option<f64>) -> Self {
        match (baseline, lqg) {
            (Some(b), Some(l)) => Self::of(b, l),
            _ => Ratio::Undefined,
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Ratio::Finite(v) => s.serialize_f64(v),
            Ratio::Unbounded => s.serialize_str("→∞"),
            Ratio::Undefined => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricRatios {
    pub peak_deviation: Ratio,
    pub settling_time: Ratio,
    pub steady_state: Ratio,
    pub ise: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalComparison {
    pub signal: String,
    pub band: f64,
    pub baseline: TransientMetrics,
    pub lqg: TransientMetrics,
    pub ratios: MetricRatios,
    /// LQG ISE strictly below the baseline's.
    pub ise_improved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityPair {
    pub baseline: StabilityReport,
    pub lqg: StabilityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub scenario_hash: String,
    pub signals: Vec<SignalComparison>,
    /// Signals where LQG does not lower the ISE.
    pub ise_not_improved: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityPair>,
}

/// Pair metrics per signal, each with its [`default_band`].
pub fn compare(baseline: &SimTrace, lqg: &SimTrace, signals: &[&str]) -> Result<ComparisonReport> {
    let banded: Vec<(&str, f64)> = signals.iter().map(|&s| (s, default_band(s))).collect();
    compare_with_bands(baseline, lqg, &banded)
}

pub fn compare_with_bands(
    baseline: &SimTrace,
    lqg: &SimTrace,
    signals: &[(&str, f64)],
) -> Result<ComparisonReport> {
    if baseline.metadata.scenario_hash != lqg.metadata.scenario_hash {
        return Err(AnalysisError::ScenarioMismatch {
            baseline: baseline.metadata.scenario_hash.clone(),
            lqg: lqg.metadata.scenario_hash.clone(),
        });
    }
    if baseline.times.len() != lqg.times.len() {
        return Err(AnalysisError::GridMismatch(format!(
            "{} vs {} samples",
            baseline.times.len(),
            lqg.times.len()
        )));
    }
    if let Some(k) = baseline.times.iter().zip(&lqg.times).position(|(a, b)| a != b) {
        return Err(AnalysisError::GridMismatch(format!("sample {k} differs")));
    }
    let mut out = Vec::with_capacity(signals.len());
    let mut not_improved = Vec::new();
    for &(signal, band) in signals {
        let b = metrics(baseline, signal, band)?;
        let l = metrics(lqg, signal, band)?;
        let ise_improved = l.ise < b.ise;
        if !ise_improved {
            not_improved.push(signal.to_string());
        }
        out.push(SignalComparison {
            signal: signal.to_string(),
            band,
            ratios: MetricRatios {
                peak_deviation: Ratio::of(b.peak_deviation, l.peak_deviation),
                settling_time: Ratio::of_opt(b.settling_time, l.settling_time),
                steady_state: Ratio::of(b.steady_state, l.steady_state),
                ise: Ratio::of(b.ise, l.ise),
            },
            baseline: b,
            lqg: l,
            ise_improved,
        });
    }
    Ok(ComparisonReport {
        scenario_hash: baseline.metadata.scenario_hash.clone(),
        signals: out,
        ise_not_improved: not_improved,
        stability: None,
    })
}
