//! Deadband torque-current model of the actuator, its calibration by
//! regression, passive-mode resistive torque statistics, and a first-order
//! current-loop plant used by the tracking simulations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prototype bench figures. These come from hardware runs and are kept as
/// reference values; nothing in the crate asserts them.
pub mod reference {
    /// Calibrated torque constant, Nm/A.
    pub const TORQUE_CONSTANT: f64 = 0.62;
    /// Calibrated friction torque, Nm.
    pub const FRICTION_TORQUE: f64 = 0.5;
    pub const CALIBRATION_R_SQUARED: f64 = 0.9614;
    /// 10 Hz, +/-15 Nm sine tracking RMS error, Nm.
    pub const SINE_TRACKING_RMS: f64 = 0.88;
    pub const PASSIVE_RMS: f64 = 1.03;
    pub const PASSIVE_MAX: f64 = 3.33;
    /// Stance assistance tracking RMS error over three subjects, Nm.
    pub const SUBJECT_TRACKING_RMS: f64 = 0.31;
}

/// `T = kI - T_f` above the deadband, `kI + T_f` below it, zero inside
/// `[-T_f/k, T_f/k]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorqueCurrentModel {
    /// Torque constant at the joint output, Nm/A.
    pub k: f64,
    /// Friction torque, Nm.
    pub t_f: f64,
}

impl Default for TorqueCurrentModel {
    fn default() -> Self {
        Self::PROTOTYPE
    }
}

impl TorqueCurrentModel {
    /// Constants identified on the prototype's bench.
    pub const PROTOTYPE: TorqueCurrentModel = TorqueCurrentModel {
        k: reference::TORQUE_CONSTANT,
        t_f: reference::FRICTION_TORQUE,
    };

    pub fn new(k: f64, t_f: f64) -> Result<Self> {
        let m = Self { k, t_f };
        match m.violations("model").as_slice() {
            [] => Ok(m),
            v => Err(Error::Validation(v.to_vec())),
        }
    }

    pub fn violations(&self, path: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.k > 0.0 && self.k.is_finite()) {
            out.push(format!("{path}.k must be > 0 (got {})", self.k));
        }
        if !(self.t_f >= 0.0 && self.t_f.is_finite()) {
            out.push(format!("{path}.t_f must be >= 0 (got {})", self.t_f));
        }
        out
    }

    /// Half-width of the deadband, A.
    pub fn deadband(&self) -> f64 {
        self.t_f / self.k
    }

    pub fn torque_from_current(&self, current: f64) -> f64 {
        let edge = self.deadband();
        if current > edge {
            self.k * current - self.t_f
        } else if current < -edge {
            self.k * current + self.t_f
        } else {
            0.0
        }
    }

    /// Smallest-magnitude current producing `torque`.
    pub fn current_for_torque(&self, torque: f64) -> f64 {
        if torque == 0.0 {
            0.0
        } else {
            (torque + torque.signum() * self.t_f) / self.k
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub current_a: f64,
    pub torque_nm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub model: TorqueCurrentModel,
    /// Over the samples outside the fitted deadband.
    pub r_squared: f64,
    pub rounds: usize,
    /// Samples assigned to a sloped branch in the final round.
    pub branch_samples: usize,
}

const MAX_ROUNDS: usize = 20;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Branch {
    Positive,
    Negative,
    Dead,
}

fn assign(samples: &[CalibrationSample], edge: f64) -> Vec<Branch> {
    samples
        .iter()
        .map(|s| {
            if s.current_a > edge {
                Branch::Positive
            } else if s.current_a < -edge {
                Branch::Negative
            } else {
                Branch::Dead
            }
        })
        .collect()
}

/// Least squares of `T = k I - T_f sign(I)` over the sloped-branch samples.
fn fit(samples: &[CalibrationSample], branches: &[Branch]) -> Result<TorqueCurrentModel> {
    // regressors x1 = I, x2 = -sign
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut n = 0usize;
    for (s, br) in samples.iter().zip(branches) {
        let sign = match br {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
            Branch::Dead => continue,
        };
        let (x1, x2) = (s.current_a, -sign);
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        b1 += x1 * s.torque_nm;
        b2 += x2 * s.torque_nm;
        n += 1;
    }
    let det = s11 * s22 - s12 * s12;
    if n < 2 || !(det > 1e-12 * s11 * s22) {
        return Err(Error::IllConditioned(format!(
            "{n} sloped-branch samples do not determine both k and T_f"
        )));
    }
    let mut k = (s22 * b1 - s12 * b2) / det;
    let mut t_f = (-s12 * b1 + s11 * b2) / det;
    if t_f < 0.0 {
        // friction cannot be negative; refit the slope alone
        t_f = 0.0;
        k = b1 / s11;
    }
    if !(k > 0.0) {
        return Err(Error::IllConditioned(format!("fitted torque constant {k} is not positive")));
    }
    Ok(TorqueCurrentModel { k, t_f })
}

/// Fits the deadband model by iterated branch assignment: start with no
/// deadband, assign samples to branches, refit, repeat to a fixed point.
/// Deadband samples carry no weight in the fit.
pub fn calibrate(samples: &[CalibrationSample]) -> Result<Calibration> {
    if samples.len() < 4 {
        return Err(Error::Argument(format!(
            "calibration needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|s| !(s.current_a.is_finite() && s.torque_nm.is_finite())) {
        return Err(Error::Argument("calibration samples must be finite".into()));
    }
    if !samples.iter().any(|s| s.current_a > 0.0) || !samples.iter().any(|s| s.current_a < 0.0) {
        return Err(Error::IllConditioned(
            "need samples on both sides of zero current".into(),
        ));
    }
    let mut branches = assign(samples, 0.0);
    let mut model = fit(samples, &branches)?;
    let mut rounds = 1;
    while rounds < MAX_ROUNDS {
        let next = assign(samples, model.deadband());
        if next == branches {
            break;
        }
        branches = next;
        model = fit(samples, &branches)?;
        rounds += 1;
    }
    let sloped: Vec<&CalibrationSample> = samples
        .iter()
        .zip(&branches)
        .filter(|(_, b)| **b != Branch::Dead)
        .map(|(s, _)| s)
        .collect();
    let mean = sloped.iter().map(|s| s.torque_nm).sum::<f64>() / sloped.len() as f64;
    let ss_tot: f64 = sloped.iter().map(|s| (s.torque_nm - mean).powi(2)).sum();
    let ss_res: f64 = sloped
        .iter()
        .map(|s| (s.torque_nm - model.torque_from_current(s.current_a)).powi(2))
        .sum();
    Ok(Calibration {
        model,
        r_squared: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
        rounds,
        branch_samples: sloped.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassiveStats {
    pub rms: f64,
    pub max_abs: f64,
}

/// Resistive torque recorded while the unpowered joint is moved.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveTrace {
    samples: Vec<(f64, f64)>,
}

impl PassiveTrace {
    /// `(t_s, torque_nm)` pairs with strictly increasing time.
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Stream("passive trace timestamps must increase strictly".into()));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }
}

pub fn passive_stats(trace: &PassiveTrace) -> Result<PassiveStats> {
    let s = trace.samples();
    if s.len() < 2 {
        return Err(Error::Argument(format!("passive trace needs >= 2 samples, got {}", s.len())));
    }
    let sq = s.iter().map(|(_, t)| t * t).sum::<f64>() / s.len() as f64;
    Ok(PassiveStats {
        rms: sq.sqrt(),
        max_abs: s.iter().map(|(_, t)| t.abs()).fold(0.0, f64::max),
    })
}

/// Synthetic passive trace whose statistics equal the reference RMS and
/// peak figures by construction: a slow swing-like oscillation with one
/// peak sample at the reference maximum, scaled to hit the RMS.
pub fn canned_passive_trace() -> PassiveTrace {
    let n = 2000;
    let dt = 0.005;
    let peak_at = 700;
    let shape = |i: usize| {
        let t = i as f64 * dt;
        (std::f64::consts::TAU * 0.8 * t).sin() + 0.3 * (std::f64::consts::TAU * 2.4 * t).sin()
    };
    let rest: f64 = (0..n).filter(|&i| i != peak_at).map(|i| shape(i).powi(2)).sum();
    let target = reference::PASSIVE_RMS.powi(2) * n as f64 - reference::PASSIVE_MAX.powi(2);
    let scale = (target / rest).sqrt();
    let samples = (0..n)
        .map(|i| {
            let v = if i == peak_at { reference::PASSIVE_MAX } else { scale * shape(i) };
            (i as f64 * dt, v)
        })
        .collect();
    PassiveTrace { samples }
}

/// First-order current loop: `dI/dt = (I_cmd - I) / tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurrentLoopPlant {
    /// Time constant, s. Zero is an ideal current source.
    pub time_constant: f64,
}

impl Default for CurrentLoopPlant {
    fn default() -> Self {
        Self { time_constant: 0.005 }
    }
}

impl CurrentLoopPlant {
    pub fn violations(&self, path: &str) -> Vec<String> {
        if self.time_constant >= 0.0 && self.time_constant.is_finite() {
            vec![]
        } else {
            vec![format!("{path}.time_constant must be >= 0 (got {})", self.time_constant)]
        }
    }

    /// Exact zero-order-hold update over `dt`.
    pub fn step(&self, current: f64, command: f64, dt: f64) -> f64 {
        if self.time_constant == 0.0 {
            return command;
        }
        command + (current - command) * (-dt / self.time_constant).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingTrace {
    pub t: Vec<f64>,
    pub desired: Vec<f64>,
    pub actual: Vec<f64>,
}

impl TrackingTrace {
    pub fn rms_error(&self) -> f64 {
        rms_diff(&self.desired, &self.actual)
    }
}

pub(crate) fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Feedforward tracking of `amplitude * sin(2 pi f t)` through the plant.
/// The command for each sample is held over the interval leading up to it.
pub fn simulate_sine_tracking(
    model: &TorqueCurrentModel,
    plant: &CurrentLoopPlant,
    amplitude: f64,
    frequency: f64,
    duration: f64,
    dt: f64,
) -> Result<TrackingTrace> {
    let finite = [amplitude, frequency, duration, dt].iter().all(|v| v.is_finite());
    if !finite || !(dt > 0.0) || !(duration >= dt) || frequency < 0.0 {
        return Err(Error::Argument(format!(
            "sine tracking needs finite amplitude, frequency >= 0 and 0 < dt <= duration              (got amplitude {amplitude}, frequency {frequency}, duration {duration}, dt {dt})"
        )));
    }
    let v = plant.violations("plant");
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    let n = (duration / dt).round() as usize;
    let mut current: f64 = 0.0;
    let mut trace = TrackingTrace {
        t: Vec::with_capacity(n),
        desired: Vec::with_capacity(n),
        actual: Vec::with_capacity(n),
    };
    for i in 0..n {
        let t = i as f64 * dt;
        let desired = amplitude * (std::f64::consts::TAU * frequency * t).sin();
        if i > 0 {
            current = plant.step(current, model.current_for_torque(desired), dt);
        }
        trace.t.push(t);
        trace.desired.push(desired);
        trace.actual.push(model.torque_from_current(current));
    }
    Ok(trace)
}
