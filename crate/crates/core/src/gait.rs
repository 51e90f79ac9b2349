//! Stance detection from foot angular velocity, the stance-phase assistive
//! torque profile, and tracking simulation through the actuator plant.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::actuation::{rms_diff, CurrentLoopPlant, TorqueCurrentModel, TrackingTrace};
use crate::error::{Error, Result};

/// Relative slack on the quiet-window comparison so that a window ending
/// exactly on a sample instant is not lost to rounding in the timestamps.
const WINDOW_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    #[serde(rename = "t_s")]
    pub t: f64,
    /// Foot angular velocity in the sagittal plane, deg/s.
    #[serde(rename = "omega_dps")]
    pub omega: f64,
}

impl ImuSample {
    pub fn new(t: f64, omega: f64) -> Self {
        Self { t, omega }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorParams {
    /// deg/s
    pub omega_quiet: f64,
    /// s
    pub quiet_window: f64,
    /// deg/s
    pub omega_active: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self { omega_quiet: 10.0, quiet_window: 0.08, omega_active: 50.0 }
    }
}

impl DetectorParams {
    pub fn violations(&self, path: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.omega_quiet > 0.0 && self.omega_quiet.is_finite()) {
            out.push(format!("{path}.omega_quiet must be > 0 (got {})", self.omega_quiet));
        }
        if !(self.omega_active > self.omega_quiet && self.omega_active.is_finite()) {
            out.push(format!(
                "{path}.omega_active must exceed omega_quiet (got {} <= {})",
                self.omega_active, self.omega_quiet
            ));
        }
        if !(self.quiet_window > 0.0 && self.quiet_window.is_finite()) {
            out.push(format!("{path}.quiet_window must be > 0 (got {})", self.quiet_window));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    StanceStart,
    StanceEnd,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::StanceStart => "stance_start",
            EventKind::StanceEnd => "stance_end",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitEvent {
    pub kind: EventKind,
    pub t: f64,
}

/// Sequential stance detector: one instance per stream.
#[derive(Debug, Clone)]
pub struct StanceDetector {
    params: DetectorParams,
    in_stance: bool,
    quiet_since: Option<f64>,
    last: Option<f64>,
}

impl StanceDetector {
    pub fn new(params: DetectorParams) -> Result<Self> {
        match params.violations("detector").as_slice() {
            [] => Ok(Self { params, in_stance: false, quiet_since: None, last: None }),
            v => Err(Error::Validation(v.to_vec())),
        }
    }

    pub fn in_stance(&self) -> bool {
        self.in_stance
    }

    pub fn push(&mut self, s: ImuSample) -> Result<Option<GaitEvent>> {
        if !(s.t.is_finite() && s.omega.is_finite()) {
            return Err(Error::Stream(format!("non-finite sample at t = {}", s.t)));
        }
        if let Some(prev) = self.last {
            if !(s.t > prev) {
                return Err(Error::Stream(format!(
                    "timestamps must increase strictly ({} after {prev})",
                    s.t
                )));
            }
            if s.t - prev > self.params.quiet_window / 4.0 * (1.0 + WINDOW_SLACK) {
                return Err(Error::Stream(format!(
                    "sampling gap {} s at t = {} exceeds quiet_window / 4",
                    s.t - prev,
                    s.t
                )));
            }
        }
        self.last = Some(s.t);
        let w = s.omega.abs();
        if self.in_stance {
            if w > self.params.omega_active {
                self.in_stance = false;
                self.quiet_since = None;
                return Ok(Some(GaitEvent { kind: EventKind::StanceEnd, t: s.t }));
            }
            return Ok(None);
        }
        if w < self.params.omega_quiet {
            let since = *self.quiet_since.get_or_insert(s.t);
            let window = self.params.quiet_window;
            if s.t - since >= window - WINDOW_SLACK * window.max(s.t.abs()) {
                self.in_stance = true;
                self.quiet_since = None;
                return Ok(Some(GaitEvent { kind: EventKind::StanceStart, t: s.t }));
            }
        } else {
            self.quiet_since = None;
        }
        Ok(None)
    }
}

pub fn detect_events(stream: &[ImuSample], params: &DetectorParams) -> Result<Vec<GaitEvent>> {
    let mut det = StanceDetector::new(*params)?;
    let mut out = Vec::new();
    for s in stream {
        out.extend(det.push(*s)?);
    }
    Ok(out)
}

/// Checks that events alternate starting with a stance start and that
/// times increase strictly.
pub fn check_events(events: &[GaitEvent]) -> Result<()> {
    for (i, e) in events.iter().enumerate() {
        let expected = if i % 2 == 0 { EventKind::StanceStart } else { EventKind::StanceEnd };
        if e.kind != expected {
            return Err(Error::Stream(format!(
                "event {i} at t = {} is {}, expected {}",
                e.t,
                e.kind.as_str(),
                expected.as_str()
            )));
        }
        if i > 0 && !(e.t > events[i - 1].t) {
            return Err(Error::Stream(format!("event times must increase (event {i})")));
        }
    }
    Ok(())
}

/// Normalised knee extension moment over stance, Nm/kg. Peaks at 0.5 Nm/kg
/// at 15% stance, falls to zero by 60% and stays there.
pub const DEFAULT_CURVE: [[f64; 2]; 10] = [
    [0.00, 0.00],
    [0.05, 0.18],
    [0.10, 0.40],
    [0.15, 0.50],
    [0.20, 0.46],
    [0.30, 0.30],
    [0.40, 0.14],
    [0.50, 0.04],
    [0.60, 0.00],
    [1.00, 0.00],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssistProfile {
    /// `(stance fraction, Nm/kg)` knots, fractions increasing from 0 to 1.
    pub normalized_curve: Vec<[f64; 2]>,
    pub scale: f64,
    /// kg
    pub body_mass: f64,
    /// Nm
    pub torque_cap: f64,
}

impl Default for AssistProfile {
    fn default() -> Self {
        Self {
            normalized_curve: DEFAULT_CURVE.to_vec(),
            scale: 0.4,
            body_mass: 80.0,
            torque_cap: 16.0,
        }
    }
}

impl AssistProfile {
    pub fn violations(&self, path: &str) -> Vec<String> {
        let mut out = Vec::new();
        let c = &self.normalized_curve;
        if c.len() < 2 {
            out.push(format!("{path}.normalized_curve needs >= 2 knots (got {})", c.len()));
        } else {
            if c[0][0] != 0.0 || c[c.len() - 1][0] != 1.0 {
                out.push(format!("{path}.normalized_curve must span stance fraction 0 to 1"));
            }
            if c.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                out.push(format!("{path}.normalized_curve fractions must increase strictly"));
            }
        }
        if c.iter().any(|p| !(p[1] >= 0.0 && p[1].is_finite())) {
            out.push(format!("{path}.normalized_curve values must be >= 0"));
        }
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            out.push(format!("{path}.scale must lie in (0, 1] (got {})", self.scale));
        }
        if !(self.body_mass > 0.0 && self.body_mass.is_finite()) {
            out.push(format!("{path}.body_mass must be > 0 (got {})", self.body_mass));
        }
        if !(self.torque_cap > 0.0 && self.torque_cap.is_finite()) {
            out.push(format!("{path}.torque_cap must be > 0 (got {})", self.torque_cap));
        }
        out
    }

    /// All-zero curve, mostly for tests.
    pub fn zero() -> Self {
        Self { normalized_curve: vec![[0.0, 0.0], [1.0, 0.0]], ..Self::default() }
    }

    fn curve_at(&self, x: f64) -> f64 {
        let c = &self.normalized_curve;
        let i = c.partition_point(|p| p[0] <= x).clamp(1, c.len() - 1);
        let ([x0, y0], [x1, y1]) = (c[i - 1], c[i]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Desired assistive torque at a stance fraction, Nm.
    pub fn desired_torque(&self, stance_fraction: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&stance_fraction) {
            return Err(Error::Argument(format!(
                "stance fraction must lie in [0, 1] (got {stance_fraction})"
            )));
        }
        let t = self.curve_at(stance_fraction) * self.scale * self.body_mass;
        Ok(t.min(self.torque_cap))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileTiming {
    /// Fraction = elapsed / trailing-average detected stance duration.
    PhaseBased,
    /// Fraction = elapsed / fixed nominal stance duration.
    TimeBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StanceTiming {
    pub mode: ProfileTiming,
    /// s; initial estimate in phase mode, the fixed duration in time mode.
    pub nominal_stance: f64,
    /// Completed stances averaged in phase mode.
    pub history: usize,
}

impl Default for StanceTiming {
    fn default() -> Self {
        Self { mode: ProfileTiming::PhaseBased, nominal_stance: 0.6, history: 3 }
    }
}

impl StanceTiming {
    pub fn violations(&self, path: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.nominal_stance > 0.0 && self.nominal_stance.is_finite()) {
            out.push(format!("{path}.nominal_stance must be > 0 (got {})", self.nominal_stance));
        }
        if self.history == 0 {
            out.push(format!("{path}.history must be >= 1"));
        }
        out
    }
}

/// Online stance-fraction estimate.
#[derive(Debug, Clone)]
pub struct PhaseEstimator {
    timing: StanceTiming,
    recent: VecDeque<f64>,
}

impl PhaseEstimator {
    pub fn new(timing: StanceTiming) -> Self {
        Self { timing, recent: VecDeque::new() }
    }

    pub fn expected_stance(&self) -> f64 {
        match self.timing.mode {
            ProfileTiming::TimeBased => self.timing.nominal_stance,
            ProfileTiming::PhaseBased if self.recent.is_empty() => self.timing.nominal_stance,
            ProfileTiming::PhaseBased => self.recent.iter().sum::<f64>() / self.recent.len() as f64,
        }
    }

    pub fn fraction(&self, elapsed: f64) -> f64 {
        (elapsed / self.expected_stance()).clamp(0.0, 1.0)
    }

    pub fn complete_stance(&mut self, duration: f64) {
        self.recent.push_back(duration);
        while self.recent.len() > self.timing.history {
            self.recent.pop_front();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssistTracking {
    pub trace: TrackingTrace,
    /// Per-sample stance flag, aligned with the trace.
    pub in_stance: Vec<bool>,
    /// Over stance samples only.
    pub rms_error: f64,
}

/// Runs the assist controller over a sample timeline: the profile is
/// triggered by detected stance starts, turned into a current command by the
/// feedforward inverse, and passed through the current-loop plant. The
/// command for each sample is held over the interval leading up to it.
pub fn simulate_tracking(
    profile: &AssistProfile,
    timing: &StanceTiming,
    times: &[f64],
    events: &[GaitEvent],
    model: &TorqueCurrentModel,
    plant: &CurrentLoopPlant,
) -> Result<AssistTracking> {
    let mut v = profile.violations("profile");
    v.extend(timing.violations("timing"));
    v.extend(model.violations("model"));
    v.extend(plant.violations("plant"));
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    check_events(events)?;
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Stream("sample times must increase strictly".into()));
    }

    let mut phase = PhaseEstimator::new(*timing);
    let mut next_event = 0;
    let mut stance_start: Option<f64> = None;
    let mut current = 0.0;
    let mut prev_t: Option<f64> = None;
    let n = times.len();
    let mut out = AssistTracking {
        trace: TrackingTrace {
            t: Vec::with_capacity(n),
            desired: Vec::with_capacity(n),
            actual: Vec::with_capacity(n),
        },
        in_stance: Vec::with_capacity(n),
        rms_error: 0.0,
    };
    for &t in times {
        while next_event < events.len() && events[next_event].t <= t {
            let e = events[next_event];
            match e.kind {
                EventKind::StanceStart => stance_start = Some(e.t),
                EventKind::StanceEnd => {
                    if let Some(s) = stance_start.take() {
                        phase.complete_stance(e.t - s);
                    }
                }
            }
            next_event += 1;
        }
        let desired = match stance_start {
            Some(s) => profile.desired_torque(phase.fraction(t - s))?,
            None => 0.0,
        };
        let dt = prev_t.map_or(0.0, |p| t - p);
        current = plant.step(current, model.current_for_torque(desired), dt);
        prev_t = Some(t);
        out.trace.t.push(t);
        out.trace.desired.push(desired);
        out.trace.actual.push(model.torque_from_current(current));
        out.in_stance.push(stance_start.is_some());
    }
    let (d, a): (Vec<f64>, Vec<f64>) = out
        .trace
        .desired
        .iter()
        .zip(&out.trace.actual)
        .zip(&out.in_stance)
        .filter(|(_, s)| **s)
        .map(|((d, a), _)| (*d, *a))
        .unzip();
    out.rms_error = rms_diff(&d, &a);
    Ok(out)
}
