//! Seeded synthetic data: labelled gait streams and calibration bench
//! samples with planted parameters, plus event scoring against labels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::actuation::{CalibrationSample, TorqueCurrentModel};
use crate::error::{Error, Result};
use crate::gait::{EventKind, GaitEvent, ImuSample};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(sigma: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|e| Error::Argument(format!("noise sigma {sigma}: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaitCorpusParams {
    pub strides: usize,
    /// Hz
    pub sample_rate: f64,
    /// s, mean quiet stance length.
    pub stance_duration: f64,
    /// s, stance lengths are drawn uniformly within +/- this.
    pub stance_jitter: f64,
    /// s
    pub swing_duration: f64,
    /// deg/s, swing is one full sine period of this amplitude.
    pub swing_peak: f64,
    /// deg/s, additive Gaussian noise.
    pub noise_sigma: f64,
}

impl Default for GaitCorpusParams {
    fn default() -> Self {
        Self {
            strides: 100,
            sample_rate: 500.0,
            stance_duration: 0.6,
            stance_jitter: 0.05,
            swing_duration: 0.5,
            swing_peak: 400.0,
            noise_sigma: 2.0,
        }
    }
}

impl GaitCorpusParams {
    pub fn violations(&self, path: &str) -> Vec<String> {
        let mut out = Vec::new();
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if self.strides == 0 {
            out.push(format!("{path}.strides must be >= 1"));
        }
        if !pos(self.sample_rate) {
            out.push(format!("{path}.sample_rate must be > 0 (got {})", self.sample_rate));
        }
        if !pos(self.stance_duration) {
            out.push(format!("{path}.stance_duration must be > 0 (got {})", self.stance_duration));
        }
        if !(self.stance_jitter >= 0.0 && self.stance_jitter < self.stance_duration) {
            out.push(format!(
                "{path}.stance_jitter must lie in [0, stance_duration) (got {})",
                self.stance_jitter
            ));
        }
        if !pos(self.swing_duration) {
            out.push(format!("{path}.swing_duration must be > 0 (got {})", self.swing_duration));
        }
        if !pos(self.swing_peak) {
            out.push(format!("{path}.swing_peak must be > 0 (got {})", self.swing_peak));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            out.push(format!("{path}.noise_sigma must be >= 0 (got {})", self.noise_sigma));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaitCorpus {
    pub samples: Vec<ImuSample>,
    /// Ground-truth events: a start one quiet window after each stance onset
    /// and an end at each stance offset.
    pub labels: Vec<GaitEvent>,
    /// `(onset, offset)` of every true stance.
    pub stances: Vec<(f64, f64)>,
}

/// Alternating quiet stances and one-period sine swings, starting in stance.
pub fn gait_corpus(params: &GaitCorpusParams, quiet_window: f64, seed: u64) -> Result<GaitCorpus> {
    let v = params.violations("corpus");
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    let mut rng = rng(seed);
    let noise = normal(params.noise_sigma)?;
    let dt = 1.0 / params.sample_rate;

    let mut stances = Vec::with_capacity(params.strides);
    let mut t0 = 0.0;
    for _ in 0..params.strides {
        let j = if params.stance_jitter > 0.0 {
            rng.random_range(-params.stance_jitter..params.stance_jitter)
        } else {
            0.0
        };
        let len = params.stance_duration + j;
        stances.push((t0, t0 + len));
        t0 += len + params.swing_duration;
    }
    let end = t0;

    let n = (end / dt).floor() as usize;
    let mut samples = Vec::with_capacity(n + 1);
    let mut k = 0;
    for i in 0..=n {
        let t = i as f64 * dt;
        while k + 1 < stances.len() && t >= stances[k + 1].0 {
            k += 1;
        }
        let (_, off) = stances[k];
        let clean = if t < off {
            0.0
        } else {
            let u = (t - off) / params.swing_duration;
            if u < 1.0 {
                params.swing_peak * (std::f64::consts::TAU * u).sin()
            } else {
                0.0
            }
        };
        samples.push(ImuSample::new(t, clean + noise.sample(&mut rng)));
    }

    let labels = stances
        .iter()
        .flat_map(|&(on, off)| {
            [
                GaitEvent { kind: EventKind::StanceStart, t: on + quiet_window },
                GaitEvent { kind: EventKind::StanceEnd, t: off },
            ]
        })
        .collect();
    Ok(GaitCorpus { samples, labels, stances })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventScore {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub f1: f64,
    /// Largest |detected - label| over matched pairs, s.
    pub max_timing_error: f64,
}

/// Greedy one-to-one matching of detections to labels of the same kind
/// within `tolerance` seconds.
pub fn score_events(detected: &[GaitEvent], labels: &[GaitEvent], tolerance: f64) -> EventScore {
    let mut used = vec![false; labels.len()];
    let mut tp = 0;
    let mut worst: f64 = 0.0;
    for d in detected {
        let best = labels
            .iter()
            .enumerate()
            .filter(|(i, l)| !used[*i] && l.kind == d.kind && (l.t - d.t).abs() <= tolerance)
            .min_by(|a, b| (a.1.t - d.t).abs().total_cmp(&(b.1.t - d.t).abs()));
        if let Some((i, l)) = best {
            used[i] = true;
            tp += 1;
            worst = worst.max((l.t - d.t).abs());
        }
    }
    let fp = detected.len() - tp;
    let fn_ = labels.len() - tp;
    let f1 = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };
    EventScore {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        f1,
        max_timing_error: worst,
    }
}

/// Bench samples from a planted model: currents evenly spread over
/// `[-max_current, max_current]`, torques with additive Gaussian noise.
pub fn bench_samples(
    model: &TorqueCurrentModel,
    n: usize,
    max_current: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<Vec<CalibrationSample>> {
    if n < 2 || !(max_current > 0.0) {
        return Err(Error::Argument(format!(
            "need n >= 2 and max_current > 0 (got {n}, {max_current})"
        )));
    }
    let mut rng = rng(seed);
    let noise = normal(noise_sigma)?;
    Ok((0..n)
        .map(|i| {
            let current_a = -max_current + 2.0 * max_current * i as f64 / (n - 1) as f64;
            CalibrationSample {
                current_a,
                torque_nm: model.torque_from_current(current_a) + noise.sample(&mut rng),
            }
        })
        .collect())
}
