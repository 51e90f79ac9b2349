//! Run configuration: one JSON document with a section per analysis. Every
//! field has a default, so `{}` is a complete config; unknown keys are
//! rejected. Angles are written in degrees (`*_deg` keys).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::actuation::{CurrentLoopPlant, TorqueCurrentModel};
use crate::chain::{ChainConfig, OptimizeSettings};
use crate::error::{Error, Result};
use crate::gait::{AssistProfile, DetectorParams, StanceTiming};
use crate::geometry::Vec2;
use crate::mechanism::{assumed_layouts, MassItem, TransmissionParams};
use crate::statics::{AttachmentLayout, LoadCase};
use crate::synth::GaitCorpusParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Roller diameters to sweep, mm.
    pub d_values: Vec<f64>,
    #[serde(rename = "theta_max_deg", with = "crate::geometry::serde_degrees")]
    pub theta_max: f64,
    #[serde(rename = "theta_step_deg", with = "crate::geometry::serde_degrees")]
    pub theta_step: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            d_values: vec![0.0, 45.0, 64.0, 90.0],
            theta_max: 120f64.to_radians(),
            theta_step: 1f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeSection {
    pub settings: OptimizeSettings,
    /// Flexion ranges to optimise over, degrees.
    pub theta_max_deg: Vec<f64>,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        Self { settings: OptimizeSettings::default(), theta_max_deg: vec![120.0, 75.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct StaticsSection {
    pub layout: AttachmentLayout,
    pub load: LoadCase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticBench {
    /// Parameters the synthetic samples are drawn from.
    pub planted: TorqueCurrentModel,
    pub samples: usize,
    /// A
    pub max_current: f64,
    /// Nm
    pub noise_sigma: f64,
}

impl Default for SyntheticBench {
    fn default() -> Self {
        Self {
            planted: TorqueCurrentModel::PROTOTYPE,
            samples: 200,
            max_current: 10.0,
            noise_sigma: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    /// Bench CSV (`current_a,torque_nm`). Without it, samples are drawn
    /// from `synthetic` with the run seed.
    pub samples_csv: Option<PathBuf>,
    pub synthetic: SyntheticBench,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct GaitSection {
    /// IMU CSV (`t_s,omega_dps`). Without it, a synthetic corpus is
    /// generated from `corpus` with the run seed.
    pub imu_csv: Option<PathBuf>,
    pub corpus: GaitCorpusParams,
    pub detector: DetectorParams,
    pub profile: AssistProfile,
    pub timing: StanceTiming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InertiaSection {
    pub on_leg: Vec<MassItem>,
    pub distributed: Vec<MassItem>,
    /// Body centre of mass, m.
    pub pivot: Vec2,
}

impl Default for InertiaSection {
    fn default() -> Self {
        let (on_leg, distributed) = assumed_layouts();
        Self { on_leg, distributed, pivot: [0.0, 0.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub chain: ChainConfig,
    pub sweep: SweepSection,
    pub optimize: OptimizeSection,
    pub transmission: TransmissionParams,
    pub statics: StaticsSection,
    pub actuator: TorqueCurrentModel,
    pub plant: CurrentLoopPlant,
    pub calibration: CalibrationSection,
    pub gait: GaitSection,
    pub inertia: InertiaSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            chain: ChainConfig::default(),
            sweep: SweepSection::default(),
            optimize: OptimizeSection::default(),
            transmission: TransmissionParams::default(),
            statics: StaticsSection::default(),
            actuator: TorqueCurrentModel::default(),
            plant: CurrentLoopPlant::default(),
            calibration: CalibrationSection::default(),
            gait: GaitSection::default(),
            inertia: InertiaSection::default(),
        }
    }
}

fn check_range(out: &mut Vec<String>, path: &str, theta_max: f64, step: f64, knee_max: f64) {
    let min = crate::chain::THETA_MIN;
    if !(theta_max >= min && theta_max <= knee_max) {
        out.push(format!(
            "{path}: theta_max {} deg must lie in [{}, {}] deg",
            theta_max.to_degrees(),
            min.to_degrees(),
            knee_max.to_degrees()
        ));
    }
    if !(step > 0.0 && step.is_finite()) {
        out.push(format!("{path}: theta step must be > 0"));
    }
}

impl RunConfig {
    /// Every invariant violation, each naming its field.
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.chain.violations("chain");
        let knee_max = self.chain.knee.theta_max;

        check_range(&mut out, "sweep", self.sweep.theta_max, self.sweep.theta_step, knee_max);
        if self.sweep.d_values.is_empty() {
            out.push("sweep.d_values must not be empty".into());
        }
        for d in &self.sweep.d_values {
            if !(0.0..=150.0).contains(d) {
                out.push(format!("sweep.d_values: {d} mm outside [0, 150] mm"));
            }
        }

        out.extend(self.optimize.settings.violations("optimize.settings"));
        if self.optimize.theta_max_deg.is_empty() {
            out.push("optimize.theta_max_deg must not be empty".into());
        }
        for t in &self.optimize.theta_max_deg {
            check_range(&mut out, "optimize.theta_max_deg", t.to_radians(), 1.0, knee_max);
        }

        out.extend(self.transmission.violations("transmission"));
        out.extend(self.statics.layout.violations("statics.layout"));
        out.extend(self.statics.load.violations("statics.load"));
        out.extend(self.actuator.violations("actuator"));
        out.extend(self.plant.violations("plant"));

        let bench = &self.calibration.synthetic;
        out.extend(bench.planted.violations("calibration.synthetic.planted"));
        if bench.samples < 4 {
            out.push(format!("calibration.synthetic.samples must be >= 4 (got {})", bench.samples));
        }
        if !(bench.max_current > 0.0 && bench.max_current.is_finite()) {
            out.push(format!(
                "calibration.synthetic.max_current must be > 0 (got {})",
                bench.max_current
            ));
        }
        if !(bench.noise_sigma >= 0.0 && bench.noise_sigma.is_finite()) {
            out.push(format!(
                "calibration.synthetic.noise_sigma must be >= 0 (got {})",
                bench.noise_sigma
            ));
        }

        out.extend(self.gait.corpus.violations("gait.corpus"));
        out.extend(self.gait.detector.violations("gait.detector"));
        out.extend(self.gait.profile.violations("gait.profile"));
        out.extend(self.gait.timing.violations("gait.timing"));
        if self.gait.corpus.sample_rate > 0.0
            && 1.0 / self.gait.corpus.sample_rate > self.gait.detector.quiet_window / 4.0
        {
            out.push("gait.corpus.sample_rate too low: period must be <= quiet_window / 4".into());
        }

        for (name, items) in [("on_leg", &self.inertia.on_leg), ("distributed", &self.inertia.distributed)] {
            if items.is_empty() {
                out.push(format!("inertia.{name} must list at least one item"));
            }
            for m in items.iter() {
                if !(m.mass > 0.0 && m.mass.is_finite()) {
                    out.push(format!("inertia.{name}: mass of {:?} must be > 0", m.name));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations() {
            v if v.is_empty() => Ok(()),
            v => Err(Error::Validation(v)),
        }
    }

    /// Pretty JSON, the on-disk format.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Parses and validates a config document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::ConfigParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let compact = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(compact.as_bytes()))
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    RunConfig::from_json(&std::fs::read_to_string(path)?)
}

pub fn write_config(config: &RunConfig, path: &Path) -> Result<()> {
    std::fs::write(path, config.to_json() + "\n")?;
    Ok(())
}
