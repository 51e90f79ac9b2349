//! Exoskeleton-side mechanism models: the geared rolling knee joint, the
//! double-hinge frontal-plane linkage, the two-stage belt transmission and
//! point-mass inertia bookkeeping for mass layouts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{add, rotate, Transform2D, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RollingJointParams {
    /// Roller diameter, mm. Zero is a plain revolute joint.
    pub roller_diameter_d: f64,
}

impl Default for RollingJointParams {
    /// The built prototype used 64 mm rollers.
    fn default() -> Self {
        Self {
            roller_diameter_d: 64.0,
        }
    }
}

impl RollingJointParams {
    pub fn new(roller_diameter_d: f64) -> Result<Self> {
        let p = Self { roller_diameter_d };
        match p.violations("joint").as_slice() {
            [] => Ok(p),
            v => Err(Error::Validation(v.to_vec())),
        }
    }

    pub fn violations(&self, path: &str) -> Vec<String> {
        if self.roller_diameter_d >= 0.0 && self.roller_diameter_d.is_finite() {
            vec![]
        } else {
            vec![format!(
                "{path}.roller_diameter_d must be >= 0 (got {})",
                self.roller_diameter_d
            )]
        }
    }

    /// Pose of the calf-side roller frame relative to the thigh-side roller
    /// frame at relative rotation `phi`.
    ///
    /// Both frames have their origin at the initial contact point between
    /// the rollers; the thigh roller centre sits at `(0, D/2)`, the calf
    /// roller centre at `(0, -D/2)`. Gear-enforced rolling turns the line
    /// of centres by `phi / 2`, so the calf frame rotates by `phi` in total.
    pub fn pose(&self, phi: f64) -> Transform2D {
        let r = 0.5 * self.roller_diameter_d;
        if r == 0.0 {
            return Transform2D::rotation(phi);
        }
        let centre_calf = add([0.0, r], rotate(0.5 * phi, [0.0, -2.0 * r]));
        let rotated = rotate(phi, [0.0, -r]);
        Transform2D::new(phi, [centre_calf[0] - rotated[0], centre_calf[1] - rotated[1]])
    }

    /// Rolling contact point (thigh-roller frame) at relative rotation `phi`.
    pub fn contact_point(&self, phi: f64) -> Vec2 {
        let r = 0.5 * self.roller_diameter_d;
        add([0.0, r], rotate(0.5 * phi, [0.0, -r]))
    }
}

/// `|phi| <= 150 deg` is the mechanical range of the rolling joint.
pub fn rolling_joint_pose(params: &RollingJointParams, phi: f64) -> Result<Transform2D> {
    if !(phi.abs() <= 150f64.to_radians() + 1e-12) {
        return Err(Error::Domain(format!(
            "rolling joint angle {} deg outside +/-150 deg",
            phi.to_degrees()
        )));
    }
    Ok(params.pose(phi))
}

/// Frontal-plane hinge angles of the double-hinge calf linkage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HingeAngles {
    alpha: f64,
    beta: f64,
}

impl HingeAngles {
    /// Hard stops limit `|alpha - beta|` to 90 degrees.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !((alpha - beta).abs() <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::Argument(format!(
                "|alpha - beta| = {} deg exceeds the 90 deg hard stop",
                (alpha - beta).abs().to_degrees()
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Splits the sagittal assist torque passed through the double hinge into
/// the component about the knee axis and the twisting component on the calf.
pub fn hinge_decompose(tau_s: f64, angles: HingeAngles) -> (f64, f64) {
    let (s, c) = (angles.alpha - angles.beta).sin_cos();
    (tau_s * c, tau_s * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransmissionParams {
    /// First belt stage reduction.
    pub i1: f64,
    /// Second belt stage reduction.
    pub i2: f64,
    /// Motor peak torque, Nm.
    pub motor_peak_torque: f64,
    /// Motor rated torque, Nm.
    pub motor_rated_torque: f64,
}

/// Rated output figures of the prototype transmission.
pub mod reference {
    /// Stated total reduction (the stage ratios give 8.86 exactly).
    pub const STATED_TOTAL_REDUCTION: f64 = 8.85;
    pub const PEAK_OUTPUT_TORQUE_NM: f64 = 15.93;
    pub const RATED_OUTPUT_TORQUE_NM: f64 = 5.99;
    /// Inertia reduction about the body centre of mass from moving the
    /// motor and electronics proximally, kg m^2. No mass table is available.
    pub const INERTIA_REDUCTION_KG_M2: f64 = 0.074;
}

impl Default for TransmissionParams {
    /// Stage ratios of the prototype; motor torques back-derived from the
    /// rated output torques over the stated 8.85 reduction.
    fn default() -> Self {
        Self {
            i1: 4.0,
            i2: 3.43,
            motor_peak_torque: reference::PEAK_OUTPUT_TORQUE_NM / reference::STATED_TOTAL_REDUCTION,
            motor_rated_torque: reference::RATED_OUTPUT_TORQUE_NM
                / reference::STATED_TOTAL_REDUCTION,
        }
    }
}

impl TransmissionParams {
    pub fn violations(&self, path: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.i1 > 0.0 && self.i1.is_finite()) {
            out.push(format!("{path}.i1 must be > 0 (got {})", self.i1));
        }
        if !(self.i2 >= 0.0 && self.i2.is_finite()) {
            out.push(format!("{path}.i2 must be >= 0 (got {})", self.i2));
        }
        for (name, v) in [
            ("motor_peak_torque", self.motor_peak_torque),
            ("motor_rated_torque", self.motor_rated_torque),
        ] {
            if !v.is_finite() {
                out.push(format!("{path}.{name} must be finite"));
            }
        }
        out
    }

    /// Total reduction of the two belt stages; the second stage drives the
    /// calf roller through an effective lever arm of `(R2 + r2) / 2`.
    pub fn total_reduction(&self) -> f64 {
        self.i1 * (self.i2 + 1.0) / 2.0
    }

    pub fn output_torque(&self, motor_torque: f64) -> f64 {
        motor_torque * self.total_reduction()
    }

    pub fn peak_output_torque(&self) -> f64 {
        self.output_torque(self.motor_peak_torque)
    }

    pub fn rated_output_torque(&self) -> f64 {
        self.output_torque(self.motor_rated_torque)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassItem {
    pub name: String,
    /// kg
    pub mass: f64,
    /// Sagittal position relative to the body centre of mass, m.
    pub position: Vec2,
}

impl MassItem {
    pub fn new(name: impl Into<String>, mass: f64, position: Vec2) -> Self {
        Self {
            name: name.into(),
            mass,
            position,
        }
    }
}

/// Point-mass moment of inertia of `items` about `point`, kg m^2.
pub fn inertia_about_point(items: &[MassItem], point: Vec2) -> Result<f64> {
    if items.is_empty() {
        return Err(Error::Argument("inertia needs at least one mass item".into()));
    }
    if let Some(bad) = items.iter().find(|m| !(m.mass > 0.0)) {
        return Err(Error::Argument(format!("mass of {:?} must be > 0", bad.name)));
    }
    Ok(items
        .iter()
        .map(|m| {
            let dx = m.position[0] - point[0];
            let dy = m.position[1] - point[1];
            m.mass * (dx * dx + dy * dy)
        })
        .sum())
}

pub fn mass_centroid(items: &[MassItem]) -> Vec2 {
    let total: f64 = items.iter().map(|m| m.mass).sum();
    let x = items.iter().map(|m| m.mass * m.position[0]).sum::<f64>() / total;
    let y = items.iter().map(|m| m.mass * m.position[1]).sum::<f64>() / total;
    [x, y]
}

/// Assumed component masses for comparing an all-on-leg unit against the
/// distributed layout (motor at the proximal thigh, battery and controller
/// on the waist belt 50 mm below the centre of mass). The masses are
/// illustrative.
pub fn assumed_layouts() -> (Vec<MassItem>, Vec<MassItem>) {
    let leg_unit = [0.0, -0.40];
    let on_leg = vec![
        MassItem::new("motor", 0.45, leg_unit),
        MassItem::new("battery", 0.25, leg_unit),
        MassItem::new("controller", 0.10, leg_unit),
    ];
    let distributed = vec![
        MassItem::new("motor", 0.45, [0.0, -0.33]),
        MassItem::new("battery", 0.25, [0.0, -0.05]),
        MassItem::new("controller", 0.10, [0.0, -0.05]),
    ];
    (on_leg, distributed)
}
