//! One-degree-of-freedom biological knee: a femoral condyle ellipse rolling
//! and sliding on a flat tibial plateau.
//!
//! The tibia frame has its origin at the reference contact point, the
//! plateau along `y = 0` and the shank extending towards `-y`. At zero
//! flexion the femur frame coincides with it, with the condyle ellipse
//! centred at `(0, b)` and its semi-major axis along `x`.
//!
//! At flexion `theta` the ellipse point whose normal would face the plateau
//! lies an arc length `s(theta)` from the initial contact. That advance is
//! split between rolling and sliding with the sliding ratio
//! `rho = rolled / slid`: the rolled part `s_r = s * rho / (1 + rho)` moves
//! the contact along both surfaces, the slid part does not move the tibial
//! contact. The femur pose is the rotation by `theta` that carries the
//! condyle point at arc `s_r` onto the plateau point `(-s_r, 0)`. Pure
//! rolling of a circle reproduces the rolling-wheel pose exactly; pure
//! sliding is a rotation about the initial contact point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Transform2D, Vec2};
use crate::numeric::integrate;

const ARC_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KneeModelParams {
    /// Semi-major axis of the condyle ellipse, mm (anterior-posterior).
    pub semi_major_a: f64,
    /// Semi-minor axis, mm.
    pub semi_minor_b: f64,
    /// Rolled distance over slid distance. `0` is pure sliding,
    /// `f64::INFINITY` pure rolling (written as `"inf"` in config files).
    #[serde(with = "ratio_serde")]
    pub sliding_ratio_rho: f64,
    /// Largest flexion the model is evaluated at, radians.
    #[serde(rename = "theta_max_deg", with = "crate::geometry::serde_degrees")]
    pub theta_max: f64,
}

impl Default for KneeModelParams {
    /// Repository defaults for a mid-size adult condyle; nothing here was
    /// measured.
    fn default() -> Self {
        Self {
            semi_major_a: 32.0,
            semi_minor_b: 25.0,
            sliding_ratio_rho: 2.0,
            theta_max: 150f64.to_radians(),
        }
    }
}

impl KneeModelParams {
    pub fn circle(radius: f64, rho: f64) -> Self {
        Self {
            semi_major_a: radius,
            semi_minor_b: radius,
            sliding_ratio_rho: rho,
            ..Self::default()
        }
    }

    pub fn violations(&self, path: &str) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.semi_minor_b > 0.0 && self.semi_minor_b.is_finite()) {
            out.push(format!("{path}.semi_minor_b must be > 0 (got {})", self.semi_minor_b));
        }
        if !(self.semi_major_a >= self.semi_minor_b && self.semi_major_a.is_finite()) {
            out.push(format!(
                "{path}.semi_major_a must be >= semi_minor_b (got {} < {})",
                self.semi_major_a, self.semi_minor_b
            ));
        }
        if !(self.sliding_ratio_rho >= 0.0) {
            out.push(format!(
                "{path}.sliding_ratio_rho must be >= 0 (got {})",
                self.sliding_ratio_rho
            ));
        }
        if !(self.theta_max > 0.0 && self.theta_max <= 150f64.to_radians() + 1e-12) {
            out.push(format!(
                "{path}.theta_max must be in (0, 150] deg (got {} deg)",
                self.theta_max.to_degrees()
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations("knee");
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// Fraction of the condyle advance that is rolled.
    fn rolling_fraction(&self) -> f64 {
        if self.sliding_ratio_rho.is_infinite() {
            1.0
        } else {
            self.sliding_ratio_rho / (1.0 + self.sliding_ratio_rho)
        }
    }

    fn speed(&self, u: f64) -> f64 {
        let (s, c) = u.sin_cos();
        (self.semi_major_a * c).hypot(self.semi_minor_b * s)
    }

    /// Ellipse parameter (measured from the bottom point, positive
    /// posteriorly) of the point whose normal faces the plateau at `theta`.
    pub fn tangency_parameter(&self, theta: f64) -> f64 {
        (self.semi_major_a * theta.sin()).atan2(self.semi_minor_b * theta.cos())
    }

    /// Condyle arc length from the reference contact to parameter `u`.
    pub fn arc_length(&self, u: f64) -> f64 {
        integrate(|x| self.speed(x), 0.0, u, ARC_TOL)
    }

    /// Inverse of [`arc_length`](Self::arc_length) on `[0, u_hi]`.
    fn parameter_at_arc(&self, s: f64, u_hi: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, u_hi);
        let mut u = (s / (0.5 * (self.semi_major_a + self.semi_minor_b))).clamp(lo, hi);
        for _ in 0..60 {
            let err = self.arc_length(u) - s;
            if err.abs() < 1e-12 {
                break;
            }
            if err > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let next = u - err / self.speed(u);
            u = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        }
        u
    }

    /// Condyle point at ellipse parameter `u`, femur frame.
    pub fn condyle_point(&self, u: f64) -> Vec2 {
        let (s, c) = u.sin_cos();
        [-self.semi_major_a * s, self.semi_minor_b * (1.0 - c)]
    }

    /// Rolled and slid contact distances accumulated from 0 to `theta`.
    pub fn contact_split(&self, theta: f64) -> (f64, f64) {
        let total = self.arc_length(self.tangency_parameter(theta));
        let rolled = total * self.rolling_fraction();
        (rolled, total - rolled)
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        if theta.is_nan() || theta < 0.0 || theta > self.theta_max + 1e-12 {
            return Err(Error::Domain(format!(
                "knee angle {} deg outside [0, {}] deg",
                theta.to_degrees(),
                self.theta_max.to_degrees()
            )));
        }
        Ok(())
    }

    /// Pose of the femur frame relative to the tibia frame at flexion `theta`.
    pub fn femur_pose(&self, theta: f64) -> Result<Transform2D> {
        self.check_theta(theta)?;
        Ok(self.femur_pose_unchecked(theta))
    }

    pub(crate) fn femur_pose_unchecked(&self, theta: f64) -> Transform2D {
        let u_tan = self.tangency_parameter(theta);
        let rolled = self.arc_length(u_tan) * self.rolling_fraction();
        let u = if self.rolling_fraction() == 1.0 {
            u_tan
        } else {
            self.parameter_at_arc(rolled, u_tan)
        };
        let q = self.condyle_point(u);
        let r = crate::geometry::rotate(theta, q);
        Transform2D::new(theta, [-rolled - r[0], -r[1]])
    }

    /// Derivative of the femur pose translation with respect to `theta`
    /// (the angle rate is 1).
    pub fn femur_translation_rate(&self, theta: f64) -> Vec2 {
        let (a, b) = (self.semi_major_a, self.semi_minor_b);
        let (st, ct) = theta.sin_cos();
        let u_tan = self.tangency_parameter(theta);
        let du_tan = a * b / ((b * ct).powi(2) + (a * st).powi(2));
        let rolled_rate = self.rolling_fraction() * self.speed(u_tan) * du_tan;
        let u = if self.rolling_fraction() == 1.0 {
            u_tan
        } else {
            self.parameter_at_arc(self.arc_length(u_tan) * self.rolling_fraction(), u_tan)
        };
        let du = if rolled_rate == 0.0 { 0.0 } else { rolled_rate / self.speed(u) };
        let q = crate::geometry::rotate(theta, self.condyle_point(u));
        let (su, cu) = u.sin_cos();
        let dq = crate::geometry::rotate(theta, [-a * cu * du, b * su * du]);
        // t = (-s_r, 0) - R q  =>  t' = (-s_r', 0) - J R q - R q' u'
        [-rolled_rate + q[1] - dq[0], -q[0] - dq[1]]
    }

    /// Instantaneous centre of rotation (tibia frame) at each interior grid
    /// point: the point of the femur with zero velocity, `t + J t'`.
    pub fn icr_trajectory(&self, thetas: &[f64]) -> Result<Vec<Vec2>> {
        if thetas.len() < 3 {
            return Err(Error::Argument(format!(
                "ICR trajectory needs at least 3 grid points, got {}",
                thetas.len()
            )));
        }
        if thetas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument("theta grid must be strictly increasing".into()));
        }
        for &t in thetas {
            self.check_theta(t)?;
        }
        Ok(thetas[1..thetas.len() - 1]
            .iter()
            .map(|&th| {
                let t = self.femur_pose_unchecked(th).translation;
                let v = self.femur_translation_rate(th);
                [t[0] - v[1], t[1] + v[0]]
            })
            .collect())
    }
}

#[cfg(test)]
/// ICR at the middle pose from the central-difference velocity of the
/// neighbouring poses.
pub(crate) fn icr_from_difference(prev: &Transform2D, mid: &Transform2D, next: &Transform2D) -> Vec2 {
    let dangle = next.angle - prev.angle;
    let dt = crate::geometry::sub(next.translation, prev.translation);
    [
        mid.translation[0] - dt[1] / dangle,
        mid.translation[1] + dt[0] / dangle,
    ]
}

mod ratio_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(de::Error::custom(format!(
                "expected a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::norm;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn reference_pose_is_identity() {
        let p = KneeModelParams::default();
        assert_eq!(p.femur_pose(0.0).unwrap(), Transform2D::identity());
    }

    #[test]
    fn rolling_circle_matches_wheel_formula() {
        let r = 30.0;
        let p = KneeModelParams::circle(r, f64::INFINITY);
        for d in [10.0, 45.0, 90.0, 130.0] {
            let th = deg(d);
            let pose = p.femur_pose(th).unwrap();
            // wheel centre starts at (0, r) and translates by -r*theta
            let centre = pose.apply([0.0, r]);
            assert!((centre[0] + r * th).abs() < 1e-8, "{centre:?}");
            assert!((centre[1] - r).abs() < 1e-8);
            assert!((pose.angle - th).abs() < 1e-15);
        }
    }

    #[test]
    fn pure_sliding_rotates_about_initial_contact() {
        let p = KneeModelParams {
            sliding_ratio_rho: 0.0,
            ..Default::default()
        };
        let pose = p.femur_pose(deg(70.0)).unwrap();
        assert!(norm(pose.translation) < 1e-12);
        let grid: Vec<f64> = (0..=30).map(|i| deg(4.0 * i as f64)).collect();
        let icr = p.icr_trajectory(&grid).unwrap();
        for c in &icr {
            assert!(norm(*c) < 1e-6, "{c:?}");
        }
    }

    #[test]
    fn rolling_circle_icr_on_plateau() {
        let p = KneeModelParams::circle(28.0, f64::INFINITY);
        let grid: Vec<f64> = (0..=40).map(|i| deg(3.0 * i as f64)).collect();
        for c in p.icr_trajectory(&grid).unwrap() {
            assert!(c[1].abs() < 1e-6, "{c:?}");
        }
    }

    #[test]
    fn icr_matches_half_step_difference() {
        let p = KneeModelParams::default();
        let h = deg(1.0);
        let grid: Vec<f64> = (0..=120).map(|i| i as f64 * h).collect();
        let icr = p.icr_trajectory(&grid).unwrap();
        for (i, c) in icr.iter().enumerate() {
            let th = grid[i + 1];
            let a = p.femur_pose(th - h / 2.0).unwrap();
            let m = p.femur_pose(th).unwrap();
            let b = p.femur_pose(th + h / 2.0).unwrap();
            let o = icr_from_difference(&a, &m, &b);
            assert!(norm(crate::geometry::sub(*c, o)) < 0.05, "theta {th}: {c:?} vs {o:?}");
        }
    }

    #[test]
    fn rolled_over_slid_equals_ratio() {
        for rho in [0.5, 2.0, 7.0] {
            let p = KneeModelParams {
                sliding_ratio_rho: rho,
                ..Default::default()
            };
            let (r1, s1) = p.contact_split(deg(20.0));
            let (r2, s2) = p.contact_split(deg(95.0));
            let ratio = (r2 - r1) / (s2 - s1);
            assert!(((ratio - rho) / rho).abs() < 1e-6);
        }
    }

    #[test]
    fn pose_is_continuous() {
        let p = KneeModelParams::default();
        let h = 1e-4;
        for d in [0.0, 30.0, 89.99, 90.0, 120.0] {
            let th = deg(d);
            let a = p.femur_pose(th).unwrap();
            let b = p.femur_pose(th + h).unwrap();
            let (da, dt) = a.distance(&b);
            assert!(da < 2.0 * h);
            assert!(dt < 200.0 * h, "translation jump {dt} at {d}");
        }
    }

    #[test]
    fn out_of_range_angle_is_domain_error() {
        let p = KneeModelParams {
            theta_max: deg(120.0),
            ..Default::default()
        };
        assert!(matches!(p.femur_pose(-0.1), Err(Error::Domain(_))));
        assert!(matches!(p.femur_pose(deg(121.0)), Err(Error::Domain(_))));
        assert!(matches!(p.icr_trajectory(&[0.0, 0.1]), Err(Error::Argument(_))));
    }

    #[test]
    fn ratio_serialises_infinity_as_string() {
        let p = KneeModelParams::circle(20.0, f64::INFINITY);
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"inf\""));
        let back: KneeModelParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn violations_are_all_reported() {
        let p = KneeModelParams {
            semi_major_a: 10.0,
            semi_minor_b: 20.0,
            sliding_ratio_rho: -1.0,
            theta_max: deg(170.0),
        };
        assert_eq!(p.violations("knee").len(), 3);
    }
}
