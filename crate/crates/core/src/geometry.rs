//! Planar rigid transforms.
//!
//! Sagittal frame convention used across the crate: `+x` anterior, `+y`
//! proximal along the segment, counter-clockwise rotation positive. Knee
//! flexion is a positive rotation of the femur relative to the tibia.
//! Angles are radians; lengths are whatever unit the caller uses
//! consistently (millimeters for the kinematic chain).

use serde::{Deserialize, Serialize};

pub type Vec2 = [f64; 2];

#[inline]
pub fn rotate(angle: f64, p: Vec2) -> Vec2 {
    let (s, c) = angle.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

#[inline]
pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a % two_pi;
    if r <= -std::f64::consts::PI {
        r += two_pi;
    } else if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Serde helper writing radian fields as degrees. Serialisation picks the
/// degree value that converts back to the identical radian value whenever
/// one exists nearby, so written configs reload bit-exactly.
pub mod serde_degrees {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn to_degrees_exact(rad: f64) -> f64 {
        let d = rad.to_degrees();
        if !d.is_finite() {
            return d;
        }
        // prefer the shortest decimal, so 120 deg is written as 120
        for digits in 0..=12 {
            let scale = 10f64.powi(digits);
            let c = (d * scale).round() / scale;
            if c.to_radians() == rad {
                return c;
            }
        }
        if d.to_radians() == rad {
            return d;
        }
        let mut lo = d;
        let mut hi = d;
        for _ in 0..8 {
            lo = lo.next_down();
            hi = hi.next_up();
            for c in [lo, hi] {
                if c.to_radians() == rad {
                    return c;
                }
            }
        }
        d
    }

    pub fn serialize<S: Serializer>(rad: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(to_degrees_exact(*rad))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(f64::deserialize(d)?.to_radians())
    }
}

/// Rotation followed by translation: `p -> R(angle) p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transform2D {
    #[serde(rename = "angle_deg", with = "serde_degrees")]
    pub angle: f64,
    pub translation: Vec2,
}

impl Default for Transform2D {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform2D {
    pub const fn identity() -> Self {
        Self {
            angle: 0.0,
            translation: [0.0, 0.0],
        }
    }

    pub const fn new(angle: f64, translation: Vec2) -> Self {
        Self { angle, translation }
    }

    pub const fn rotation(angle: f64) -> Self {
        Self::new(angle, [0.0, 0.0])
    }

    pub const fn translation(x: f64, y: f64) -> Self {
        Self::new(0.0, [x, y])
    }

    /// Rotation by `angle` about `pivot`.
    pub fn rotation_about(angle: f64, pivot: Vec2) -> Self {
        Self::new(angle, sub(pivot, rotate(angle, pivot)))
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        add(rotate(self.angle, p), self.translation)
    }

    /// Applies only the rotation part (for direction vectors).
    pub fn apply_vector(&self, v: Vec2) -> Vec2 {
        rotate(self.angle, v)
    }

    /// `self.compose(&b)` applies `b` first, then `self`.
    pub fn compose(&self, b: &Transform2D) -> Transform2D {
        Transform2D {
            angle: self.angle + b.angle,
            translation: self.apply(b.translation),
        }
    }

    pub fn inverse(&self) -> Transform2D {
        let r = rotate(-self.angle, self.translation);
        Transform2D {
            angle: -self.angle,
            translation: [-r[0], -r[1]],
        }
    }

    /// Angle difference (wrapped) and translation distance between two poses.
    pub fn distance(&self, other: &Transform2D) -> (f64, f64) {
        (
            wrap_angle(self.angle - other.angle).abs(),
            norm(sub(self.translation, other.translation)),
        )
    }
}

/// Instantaneous centre of rotation of the motion `a -> b` of one body,
/// both poses expressed in the same fixed frame. Returns `None` for a pure
/// translation.
pub fn icr_between(a: &Transform2D, b: &Transform2D) -> Option<Vec2> {
    // Relative displacement D = b * a^-1 maps the body's points at `a` onto
    // their positions at `b`; its fixed point is the pole of the motion.
    let d = b.compose(&a.inverse());
    let dtheta = wrap_angle(d.angle);
    if dtheta.abs() < 1e-15 {
        return None;
    }
    // Solve (I - R) c = t.
    let (s, c) = dtheta.sin_cos();
    let m00 = 1.0 - c;
    let m01 = s;
    let m10 = -s;
    let m11 = 1.0 - c;
    let det = m00 * m11 - m01 * m10;
    let t = d.translation;
    Some([
        (m11 * t[0] - m01 * t[1]) / det,
        (-m10 * t[0] + m00 * t[1]) / det,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        (a[0] - b[0]).abs() < tol && (a[1] - b[1]).abs() < tol
    }

    #[test]
    fn compose_identity() {
        let i = Transform2D::identity();
        assert_eq!(i.compose(&i), i);
    }

    #[test]
    fn compose_quarter_turns() {
        let r = Transform2D::rotation(FRAC_PI_2);
        let rr = r.compose(&r);
        assert!((rr.angle - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(rr.translation, [0.0, 0.0]);
    }

    #[test]
    fn compose_order_applies_right_first() {
        let rot = Transform2D::rotation(FRAC_PI_2);
        let tr = Transform2D::translation(1.0, 0.0);
        // translate then rotate
        let p = rot.compose(&tr).apply([0.0, 0.0]);
        assert!(close(p, [0.0, 1.0], 1e-15));
    }

    #[test]
    fn apply_cases() {
        assert_eq!(Transform2D::identity().apply([1.0, 2.0]), [1.0, 2.0]);
        assert!(close(
            Transform2D::rotation(FRAC_PI_2).apply([1.0, 0.0]),
            [0.0, 1.0],
            1e-15
        ));
        assert_eq!(Transform2D::translation(3.0, 4.0).apply([0.0, 0.0]), [3.0, 4.0]);
    }

    #[test]
    fn icr_of_rotation_about_pivot() {
        let a = Transform2D::identity();
        let b = Transform2D::rotation_about(0.3, [2.0, -1.0]);
        let c = icr_between(&a, &b).unwrap();
        assert!(close(c, [2.0, -1.0], 1e-12));
        assert!(icr_between(&a, &Transform2D::translation(1.0, 0.0)).is_none());
    }

    fn any_transform() -> impl Strategy<Value = Transform2D> {
        (-10.0..10.0f64, -500.0..500.0f64, -500.0..500.0f64)
            .prop_map(|(a, x, y)| Transform2D::new(a, [x, y]))
    }

    proptest! {
        #[test]
        fn inverse_composes_to_identity(t in any_transform()) {
            let id = t.compose(&t.inverse());
            prop_assert!(id.angle.abs() < 1e-12);
            prop_assert!(norm(id.translation) < 1e-9);
        }

        #[test]
        fn composition_is_associative(a in any_transform(), b in any_transform(), c in any_transform()) {
            let l = a.compose(&b).compose(&c);
            let r = a.compose(&b.compose(&c));
            prop_assert!((l.angle - r.angle).abs() < 1e-12);
            prop_assert!(norm(sub(l.translation, r.translation)) < 1e-9);
        }

        #[test]
        fn apply_round_trip(t in any_transform(), x in -1e3..1e3f64, y in -1e3..1e3f64) {
            let back = t.inverse().apply(t.apply([x, y]));
            prop_assert!(close(back, [x, y], 1e-9));
        }

        #[test]
        fn rotation_preserves_norm(a in -10.0..10.0f64, x in -1e3..1e3f64, y in -1e3..1e3f64) {
            let p = [x, y];
            let n = norm(p);
            prop_assume!(n > 1e-6);
            let q = Transform2D::rotation(a).apply(p);
            prop_assert!(((norm(q) - n) / n).abs() < 1e-12);
        }

        #[test]
        fn degrees_reload_exactly(d in -720.0..720.0f64) {
            let r = d.to_radians();
            let written = serde_degrees::to_degrees_exact(r);
            prop_assert_eq!(written.to_radians(), r);
        }

        #[test]
        fn whole_degrees_are_written_whole(d in -720i32..720) {
            prop_assert_eq!(serde_degrees::to_degrees_exact(f64::from(d).to_radians()), f64::from(d));
        }
    }

    #[test]
    fn transform_serialises_in_degrees() {
        let t = Transform2D::new(std::f64::consts::FRAC_PI_2, [1.0, 2.0]);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"angle_deg":90.0,"translation":[1.0,2.0]}"#);
        let back: Transform2D = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
