//! Independent reference computations used by the integration tests. They
//! share only the knee pose with the library and re-derive everything else
//! from first principles.
#![allow(dead_code)]

use exoknee::actuation::TorqueCurrentModel;
use exoknee::chain::{ChainConfig, ExoJoint};
use exoknee::gait::{EventKind, GaitEvent};

pub type P = [f64; 2];

/// Planar rigid transform `p -> R(a) p + t`, kept separate from the
/// library's own type.
#[derive(Clone, Copy, Debug)]
pub struct Rt {
    pub a: f64,
    pub t: P,
}

impl Rt {
    pub fn rot(a: f64) -> Rt {
        Rt { a, t: [0.0, 0.0] }
    }
    pub fn tr(x: f64, y: f64) -> Rt {
        Rt { a: 0.0, t: [x, y] }
    }
    pub fn ap(&self, p: P) -> P {
        let (s, c) = self.a.sin_cos();
        [c * p[0] - s * p[1] + self.t[0], s * p[0] + c * p[1] + self.t[1]]
    }
    /// `self` after `o`.
    pub fn then_after(&self, o: &Rt) -> Rt {
        Rt { a: self.a + o.a, t: self.ap(o.t) }
    }
    pub fn inv(&self) -> Rt {
        let r = Rt::rot(-self.a);
        let t = r.ap(self.t);
        Rt { a: -self.a, t: [-t[0], -t[1]] }
    }
}

/// Thigh roller frame relative to calf roller frame after relative
/// rotation `theta`: equal gears roll, the thigh centre orbits the calf
/// centre by `theta / 2` and the thigh body turns `theta`.
pub fn rolling_thigh_in_calf(d: f64, theta: f64) -> Rt {
    let r = d / 2.0;
    let half = theta / 2.0;
    let centre = [-2.0 * r * half.sin(), -r + 2.0 * r * half.cos()];
    // thigh centre sits at (0, r) in its own frame
    let (s, c) = theta.sin_cos();
    let body = [-s * r, c * r];
    Rt { a: theta, t: [centre[0] - body[0], centre[1] - body[1]] }
}

fn femur(cfg: &ChainConfig, theta: f64) -> Rt {
    let f = cfg.knee.femur_pose(theta).unwrap();
    Rt { a: f.angle, t: f.translation }
}

fn exo_path(cfg: &ChainConfig, theta: f64) -> Rt {
    let j = match cfg.joint {
        ExoJoint::Rolling { roller_diameter_d } => rolling_thigh_in_calf(roller_diameter_d, theta),
        ExoJoint::KneeReplica => femur(cfg, theta),
    };
    let o = cfg.alignment_offset;
    let a = Rt { a: o.angle, t: o.translation };
    a.then_after(&j).then_after(&a.inv())
}

fn mismatch_with(fe: &Rt, path: &Rt, f: f64, g: f64, anchor: P) -> P {
    let thigh = fe.ap([anchor[0], anchor[1] + f]);
    let p = path.ap(anchor);
    [thigh[0] - p[0], thigh[1] - (p[1] + g)]
}

/// Loop mismatch at a thigh anchor for slides `(f, g)`.
pub fn mismatch(cfg: &ChainConfig, theta: f64, f: f64, g: f64, anchor: P) -> P {
    mismatch_with(&femur(cfg, theta), &exo_path(cfg, theta), f, g, anchor)
}

/// The mismatch is affine in `(f, g)`; solve it exactly.
pub fn slides_exact(cfg: &ChainConfig, theta: f64) -> (f64, f64) {
    slides_exact_with(cfg, theta, &femur(cfg, theta))
}

fn slides_exact_with(cfg: &ChainConfig, theta: f64, fe: &Rt) -> (f64, f64) {
    let a = cfg.thigh_anchors[0];
    let path = match cfg.joint {
        ExoJoint::KneeReplica => exo_path(cfg, theta),
        ExoJoint::Rolling { roller_diameter_d } => {
            let o = cfg.alignment_offset;
            let al = Rt { a: o.angle, t: o.translation };
            al.then_after(&rolling_thigh_in_calf(roller_diameter_d, theta)).then_after(&al.inv())
        }
    };
    let d = mismatch_with(fe, &path, 0.0, 0.0, a);
    let u = [-fe.a.sin(), fe.a.cos()];
    // d + f u - g e_y = 0
    let f = -d[0] / u[0];
    let g = d[1] + f * u[1];
    (f, g)
}

/// Brute-force minimiser of |mismatch| on successively finer square grids.
pub fn slides_grid_search(cfg: &ChainConfig, theta: f64) -> (f64, f64) {
    let anchor = cfg.thigh_anchors[0];
    let (fe, path) = (femur(cfg, theta), exo_path(cfg, theta));
    let cost = |f: f64, g: f64| {
        let r = mismatch_with(&fe, &path, f, g, anchor);
        r[0] * r[0] + r[1] * r[1]
    };
    let (mut cf, mut cg) = (0.0, 0.0);
    let mut step = 2.0;
    let mut half = 100;
    for _ in 0..5 {
        let mut best = (f64::INFINITY, cf, cg);
        for i in -half..=half {
            for j in -half..=half {
                let (f, g) = (cf + i as f64 * step, cg + j as f64 * step);
                let c = cost(f, g);
                if c < best.0 {
                    best = (c, f, g);
                }
            }
        }
        cf = best.1;
        cg = best.2;
        step /= 10.0;
        half = 15;
    }
    (cf, cg)
}

/// 1-degree grid from 5 degrees to `theta_max` inclusive with the knee
/// poses on it.
fn poses(cfg: &ChainConfig, theta_max: f64) -> Vec<(f64, Rt)> {
    let n = ((theta_max.to_degrees() - 5.0) + 1e-9).floor() as usize;
    let mut ts: Vec<f64> = (0..=n).map(|i| (5.0 + i as f64).to_radians()).collect();
    if theta_max - ts[n] > 1e-9 {
        ts.push(theta_max);
    } else {
        ts[n] = theta_max;
    }
    ts.into_iter().map(|t| (t, femur(cfg, t))).collect()
}

fn phi_on(cfg: &ChainConfig, d: f64, poses: &[(f64, Rt)]) -> f64 {
    let c = cfg.with_diameter(d);
    poses
        .iter()
        .map(|(t, fe)| {
            let (f, g) = slides_exact_with(&c, *t, fe);
            f.hypot(g)
        })
        .fold(0.0, f64::max)
}

pub fn phi_exact(cfg: &ChainConfig, d: f64, theta_max: f64) -> f64 {
    phi_on(cfg, d, &poses(cfg, theta_max))
}

/// Dense scan of `D` at `step` mm over [0, 150]: `(D*, phi*, phi(0))`.
pub fn dense_optimum(cfg: &ChainConfig, theta_max: f64, step: f64) -> (f64, f64, f64) {
    let ps = poses(cfg, theta_max);
    let n = (150.0 / step).round() as usize;
    let mut best = (0.0, f64::INFINITY);
    for i in 0..=n {
        let d = i as f64 * step;
        let p = phi_on(cfg, d, &ps);
        if p < best.1 {
            best = (d, p);
        }
    }
    (best.0, best.1, phi_on(cfg, 0.0, &ps))
}

/// Piecewise-linear lookup on `(x, y)` knots.
pub fn interp(knots: &[[f64; 2]], x: f64) -> f64 {
    for w in knots.windows(2) {
        if x <= w[1][0] {
            return w[0][1] + (w[1][1] - w[0][1]) * (x - w[0][0]) / (w[1][0] - w[0][0]);
        }
    }
    knots[knots.len() - 1][1]
}

/// Assist tracking re-implemented: trailing-3 stance-duration estimate
/// initialised at 0.6 s, desired torque from the default curve at 40% of
/// 80 kg capped at 16 Nm, deadband feedforward, and the current loop
/// integrated with RK4 sub-steps. Returns the stance-sample RMS error.
pub fn tracking_rms_reference(
    times: &[f64],
    events: &[GaitEvent],
    model: &TorqueCurrentModel,
    tau: f64,
    substeps: usize,
) -> f64 {
    let curve = exoknee::gait::DEFAULT_CURVE;
    let torque = |i: f64| {
        let e = model.t_f / model.k;
        if i > e {
            model.k * i - model.t_f
        } else if i < -e {
            model.k * i + model.t_f
        } else {
            0.0
        }
    };
    let command = |t: f64| {
        if t == 0.0 {
            0.0
        } else {
            (t + model.t_f * t.signum()) / model.k
        }
    };
    let mut recent: Vec<f64> = Vec::new();
    let mut start: Option<f64> = None;
    let mut k = 0;
    let mut i_now = 0.0;
    let mut prev = None;
    let (mut sq, mut n) = (0.0, 0usize);
    for &t in times {
        while k < events.len() && events[k].t <= t {
            match events[k].kind {
                EventKind::StanceStart => start = Some(events[k].t),
                EventKind::StanceEnd => {
                    if let Some(s) = start.take() {
                        recent.push(events[k].t - s);
                    }
                }
            }
            k += 1;
        }
        let expected = if recent.is_empty() {
            0.6
        } else {
            let tail = &recent[recent.len().saturating_sub(3)..];
            tail.iter().sum::<f64>() / tail.len() as f64
        };
        let desired = match start {
            Some(s) => (interp(&curve, ((t - s) / expected).clamp(0.0, 1.0)) * 0.4 * 80.0).min(16.0),
            None => 0.0,
        };
        if let Some(p) = prev {
            let cmd = command(desired);
            let h = (t - p) / substeps as f64;
            let rhs = |i: f64| (cmd - i) / tau;
            for _ in 0..substeps {
                let k1 = rhs(i_now);
                let k2 = rhs(i_now + 0.5 * h * k1);
                let k3 = rhs(i_now + 0.5 * h * k2);
                let k4 = rhs(i_now + h * k3);
                i_now += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
        prev = Some(t);
        if start.is_some() {
            sq += (desired - torque(i_now)).powi(2);
            n += 1;
        }
    }
    (sq / n as f64).sqrt()
}
