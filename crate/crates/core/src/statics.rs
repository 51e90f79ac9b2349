//! Sagittal-plane statics of the leg and exoskeleton frames.
//!
//! Four rigid bodies share the knee point as origin: the exoskeleton thigh
//! and calf frames, and the human thigh and calf. The exoskeleton applies
//! its joint torque between its two frames and reaches the leg only through
//! the strap attachments. Unknowns are the attachment forces, the internal
//! forces at the exoskeleton joint and at the knee, and the biological knee
//! moment. Each body contributes force and moment balance, giving a 12-row
//! linear system `A x = b` whose rank decides whether a layout admits a
//! unique, no, or infinitely many force distributions.
//!
//! Sign conventions: segment axes `u` point from the knee towards the hip
//! (thigh) and towards the ankle (calf); the attachment normal is
//! `n = R(90 deg) u`. A positive attachment force pushes the exoskeleton
//! frame along `+n` (and the limb along `-n`). Positive knee torque extends
//! the knee: it acts counter-clockwise on the calf frame.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotate, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttachmentLayout {
    /// Knee to hip, m.
    pub thigh_length: f64,
    /// Knee to ankle, m.
    pub calf_length: f64,
    /// Attachment distances from the knee along the thigh, m.
    pub thigh_attachments: Vec<f64>,
    /// Attachment distances from the knee along the calf, m.
    pub calf_attachments: Vec<f64>,
    /// Knee flexion of the analysed posture, radians. The statics are
    /// degenerate for a perfectly straight leg (parallel segments).
    #[serde(rename = "knee_flexion_deg", with = "crate::geometry::serde_degrees")]
    pub knee_flexion: f64,
}

impl Default for AttachmentLayout {
    /// Distal thigh and proximal calf straps close to the knee, proximal
    /// thigh strap near the groin and distal calf strap above the ankle,
    /// for a mid-size adult in early stance.
    fn default() -> Self {
        Self {
            thigh_length: 0.44,
            calf_length: 0.43,
            thigh_attachments: vec![0.10, 0.36],
            calf_attachments: vec![0.10, 0.36],
            knee_flexion: 15f64.to_radians(),
        }
    }
}

impl AttachmentLayout {
    pub fn violations(&self, path: &str) -> Vec<String> {
        let mut out = Vec::new();
        for (name, len, at) in [
            ("thigh", self.thigh_length, &self.thigh_attachments),
            ("calf", self.calf_length, &self.calf_attachments),
        ] {
            if !(len > 0.0 && len.is_finite()) {
                out.push(format!("{path}.{name}_length must be > 0 (got {len})"));
                continue;
            }
            for &s in at {
                if !(s > 0.0 && s < len) {
                    out.push(format!(
                        "{path}.{name}_attachments: {s} m not strictly inside (0, {len}) m"
                    ));
                }
            }
            for (i, a) in at.iter().enumerate() {
                if at[..i].contains(a) {
                    out.push(format!("{path}.{name}_attachments: duplicate position {a} m"));
                }
            }
            if at.len() > 3 {
                out.push(format!("{path}.{name}_attachments: at most 3 supported"));
            }
        }
        if !self.knee_flexion.is_finite() {
            out.push(format!("{path}.knee_flexion must be finite"));
        }
        out
    }

    fn thigh_axis(&self) -> Vec2 {
        rotate(self.knee_flexion, [0.0, 1.0])
    }

    fn calf_axis(&self) -> Vec2 {
        [0.0, -1.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Thigh,
    Calf,
}

/// Extra external load on a human segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentLoad {
    pub segment: Segment,
    /// Point of application, distance from the knee along the segment, m.
    pub distance: f64,
    /// Force in the sagittal frame, N.
    pub force: Vec2,
    /// Pure moment, N m.
    #[serde(default)]
    pub torque: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadCase {
    /// Exoskeleton knee torque, N m, positive extending.
    pub knee_torque: f64,
    /// Compressive leg-spring force along the hip-ankle line, N
    /// (spring-loaded inverted pendulum stance loading).
    pub axial_load: f64,
    /// Additional loads; the whole set must be globally balanced or every
    /// layout is inconsistent.
    pub segment_loads: Vec<SegmentLoad>,
}

impl Default for LoadCase {
    /// Peak assistance with a body-weight leg load for an 80 kg user. The
    /// magnitudes are illustrative.
    fn default() -> Self {
        Self {
            knee_torque: 16.0,
            axial_load: 785.0,
            segment_loads: Vec::new(),
        }
    }
}

impl LoadCase {
    pub fn torque_only(knee_torque: f64) -> Self {
        Self {
            knee_torque,
            axial_load: 0.0,
            segment_loads: Vec::new(),
        }
    }

    pub fn violations(&self, path: &str) -> Vec<String> {
        let finite = self.knee_torque.is_finite()
            && self.axial_load.is_finite()
            && self.segment_loads.iter().all(|l| {
                l.distance.is_finite() && l.force.iter().all(|v| v.is_finite()) && l.torque.is_finite()
            });
        if finite {
            vec![]
        } else {
            vec![format!("{path}: load values must be finite")]
        }
    }

    fn scaled(&self, k: f64) -> Self {
        Self {
            knee_torque: k * self.knee_torque,
            axial_load: k * self.axial_load,
            segment_loads: self
                .segment_loads
                .iter()
                .map(|l| SegmentLoad {
                    force: [k * l.force[0], k * l.force[1]],
                    torque: k * l.torque,
                    ..l.clone()
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionForces {
    /// Perpendicular force at each thigh attachment, N.
    pub thigh_forces: Vec<f64>,
    /// Perpendicular force at each calf attachment, N.
    pub calf_forces: Vec<f64>,
    /// Force on the exoskeleton thigh frame from its calf frame, N.
    pub exo_joint_force: Vec2,
    /// Force on the human thigh from the calf at the knee, N.
    pub knee_joint_force: Vec2,
    /// Biological knee moment still required, N m (acts on the calf).
    pub biological_knee_torque: f64,
    /// `|A x - b| / max(|b|, 1)`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Unique,
    Inconsistent,
    Underdetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feasibility {
    pub verdict: Verdict,
    pub unknowns: usize,
    pub rank: usize,
    pub augmented_rank: usize,
}

/// Assembled statics system.
#[derive(Debug, Clone)]
pub struct StaticsSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    n_thigh: usize,
    n_calf: usize,
    tangential: bool,
}

// Row blocks: exo thigh, exo calf, human thigh, human calf; each Fx, Fy, M.
const EXO_THIGH: usize = 0;
const EXO_CALF: usize = 3;
const HUMAN_THIGH: usize = 6;
const HUMAN_CALF: usize = 9;

fn cross(p: Vec2, f: Vec2) -> f64 {
    p[0] * f[1] - p[1] * f[0]
}

impl StaticsSystem {
    /// Builds `A x = b`. With `tangential` each attachment also gets an
    /// unknown force along its segment axis.
    pub fn assemble(layout: &AttachmentLayout, load: &LoadCase, tangential: bool) -> Self {
        let (nt, nc) = (layout.thigh_attachments.len(), layout.calf_attachments.len());
        let n_att = nt + nc;
        let n = if tangential { 2 * n_att } else { n_att } + 5;
        let mut a = DMatrix::<f64>::zeros(12, n);
        let mut b = DVector::<f64>::zeros(12);

        let ut = layout.thigh_axis();
        let uc = layout.calf_axis();
        let nt_dir = rotate(std::f64::consts::FRAC_PI_2, ut);
        let nc_dir = rotate(std::f64::consts::FRAC_PI_2, uc);

        let attachments = layout
            .thigh_attachments
            .iter()
            .map(|&s| (s, ut, nt_dir, EXO_THIGH, HUMAN_THIGH))
            .chain(
                layout
                    .calf_attachments
                    .iter()
                    .map(|&s| (s, uc, nc_dir, EXO_CALF, HUMAN_CALF)),
            );
        for (k, (s, u, nrm, exo, human)) in attachments.enumerate() {
            let p = [s * u[0], s * u[1]];
            let mut columns = vec![(k, nrm)];
            if tangential {
                columns.push((n_att + k, u));
            }
            for (col, dir) in columns {
                for (row, sign) in [(exo, 1.0), (human, -1.0)] {
                    a[(row, col)] += sign * dir[0];
                    a[(row + 1, col)] += sign * dir[1];
                    a[(row + 2, col)] += sign * cross(p, dir);
                }
            }
        }

        let base = if tangential { 2 * n_att } else { n_att };
        let (exo_n, knee_n, bio) = (base, base + 2, base + 4);
        for c in 0..2 {
            a[(EXO_THIGH + c, exo_n + c)] = 1.0;
            a[(EXO_CALF + c, exo_n + c)] = -1.0;
            a[(HUMAN_THIGH + c, knee_n + c)] = 1.0;
            a[(HUMAN_CALF + c, knee_n + c)] = -1.0;
        }
        a[(HUMAN_THIGH + 2, bio)] = -1.0;
        a[(HUMAN_CALF + 2, bio)] = 1.0;

        // Known loads move to the right-hand side.
        b[EXO_THIGH + 2] += load.knee_torque;
        b[EXO_CALF + 2] -= load.knee_torque;

        let hip = [layout.thigh_length * ut[0], layout.thigh_length * ut[1]];
        let ankle = [layout.calf_length * uc[0], layout.calf_length * uc[1]];
        let line = [hip[0] - ankle[0], hip[1] - ankle[1]];
        let len = line[0].hypot(line[1]);
        let grf = [load.axial_load * line[0] / len, load.axial_load * line[1] / len];
        let mut external = vec![
            (HUMAN_CALF, ankle, grf, 0.0),
            (HUMAN_THIGH, hip, [-grf[0], -grf[1]], 0.0),
        ];
        for l in &load.segment_loads {
            let (row, u) = match l.segment {
                Segment::Thigh => (HUMAN_THIGH, ut),
                Segment::Calf => (HUMAN_CALF, uc),
            };
            external.push((row, [l.distance * u[0], l.distance * u[1]], l.force, l.torque));
        }
        for (row, p, f, m) in external {
            b[row] -= f[0];
            b[row + 1] -= f[1];
            b[row + 2] -= cross(p, f) + m;
        }

        Self {
            matrix: a,
            rhs: b,
            n_thigh: nt,
            n_calf: nc,
            tangential,
        }
    }

    pub fn unknowns(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn feasibility(&self) -> Feasibility {
        let rank = numerical_rank(&self.matrix);
        let bnorm = self.rhs.norm();
        let augmented_rank = if bnorm == 0.0 {
            rank
        } else {
            let scale = self.matrix.norm() / bnorm;
            let mut aug = self.matrix.clone().insert_column(self.matrix.ncols(), 0.0);
            aug.set_column(self.matrix.ncols(), &(&self.rhs * scale));
            numerical_rank(&aug)
        };
        let verdict = if augmented_rank > rank {
            Verdict::Inconsistent
        } else if rank < self.unknowns() {
            Verdict::Underdetermined
        } else {
            Verdict::Unique
        };
        Feasibility {
            verdict,
            unknowns: self.unknowns(),
            rank,
            augmented_rank,
        }
    }

    fn solve_unique(&self) -> Result<InteractionForces> {
        let fz = self.feasibility();
        if fz.verdict != Verdict::Unique {
            return Err(Error::Inconsistent {
                rank: fz.rank,
                augmented_rank: fz.augmented_rank,
                unknowns: fz.unknowns,
                deficiency: fz.unknowns - fz.rank + (fz.augmented_rank - fz.rank),
            });
        }
        let svd = self.matrix.clone().svd(true, true);
        let x = svd
            .solve(&self.rhs, 1e-12 * self.matrix.norm())
            .map_err(|e| Error::Argument(e.to_string()))?;
        let residual = (&self.matrix * &x - &self.rhs).norm() / self.rhs.norm().max(1.0);
        let n_att = self.n_thigh + self.n_calf;
        let base = if self.tangential { 2 * n_att } else { n_att };
        Ok(InteractionForces {
            thigh_forces: x.rows(0, self.n_thigh).iter().copied().collect(),
            calf_forces: x.rows(self.n_thigh, self.n_calf).iter().copied().collect(),
            exo_joint_force: [x[base], x[base + 1]],
            knee_joint_force: [x[base + 2], x[base + 3]],
            biological_knee_torque: x[base + 4],
            residual,
        })
    }
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let tol = 1e-10 * max.max(f64::MIN_POSITIVE);
    sv.iter().filter(|&&s| s > tol).count()
}

fn validate(layout: &AttachmentLayout, load: &LoadCase) -> Result<()> {
    let mut v = layout.violations("layout");
    v.extend(load.violations("load"));
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(v))
    }
}

/// Perpendicular-only attachment forces for a two-per-segment layout.
pub fn solve_attachment_forces(layout: &AttachmentLayout, load: &LoadCase) -> Result<InteractionForces> {
    validate(layout, load)?;
    if layout.thigh_attachments.len() != 2 || layout.calf_attachments.len() != 2 {
        return Err(Error::Argument(format!(
            "force solve needs exactly 2 attachments per segment (got {} thigh, {} calf)",
            layout.thigh_attachments.len(),
            layout.calf_attachments.len()
        )));
    }
    StaticsSystem::assemble(layout, load, false).solve_unique()
}

/// Rank verdict for any layout with up to three attachments per segment.
pub fn layout_feasibility(layout: &AttachmentLayout, load: &LoadCase, tangential: bool) -> Result<Feasibility> {
    validate(layout, load)?;
    Ok(StaticsSystem::assemble(layout, load, tangential).feasibility())
}

/// Solves at `k * load`; the statics are linear so forces scale with `k`.
pub fn solve_scaled(layout: &AttachmentLayout, load: &LoadCase, k: f64) -> Result<InteractionForces> {
    solve_attachment_forces(layout, &load.scaled(k))
}
