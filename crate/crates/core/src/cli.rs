//! Batch command line: one subcommand per analysis, all driven by a single
//! run config and writing deterministic files into `--out`.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::actuation::{calibrate, CalibrationSample};
use crate::chain::{optimize_d, sweep_slides, theta_grid};
use crate::config::{load_config, RunConfig};
use crate::error::{Error, Result};
use crate::gait::{detect_events, simulate_tracking, ImuSample};
use crate::geometry::serde_degrees::to_degrees_exact;
use crate::io::{num, read_calibration_csv, read_imu_csv, CsvSink, Stamp};
use crate::mechanism::inertia_about_point;
use crate::statics::{layout_feasibility, solve_attachment_forces, Verdict};
use crate::synth::{bench_samples, gait_corpus};

#[derive(Debug, Parser)]
#[command(name = "exoknee", version, about = "Knee exoskeleton design analyses")]
pub struct Cli {
    /// JSON run config; defaults are used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Overrides the flexion grid step of sweep and optimize.
    #[arg(long, global = true, value_name = "X")]
    pub grid_step_deg: Option<f64>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Slide displacements f, g over flexion for each configured roller diameter.
    Sweep,
    /// Misalignment factor over roller diameter and the optimal diameter.
    Optimize,
    /// Attachment interaction forces for the configured layout and load.
    Statics,
    /// Fit the torque-current model to bench samples.
    Calibrate,
    /// Stance detection and assist-torque tracking on an IMU stream.
    GaitSim,
    /// Inertia about the body centre of mass for two mass layouts.
    Inertia,
    /// Print the default config as JSON.
    PrintDefaults,
}

/// Config with the command-line overrides applied, validated.
pub fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(step) = cli.grid_step_deg {
        cfg.sweep.theta_step = step.to_radians();
        cfg.optimize.settings.theta_step = step.to_radians();
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    out: &'a Path,
    stamp: Stamp,
    quiet: bool,
}

impl Ctx<'_> {
    fn csv(&self, name: &str, header: &[&str]) -> Result<CsvSink> {
        CsvSink::create(&self.out.join(name), &self.stamp, header)
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    if cli.command == Command::PrintDefaults {
        println!("{}", RunConfig::default().to_json());
        return Ok(());
    }
    let cfg = effective_config(cli)?;
    std::fs::create_dir_all(&cli.out)?;
    let ctx = Ctx {
        cfg: &cfg,
        out: &cli.out,
        stamp: Stamp { config_digest: cfg.digest(), seed: cfg.seed },
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Sweep => sweep(&ctx),
        Command::Optimize => optimize(&ctx),
        Command::Statics => statics(&ctx),
        Command::Calibrate => calibration(&ctx),
        Command::GaitSim => gait_sim(&ctx),
        Command::Inertia => inertia(&ctx),
        Command::PrintDefaults => unreachable!(),
    }
}

fn sweep(ctx: &Ctx) -> Result<()> {
    let s = &ctx.cfg.sweep;
    let thetas = theta_grid(s.theta_max, s.theta_step)?;
    let mut out = ctx.csv("sweep.csv", &["D_mm", "theta_deg", "f_mm", "g_mm", "residual_mm"])?;
    for &d in &s.d_values {
        let states = sweep_slides(&ctx.cfg.chain.with_diameter(d), &thetas)?;
        for st in &states {
            out.row([
                num(d),
                num(to_degrees_exact(st.theta)),
                num(st.f),
                num(st.g),
                num(st.residual),
            ])?;
        }
        if let Some(last) = states.last() {
            ctx.say(format!("D = {d} mm: f = {:.3} mm, g = {:.3} mm at theta_max", last.f, last.g));
        }
    }
    out.finish()
}

fn optimize(ctx: &Ctx) -> Result<()> {
    let o = &ctx.cfg.optimize;
    let mut summary = ctx.csv(
        "optimize_summary.csv",
        &["theta_max_deg", "D_star_mm", "phi_star_mm", "phi_baseline_mm", "reduction", "phi_64mm"],
    )?;
    for &tmax in &o.theta_max_deg {
        let r = optimize_d(&ctx.cfg.chain, tmax.to_radians(), &o.settings)?;
        let mut scan = ctx.csv(&format!("optimize_theta{}.csv", num(tmax)), &["D_mm", "phi_mm"])?;
        for (d, p) in &r.scan {
            scan.row([num(*d), num(*p)])?;
        }
        scan.finish()?;
        summary.row([
            num(tmax),
            num(r.d_star),
            num(r.phi_star),
            num(r.phi_baseline),
            num(r.reduction),
            num(r.phi_at_prototype),
        ])?;
        ctx.say(format!(
            "theta_max = {tmax} deg: D* = {:.2} mm, phi* = {:.3} mm, baseline {:.3} mm, reduction {:.1} %",
            r.d_star,
            r.phi_star,
            r.phi_baseline,
            100.0 * r.reduction
        ));
    }
    summary.finish()
}

fn statics(ctx: &Ctx) -> Result<()> {
    let s = &ctx.cfg.statics;
    let fz = layout_feasibility(&s.layout, &s.load, false)?;
    match fz.verdict {
        Verdict::Unique => {}
        Verdict::Inconsistent => {
            return Err(Error::Inconsistent {
                rank: fz.rank,
                augmented_rank: fz.augmented_rank,
                unknowns: fz.unknowns,
                deficiency: fz.augmented_rank - fz.rank + fz.unknowns - fz.rank,
            })
        }
        Verdict::Underdetermined => {
            return Err(Error::Argument(format!(
                "layout is underdetermined: rank {} of {} unknowns",
                fz.rank, fz.unknowns
            )))
        }
    }
    let forces = solve_attachment_forces(&s.layout, &s.load)?;
    let mut out = ctx.csv("statics.csv", &["attachment", "position_m", "F_p_N"])?;
    for (seg, pos, f) in [
        ("thigh", &s.layout.thigh_attachments, &forces.thigh_forces),
        ("calf", &s.layout.calf_attachments, &forces.calf_forces),
    ] {
        for (i, (p, f)) in pos.iter().zip(f).enumerate() {
            out.row([format!("{seg}_{}", i + 1), num(*p), num(*f)])?;
        }
    }
    ctx.say(format!(
        "unique solution, residual {:.2e}; biological knee moment {:.3} N m",
        forces.residual, forces.biological_knee_torque
    ));
    out.finish()
}

#[derive(Serialize)]
struct CalibrationReport {
    k_nm_per_a: f64,
    t_f_nm: f64,
    r_squared: f64,
}

fn calibration(ctx: &Ctx) -> Result<()> {
    let c = &ctx.cfg.calibration;
    let samples: Vec<CalibrationSample> = match &c.samples_csv {
        Some(p) => read_calibration_csv(p)?,
        None => bench_samples(
            &c.synthetic.planted,
            c.synthetic.samples,
            c.synthetic.max_current,
            c.synthetic.noise_sigma,
            ctx.cfg.seed,
        )?,
    };
    let fit = calibrate(&samples)?;
    let report = CalibrationReport {
        k_nm_per_a: fit.model.k,
        t_f_nm: fit.model.t_f,
        r_squared: fit.r_squared,
    };
    std::fs::write(ctx.out.join("calibration.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    ctx.say(format!(
        "k = {:.4} Nm/A, T_f = {:.4} Nm, R^2 = {:.4} ({} samples)",
        report.k_nm_per_a,
        report.t_f_nm,
        report.r_squared,
        samples.len()
    ));
    Ok(())
}

fn gait_sim(ctx: &Ctx) -> Result<()> {
    let g = &ctx.cfg.gait;
    let samples: Vec<ImuSample> = match &g.imu_csv {
        Some(p) => read_imu_csv(p)?,
        None => gait_corpus(&g.corpus, g.detector.quiet_window, ctx.cfg.seed)?.samples,
    };
    let events = detect_events(&samples, &g.detector)?;
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let sim = simulate_tracking(&g.profile, &g.timing, &times, &events, &ctx.cfg.actuator, &ctx.cfg.plant)?;

    let mut ev = ctx.csv("gait_events.csv", &["t_s", "kind"])?;
    for e in &events {
        ev.row([num(e.t), e.kind.as_str().to_owned()])?;
    }
    ev.finish()?;
    let mut tr = ctx.csv("gait_trace.csv", &["t_s", "desired_nm", "actual_nm"])?;
    for ((t, d), a) in sim.trace.t.iter().zip(&sim.trace.desired).zip(&sim.trace.actual) {
        tr.row([num(*t), num(*d), num(*a)])?;
    }
    tr.finish()?;
    ctx.say(format!(
        "{} events over {} samples; stance tracking RMS error {:.4} Nm",
        events.len(),
        samples.len(),
        sim.rms_error
    ));
    Ok(())
}

fn inertia(ctx: &Ctx) -> Result<()> {
    let i = &ctx.cfg.inertia;
    let on_leg = inertia_about_point(&i.on_leg, i.pivot)?;
    let distributed = inertia_about_point(&i.distributed, i.pivot)?;
    let mut out = ctx.csv("inertia.csv", &["layout", "inertia_kg_m2"])?;
    out.row(["on_leg".to_owned(), num(on_leg)])?;
    out.row(["distributed".to_owned(), num(distributed)])?;
    out.row(["reduction".to_owned(), num(on_leg - distributed)])?;
    ctx.say(format!(
        "on-leg {on_leg:.4} kg m^2, distributed {distributed:.4} kg m^2, reduction {:.4} kg m^2",
        on_leg - distributed
    ));
    out.finish()
}

/// Machine-readable error report written to stderr by the binary.
pub fn error_json(e: &Error) -> String {
    serde_json::json!({ "error": e.kind(), "message": e.to_string() }).to_string()
}
