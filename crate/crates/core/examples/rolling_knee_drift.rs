//! Slide drift of the thigh and calf attachments over flexion for a few
//! roller diameters, compared with a joint that copies the knee exactly.
//!
//! cargo run --example rolling_knee_drift

use exoknee::chain::{sweep_slides, theta_grid, ChainConfig};

fn main() -> exoknee::Result<()> {
    let base = ChainConfig::default();
    let thetas = theta_grid(120f64.to_radians(), 15f64.to_radians())?;

    for d in [0.0, 45.0, 64.0, 90.0] {
        println!("D = {d} mm");
        println!("  theta   f (mm)   g (mm)");
        for s in sweep_slides(&base.with_diameter(d), &thetas)? {
            println!("  {:5.0} {:8.2} {:8.2}", s.theta.to_degrees(), s.f, s.g);
        }
    }

    let matched = sweep_slides(&ChainConfig::matched(base.knee), &thetas)?;
    let worst = matched.iter().map(|s| s.f.abs().max(s.g.abs())).fold(0.0, f64::max);
    println!("matched chain: max |slide| = {worst:.1e} mm");
    Ok(())
}
