//! Misalignment factor against roller diameter and its minimiser for two
//! flexion ranges.

use exoknee::chain::{optimize_d, ChainConfig, OptimizeSettings};

fn main() -> exoknee::Result<()> {
    let chain = ChainConfig::default();
    let settings = OptimizeSettings::default();
    for theta_max in [120.0f64, 75.0] {
        let r = optimize_d(&chain, theta_max.to_radians(), &settings)?;
        println!("range 5..{theta_max} deg");
        for (d, phi) in r.scan.iter().step_by(10) {
            let bar = "#".repeat((phi / 2.0).round() as usize);
            println!("  D {d:6.1}  phi {phi:7.3}  {bar}");
        }
        println!(
            "  D* = {:.2} mm, phi* = {:.3} mm, revolute {:.3} mm, reduction {:.1} %, phi(64 mm) = {:.3} mm\n",
            r.d_star,
            r.phi_star,
            r.phi_baseline,
            100.0 * r.reduction,
            r.phi_at_prototype
        );
    }
    Ok(())
}
