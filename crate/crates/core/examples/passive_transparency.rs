//! Residual interaction torque while the unpowered device is worn.

use exoknee::actuation::{canned_passive_trace, passive_stats, PassiveTrace};

fn main() -> exoknee::Result<()> {
    let canned = passive_stats(&canned_passive_trace())?;
    println!("canned trace: RMS {:.3} Nm, max {:.3} Nm", canned.rms, canned.max_abs);

    // a pure 1 Hz sine: RMS is amplitude / sqrt(2)
    let sine: Vec<(f64, f64)> = (0..1000)
        .map(|i| {
            let t = i as f64 / 1000.0;
            (t, 2.0 * (std::f64::consts::TAU * t).sin())
        })
        .collect();
    let s = passive_stats(&PassiveTrace::new(sine)?)?;
    println!("2 Nm sine:    RMS {:.4} Nm, max {:.4} Nm", s.rms, s.max_abs);
    Ok(())
}
