//! Open-loop sine torque tracking through the deadband inverse and a
//! first-order current loop, for a range of loop bandwidths.

use exoknee::actuation::{simulate_sine_tracking, CurrentLoopPlant, TorqueCurrentModel};

fn main() -> exoknee::Result<()> {
    let model = TorqueCurrentModel::default();
    println!("10 Hz, 15 Nm amplitude");
    for tau in [0.0, 0.0005, 0.001, 0.002, 0.005, 0.01] {
        let trace = simulate_sine_tracking(&model, &CurrentLoopPlant { time_constant: tau }, 15.0, 10.0, 1.0, 1e-4)?;
        println!("  tau {:4.1} ms: RMS error {:.3} Nm", tau * 1e3, trace.rms_error());
    }
    Ok(())
}
