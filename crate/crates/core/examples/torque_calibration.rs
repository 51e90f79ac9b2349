//! Fits the deadband torque-current model to bench samples, either a CSV
//! given on the command line or a synthetic bench with a planted model.
//!
//! cargo run --example torque_calibration -- crates/core/data/bench_synthetic.csv

use exoknee::actuation::{calibrate, TorqueCurrentModel};
use exoknee::io::read_calibration_csv;
use exoknee::synth::bench_samples;

fn main() -> exoknee::Result<()> {
    let samples = match std::env::args().nth(1) {
        Some(path) => read_calibration_csv(path.as_ref())?,
        None => {
            let planted = TorqueCurrentModel::new(0.6, 0.4)?;
            println!("planted k = {}, T_f = {}", planted.k, planted.t_f);
            bench_samples(&planted, 200, 10.0, 0.05, 1)?
        }
    };
    let fit = calibrate(&samples)?;
    println!(
        "k = {:.4} Nm/A, T_f = {:.4} Nm, R^2 = {:.4}, deadband +/-{:.3} A ({} rounds, {} samples used)",
        fit.model.k,
        fit.model.t_f,
        fit.r_squared,
        fit.model.deadband(),
        fit.rounds,
        fit.branch_samples
    );
    println!("current for 5 Nm: {:.3} A", fit.model.current_for_torque(5.0));
    Ok(())
}
