//! Two-stage belt reduction: overall ratio and output torques.

use exoknee::mechanism::TransmissionParams;

fn main() {
    let t = TransmissionParams::default();
    println!("stage 1 i1 = {}, stage 2 i2 = {}", t.i1, t.i2);
    println!("overall reduction {:.4}", t.total_reduction());
    println!("peak output  {:.3} Nm", t.peak_output_torque());
    println!("rated output {:.3} Nm", t.rated_output_torque());
    for m in [0.25, 0.5, 1.0, 1.5] {
        println!("motor {m:4} Nm -> {:6.3} Nm", t.output_torque(m));
    }
}
