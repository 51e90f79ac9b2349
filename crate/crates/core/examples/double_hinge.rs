//! Torque split of the double-hinge frame as the two hinge angles open.

use exoknee::mechanism::{hinge_decompose, HingeAngles};

fn main() -> exoknee::Result<()> {
    let tau = 10.0;
    println!("alpha  beta   tau_1   tau_2  |tau|");
    for (a, b) in [(0.0, 0.0), (10.0, 0.0), (20.0, 5.0), (45.0, -10.0), (80.0, 0.0)] {
        let angles = HingeAngles::new(f64::to_radians(a), f64::to_radians(b))?;
        let (t1, t2) = hinge_decompose(tau, angles);
        println!("{a:5} {b:5} {t1:7.3} {t2:7.3} {:6.3}", t1.hypot(t2));
    }
    Ok(())
}
