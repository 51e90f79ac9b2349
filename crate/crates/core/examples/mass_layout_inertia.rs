//! Leg inertia about the body centre of mass with everything mounted on
//! the leg versus motor and battery moved proximally.

use exoknee::mechanism::{assumed_layouts, inertia_about_point, mass_centroid};

fn main() -> exoknee::Result<()> {
    let (on_leg, distributed) = assumed_layouts();
    for (name, items) in [("on leg", &on_leg), ("distributed", &distributed)] {
        println!("{name}:");
        for m in items {
            println!("  {:12} {:.2} kg at ({:+.2}, {:+.2}) m", m.name, m.mass, m.position[0], m.position[1]);
        }
        let c = mass_centroid(items);
        println!("  centroid ({:+.3}, {:+.3}) m, I = {:.4} kg m^2", c[0], c[1], inertia_about_point(items, [0.0, 0.0])?);
    }
    let delta = inertia_about_point(&on_leg, [0.0, 0.0])? - inertia_about_point(&distributed, [0.0, 0.0])?;
    println!("reduction {delta:.4} kg m^2");
    Ok(())
}
