//! Strap forces for the default four-strap layout, plus the rank verdicts
//! of layouts that cannot be solved uniquely.

use exoknee::statics::{layout_feasibility, solve_attachment_forces, AttachmentLayout, LoadCase};

fn main() -> exoknee::Result<()> {
    let layout = AttachmentLayout::default();
    let load = LoadCase::default();
    let f = solve_attachment_forces(&layout, &load)?;
    for (p, x) in layout.thigh_attachments.iter().zip(&f.thigh_forces) {
        println!("thigh strap at {p:.2} m: {x:8.2} N");
    }
    for (p, x) in layout.calf_attachments.iter().zip(&f.calf_forces) {
        println!("calf strap at {p:.2} m:  {x:8.2} N");
    }
    println!("biological knee moment {:.2} N m, residual {:.1e}", f.biological_knee_torque, f.residual);

    let single = AttachmentLayout { thigh_attachments: vec![0.2], ..layout.clone() };
    println!("one thigh strap: {:?}", layout_feasibility(&single, &load, false)?.verdict);
    println!("tangential forces too: {:?}", layout_feasibility(&layout, &load, true)?.verdict);

    // a pure couple: strap force falls off as 1/spacing
    for d in [0.1, 0.2, 0.3] {
        let l = AttachmentLayout { thigh_attachments: vec![0.05, 0.05 + d], ..layout.clone() };
        let r = solve_attachment_forces(&l, &LoadCase::torque_only(10.0))?;
        println!("spacing {d:.1} m -> |F| = {:.1} N", r.thigh_forces[0].abs());
    }
    Ok(())
}
