//! Far field of a translated bump against the shifted far field of the original.

use backscatter_lab::inverse::translation_check;
use backscatter_lab::{Direction, Potential, Vec3};

fn main() -> backscatter_lab::Result<()> {
    let omega = Direction::axis(2);
    let back = Direction::new(-omega.vec())?;
    for a in [Vec3::new(0.0, 0.0, 0.5), Vec3::new(0.1, 0.2, 0.47)] {
        let r = translation_check(&Potential::exp_bump(0.3), a, back, omega, 6.5, 1.0 / 16.0)?;
        println!(
            "a = ({}, {}, {})  predicted shift {:.4}  measured {:.4}  sup discrepancy / peak {:.2e}",
            a[0], a[1], a[2], r.shift, r.measured_shift, r.discrepancy
        );
    }
    Ok(())
}
