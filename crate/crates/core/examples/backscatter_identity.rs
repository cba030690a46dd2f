//! Two-potential backscatter identity for q1 = 0 and a bump: 8π(α1 − α2) on the backscatter
//! slice against the smeared Radon term plus the kernel term.

use backscatter_lab::inverse::{identity_check, IdentitySetup};
use backscatter_lab::{Direction, Potential};

fn main() -> backscatter_lab::Result<()> {
    let setup = IdentitySetup::default();
    let q2 = Potential::exp_bump(0.5);
    let r = identity_check(&Potential::zero(), &q2, &[Direction::axis(2)], &setup)?;
    println!("   tau        lhs        rhs      radon     kernel");
    for i in (0..r.tau.len()).step_by(8) {
        println!(
            "{:6.3} {:10.5} {:10.5} {:10.5} {:10.5}",
            r.tau[i], r.lhs[0][i], r.rhs[0][i], r.radon_term[0][i], r.kernel_term[0][i]
        );
    }
    println!("relative L2 discrepancy {:.3e}", r.discrepancy);
    let same = identity_check(&q2, &q2, &[Direction::axis(2)], &setup)?;
    println!("q1 = q2: residual / signal {:.3e}", same.residual_ratio);
    Ok(())
}
