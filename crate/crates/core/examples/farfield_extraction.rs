//! Far field of a bump on the backscatter plane: gradient and u_t forms, transport between
//! two planes, the empty tail beyond s = 2, and the forward peak coefficient.

use backscatter_lab::farfield::{
    backscatter_support, extract_alpha, extract_alpha_ut, peak_scattering_coefficient, relative_l2, transport_check,
};
use backscatter_lab::solver::{run, ProbeSet, WaveScenario};
use backscatter_lab::{Direction, Potential};

fn main() -> backscatter_lab::Result<()> {
    let omega = Direction::axis(2);
    let back = Direction::new(-omega.vec())?;
    let s = WaveScenario::scattering(Potential::exp_bump(0.3), omega, 6.0, 1.0 / 16.0)?;
    let r = run(&s, &ProbeSet::new().plane("near", back, 1.0).plane("far", back, 1.5))?;
    let grad = extract_alpha(&r, &back)?;
    let ut = extract_alpha_ut(&r, &back)?;
    println!("{} steps on {} nodes", r.steps, s.grid.len());
    println!("gradient vs u_t form, rel L2   {:.3e}", relative_l2(&ut, &grad));
    println!("transport 1 -> 1.5, sup         {:.3e}", transport_check(&r, &back, 1.0, 1.5)?.discrepancy);
    let tail = backscatter_support(&r)?;
    println!("tail beyond s = 2 + 3eps / peak {:.3e}", tail.tail_ratio);

    let fwd = WaveScenario::scattering(Potential::exp_bump(0.2), omega, 5.0, 1.0 / 16.0)?;
    let rf = run(&fwd, &ProbeSet::new().plane("forward", omega, 1.0))?;
    let peak = peak_scattering_coefficient(&rf)?;
    println!(
        "forward peak {:.5}  reference -(1/4pi)int q = {:.5}  rel err {:.2e}",
        peak.coefficient, peak.reference, peak.relative_error
    );
    for (s, a) in grad.iter().step_by(16) {
        println!("  s = {s:6.3}  alpha = {a:10.3e}");
    }
    Ok(())
}
