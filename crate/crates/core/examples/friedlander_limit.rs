//! r·u(rθ, r − s) approaching α(θ, ω, s) along a diagonal ray on the enlarged L = 10 box.
//! Takes about a minute in release mode.

use backscatter_lab::farfield::{extract_alpha, friedlander_estimate, friedlander_probes};
use backscatter_lab::solver::{run, ProbeSet, WaveScenario};
use backscatter_lab::{Direction, Potential, Vec3};

fn main() -> backscatter_lab::Result<()> {
    let omega = Direction::axis(2);
    let theta = Direction::normalized(Vec3::new(1.0, 1.0, 1.0))?;
    let radii = [4.0, 6.0, 8.0];
    let s = WaveScenario::scattering(Potential::exp_bump(0.3), omega, 10.0, 1.0 / 16.0)?;
    let span = (theta.vec() - omega.vec()).norm() + 4.0 * s.epsilon;
    let s = s.clone().with_t_end(radii[2] + span);
    let (e1, _) = theta.plane_basis();
    let probes = friedlander_probes(ProbeSet::new().plane_until("alpha", theta, 1.0, 1.0 + span), &theta, &radii, Some(e1 * 0.5));
    let r = run(&s, &probes)?;
    let f = friedlander_estimate(&r, &theta, &radii)?;
    for (r, d) in f.radii.iter().zip(&f.deviations) {
        println!("r = {r:4.1}  rel L2 deviation from alpha {d:.3e}");
    }
    println!("fitted decay exponent in 1/r: {:.2}", f.rate);
    if let Some(d) = f.offset_deviation {
        println!("offset ray vs axial ray at r = 8: {d:.3e}");
    }
    println!("alpha peak {:.3e}", extract_alpha(&r, &theta)?.peak_abs());
    Ok(())
}
