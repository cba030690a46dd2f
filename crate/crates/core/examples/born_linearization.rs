//! α/ε against the linearized map for q = εp, and the Born reconstruction of a radial bump
//! from replicated backscatter slices.

use backscatter_lab::harmonics::make_sphere_quadrature;
use backscatter_lab::inverse::{born_convergence, born_radial_trend};
use backscatter_lab::{Direction, Grid3D, Potential, Vec3};

fn main() -> backscatter_lab::Result<()> {
    let omega = Direction::axis(2);
    let back = Direction::new(-omega.vec())?;
    let p = Potential::exp_bump(1.0);
    let amps = [0.2, 0.1, 0.05];
    let c = born_convergence(&p, omega, back, &amps, 6.0, 1.0 / 16.0)?;
    for ((a, e), d) in amps.iter().zip(&c.errors).zip(&c.discrete_errors) {
        println!("eps = {a:5.3}  vs analytic {e:.3e}  vs discrete linearization {d:.3e}");
    }
    println!("ratios {:?}  order {:.2}", c.ratios, c.order);

    let probes = [omega, Direction::normalized(Vec3::new(1.0, 1.0, 1.0))?];
    let t = born_radial_trend(&p, &amps, &probes, &make_sphere_quadrature(40), &Grid3D::cube(1.0, 1.0 / 16.0)?, 6.0, 1.0 / 16.0)?;
    for (a, (e, sp)) in amps.iter().zip(t.errors.iter().zip(&t.radial_spread)) {
        println!("eps = {a:5.3}  |q_b - q| / |q| = {e:.4}  radial spread {sp:.2e}");
    }
    Ok(())
}
