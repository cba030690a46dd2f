//! Harmonic expansion on spheres, angular energy two ways, the energy profile E(ρ) and the
//! Abel chain that drives the uniqueness argument.

use backscatter_lab::harmonics::{angular_energy, make_sphere_quadrature, HarmonicBasis};
use backscatter_lab::inverse::{abel_chain, beta_integral, energy_profile};
use backscatter_lab::potential::RadialProfile;
use backscatter_lab::Potential;

fn main() -> backscatter_lab::Result<()> {
    let basis = HarmonicBasis::new(6);
    let quad = make_sphere_quadrature(32);
    let p = Potential::sum(vec![
        Potential::radial_harmonic(0.4, RadialProfile::Polynomial { order: 3 }, 2, 1)?,
        Potential::radial_harmonic(0.2, RadialProfile::Exponential, 0, 0)?,
    ]);
    for rho in [0.25, 0.5, 0.75] {
        let e = angular_energy(&p, rho, &basis, &quad)?;
        println!("rho = {rho}: direct {:.6e}  spectral {:.6e}", e.direct, e.spectral);
    }
    let rho: Vec<f64> = (1..=20).map(|i| 0.05 * i as f64).collect();
    let e = energy_profile(&p, &rho, &quad)?;
    for t in [0.2, 0.5, 0.8] {
        let c = abel_chain(&e, t)?;
        println!("tau = {t}: E = {:.4e}  Abel {:.4e}  iterated {:.4e}", c.lhs, c.abel_rhs, c.iterated_rhs);
    }
    println!("beta integral (0.2, 0.7) - pi = {:.1e}", beta_integral(0.2, 0.7)? - std::f64::consts::PI);
    Ok(())
}
