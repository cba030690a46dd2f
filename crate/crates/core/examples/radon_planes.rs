//! Plane transforms of the truncated paraboloid 1 − |x|² and the split of P_τ into the
//! point term −2πτ p(τω) and the angular term.

use backscatter_lab::radon::{ptau_decomposition, radon_plane, RadonProfile};
use backscatter_lab::{geometry::fibonacci_directions, Direction, Potential};

fn main() -> backscatter_lab::Result<()> {
    let p = Potential::poly_bump(1.0, 1)?;
    let w = Direction::axis(2);
    println!(" tau      P(tau)   closed form pi(1-tau^2)^2/2");
    for i in 0..=4 {
        let t = 0.2 * i as f64;
        println!("{t:4.1} {:10.6} {:10.6}", radon_plane(&p, &w, t), std::f64::consts::PI * (1.0 - t * t).powi(2) / 2.0);
    }
    for t in [0.3, 0.6, 0.9] {
        let d = ptau_decomposition(&p, &w, t, 48)?;
        println!("tau = {t}: point {:.6}  angular {:.2e}  recombined {:.6}", d.point_term, d.angular_term, d.recombined);
    }
    let tau: Vec<f64> = (0..=8).map(|i| -1.0 + 0.25 * i as f64).collect();
    let prof = RadonProfile::compute(&p, &fibonacci_directions(4), &tau)?;
    print!("{}", prof.to_csv());
    Ok(())
}
