//! ‖u‖_* against 8‖q‖_{C²} for small bumps, and ‖a‖_∞ ≤ 2‖f‖_* for the characteristic
//! initial value problem.

use backscatter_lab::potential::c2_norm;
use backscatter_lab::solver::{characteristic_bound_check, u_star_norm, u_star_run, CharacteristicData};
use backscatter_lab::{Direction, Potential};

fn main() -> backscatter_lab::Result<()> {
    let omega = Direction::axis(2);
    for a in [0.001, 0.002, 0.004] {
        let q = Potential::exp_bump(a);
        let c2 = c2_norm(&q).total;
        let u = u_star_norm(&u_star_run(q, omega, 3.0, 1.0 / 16.0)?)?;
        println!("A = {a}: |u|_* = {u:.3e}  8|q|_C2 = {:.3e}  ratio {:.3}", 8.0 * c2, u / (8.0 * c2));
    }
    let q = Potential::exp_bump(0.2);
    let g = Potential::poly_bump(0.5, 3)?;
    let b = characteristic_bound_check(&q, &CharacteristicData::new(g, omega), 3.0, 1.0 / 16.0)?;
    println!("|a|_inf = {:.4}  2|f|_* = {:.4}  holds: {}", b.a_max, 2.0 * b.f_star, b.holds);
    Ok(())
}
