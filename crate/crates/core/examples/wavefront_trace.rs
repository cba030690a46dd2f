//! Fits the smeared wavefront of the scattered field and compares the jump and the slope
//! behind it with their ray-integral predictions at two resolutions.

use std::time::Instant;

use backscatter_lab::solver::{
    front_region, front_t_end, run, ut_characteristic_check, wavefront_trace_check, ProbeSet, WaveScenario,
};
use backscatter_lab::{Direction, Potential};

fn main() -> backscatter_lab::Result<()> {
    let q = Potential::poly_bump(0.1, 3)?;
    let omega = Direction::normalized(backscatter_lab::Vec3::new(1.0, 1.0, 1.0))?;
    let mut last: Option<(f64, f64)> = None;
    for h in [1.0 / 16.0, 1.0 / 32.0] {
        let start = Instant::now();
        let s = WaveScenario::scattering(q.clone(), omega, 3.0, h)?;
        let s = s.clone().with_t_end(front_t_end(&s, 1.0));
        let probes = ProbeSet::new().region(front_region(&s, 1.0)?);
        let r = run(&s, &probes)?;
        let jump = wavefront_trace_check(&r)?;
        let slope = ut_characteristic_check(&r)?;
        println!(
            "h = 1/{:<3} steps {:4}  jump rel L2 {:.3e}  slope rel L2 {:.3e}  ({:.1} s)",
            (1.0 / h).round(),
            r.steps,
            jump.rel_l2,
            slope.rel_l2,
            start.elapsed().as_secs_f64()
        );
        if let Some((j0, s0)) = last {
            println!("orders: jump {:.2}  slope {:.2}", (j0 / jump.rel_l2).log2(), (s0 / slope.rel_l2).log2());
        }
        last = Some((jump.rel_l2, slope.rel_l2));
    }
    Ok(())
}
