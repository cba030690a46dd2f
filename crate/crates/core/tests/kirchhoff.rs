//! Free-space oracle: with V = 0 the solver must reproduce the retarded potential
//! u(x, t) = (w/4π) ∫ S(y) δ_ε(t − |x − y| − y·ω) / |x − y| dy.

use approx::assert_relative_eq;

use backscatter_lab::harmonics::make_sphere_quadrature;
use backscatter_lab::quad::{delta_eps, GaussRule};
use backscatter_lab::solver::{run, ProbeSet, WaveScenario};
use backscatter_lab::{Direction, Potential, Vec3};

/// Retarded potential in polar coordinates around x: y = x + rσ, dy/|x − y| = r dr dσ.
fn retarded(source: &Potential, weight: f64, omega: &Direction, eps: f64, x: &Vec3, t: f64) -> f64 {
    let sphere = make_sphere_quadrature(48);
    let gauss = GaussRule::legendre(8);
    let (r_lo, r_hi) = ((x.norm() - 1.0).max(0.0), x.norm() + 1.0);
    let xw = omega.dot(x);
    let shell = |r: f64| {
        r * sphere.integrate(|s| {
            let y = x + s * r;
            source.eval(&y) * delta_eps(t - r - xw - r * omega.dot(s), eps)
        })
    };
    weight * gauss.composite(r_lo, r_hi, 24, shell) / (4.0 * std::f64::consts::PI)
}

#[test]
fn source_only_run_matches_retarded_potential() {
    let source = Potential::exp_bump(1.0);
    let omega = Direction::axis(2);
    let weight = 0.7;
    let probes = [Vec3::new(0.0, 0.0, 1.6), Vec3::new(1.6, 0.0, 0.0), Vec3::new(0.0, -0.9, -1.3)];
    let s = WaveScenario::source_only(source.clone(), weight, omega, 3.0, 1.0 / 16.0).unwrap();
    let t_end = probes.iter().map(|x| s.point_safe_time(x)).fold(f64::INFINITY, f64::min);
    let s = s.with_t_end(t_end);
    let set = probes.iter().enumerate().fold(ProbeSet::new(), |p, (k, x)| p.point(&format!("p{k}"), *x));
    let out = run(&s, &set).unwrap();

    for (k, x) in probes.iter().enumerate() {
        let series = &out.point(&format!("p{k}")).unwrap().series;
        let peak = series.peak_abs();
        assert!(peak > 1e-4, "probe {k} never sees the wave");
        let mut worst = 0.0f64;
        for (t, u) in series.iter().step_by(4) {
            let exact = retarded(&source, weight, &omega, s.epsilon, x, t);
            worst = worst.max((u - exact).abs());
        }
        assert_relative_eq!(worst / peak, 0.0, epsilon = 0.02);
    }
}

#[test]
fn response_is_linear_in_source_weight() {
    let source = Potential::poly_bump(1.0, 3).unwrap();
    let omega = Direction::normalized(Vec3::new(1.0, 0.0, 1.0)).unwrap();
    let x = Vec3::new(0.0, 0.0, 1.5);
    let series = |w: f64| {
        let s = WaveScenario::source_only(source.clone(), w, omega, 2.5, 1.0 / 8.0).unwrap();
        let s = s.clone().with_t_end(s.point_safe_time(&x));
        run(&s, &ProbeSet::new().point("x", x)).unwrap().point("x").unwrap().series.clone()
    };
    let (a, b) = (series(1.0), series(-2.5));
    for ((_, u), (_, v)) in a.iter().zip(b.iter()) {
        assert_relative_eq!(v, -2.5 * u, epsilon = 1e-12, max_relative = 1e-12);
    }
}
