//! Wavefront measurements: local fits of the smeared progressing-wave expansion, the
//! characteristic-trace references, the ‖u‖_* norm and the characteristic-data bound.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::probes::{ProbeSet, RegionRecord, RegionSpec};
use super::{run, WaveRun, WaveScenario};
use crate::error::{LabError, Result};
use crate::geometry::{Direction, Vec3};
use crate::potential::{chord_integral, integrate_between, ray_breaks, sup_abs, Analytic, Potential};
use crate::quad::{delta_eps, heaviside_eps};

/// Lattice spacing of the trace sample points inside the unit ball.
pub const FRONT_SAMPLE_SPACING: f64 = 0.125;
/// Half-width, in units of ε, of the time window used by the front fits.
const FIT_SIGMAS: f64 = 3.0;
pub const FRONT_REGION: &str = "front";
pub const U_STAR_REGION: &str = "u-star";

/// Sample points for the front fits: the 1/8 lattice in |x| ≤ 1 with x·ω ≤ `max_front`.
pub fn front_region(s: &WaveScenario, max_front: f64) -> Result<RegionSpec> {
    let stride = (FRONT_SAMPLE_SPACING / s.h()).round().max(1.0) as usize;
    let w = s.incidence;
    let pad = FIT_SIGMAS * s.epsilon;
    Ok(RegionSpec::ball(FRONT_REGION, &s.grid, 1.0, stride, -1.0 - pad, max_front + pad)?
        .filtered(&s.grid, |x| w.dot(x) <= max_front + 1e-12))
}

/// All nodes of |x| ≤ 1, −1 ≤ x·ω ≤ 0 over −1 ≤ t ≤ 0.
pub fn u_star_region(s: &WaveScenario) -> Result<RegionSpec> {
    let w = s.incidence;
    Ok(RegionSpec::ball(U_STAR_REGION, &s.grid, 1.0, 1, -1.0, 0.0)?
        .filtered(&s.grid, |x| (-1.0 - 1e-12..=1e-12).contains(&w.dot(x))))
}

/// Latest time the front fits on x·ω ≤ `max_front` need.
pub fn front_t_end(s: &WaveScenario, max_front: f64) -> f64 {
    max_front + FIT_SIGMAS * s.epsilon + 3.0 * s.dt
}

/// Number of progressing-wave terms in the front fits.
const FIT_TERMS: usize = 4;

/// Coefficients c_k of u_ε(x, x·ω + λ) ≈ Σ c_k·(λ₊^k/k! * δ_ε)(λ); c0 is the jump and c1 the
/// slope u_t just behind the front.
#[derive(Clone, Debug, Serialize)]
pub struct FrontFit {
    pub x: Vec3,
    pub c: [f64; FIT_TERMS],
}

/// (λ₊^k/k! * δ_ε)(λ) for k < FIT_TERMS via I_k = (λ·I_{k−1} + ε²·I_{k−2})/k, I_{−1} = δ_ε.
fn basis(lambda: f64, eps: f64) -> [f64; FIT_TERMS] {
    let mut out = [0.0; FIT_TERMS];
    let (mut prev, mut cur) = (delta_eps(lambda, eps), heaviside_eps(lambda, eps));
    out[0] = cur;
    for (k, slot) in out.iter_mut().enumerate().skip(1) {
        let next = (lambda * cur + eps * eps * prev) / k as f64;
        (prev, cur) = (cur, next);
        *slot = cur;
    }
    out
}

/// Least-squares front fits at every node of the `front` region.
pub fn front_fit(run: &WaveRun) -> Result<Vec<FrontFit>> {
    let rec = run.region(FRONT_REGION)?;
    let s = &run.scenario;
    let eps = s.epsilon;
    let w = s.incidence;
    (0..rec.nodes.len())
        .into_par_iter()
        .map(|slot| fit_slot(rec, slot, &w, eps))
        .collect()
}

fn fit_slot(rec: &RegionRecord, slot: usize, w: &Direction, eps: f64) -> Result<FrontFit> {
    let x = rec.positions[slot];
    let front = w.dot(&x);
    let rows: Vec<(f64, f64)> = (0..rec.levels())
        .map(|r| (rec.time(r) - front, rec.data[r][slot]))
        .filter(|(l, _)| l.abs() <= FIT_SIGMAS * eps)
        .collect();
    let expected = (2.0 * FIT_SIGMAS * eps / rec.dt).floor() as usize;
    if rows.len() < expected.max(4) {
        return Err(LabError::Configuration(format!(
            "front window at x = {:?} is not fully recorded ({} of {expected} samples)",
            [x[0], x[1], x[2]],
            rows.len()
        )));
    }
    let a = DMatrix::from_fn(rows.len(), FIT_TERMS, |i, j| basis(rows[i].0, eps)[j]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| LabError::SingularGeometry(format!("front fit: {e}")))?;
    Ok(FrontFit { x, c: std::array::from_fn(|k| sol[k]) })
}

/// Transverse Laplacian Δq − ∂²_ω q.
fn transverse_laplacian(q: &impl Analytic, y: &Vec3, w: &Vec3) -> f64 {
    let (_, _, hess) = q.jet(y);
    hess.trace() - w.dot(&(hess * w))
}

/// Jump of u across t = x·ω for source w·S: (w/2)·∫_{−∞}^0 S(x + σω) dσ.
pub fn a0_reference(source: &Potential, weight: f64, x: &Vec3, omega: &Direction) -> f64 {
    0.5 * weight * chord_integral(source, x, omega)
}

/// u_t just behind the front for the scattering problem:
/// −q/4 − ¼∫_{−∞}^0 |s| Δ⊥q(x + sω) ds + C(x)²/8 with C the chord integral.
pub fn a1_reference(q: &Potential, x: &Vec3, omega: &Direction) -> f64 {
    front_ut_closed(q, &|y: &Vec3| ray_breaks(q, y, omega), x, omega)
}

/// The same quantity in the nested form −q/4 + ½∫_{−∞}^0 Q(x + sω) ds.
pub fn a1_reference_nested(q: &Potential, x: &Vec3, omega: &Direction) -> f64 {
    front_ut_nested(q, &|y: &Vec3| ray_breaks(q, y, omega), x, omega)
}

/// [`a1_reference`] for any smooth `q`; `breaks(y)` lists σ ≤ 0 splitting the support of
/// σ ↦ q(y + σω) into smooth pieces (first and last entries bound it).
pub fn front_ut_closed(q: &impl Analytic, breaks: &dyn Fn(&Vec3) -> Vec<f64>, x: &Vec3, omega: &Direction) -> f64 {
    let w = omega.vec();
    let b = breaks(x);
    let c = integrate_between(&b, |s| q.value(&(x + w * s)));
    let moment = integrate_between(&b, |s| -s * transverse_laplacian(q, &(x + w * s), &w));
    -0.25 * q.value(x) - 0.25 * moment + c * c / 8.0
}

/// Q(y) = −½∫_{−∞}^0 Δ⊥q(y + σω) dσ + (q(y)/2)·∫_{−∞}^0 q(y + σω) dσ.
pub fn transport_source(q: &impl Analytic, breaks: &dyn Fn(&Vec3) -> Vec<f64>, y: &Vec3, omega: &Direction) -> f64 {
    let w = omega.vec();
    let b = breaks(y);
    let lap = integrate_between(&b, |s| transverse_laplacian(q, &(y + w * s), &w));
    let chord = integrate_between(&b, |s| q.value(&(y + w * s)));
    -0.5 * lap + 0.5 * q.value(y) * chord
}

/// −q/4 + ½∫_{−∞}^0 Q(x + sω) ds.
pub fn front_ut_nested(q: &impl Analytic, breaks: &dyn Fn(&Vec3) -> Vec<f64>, x: &Vec3, omega: &Direction) -> f64 {
    let w = omega.vec();
    let outer = integrate_between(&breaks(x), |s| transport_source(q, breaks, &(x + w * s), omega));
    -0.25 * q.value(x) + 0.5 * outer
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceReport {
    pub samples: usize,
    pub abs_l2: f64,
    pub reference_l2: f64,
    /// abs_l2 / reference_l2, or abs_l2 when the reference vanishes.
    pub rel_l2: f64,
    pub h: f64,
}

impl TraceReport {
    fn new(pairs: &[(f64, f64)], h: f64) -> Self {
        let err: f64 = pairs.iter().map(|(m, r)| (m - r).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = pairs.iter().map(|(_, r)| r * r).sum::<f64>().sqrt();
        TraceReport {
            samples: pairs.len(),
            abs_l2: err,
            reference_l2: norm,
            rel_l2: if norm > 0.0 { err / norm } else { err },
            h,
        }
    }
}

fn scattering_potential(run: &WaveRun) -> Result<&Potential> {
    let s = &run.scenario;
    if s.operator != s.source || s.source_weight != -1.0 {
        return Err(LabError::Configuration("u_t trace reference needs a scattering run (V = S, w = −1)".into()));
    }
    Ok(&s.operator)
}

/// Fitted jump c0 against (w/2)·chord integral of the source, relative L² over the samples.
pub fn wavefront_trace_check(run: &WaveRun) -> Result<TraceReport> {
    let s = &run.scenario;
    let fits = front_fit(run)?;
    let pairs: Vec<(f64, f64)> = fits
        .par_iter()
        .map(|f| (f.c[0], a0_reference(&s.source, s.source_weight, &f.x, &s.incidence)))
        .collect();
    Ok(TraceReport::new(&pairs, s.h()))
}

/// Fitted u_t just behind the front against [`a1_reference`].
pub fn ut_characteristic_check(run: &WaveRun) -> Result<TraceReport> {
    let q = scattering_potential(run)?;
    let fits = front_fit(run)?;
    let w = run.scenario.incidence;
    let pairs: Vec<(f64, f64)> = fits.par_iter().map(|f| (f.c[1], a1_reference(q, &f.x, &w))).collect();
    Ok(TraceReport::new(&pairs, run.scenario.h()))
}

/// max |u| + |u_t| over |x| ≤ 1, −1 ≤ x·ω ≤ t ≤ 0, from the grid samples at least 3ε behind
/// the smeared front together with the fitted front values |c0| + |c1|.
pub fn u_star_norm(run: &WaveRun) -> Result<f64> {
    let s = &run.scenario;
    let rec = run.region(U_STAR_REGION)?;
    let w = s.incidence;
    if rec.levels() < 3 || rec.time(rec.levels() - 2) < -1e-9 {
        return Err(LabError::Configuration("run does not cover the u_* region up to t = 0".into()));
    }
    let behind = region_max(rec, &w, FIT_SIGMAS * s.epsilon, |u, ut| u.abs() + ut.abs());
    let front = front_fit(run)?
        .iter()
        .filter(|f| (-1.0 - 1e-12..=1e-12).contains(&w.dot(&f.x)))
        .map(|f| f.c[0].abs() + f.c[1].abs())
        .fold(0.0, f64::max);
    Ok(behind.max(front))
}

/// max over rows with x·ω + lag ≤ t ≤ 0 of `f(u, u_t)`.
fn region_max(rec: &RegionRecord, w: &Direction, lag: f64, f: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
    (0..rec.nodes.len())
        .into_par_iter()
        .map(|slot| {
            let front = w.dot(&rec.positions[slot]);
            let mut best = 0.0f64;
            for r in 1..rec.levels() - 1 {
                let t = rec.time(r);
                if t < front + lag || t > 1e-9 {
                    continue;
                }
                let ut = (rec.data[r + 1][slot] - rec.data[r - 1][slot]) / (2.0 * rec.dt);
                best = best.max(f(rec.data[r][slot], ut));
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Runs the scattering problem with the `front` and `u-star` regions recorded.
pub fn u_star_run(q: Potential, omega: Direction, half_width: f64, h: f64) -> Result<WaveRun> {
    let s = WaveScenario::scattering(q, omega, half_width, h)?;
    let s = s.clone().with_t_end(front_t_end(&s, 0.0));
    let probes = ProbeSet::new().region(front_region(&s, 0.0)?).region(u_star_region(&s)?);
    run(&s, &probes)
}

/// Characteristic data a(x, x·ω) = f(x) with f(x) = ∫_{−∞}^0 g(x + σω) dσ, so ω·∇f = g.
#[derive(Clone, Debug)]
pub struct CharacteristicData {
    pub g: Potential,
    pub omega: Direction,
}

impl CharacteristicData {
    pub fn new(g: Potential, omega: Direction) -> Self {
        CharacteristicData { g, omega }
    }

    pub fn f(&self, x: &Vec3) -> f64 {
        chord_integral(&self.g, x, &self.omega)
    }

    /// ‖f‖_* = sup |ω·∇f| over x·ω ≤ 0, sampled at spacing 1/48 over the support of g.
    pub fn f_star(&self) -> f64 {
        let Some((lo, hi)) = self.g.support_box() else { return 0.0 };
        let step = 1.0 / 48.0;
        let n = |a: usize| ((hi[a] - lo[a]) / step).ceil() as usize + 1;
        let (nx, ny, nz) = (n(0), n(1), n(2));
        (0..nx)
            .into_par_iter()
            .map(|i| {
                let mut best = 0.0f64;
                for j in 0..ny {
                    for k in 0..nz {
                        let x = lo + Vec3::new(i as f64, j as f64, k as f64) * step;
                        if self.omega.dot(&x) <= 0.0 {
                            best = best.max(self.g.eval(&x).abs());
                        }
                    }
                }
                best
            })
            .reduce(|| 0.0, f64::max)
    }

    /// supp f inside the unit cylinder about the ω axis and in x·ω ≥ −1.
    pub fn check_support(&self) -> Result<()> {
        let w = self.omega.vec();
        for (c, r) in self.g.support_balls() {
            let along = c.dot(&w);
            let radial = (c - w * along).norm();
            if radial + r > 1.0 + 1e-12 || along - r < -1.0 - 1e-12 {
                return Err(LabError::Precondition(format!(
                    "characteristic data must be supported in the unit cylinder with x·ω ≥ −1 \
                     (ball at {:?} of radius {r})",
                    [c[0], c[1], c[2]]
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CharacteristicBound {
    pub a_max: f64,
    pub f_star: f64,
    pub q_sup: f64,
    /// a_max / f_star (0 when both vanish).
    pub ratio: f64,
    pub holds: bool,
}

/// Solves (□ + q)a = 0 for t ≥ x·ω with a = f on the characteristic plane, by driving the
/// free-start solver with 2g·δ_ε(t − x·ω), and tests ‖a‖_∞ ≤ 2‖f‖_*.
pub fn characteristic_bound_check(
    q: &Potential,
    data: &CharacteristicData,
    half_width: f64,
    h: f64,
) -> Result<CharacteristicBound> {
    let q_sup = sup_abs(q);
    if q_sup > 0.25 {
        return Err(LabError::Precondition(format!("‖q‖_∞ = {q_sup:.4} exceeds 1/4")));
    }
    data.check_support()?;
    let f_star = data.f_star();
    let a_max = if data.g.is_zero() {
        0.0
    } else {
        let s = WaveScenario::general(q.clone(), data.g.clone(), 2.0, data.omega, half_width, h)?;
        let s = s.clone().with_t_end(front_t_end(&s, 0.0));
        let probes = ProbeSet::new().region(front_region(&s, 0.0)?).region(u_star_region(&s)?);
        let r = run(&s, &probes)?;
        let w = data.omega;
        let behind = region_max(r.region(U_STAR_REGION)?, &w, FIT_SIGMAS * s.epsilon, |u, _| u.abs());
        let front = front_fit(&r)?
            .iter()
            .filter(|f| (-1.0 - 1e-12..=1e-12).contains(&w.dot(&f.x)))
            .map(|f| f.c[0].abs())
            .fold(0.0, f64::max);
        behind.max(front)
    };
    let ratio = if f_star > 0.0 { a_max / f_star } else { 0.0 };
    Ok(CharacteristicBound { a_max, f_star, q_sup, ratio, holds: a_max <= 2.0 * f_star })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_the_smeared_progressing_wave() {
        // c·λ₊ convolved with δ_ε, checked by direct quadrature
        let eps = 0.2;
        for lambda in [-0.5, -0.1, 0.0, 0.3] {
            let conv = crate::quad::adaptive(|mu| (lambda - mu).max(0.0) * delta_eps(mu, eps), -3.0, lambda, 1e-13);
            assert!((conv - basis(lambda, eps)[1]).abs() < 1e-10);
            let conv2 =
                crate::quad::adaptive(|mu| 0.5 * (lambda - mu).max(0.0).powi(2) * delta_eps(mu, eps), -3.0, lambda, 1e-13);
            assert!((conv2 - basis(lambda, eps)[2]).abs() < 1e-10);
        }
    }

    #[test]
    fn both_ut_reference_forms_agree() {
        let q = Potential::exp_bump(0.3);
        let w = Direction::normalized(Vec3::new(0.2, -0.1, 1.0)).unwrap();
        for x in [Vec3::new(0.1, 0.2, 0.3), Vec3::new(-0.3, 0.0, 0.6), Vec3::new(0.0, 0.1, -0.2)] {
            let a = a1_reference(&q, &x, &w);
            let b = a1_reference_nested(&q, &x, &w);
            assert!((a - b).abs() < 1e-9 * a.abs().max(1e-3), "{a} vs {b}");
        }
    }

    struct Slab;

    impl Analytic for Slab {
        // (1 − z²)³ for |z| < 1, constant across x and y
        fn jet(&self, x: &Vec3) -> (f64, Vec3, crate::geometry::Mat3) {
            let z = x[2];
            let mut hess = crate::geometry::Mat3::zeros();
            if z.abs() >= 1.0 {
                return (0.0, Vec3::zeros(), hess);
            }
            let t = 1.0 - z * z;
            hess[(2, 2)] = -6.0 * t * t + 24.0 * z * z * t;
            (t.powi(3), Vec3::new(0.0, 0.0, -6.0 * z * t * t), hess)
        }
    }

    #[test]
    fn transverse_constant_profile_reduces_to_chord_term() {
        let w = Direction::axis(2);
        let breaks = |y: &Vec3| {
            let lo = (-1.0 - y[2]).min(0.0);
            let hi = (1.0 - y[2]).min(0.0);
            if lo < hi { vec![lo, hi] } else { Vec::new() }
        };
        let chord = |y: &Vec3| integrate_between(&breaks(y), |s| Slab.value(&(y + Vec3::new(0.0, 0.0, s))));
        for z in [-0.7, -0.2, 0.0, 0.4, 0.9] {
            let y = Vec3::new(0.3, -0.4, z);
            let q = Slab.value(&y);
            assert!((transport_source(&Slab, &breaks, &y, &w) - 0.5 * q * chord(&y)).abs() < 1e-12);
            // ½∫Q = ¼∫q·C = C²/8
            let expected = -0.25 * q + chord(&y).powi(2) / 8.0;
            assert!((front_ut_nested(&Slab, &breaks, &y, &w) - expected).abs() < 1e-10);
            assert!((front_ut_closed(&Slab, &breaks, &y, &w) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn characteristic_data_support_rule() {
        let w = Direction::axis(2);
        let inside = CharacteristicData::new(Potential::poly_bump(1.0, 4).unwrap().scale(0.5).translate(Vec3::new(0.0, 0.0, -0.2)), w);
        assert!(inside.check_support().is_ok());
        let outside = CharacteristicData::new(Potential::exp_bump(1.0).translate(Vec3::new(-0.5, 0.0, 0.0)), w);
        assert!(matches!(outside.check_support(), Err(LabError::Precondition(_))));
    }
}
