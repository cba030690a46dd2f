//! Inverse-problem side of the lab: the two-potential backscatter identity and its kernel,
//! Born linearization and reconstruction, translation, the sphere energy and Abel chain
//! behind the uniqueness argument, and the monotone-potential experiment.
//!
//! Every distributional statement is checked in δ_ε-smeared form. The solver data satisfy
//! u_ε = u ∗_t δ_ε, and on the backscatter slice s = −2τ this becomes a convolution in τ
//! with a Gaussian of width ε/2, which is what the reference sides are smoothed with.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::farfield::{alpha_window_end, extract_alpha, extract_alpha_ut, measurement_offset, relative_l2, FarFieldTable};
use crate::geometry::{Direction, Grid3D, ScalarField3D, TimeSeries, Vec3};
use crate::harmonics::SphereQuadrature;
use crate::potential::Potential;
use crate::quad::{delta_eps, GaussRule, GaussianSmoother};
use crate::radon::{radon_plane, radon_plane_with, DiskRule};
use crate::solver::{run, ProbeSet, RegionRecord, RegionSpec, RunSummary, WaveRun, WaveScenario};

/// Region of recorded u used for kernel evaluations.
pub const KERNEL_REGION: &str = "kernel";
const SMOOTHER_POINTS: usize = 24;

fn backscatter_direction(omega: &Direction) -> Direction {
    Direction::new(-omega.vec()).expect("negated unit vector")
}

/// Scattering run on [−L, L]³ recording the backscatter plane x·(−ω) = 1 up to the last
/// reflection-free time, plus `extra`.
pub fn backscatter_run(q: &Potential, omega: Direction, half_width: f64, h: f64, extra: ProbeSet) -> Result<WaveRun> {
    let s = WaveScenario::scattering(q.clone(), omega, half_width, h)?;
    run(&s, &extra.plane("backscatter", backscatter_direction(&omega), 1.0))
}

/// Backscatter slice α(−ω, ω, ·) of a run.
pub fn backscatter_slice(run: &WaveRun) -> Result<TimeSeries> {
    extract_alpha(run, &backscatter_direction(&run.scenario.incidence))
}

/// Time history u(x, ·) at a probe point or a recorded region node.
fn history<'a>(run: &'a WaveRun, x: &Vec3) -> Result<Box<dyn Fn(f64) -> f64 + Sync + 'a>> {
    if let Some(p) = run.points.iter().find(|p| (p.x - x).norm() < 1e-9) {
        return Ok(Box::new(move |t| p.series.sample(t)));
    }
    let g = &run.scenario.grid;
    let idx = ((x - g.origin) / g.spacing).map(|v| v.round());
    let on_lattice = ((x - g.origin) / g.spacing - idx).amax() < 1e-6 && idx.iter().all(|&v| v >= 0.0);
    if on_lattice {
        let (i, j, k) = (idx[0] as usize, idx[1] as usize, idx[2] as usize);
        if i < g.dims[0] && j < g.dims[1] && k < g.dims[2] {
            let node = g.index(i, j, k) as u32;
            for r in &run.regions {
                if let Some(slot) = r.slot(node) {
                    return Ok(Box::new(move |t| r.value(slot, t)));
                }
            }
        }
    }
    Err(LabError::Configuration(format!("no recorded history of u at {:?}", [x[0], x[1], x[2]])))
}

/// k(x, ω, τ) = 2(u₁+u₂)(x, 2τ − x·ω) + 2∫_{x·ω}^{2τ−x·ω} u₁(x, s)u₂(x, 2τ − s) ds.
pub fn kernel_k(run1: &WaveRun, run2: &WaveRun, x: &Vec3, tau: f64) -> Result<f64> {
    let omega = run1.scenario.incidence;
    if (omega.vec() - run2.scenario.incidence.vec()).norm() > 1e-12 || run1.scenario.grid != run2.scenario.grid {
        return Err(LabError::Configuration("kernel runs must share ω and grid".into()));
    }
    let xw = omega.dot(x);
    if !(-1.0..=tau).contains(&xw) {
        return Err(LabError::Domain(format!("kernel needs −1 ≤ x·ω ≤ τ, got x·ω = {xw}, τ = {tau}")));
    }
    let (u1, u2) = (history(run1, x)?, history(run2, x)?);
    Ok(kernel_value(&*u1, &*u2, xw, tau, run1.scenario.dt))
}

/// Kernel from two histories; the integral term is dropped when 2τ − x·ω < x·ω, where u
/// vanishes ahead of the front in the unsmeared limit.
fn kernel_value(u1: &dyn Fn(f64) -> f64, u2: &dyn Fn(f64) -> f64, xw: f64, tau: f64, dt: f64) -> f64 {
    let top = 2.0 * tau - xw;
    let mut k = 2.0 * (u1(top) + u2(top));
    if top > xw {
        let n = ((top - xw) / dt).ceil().max(1.0) as usize;
        let step = (top - xw) / n as f64;
        let mut acc = 0.0;
        for j in 0..=n {
            let s = xw + j as f64 * step;
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            acc += w * u1(s) * u2(2.0 * tau - s);
        }
        k += 2.0 * step * acc;
    }
    k
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub tau: Vec<f64>,
    pub omegas: Vec<Direction>,
    /// 8π(α₁ − α₂)(−ω, ω, −2τ), one row per ω.
    pub lhs: Vec<Vec<f64>>,
    /// Smeared Radon term plus kernel term.
    pub rhs: Vec<Vec<f64>>,
    pub radon_term: Vec<Vec<f64>>,
    pub kernel_term: Vec<Vec<f64>>,
    /// ‖lhs − rhs‖ / ‖lhs‖ over all (ω, τ); 0 when both vanish.
    pub discrepancy: f64,
    /// sup |lhs − rhs| / sup 8π|α₁|, the floor used when both sides vanish.
    pub residual_ratio: f64,
    pub grid: RunSummary,
}

/// Configuration of [`identity_check`].
#[derive(Clone, Debug)]
pub struct IdentitySetup {
    pub half_width: f64,
    pub h: f64,
    /// Largest |τ| evaluated.
    pub tau_max: f64,
    /// Keep every `tau_stride`-th point of the native τ lattice (spacing dt/2).
    pub tau_stride: usize,
}

impl Default for IdentitySetup {
    fn default() -> Self {
        IdentitySetup { half_width: 6.0, h: 1.0 / 16.0, tau_max: 1.25, tau_stride: 2 }
    }
}

/// 8π(α₁ − α₂)(−ω, ω, −2τ) against ∫_{x·ω=τ} p dS + ∫_{x·ω≤τ} k p dx with p = q₂ − q₁.
pub fn identity_check(q1: &Potential, q2: &Potential, omegas: &[Direction], setup: &IdentitySetup) -> Result<IdentityReport> {
    let p = Potential::sum(vec![q2.clone(), q1.clone().scale(-1.0)]);
    let mut report = IdentityReport {
        tau: Vec::new(),
        omegas: omegas.to_vec(),
        lhs: Vec::new(),
        rhs: Vec::new(),
        radon_term: Vec::new(),
        kernel_term: Vec::new(),
        discrepancy: 0.0,
        residual_ratio: 0.0,
        grid: WaveScenario::scattering(q2.clone(), Direction::axis(2), setup.half_width, setup.h)?
            .with_t_end(0.0)
            .summary_template(),
    };
    let (mut num, mut den, mut worst, mut scale) = (0.0, 0.0, 0.0f64, 0.0f64);
    for &omega in omegas {
        let region = |q: &Potential| -> Result<ProbeSet> {
            let s = WaveScenario::scattering(q.clone(), omega, setup.half_width, setup.h)?;
            let t_hi = 2.0 * setup.tau_max + 1.0 + 2.0 * s.dt;
            Ok(ProbeSet::new().region(RegionSpec::ball(KERNEL_REGION, &s.grid, 1.0, 1, s.t_start, t_hi)?))
        };
        let r1 = backscatter_run(q1, omega, setup.half_width, setup.h, region(q1)?)?;
        let r2 = backscatter_run(q2, omega, setup.half_width, setup.h, region(q2)?)?;
        report.grid = r2.summary();
        let (a1, a2) = (backscatter_slice(&r1)?, backscatter_slice(&r2)?);
        let eps = r2.scenario.epsilon;
        let dt = r2.scenario.dt;

        // τ lattice: τ = −s/2 on the α lattice
        let n_max = (setup.tau_max / (0.5 * dt)).floor() as i64;
        let tau: Vec<f64> = (-n_max..=n_max)
            .step_by(setup.tau_stride.max(1))
            .map(|n| n as f64 * 0.5 * dt)
            .collect();
        let lhs: Vec<f64> = tau.iter().map(|&t| 8.0 * PI * (a1.sample(-2.0 * t) - a2.sample(-2.0 * t))).collect();
        for &t in &tau {
            if a2.sample(-2.0 * t) == 0.0 && (-2.0 * t < a2.t0 || -2.0 * t > a2.t_end()) {
                return Err(LabError::Configuration(format!("backscatter slice does not cover s = {}", -2.0 * t)));
            }
        }
        let smoother = GaussianSmoother::new(SMOOTHER_POINTS);
        let radon: Vec<f64> = tau
            .par_iter()
            .map(|&t| smoother.smooth(0.5 * eps, t, |tt| radon_plane(&p, &omega, tt)))
            .collect();
        let kernel = kernel_term(&r1, &r2, &p, &tau)?;
        let rhs: Vec<f64> = radon.iter().zip(&kernel).map(|(a, b)| a + b).collect();
        for (l, r) in lhs.iter().zip(&rhs) {
            num += (l - r).powi(2);
            den += l * l;
            worst = worst.max((l - r).abs());
        }
        scale = scale.max(8.0 * PI * a1.peak_abs()).max(8.0 * PI * a2.peak_abs());
        report.tau = tau;
        report.lhs.push(lhs);
        report.rhs.push(rhs);
        report.radon_term.push(radon);
        report.kernel_term.push(kernel);
    }
    report.discrepancy = if den > 0.0 { (num / den).sqrt() } else if num > 0.0 { f64::INFINITY } else { 0.0 };
    report.residual_ratio = if scale > 0.0 { worst / scale } else { worst };
    Ok(report)
}

/// ∫_{x·ω ≤ τ} k(x, ω, τ) p(x) dx by the node rule h³Σ over the recorded ball, with k
/// extended by its smeared tail ahead of the front.
fn kernel_term(r1: &WaveRun, r2: &WaveRun, p: &Potential, tau: &[f64]) -> Result<Vec<f64>> {
    let s = &r2.scenario;
    let reg1 = r1.region(KERNEL_REGION)?;
    let reg2 = r2.region(KERNEL_REGION)?;
    let h3 = s.h().powi(3);
    let omega = s.incidence;
    let need = 2.0 * tau.iter().copied().fold(f64::MIN, f64::max) + 1.0;
    let u1_zero = reg1.data.iter().all(|row| row.iter().all(|&v| v == 0.0));
    let checked: &[&RegionRecord] = if u1_zero { &[reg2] } else { &[reg1, reg2] };
    for reg in checked {
        if reg.levels() > 0 && reg.time(reg.levels() - 1) < need - 1e-9 {
            return Err(LabError::Configuration(format!("kernel region stops before t = {need:.3}")));
        }
    }
    let weights: Vec<(usize, f64, f64)> = reg2
        .positions
        .iter()
        .enumerate()
        .filter_map(|(slot, x)| {
            let v = p.eval(x);
            (v != 0.0).then(|| (slot, v, omega.dot(x)))
        })
        .collect();
    let slot1 = |slot: usize| reg1.slot(reg2.nodes[slot]);
    let out = tau
        .par_iter()
        .map(|&t| {
            weights
                .iter()
                .map(|&(slot, pv, xw)| {
                    let u2 = |tt: f64| reg2.value(slot, tt);
                    let k = if u1_zero {
                        2.0 * u2(2.0 * t - xw)
                    } else {
                        let s1 = slot1(slot).expect("regions share nodes");
                        let u1 = |tt: f64| reg1.value(s1, tt);
                        kernel_value(&u1, &u2, xw, t, s.dt)
                    };
                    h3 * k * pv
                })
                .sum::<f64>()
        })
        .collect();
    Ok(out)
}

impl WaveScenario {
    fn summary_template(&self) -> RunSummary {
        RunSummary {
            h: self.h(),
            dt: self.dt,
            epsilon: self.epsilon,
            half_width: -self.grid.origin[0],
            nodes: self.grid.len(),
            steps: 0,
            t_start: self.t_start,
            t_end: self.t_end,
        }
    }
}

/// Plane convention of the linearized backscatter map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BornConvention {
    /// General formula −1/(4π|θ−ω|)∫_{x·(θ−ω)=s} p dS; at θ = −ω the plane is x·ω = −s/2.
    HalfPlane,
    /// Backscatter plane x·ω = −2s with the same −1/(8π) prefactor.
    DoublePlane,
}

/// Linearized far field: a function value off the diagonal, a delta coefficient on it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Linearized {
    Value(f64),
    Delta(f64),
}

pub fn linearized_forward(p: &Potential, theta: &Direction, omega: &Direction, s: f64, convention: BornConvention) -> Linearized {
    let d = theta.vec() - omega.vec();
    let len = d.norm();
    if len < 1e-12 {
        return Linearized::Delta(-p.integral() / (4.0 * PI));
    }
    let dir = Direction::new(d / len).expect("normalized difference");
    let backscatter = (len - 2.0).abs() < 1e-12;
    match convention {
        BornConvention::DoublePlane if backscatter => Linearized::Value(-radon_plane(p, omega, -2.0 * s) / (8.0 * PI)),
        _ => Linearized::Value(-radon_plane(p, &dir, s / len) / (4.0 * PI * len)),
    }
}

/// δ_ε-smeared linearized data on the s-lattice of `like`.
pub fn linearized_series(
    p: &Potential,
    theta: &Direction,
    omega: &Direction,
    like: &TimeSeries,
    epsilon: f64,
    convention: BornConvention,
) -> Result<TimeSeries> {
    let smoother = GaussianSmoother::new(SMOOTHER_POINTS);
    let rule = DiskRule::default();
    let d = theta.vec() - omega.vec();
    let len = d.norm();
    let samples: Vec<f64> = (0..like.len())
        .into_par_iter()
        .map(|n| {
            let s = like.time(n);
            if len < 1e-12 {
                return -p.integral() / (4.0 * PI) * delta_eps(s, epsilon);
            }
            let dir = Direction::new(d / len).expect("normalized difference");
            let value = |sv: f64| match convention {
                BornConvention::DoublePlane if (len - 2.0).abs() < 1e-12 => {
                    -radon_plane_with(p, omega, -2.0 * sv, &rule) / (8.0 * PI)
                }
                _ => -radon_plane_with(p, &dir, sv / len, &rule) / (4.0 * PI * len),
            };
            smoother.smooth(epsilon, s, value)
        })
        .collect();
    TimeSeries::new(like.t0, like.dt, samples)
}

#[derive(Clone, Debug, Serialize)]
pub struct BornReport {
    pub amplitudes: Vec<f64>,
    /// ‖α_ε/ε − L_ε p‖ / ‖L_ε p‖ per amplitude.
    pub errors: Vec<f64>,
    /// errors[i] / errors[i + 1].
    pub ratios: Vec<f64>,
    /// Slope of log error against log amplitude.
    pub order: f64,
    /// Same errors measured against the solver's own linearization (operator switched off).
    pub discrete_errors: Vec<f64>,
}

/// Runs q = ε·p for each amplitude and measures how α_ε/ε approaches the linearized map.
pub fn born_convergence(
    p: &Potential,
    omega: Direction,
    theta: Direction,
    amplitudes: &[f64],
    half_width: f64,
    h: f64,
) -> Result<BornReport> {
    if amplitudes.len() < 3 || amplitudes.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::DegenerateInput("need at least 3 strictly decreasing amplitudes".into()));
    }
    let plane = ProbeSet::new().plane("far", theta, 1.0);
    let linear = run(&WaveScenario::source_only(p.clone(), -1.0, omega, half_width, h)?, &plane)?;
    let discrete = extract_alpha(&linear, &theta)?;
    let reference = linearized_series(p, &theta, &omega, &discrete, linear.scenario.epsilon, BornConvention::HalfPlane)?;
    let mut errors = Vec::new();
    let mut discrete_errors = Vec::new();
    for &e in amplitudes {
        let r = run(&WaveScenario::scattering(p.clone().scale(e), omega, half_width, h)?, &plane)?;
        let a = extract_alpha(&r, &theta)?;
        let scaled = TimeSeries::new(a.t0, a.dt, a.samples.iter().map(|v| v / e).collect())?;
        errors.push(relative_l2(&scaled, &reference));
        discrete_errors.push(relative_l2(&scaled, &discrete));
    }
    let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let xs: Vec<f64> = amplitudes.iter().map(|a| a.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let order = crate::farfield::least_squares_slope(&xs, &ys);
    Ok(BornReport { amplitudes: amplitudes.to_vec(), errors, ratios, order, discrete_errors })
}

/// Second derivative by a least-squares quadratic over `window` samples centred at `s`.
pub fn smoothed_second_derivative(series: &TimeSeries, s: f64, window: usize) -> Option<f64> {
    let half = (window / 2) as isize;
    let x = (s - series.t0) / series.dt;
    let centre = x.round() as isize;
    if centre - half < 0 || centre + half >= series.len() as isize {
        return None;
    }
    // fit a + b·z + c·z² with z the offset from s in units of dt
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    let mut rhs = nalgebra::Vector3::<f64>::zeros();
    for k in centre - half..=centre + half {
        let z = k as f64 - x;
        let row = nalgebra::Vector3::new(1.0, z, z * z);
        m += row * row.transpose();
        rhs += row * series.samples[k as usize];
    }
    let c = m.lu().solve(&rhs)?;
    Some(2.0 * c[2] / (series.dt * series.dt))
}

/// Window of the α_ss fit.
pub const ALPHA_SS_WINDOW: usize = 7;

/// Born approximation from backscatter slices (entries with θ = −ω) weighted by `weights`
/// (one per entry, a sphere quadrature). Evaluated on nodes in the closed unit ball, zero
/// outside it.
///
/// Default convention: q_b(x) = (4/π)∫_S α_ss(−ω, ω, −2x·ω) dω.
/// Main-text convention: q_b(x) = (1/4π)∫_S α_ss(−ω, ω, −x·ω/2) dω.
pub fn born_reconstruct(
    table: &FarFieldTable,
    weights: &[f64],
    grid: &Grid3D,
    convention: BornConvention,
) -> Result<ScalarField3D> {
    if weights.len() != table.entries.len() {
        return Err(LabError::Configuration("one quadrature weight per backscatter slice is required".into()));
    }
    let mut slices = Vec::with_capacity(table.entries.len());
    for e in &table.entries {
        let theta = table.directions[e.theta_index].vec();
        let omega = table.directions[e.omega_index].vec();
        if (theta + omega).norm() > 1e-12 {
            return Err(LabError::Configuration("born_reconstruct needs backscatter slices θ = −ω".into()));
        }
        slices.push((table.directions[e.omega_index], &e.alpha));
    }
    let values: Vec<Result<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let x = grid.position_of(idx);
            if x.norm() > 1.0 + 1e-12 {
                return Ok(0.0);
            }
            born_value(&slices, weights, &x, convention)
        })
        .collect();
    ScalarField3D::new(grid.clone(), values.into_iter().collect::<Result<_>>()?)
}

/// q_b at one point from (ω, α(−ω, ω, ·)) pairs.
pub fn born_value(slices: &[(Direction, &TimeSeries)], weights: &[f64], x: &Vec3, convention: BornConvention) -> Result<f64> {
    let (factor, arg) = match convention {
        BornConvention::HalfPlane => (4.0 / PI, -2.0),
        BornConvention::DoublePlane => (1.0 / (4.0 * PI), -0.5),
    };
    let mut acc = 0.0;
    for ((omega, alpha), w) in slices.iter().zip(weights) {
        let s = arg * omega.dot(x);
        let d2 = smoothed_second_derivative(alpha, s, ALPHA_SS_WINDOW)
            .ok_or_else(|| LabError::Domain(format!("backscatter slice does not cover s = {s:.4}")))?;
        acc += w * d2;
    }
    Ok(factor * acc)
}

/// Backscatter table built from slices at the quadrature nodes of `quad`.
pub fn backscatter_table(quad: &SphereQuadrature, slices: Vec<TimeSeries>, epsilon: f64) -> Result<FarFieldTable> {
    let n = quad.nodes.len();
    let mut dirs = quad.nodes.clone();
    dirs.extend(quad.nodes.iter().map(backscatter_direction));
    let mut table = FarFieldTable::new(dirs, epsilon);
    for (k, a) in slices.into_iter().enumerate() {
        table.push(n + k, k, a)?;
    }
    Ok(table)
}

#[derive(Clone, Debug, Serialize)]
pub struct BornTrendReport {
    pub amplitudes: Vec<f64>,
    /// ‖q_b − q‖₂ / ‖q‖₂ over grid nodes in the unit ball, per amplitude.
    pub errors: Vec<f64>,
    /// sup_k sup|α_k − α_0| / sup|α_0| across the probed incidences, per amplitude.
    pub slice_spread: Vec<f64>,
    /// Largest (max − min) of q_b over a sphere |x| = ρ, across all probed incidences,
    /// relative to sup|q_b|, per amplitude.
    pub radial_spread: Vec<f64>,
}

/// Radii of the spheres on which radial symmetry of q_b is checked.
pub const RADIAL_CHECK_RADII: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

/// Born reconstruction of q = a·p for radial p. The backscatter slice is the same for every
/// incidence, so each probed incidence is simulated once and its slice replicated over all
/// nodes of `quad`; the spread between probed incidences bounds what replication hides.
pub fn born_radial_trend(
    p: &Potential,
    amplitudes: &[f64],
    probes: &[Direction],
    quad: &SphereQuadrature,
    grid: &Grid3D,
    half_width: f64,
    h: f64,
) -> Result<BornTrendReport> {
    if probes.is_empty() {
        return Err(LabError::DegenerateInput("at least one probed incidence is required".into()));
    }
    let sample_dirs = crate::geometry::fibonacci_directions(26);
    let inside: Vec<Vec3> = (0..grid.len()).map(|i| grid.position_of(i)).filter(|x| x.norm() <= 1.0 + 1e-12).collect();
    let mut report = BornTrendReport { amplitudes: amplitudes.to_vec(), errors: vec![], slice_spread: vec![], radial_spread: vec![] };
    for &a in amplitudes {
        let q = p.clone().scale(a);
        let slices = probes
            .iter()
            .map(|&w| backscatter_slice(&backscatter_run(&q, w, half_width, h, ProbeSet::new())?))
            .collect::<Result<Vec<_>>>()?;
        let peak = slices[0].peak_abs();
        let spread = slices[1..]
            .iter()
            .map(|sl| slices[0].iter().map(|(s, v)| (v - sl.sample(s)).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        report.slice_spread.push(if peak > 0.0 { spread / peak } else { spread });

        let replicate = |sl: &TimeSeries| -> Vec<(Direction, TimeSeries)> { quad.nodes.iter().map(|&w| (w, sl.clone())).collect() };
        let first = replicate(&slices[0]);
        let first: Vec<(Direction, &TimeSeries)> = first.iter().map(|(w, s)| (*w, s)).collect();
        let qb: Vec<f64> = inside
            .par_iter()
            .map(|x| born_value(&first, &quad.weights, x, BornConvention::HalfPlane))
            .collect::<Result<_>>()?;
        let (mut num, mut den) = (0.0, 0.0);
        for (x, v) in inside.iter().zip(&qb) {
            let t = q.eval(x);
            num += (v - t).powi(2);
            den += t * t;
        }
        report.errors.push(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() });
        let qb_peak = qb.iter().fold(0.0f64, |m, v| m.max(v.abs()));

        let mut worst = 0.0f64;
        for &rho in &RADIAL_CHECK_RADII {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for sl in &slices {
                let rep = replicate(sl);
                let rep: Vec<(Direction, &TimeSeries)> = rep.iter().map(|(w, s)| (*w, s)).collect();
                for d in &sample_dirs {
                    let v = born_value(&rep, &quad.weights, &(d.vec() * rho), BornConvention::HalfPlane)?;
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            worst = worst.max(hi - lo);
        }
        report.radial_spread.push(if qb_peak > 0.0 { worst / qb_peak } else { worst });
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct TranslationReport {
    pub shift: f64,
    /// sup |β(s) − α(s + a·(θ−ω))| / sup |α|.
    pub discrepancy: f64,
    /// Shift maximizing the cross-correlation of β against α.
    pub measured_shift: f64,
}

/// Simulates q and q(· + a) and compares β(θ, ω, s) with α(θ, ω, s + a·(θ − ω)).
pub fn translation_check(
    q: &Potential,
    a: Vec3,
    theta: Direction,
    omega: Direction,
    half_width: f64,
    h: f64,
) -> Result<TranslationReport> {
    let moved = q.clone().translate(a);
    let record = |p: &Potential| -> Result<WaveRun> {
        let s = WaveScenario::scattering(p.clone(), omega, half_width, h)?;
        s.validate()?;
        let c = measurement_offset(p, &theta);
        let end = alpha_window_end(p, &theta, &omega, s.epsilon, c);
        if s.t_end < end - 1e-9 {
            return Err(LabError::Configuration(format!(
                "far field on x·θ = {c} needs data up to t = {end:.3} but reflections arrive at t = {:.3}; \
                 use a half-width L ≥ {:.3}",
                s.t_end,
                s.clone().with_t_end(end).required_half_width(None)
            )));
        }
        run(&s, &ProbeSet::new().plane("far", theta, c))
    };
    let run_q = record(q)?;
    let run_m = record(&moved).map_err(|e| e.context("translated potential"))?;
    let alpha = extract_alpha(&run_q, &theta)?;
    let beta = extract_alpha(&run_m, &theta)?;
    let shift = a.dot(&(theta.vec() - omega.vec()));
    let mut worst = 0.0f64;
    for (s, b) in beta.iter() {
        let sa = s + shift;
        if sa >= alpha.t0 && sa <= alpha.t_end() {
            worst = worst.max((b - alpha.sample(sa)).abs());
        }
    }
    let peak = alpha.peak_abs();
    let discrepancy = if peak > 0.0 { worst / peak } else { worst };
    Ok(TranslationReport { shift, discrepancy, measured_shift: best_shift(&alpha, &beta, shift) })
}

/// Maximizer of c(σ) = Σ β(s)α(s + σ), searched on a fine grid around `guess`.
fn best_shift(alpha: &TimeSeries, beta: &TimeSeries, guess: f64) -> f64 {
    let corr = |sig: f64| beta.iter().map(|(s, b)| b * alpha.sample(s + sig)).sum::<f64>();
    let mut best = (f64::MIN, guess);
    let span = 0.5;
    let n = 400;
    for k in 0..=n {
        let sig = guess - span + 2.0 * span * k as f64 / n as f64;
        let c = corr(sig);
        if c > best.0 {
            best = (c, sig);
        }
    }
    // golden-section polish within one coarse cell
    let (mut lo, mut hi) = (best.1 - 2.0 * span / n as f64, best.1 + 2.0 * span / n as f64);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..40 {
        let (m1, m2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if corr(m1) > corr(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyProfile {
    pub rho: Vec<f64>,
    pub values: Vec<f64>,
}

impl EnergyProfile {
    /// Linear interpolation, zero beyond ρ = 1 and clamped below the first node.
    pub fn at(&self, rho: f64) -> f64 {
        if rho > 1.0 || self.rho.is_empty() {
            return 0.0;
        }
        let k = self.rho.partition_point(|&r| r < rho);
        if k == 0 {
            return self.values[0];
        }
        if k == self.rho.len() {
            let last = self.rho.len() - 1;
            // straight to zero at ρ = 1
            let (r0, v0) = (self.rho[last], self.values[last]);
            return if r0 >= 1.0 { v0 } else { v0 * (1.0 - rho) / (1.0 - r0) };
        }
        let (r0, r1) = (self.rho[k - 1], self.rho[k]);
        let f = (rho - r0) / (r1 - r0);
        self.values[k - 1] * (1.0 - f) + self.values[k] * f
    }
}

/// E(ρ) = ∫_S |p(ρω)|² dω on a ρ-grid.
pub fn energy_profile(p: &Potential, rho: &[f64], quad: &SphereQuadrature) -> Result<EnergyProfile> {
    if rho.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
        return Err(LabError::Domain("energy profile radii must lie in (0, 1]".into()));
    }
    let values = rho.iter().map(|&r| quad.integrate(|w| p.eval(&(w * r)).powi(2))).collect();
    Ok(EnergyProfile { rho: rho.to_vec(), values })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AbelChain {
    pub lhs: f64,
    pub abel_rhs: f64,
    pub iterated_rhs: f64,
}

/// E(τ), ∫_τ¹ E(ρ)/√(ρ−τ) dρ (with ρ = τ + σ²) and π∫_τ¹ E(s) ds.
pub fn abel_chain_fn(e: impl Fn(f64) -> f64, tau: f64) -> Result<AbelChain> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(LabError::Domain(format!("Abel chain needs 0 < τ < 1, got {tau}")));
    }
    let rule = GaussRule::legendre(24);
    let top = (1.0 - tau).sqrt();
    let abel_rhs = 2.0 * rule.composite(0.0, top, 8, |sig| e(tau + sig * sig));
    let iterated_rhs = PI * rule.composite(tau, 1.0, 8, &e);
    Ok(AbelChain { lhs: e(tau), abel_rhs, iterated_rhs })
}

pub fn abel_chain(profile: &EnergyProfile, tau: f64) -> Result<AbelChain> {
    abel_chain_fn(|r| profile.at(r), tau)
}

/// ∫_τ^s dρ / (√(ρ−τ)√(s−ρ)) through ρ = τ + (s−τ)(1 − cos φ)/2, which cancels both
/// endpoint singularities; equals π for every τ < s.
pub fn beta_integral(tau: f64, s: f64) -> Result<f64> {
    if !(s > tau) {
        return Err(LabError::Domain(format!("beta integral needs τ < s, got τ = {tau}, s = {s}")));
    }
    let len = s - tau;
    let rule = GaussRule::legendre(16);
    Ok(rule.integrate(0.0, PI, |phi| {
        let rho = tau + 0.5 * len * (1.0 - phi.cos());
        let jac = 0.5 * len * phi.sin();
        let den = ((rho - tau) * (s - rho)).sqrt();
        if den == 0.0 {
            2.0 / len.max(f64::MIN_POSITIVE) * len / 2.0
        } else {
            jac / den
        }
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneReport {
    /// sup |α₂ − α₁| on the backscatter slice.
    pub data_difference: f64,
    /// sup of the gradient-form vs u_t-form disagreement over both runs.
    pub noise_floor: f64,
    pub tau: Vec<f64>,
    /// P(τ, ω) of p = q₂ − q₁.
    pub radon: Vec<f64>,
    /// k_max · ∫_{−1}^τ P(t, ω) dt.
    pub gronwall_bound: Vec<f64>,
    pub k_max: f64,
    pub radon_nonnegative: bool,
}

/// Sampling spacing of the positivity check of q₂ − q₁.
pub const POSITIVITY_SPACING: f64 = 1.0 / 32.0;

/// Comparison harness for q₂ ≥ q₁ at a single incidence.
pub fn monotone_experiment(q1: &Potential, q2: &Potential, omega: Direction, half_width: f64, h: f64) -> Result<MonotoneReport> {
    let p = Potential::sum(vec![q2.clone(), q1.clone().scale(-1.0)]);
    if let Some((lo, hi)) = p.support_box() {
        let n = |a: usize| ((hi[a] - lo[a]) / POSITIVITY_SPACING).ceil() as usize + 1;
        for i in 0..n(0) {
            for j in 0..n(1) {
                for k in 0..n(2) {
                    let x = lo + Vec3::new(i as f64, j as f64, k as f64) * POSITIVITY_SPACING;
                    if p.eval(&x) < -1e-14 {
                        return Err(LabError::Precondition(format!(
                            "q₂ − q₁ is negative at {:?}",
                            [x[0], x[1], x[2]]
                        )));
                    }
                }
            }
        }
    }
    let tau_max = 1.0;
    let region = |q: &Potential| -> Result<ProbeSet> {
        let s = WaveScenario::scattering(q.clone(), omega, half_width, h)?;
        let t_hi = 2.0 * tau_max + 1.0 + 4.0 * s.dt;
        Ok(ProbeSet::new().region(RegionSpec::ball(KERNEL_REGION, &s.grid, 1.0, 2, s.t_start, t_hi)?))
    };
    let r1 = backscatter_run(q1, omega, half_width, h, region(q1)?)?;
    let r2 = backscatter_run(q2, omega, half_width, h, region(q2)?)?;
    let back = backscatter_direction(&omega);
    let (a1, a2) = (backscatter_slice(&r1)?, backscatter_slice(&r2)?);
    let data_difference = a1.iter().map(|(s, v)| (v - a2.sample(s)).abs()).fold(0.0, f64::max);
    let mut noise_floor = 0.0f64;
    for r in [&r1, &r2] {
        let (g, d) = (extract_alpha(r, &back)?, extract_alpha_ut(r, &back)?);
        noise_floor = noise_floor.max(g.samples.iter().zip(&d.samples).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    }
    let tau: Vec<f64> = (0..=40).map(|i| -1.0 + 2.0 * i as f64 / 40.0).collect();
    let radon: Vec<f64> = tau.iter().map(|&t| radon_plane(&p, &omega, t)).collect();
    let k_max = kernel_max(&r1, &r2, &tau)?;
    let mut gronwall_bound = Vec::with_capacity(tau.len());
    let mut acc = 0.0;
    for i in 0..tau.len() {
        if i > 0 {
            acc += 0.5 * (radon[i] + radon[i - 1]) * (tau[i] - tau[i - 1]);
        }
        gronwall_bound.push(k_max * acc);
    }
    Ok(MonotoneReport {
        data_difference,
        noise_floor,
        radon_nonnegative: radon.iter().all(|&v| v >= -1e-12),
        tau,
        radon,
        gronwall_bound,
        k_max,
    })
}

/// max (|k| + |k_τ|) over recorded nodes with −1 ≤ x·ω ≤ τ, k_τ by central differences.
fn kernel_max(r1: &WaveRun, r2: &WaveRun, tau: &[f64]) -> Result<f64> {
    let reg1: &RegionRecord = r1.region(KERNEL_REGION)?;
    let reg2: &RegionRecord = r2.region(KERNEL_REGION)?;
    let omega = r2.scenario.incidence;
    let dt = r2.scenario.dt;
    let dtau = 0.5 * dt;
    let best = reg2
        .positions
        .par_iter()
        .enumerate()
        .map(|(slot, x)| {
            let xw = omega.dot(x);
            let s1 = reg1.slot(reg2.nodes[slot]).expect("regions share nodes");
            let u1 = |t: f64| reg1.value(s1, t);
            let u2 = |t: f64| reg2.value(slot, t);
            let mut m = 0.0f64;
            for &t in tau {
                if t < xw || t - dtau < xw || xw < -1.0 {
                    continue;
                }
                let k = kernel_value(&u1, &u2, xw, t, dt);
                let kt = (kernel_value(&u1, &u2, xw, t + dtau, dt) - kernel_value(&u1, &u2, xw, t - dtau, dt)) / (2.0 * dtau);
                m = m.max(k.abs() + kt.abs());
            }
            m
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}
