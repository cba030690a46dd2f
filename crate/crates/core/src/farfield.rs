//! Far-field pattern α(θ, ω, s) from plane probes, and the forward-map properties that can
//! be measured on it.
//!
//! With P(c, t) = ∫_{x·θ=c} u dS and F(c, t) = ∫_{x·θ=c} θ·∇u dS,
//! α(θ, ω, s) = −F(1, 1 − s)/2π. Planes farther out are mapped back by the transport
//! relation P(c, t) = P(1, t − c + 1), so a probe on x·θ = c reads α(s) = −F(c, c − s)/2π.
//! Samples are reversed rather than resampled, keeping Δs = dt.

use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::geometry::{Direction, TimeSeries, Vec3};
use crate::potential::Potential;
use crate::solver::{PlaneRecord, ProbeSet, WaveRun};

/// Offset of the measurement plane x·θ = 1.
pub const MEASUREMENT_OFFSET: f64 = 1.0;

fn find_plane<'a>(run: &'a WaveRun, theta: &Direction) -> Result<&'a PlaneRecord> {
    run.planes
        .iter()
        .filter(|p| (p.theta.vec() - theta.vec()).norm() < 1e-12 && p.offset >= MEASUREMENT_OFFSET - 1e-12)
        .min_by(|a, b| a.offset.total_cmp(&b.offset))
        .ok_or_else(|| {
            LabError::Configuration(format!(
                "no plane probe on x·θ = c with c ≥ 1 for θ = {:?}",
                [theta.vec()[0], theta.vec()[1], theta.vec()[2]]
            ))
        })
}

/// Smallest plane offset c ≥ 1 with the plane x·θ = c clear of the support of q.
pub fn measurement_offset(q: &Potential, theta: &Direction) -> f64 {
    q.support_balls().iter().map(|(c, r)| theta.dot(c) + r).fold(MEASUREMENT_OFFSET, f64::max)
}

/// Last time the plane x·θ = `offset` must be recorded to see all of α(θ, ω, ·) for q: the
/// delay support is {y·(θ − ω)} over supp q, widened by 4ε, and s = offset − t.
pub fn alpha_window_end(q: &Potential, theta: &Direction, omega: &Direction, epsilon: f64, offset: f64) -> f64 {
    let d = theta.vec() - omega.vec();
    let s_min = q
        .support_balls()
        .iter()
        .map(|(c, r)| c.dot(&d) - r * d.norm())
        .fold(f64::INFINITY, f64::min);
    offset - s_min + 4.0 * epsilon
}

/// Maps a time series on the plane x·θ = c to the delay variable s = c − t.
fn to_delay(series: &[f64], t0: f64, dt: f64, c: f64, scale: f64) -> Result<TimeSeries> {
    let n = series.len();
    let t_last = t0 + (n.max(1) - 1) as f64 * dt;
    let samples = series.iter().rev().map(|v| scale * v).collect();
    TimeSeries::new(c - t_last, dt, samples)
}

/// α(θ, ω, ·) from the normal-flux probe.
pub fn extract_alpha(run: &WaveRun, theta: &Direction) -> Result<TimeSeries> {
    let p = find_plane(run, theta)?;
    to_delay(&p.flux.samples, p.flux.t0, p.flux.dt, p.offset, -1.0 / (2.0 * PI))
}

/// α(θ, ω, ·) from the time derivative of the plane integral of u, +(1/2π)∂_t P.
pub fn extract_alpha_ut(run: &WaveRun, theta: &Direction) -> Result<TimeSeries> {
    let p = find_plane(run, theta)?;
    let d = time_derivative(&p.value.samples, p.value.dt);
    to_delay(&d, p.value.t0, p.value.dt, p.offset, 1.0 / (2.0 * PI))
}

/// Centred differences inside, second-order one-sided at the ends.
pub(crate) fn time_derivative(v: &[f64], dt: f64) -> Vec<f64> {
    let n = v.len();
    if n < 3 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| match i {
            0 => (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt),
            _ if i == n - 1 => (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dt),
            _ => (v[i + 1] - v[i - 1]) / (2.0 * dt),
        })
        .collect()
}

/// Relative L² distance ‖a − b‖/‖b‖ over the overlap of two series on the same lattice.
pub fn relative_l2(a: &TimeSeries, b: &TimeSeries) -> f64 {
    let (num, den) = overlap(a, b).fold((0.0, 0.0), |(n, d), (x, y)| (n + (x - y).powi(2), d + y * y));
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

fn overlap<'a>(a: &'a TimeSeries, b: &'a TimeSeries) -> impl Iterator<Item = (f64, f64)> + 'a {
    b.iter().filter_map(move |(t, y)| {
        let x = (t - a.t0) / a.dt;
        let k = x.round();
        ((x - k).abs() < 1e-6 && k >= 0.0 && (k as usize) < a.len()).then(|| (a.samples[k as usize], y))
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FarFieldEntry {
    pub theta_index: usize,
    pub omega_index: usize,
    pub alpha: TimeSeries,
}

/// α sampled on uniform s-grids for a set of (θ, ω) pairs; the data are δ_ε-smeared.
#[derive(Clone, Debug, Serialize)]
pub struct FarFieldTable {
    pub directions: Vec<Direction>,
    pub entries: Vec<FarFieldEntry>,
    pub epsilon: f64,
}

impl FarFieldTable {
    pub fn new(directions: Vec<Direction>, epsilon: f64) -> Self {
        FarFieldTable { directions, entries: Vec::new(), epsilon }
    }

    pub fn push(&mut self, theta_index: usize, omega_index: usize, alpha: TimeSeries) -> Result<()> {
        if theta_index >= self.directions.len() || omega_index >= self.directions.len() {
            return Err(LabError::Configuration("far-field entry refers to an unknown direction".into()));
        }
        self.entries.push(FarFieldEntry { theta_index, omega_index, alpha });
        Ok(())
    }

    pub fn get(&self, theta_index: usize, omega_index: usize) -> Option<&TimeSeries> {
        self.entries
            .iter()
            .find(|e| e.theta_index == theta_index && e.omega_index == omega_index)
            .map(|e| &e.alpha)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta_index,omega_index,s,alpha\n");
        for e in &self.entries {
            for (s, a) in e.alpha.iter() {
                out += &format!("{},{},{:.10e},{:.12e}\n", e.theta_index, e.omega_index, s, a);
            }
        }
        out
    }

    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "epsilon": self.epsilon,
            "directions": self.directions.iter().map(|d| [d.vec()[0], d.vec()[1], d.vec()[2]]).collect::<Vec<_>>(),
            "columns": ["theta_index", "omega_index", "s", "alpha"],
        })
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv, self.to_csv()).map_err(|e| LabError::io(&csv, e))?;
        let json = dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&self.sidecar()).expect("sidecar serializes");
        std::fs::write(&json, text).map_err(|e| LabError::io(&json, e))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TransportReport {
    /// sup |P(τ₂, t) − P(τ₁, t − τ₂ + τ₁)| / sup |P(τ₁, ·)| over the common window.
    pub discrepancy: f64,
    pub peak: f64,
    pub window: (f64, f64),
}

/// Compares plane integrals of u on x·θ = τ₁ and x·θ = τ₂ after the unit-speed shift.
pub fn transport_check(run: &WaveRun, theta: &Direction, tau1: f64, tau2: f64) -> Result<TransportReport> {
    if tau1 < 1.0 || tau2 < 1.0 {
        return Err(LabError::Domain(format!("transport planes need τ ≥ 1, got {tau1} and {tau2}")));
    }
    let p1 = &run.plane_at(theta, tau1)?.value;
    let p2 = &run.plane_at(theta, tau2)?.value;
    let shift = tau2 - tau1;
    let lo = p2.t0.max(p1.t0 + shift);
    let hi = p2.t_end().min(p1.t_end() + shift);
    let peak = p1.peak_abs();
    let mut worst = 0.0f64;
    for (t, v) in p2.iter() {
        if t >= lo && t <= hi {
            worst = worst.max((v - p1.sample(t - shift)).abs());
        }
    }
    let discrepancy = if peak > 0.0 { worst / peak } else { worst };
    Ok(TransportReport { discrepancy, peak, window: (lo, hi) })
}

/// Point probes at r·θ (+ x*) for the Friedlander limit, named by [`friedlander_probe_name`].
pub fn friedlander_probes(mut probes: ProbeSet, theta: &Direction, radii: &[f64], offset: Option<Vec3>) -> ProbeSet {
    for &r in radii {
        probes = probes.point(&friedlander_probe_name(r, false), theta.vec() * r);
        if let Some(o) = offset {
            probes = probes.point(&friedlander_probe_name(r, true), o + theta.vec() * r);
        }
    }
    probes
}

pub fn friedlander_probe_name(r: f64, offset: bool) -> String {
    format!("ray-{}{r:.3}", if offset { "offset-" } else { "" })
}

#[derive(Clone, Debug, Serialize)]
pub struct FriedlanderReport {
    pub radii: Vec<f64>,
    /// ‖r·u(rθ, r − ·) − α‖ / ‖α‖ per radius.
    pub deviations: Vec<f64>,
    /// −slope of log(deviation) against log(r).
    pub rate: f64,
    /// ‖offset series − axial series‖ / ‖axial series‖ at the largest radius.
    pub offset_deviation: Option<f64>,
}

/// r·u(x, r − s) on the s-grid of `alpha`.
pub fn scaled_ray_series(run: &WaveRun, r: f64, offset: bool, alpha: &TimeSeries) -> Result<TimeSeries> {
    let u = &run.point(&friedlander_probe_name(r, offset))?.series;
    let samples = alpha.iter().map(|(s, _)| r * u.sample(r - s)).collect();
    TimeSeries::new(alpha.t0, alpha.dt, samples)
}

/// Fits the decay of r·u(rθ, r − s) towards α(θ, ω, s) over the s-window where α is
/// recorded and every ray probe is inside its record.
pub fn friedlander_estimate(run: &WaveRun, theta: &Direction, radii: &[f64]) -> Result<FriedlanderReport> {
    if radii.len() < 3 {
        return Err(LabError::DegenerateInput(format!("need at least 3 radii, got {}", radii.len())));
    }
    let alpha = extract_alpha(run, theta)?;
    let window = |s: f64| {
        radii.iter().all(|&r| {
            run.point(&friedlander_probe_name(r, false))
                .is_ok_and(|p| r - s >= p.series.t0 && r - s <= p.series.t_end())
        })
    };
    let kept: Vec<f64> = alpha.iter().map(|(s, a)| if window(s) { a } else { 0.0 }).collect();
    let alpha = TimeSeries::new(alpha.t0, alpha.dt, kept)?;
    let masked = |r: f64, offset: bool| -> Result<TimeSeries> {
        let ray = scaled_ray_series(run, r, offset, &alpha)?;
        let kept = ray.iter().map(|(s, v)| if window(s) { v } else { 0.0 }).collect();
        TimeSeries::new(ray.t0, ray.dt, kept)
    };
    let deviations = radii
        .iter()
        .map(|&r| Ok(relative_l2(&masked(r, false)?, &alpha)))
        .collect::<Result<Vec<_>>>()?;
    let r_max = radii.iter().copied().fold(f64::MIN, f64::max);
    let offset_deviation = match run.point(&friedlander_probe_name(r_max, true)) {
        Ok(_) => Some(relative_l2(&masked(r_max, true)?, &masked(r_max, false)?)),
        Err(_) => None,
    };
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = deviations.iter().map(|d| d.ln()).collect();
    let rate = -least_squares_slope(&xs, &ys);
    Ok(FriedlanderReport { radii: radii.to_vec(), deviations, rate, offset_deviation })
}

pub(crate) fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, Serialize)]
pub struct PeakScattering {
    /// ∫ α(ω, ω, s) ds over |s| ≤ window.
    pub coefficient: f64,
    /// −(1/4π)∫q, the delta coefficient implied by the definition of α.
    pub reference: f64,
    pub relative_error: f64,
    pub window: f64,
}

/// Delta coefficient of the forward slice: integrates α(ω, ω, ·) over |s| ≤ 4ε, where the
/// smeared delta lives.
pub fn peak_scattering_coefficient(run: &WaveRun) -> Result<PeakScattering> {
    let s = &run.scenario;
    let alpha = extract_alpha(run, &s.incidence)?;
    let window = s.tail_sigmas * s.epsilon;
    if alpha.t0 > -window || alpha.t_end() < window {
        return Err(LabError::Configuration(format!(
            "forward slice covers s ∈ [{:.3}, {:.3}] but |s| ≤ {window:.3} is needed",
            alpha.t0,
            alpha.t_end()
        )));
    }
    let mut coefficient = 0.0;
    for (sv, a) in alpha.iter() {
        if sv.abs() <= window {
            let edge = (sv.abs() - window).abs() < 0.5 * alpha.dt;
            coefficient += if edge { 0.5 } else { 1.0 } * alpha.dt * a;
        }
    }
    let reference = -s.source.integral() / (4.0 * PI);
    let relative_error = if reference != 0.0 {
        (coefficient - reference).abs() / reference.abs()
    } else {
        coefficient.abs()
    };
    Ok(PeakScattering { coefficient, reference, relative_error, window })
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportReport {
    /// sup |α(−ω, ω, s)| over s > 2 + 3ε, relative to the slice peak.
    pub tail_ratio: f64,
    pub peak: f64,
    pub threshold: f64,
}

/// Backscatter slice beyond s = 2 + 3ε, relative to its peak.
pub fn backscatter_support(run: &WaveRun) -> Result<SupportReport> {
    let s = &run.scenario;
    let back = Direction::new(-s.incidence.vec())?;
    let alpha = extract_alpha(run, &back)?;
    let threshold = 2.0 + 3.0 * s.epsilon;
    let peak = alpha.peak_abs();
    let tail = alpha.iter().filter(|(sv, _)| *sv > threshold).fold(0.0f64, |m, (_, a)| m.max(a.abs()));
    if !alpha.iter().any(|(sv, _)| sv > threshold) {
        return Err(LabError::Configuration(format!("backscatter slice ends before s = {threshold:.3}")));
    }
    Ok(SupportReport { tail_ratio: if peak > 0.0 { tail / peak } else { 0.0 }, peak, threshold })
}
