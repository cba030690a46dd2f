//! Leapfrog finite-difference solver for u_tt − Δu + V u = w·S·δ_ε(t − x·ω).
//!
//! The scattering problem is V = S = q with weight w = −1. Keeping the operator potential V
//! and the source profile S separate lets the same kernel drive source-only linearity
//! checks and the characteristic-data construction (S = ω·∇f, w = +2).

mod checks;
mod probes;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::geometry::{Direction, Grid3D, ScalarField3D, TimeSeries, Vec3};
use crate::potential::Potential;
use crate::quad::delta_eps;

pub use checks::{
    a0_reference, a1_reference, a1_reference_nested, characteristic_bound_check, front_fit, front_region, front_t_end,
    front_ut_closed, front_ut_nested, transport_source, u_star_norm, u_star_region, u_star_run, ut_characteristic_check,
    wavefront_trace_check, CharacteristicBound, CharacteristicData, FrontFit, TraceReport, FRONT_REGION,
    FRONT_SAMPLE_SPACING, U_STAR_REGION,
};
pub use probes::{PlaneRecord, PlaneSpec, PointRecord, PointSpec, ProbeSet, RegionRecord, RegionSpec};

/// CFL-safe default ratio dt / h.
pub const DEFAULT_CFL: f64 = 0.9;
/// Gaussian tail, in units of ε, beyond which the regularized source is treated as off.
pub const DEFAULT_TAIL_SIGMAS: f64 = 4.0;
/// Lead time, in units of ε, between the start of the run and the first source contact.
pub const START_SIGMAS: f64 = 6.0;

pub fn max_stable_dt(h: f64) -> f64 {
    DEFAULT_CFL * h / 3f64.sqrt()
}

#[derive(Clone, Debug)]
pub struct WaveScenario {
    /// Potential V in the operator.
    pub operator: Potential,
    /// Source profile S.
    pub source: Potential,
    /// Weight w multiplying S·δ_ε(t − x·ω).
    pub source_weight: f64,
    pub incidence: Direction,
    pub grid: Grid3D,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub epsilon: f64,
    pub tail_sigmas: f64,
}

impl WaveScenario {
    /// The scattering problem for q on the cube [−L, L]³ with defaults ε = 4h,
    /// dt = 0.9h/√3, t_start six widths ahead of the support and t_end at the last time
    /// plane probes are free of boundary reflections.
    pub fn scattering(q: Potential, incidence: Direction, half_width: f64, h: f64) -> Result<Self> {
        let source = q.clone();
        WaveScenario::general(q, source, -1.0, incidence, half_width, h)
    }

    /// Free operator (V = 0) driven by w·S·δ_ε.
    pub fn source_only(source: Potential, weight: f64, incidence: Direction, half_width: f64, h: f64) -> Result<Self> {
        WaveScenario::general(Potential::zero(), source, weight, incidence, half_width, h)
    }

    pub fn general(
        operator: Potential,
        source: Potential,
        source_weight: f64,
        incidence: Direction,
        half_width: f64,
        h: f64,
    ) -> Result<Self> {
        let grid = Grid3D::cube(half_width, h)?;
        let epsilon = 4.0 * h;
        let mut s = WaveScenario {
            operator,
            source,
            source_weight,
            incidence,
            grid,
            dt: max_stable_dt(h),
            t_start: 0.0,
            t_end: 0.0,
            epsilon,
            tail_sigmas: DEFAULT_TAIL_SIGMAS,
        };
        s.reset_times();
        Ok(s)
    }

    fn reset_times(&mut self) {
        let front = self.support_front().unwrap_or(-1.0);
        self.t_start = front - START_SIGMAS * self.epsilon;
        let safe = self.plane_safe_time();
        self.t_end = if safe.is_finite() { safe.max(self.t_start + self.dt) } else { self.t_start + self.dt };
    }

    /// Changes ε and re-derives the default time window.
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self.reset_times();
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_t_start(mut self, t_start: f64) -> Self {
        self.t_start = t_start;
        self
    }

    pub fn h(&self) -> f64 {
        self.grid.spacing
    }

    /// Smallest x·ω over the source support.
    pub fn support_front(&self) -> Option<f64> {
        self.source.support_extent(&self.incidence).map(|(lo, _)| lo)
    }

    /// Earliest time the regularized source is on anywhere.
    pub fn emission_start(&self) -> f64 {
        self.support_front()
            .map_or(f64::INFINITY, |f| f - self.tail_sigmas * self.epsilon)
    }

    /// Smallest distance from a source support ball to the box boundary.
    fn clearance(&self) -> f64 {
        self.source
            .support_balls()
            .iter()
            .map(|(c, r)| self.grid.distance_to_boundary(c) - r)
            .fold(f64::INFINITY, f64::min)
    }

    /// Earliest time a disturbance can reach the box boundary.
    pub fn boundary_hit_time(&self) -> f64 {
        self.emission_start() + self.clearance()
    }

    /// Last time a plane integral is trusted: the moment the source's support front (not
    /// its Gaussian tail) has had time to reach the boundary. Plane integrals span the whole
    /// cross-section, so they see the walls as soon as appreciable field arrives there.
    pub fn plane_safe_time(&self) -> f64 {
        self.support_front().map_or(f64::INFINITY, |f| f + self.clearance())
    }

    /// Last time the field at `x` is guaranteed free of boundary reflections.
    pub fn point_safe_time(&self, x: &Vec3) -> f64 {
        self.boundary_hit_time() + self.grid.distance_to_boundary(x).max(0.0)
    }

    /// Half-width of the origin-centred cube needed to keep a point probe at `x` clean up to
    /// t_end (planes: `x = None`).
    pub fn required_half_width(&self, x: Option<&Vec3>) -> f64 {
        let reach = self
            .source
            .support_balls()
            .iter()
            .map(|(c, r)| c.amax() + r)
            .fold(0.0, f64::max);
        match x {
            None => self.t_end - self.support_front().unwrap_or(self.t_end) + reach,
            Some(p) => 0.5 * (self.t_end - self.emission_start() + reach + p.amax()),
        }
    }

    pub fn levels(&self) -> usize {
        self.levels_until(self.t_end)
    }

    /// Number of levels with t ≤ min(t, t_end).
    pub fn levels_until(&self, t: f64) -> usize {
        ((t.min(self.t_end) - self.t_start) / self.dt + 1e-9).floor().max(0.0) as usize + 1
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t_start + n as f64 * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.h();
        let limit = max_stable_dt(h);
        if !(self.dt > 0.0) || self.dt > limit * (1.0 + 1e-12) {
            return Err(LabError::Configuration(format!(
                "dt = {} violates the stability bound dt ≤ 0.9·h/√3 = {limit}",
                self.dt
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(LabError::Configuration("source width ε must be positive".into()));
        }
        if !(self.t_end > self.t_start) {
            return Err(LabError::Configuration("t_end must exceed t_start".into()));
        }
        if let Some(front) = self.support_front() {
            if self.t_start > front - 3.0 * self.epsilon {
                return Err(LabError::Configuration(format!(
                    "t_start = {} must precede the first source contact by 3ε (≤ {})",
                    self.t_start,
                    front - 3.0 * self.epsilon
                )));
            }
        }
        for q in [&self.operator, &self.source] {
            if let Some((lo, hi)) = q.support_box() {
                let inner_lo = self.grid.origin.add_scalar(2.0 * h);
                let inner_hi = self.grid.upper().add_scalar(-2.0 * h);
                if (0..3).any(|a| lo[a] < inner_lo[a] || hi[a] > inner_hi[a]) {
                    return Err(LabError::Configuration(
                        "potential support escapes the simulation box".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Field at two consecutive time levels; `u` is at level `n`.
#[derive(Clone, Debug)]
pub struct WaveState {
    pub n: usize,
    pub u_prev: Vec<f64>,
    pub u: Vec<f64>,
}

impl WaveState {
    pub fn zero(grid: &Grid3D) -> Self {
        WaveState { n: 0, u_prev: vec![0.0; grid.len()], u: vec![0.0; grid.len()] }
    }

    /// Arbitrary initial levels (boundary entries must be zero).
    pub fn from_levels(u_prev: Vec<f64>, u: Vec<f64>) -> Self {
        WaveState { n: 0, u_prev, u }
    }
}

/// Precomputed sparse potential and source lists for one scenario.
pub struct Stepper {
    dims: [usize; 3],
    h: f64,
    dt: f64,
    t_start: f64,
    epsilon: f64,
    /// (node, V)
    coupling: Vec<(usize, f64)>,
    /// (node, w·S, x·ω)
    forcing: Vec<(usize, f64, f64)>,
}

impl Stepper {
    pub fn new(s: &WaveScenario) -> Result<Self> {
        s.validate()?;
        let grid = &s.grid;
        let sample = |q: &Potential| -> Vec<(usize, f64)> {
            let Some((lo, hi)) = q.support_box() else { return Vec::new() };
            let range = |a: usize| {
                let first = ((lo[a] - grid.origin[a]) / grid.spacing).floor().max(1.0) as usize;
                let last = (((hi[a] - grid.origin[a]) / grid.spacing).ceil() as usize).min(grid.dims[a] - 2);
                first..=last
            };
            let (ri, rj, rk) = (range(0), range(1), range(2));
            let mut out = Vec::new();
            for i in ri {
                for j in rj.clone() {
                    for k in rk.clone() {
                        let v = q.eval(&grid.position(i, j, k));
                        if v != 0.0 {
                            out.push((grid.index(i, j, k), v));
                        }
                    }
                }
            }
            out
        };
        let coupling = sample(&s.operator);
        let forcing = sample(&s.source)
            .into_iter()
            .map(|(idx, v)| (idx, s.source_weight * v, s.incidence.dot(&grid.position_of(idx))))
            .collect();
        Ok(Stepper {
            dims: grid.dims,
            h: grid.spacing,
            dt: s.dt,
            t_start: s.t_start,
            epsilon: s.epsilon,
            coupling,
            forcing,
        })
    }

    /// True when both operator and source vanish on the grid, so u ≡ 0.
    pub fn is_trivial(&self) -> bool {
        self.coupling.is_empty() && self.forcing.is_empty()
    }

    /// Advances `state` by one level in place.
    pub fn advance(&self, state: &mut WaveState) {
        let [nx, ny, nz] = self.dims;
        let c = (self.dt / self.h).powi(2);
        let plane = ny * nz;
        let u = &state.u;
        // u_prev is overwritten with u^{n+1}; each node reads only its own old value
        state.u_prev.par_chunks_mut(plane).enumerate().for_each(|(i, next)| {
            if i == 0 || i == nx - 1 {
                return;
            }
            let base = i * plane;
            for j in 1..ny - 1 {
                let row = base + j * nz;
                let cen = &u[row..row + nz];
                let ym = &u[row - nz..row];
                let yp = &u[row + nz..row + 2 * nz];
                let xm = &u[row - plane..row - plane + nz];
                let xp = &u[row + plane..row + plane + nz];
                let out = &mut next[j * nz..(j + 1) * nz];
                for k in 1..nz - 1 {
                    let centre = cen[k];
                    let lap = cen[k - 1] + cen[k + 1] + ym[k] + yp[k] + xm[k] + xp[k] - 6.0 * centre;
                    out[k] = 2.0 * centre - out[k] + c * lap;
                }
            }
        });
        let dt2 = self.dt * self.dt;
        let t = self.t_start + state.n as f64 * self.dt;
        for &(idx, v) in &self.coupling {
            state.u_prev[idx] -= dt2 * v * state.u[idx];
        }
        for &(idx, s, xw) in &self.forcing {
            state.u_prev[idx] += dt2 * s * delta_eps(t - xw, self.epsilon);
        }
        std::mem::swap(&mut state.u_prev, &mut state.u);
        state.n += 1;
    }
}

/// Recorded output of one solver run.
#[derive(Clone, Debug)]
pub struct WaveRun {
    pub scenario: WaveScenario,
    pub points: Vec<PointRecord>,
    pub planes: Vec<PlaneRecord>,
    pub regions: Vec<RegionRecord>,
    pub snapshots: Vec<ScalarField3D>,
    pub steps: usize,
}

impl WaveRun {
    pub fn point(&self, name: &str) -> Result<&PointRecord> {
        self.points
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| LabError::Configuration(format!("run has no point probe named {name:?}")))
    }

    pub fn plane(&self, name: &str) -> Result<&PlaneRecord> {
        self.planes
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| LabError::Configuration(format!("run has no plane probe named {name:?}")))
    }

    /// First plane probe on x·θ = offset.
    pub fn plane_at(&self, theta: &Direction, offset: f64) -> Result<&PlaneRecord> {
        self.planes
            .iter()
            .find(|p| (p.theta.vec() - theta.vec()).norm() < 1e-12 && (p.offset - offset).abs() < 1e-12)
            .ok_or_else(|| {
                LabError::Configuration(format!("run has no plane probe on x·θ = {offset} for θ = {:?}", theta.vec()))
            })
    }

    pub fn region(&self, name: &str) -> Result<&RegionRecord> {
        self.regions
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| LabError::Configuration(format!("run has no region probe named {name:?}")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub h: f64,
    pub dt: f64,
    pub epsilon: f64,
    pub half_width: f64,
    pub nodes: usize,
    pub steps: usize,
    pub t_start: f64,
    pub t_end: f64,
}

impl WaveRun {
    pub fn summary(&self) -> RunSummary {
        let s = &self.scenario;
        RunSummary {
            h: s.h(),
            dt: s.dt,
            epsilon: s.epsilon,
            half_width: -s.grid.origin[0],
            nodes: s.grid.len(),
            steps: self.steps,
            t_start: s.t_start,
            t_end: s.time(s.levels() - 1),
        }
    }
}

fn check_safety(s: &WaveScenario, probes: &ProbeSet) -> Result<()> {
    let needed = s.time(s.levels() - 1);
    let fail = |probe: &str, safe: f64, x: Option<&Vec3>| LabError::ProbeOutsideSafeRegion {
        probe: probe.to_string(),
        needed,
        safe,
        hint: format!("a box half-width of at least {:.3} is required", s.required_half_width(x)),
    };
    let slack = 1e-9;
    for p in &probes.points {
        if !s.grid.contains(&p.x) {
            return Err(LabError::OutOfDomain { point: [p.x[0], p.x[1], p.x[2]] });
        }
        let safe = s.point_safe_time(&p.x);
        if needed > safe + slack {
            return Err(fail(&p.name, safe, Some(&p.x)));
        }
    }
    let plane_safe = s.plane_safe_time();
    for p in &probes.planes {
        let last = s.time(s.levels_until(p.until) - 1);
        if last > plane_safe + slack {
            return Err(LabError::ProbeOutsideSafeRegion {
                probe: p.name.clone(),
                needed: last,
                safe: plane_safe,
                hint: format!(
                    "a box half-width of at least {:.3} is required",
                    s.clone().with_t_end(p.until.min(s.t_end)).required_half_width(None)
                ),
            });
        }
    }
    for r in &probes.regions {
        let hi = r.t_hi.min(needed);
        for &n in &r.nodes {
            let x = s.grid.position_of(n as usize);
            let safe = s.point_safe_time(&x);
            if hi > safe + slack {
                return Err(LabError::ProbeOutsideSafeRegion {
                    probe: r.name.clone(),
                    needed: hi,
                    safe,
                    hint: format!("a box half-width of at least {:.3} is required", s.required_half_width(Some(&x))),
                });
            }
        }
    }
    Ok(())
}

/// Runs the scenario from zero data over [t_start, t_end], recording `probes`.
pub fn run(scenario: &WaveScenario, probes: &ProbeSet) -> Result<WaveRun> {
    let stepper = Stepper::new(scenario)?;
    check_safety(scenario, probes)?;
    let grid = &scenario.grid;
    let levels = scenario.levels();

    let point_fs: Vec<_> = probes.points.iter().map(|p| probes::point_functional(grid, &p.x)).collect::<Result<_>>()?;
    let plane_fs: Vec<_> = probes
        .planes
        .iter()
        .map(|p| probes::plane_functionals(grid, &p.theta, p.offset))
        .collect();
    let pad = 2.0 * scenario.dt;
    let mut regions: Vec<RegionRecord> = probes
        .regions
        .iter()
        .map(|r| {
            let first = ((r.t_lo - pad - scenario.t_start) / scenario.dt).floor().max(0.0) as usize;
            RegionRecord {
                name: r.name.clone(),
                nodes: r.nodes.clone(),
                positions: r.nodes.iter().map(|&n| grid.position_of(n as usize)).collect(),
                first_level: first,
                t0: scenario.time(first),
                dt: scenario.dt,
                data: Vec::new(),
            }
        })
        .collect();
    let snapshot_levels: Vec<usize> = probes
        .snapshot_times
        .iter()
        .map(|&t| (((t - scenario.t_start) / scenario.dt).round().max(0.0) as usize).min(levels - 1))
        .collect();

    let mut point_series = vec![Vec::with_capacity(levels); point_fs.len()];
    let mut plane_series = vec![(Vec::with_capacity(levels), Vec::with_capacity(levels)); plane_fs.len()];
    let mut snapshots = vec![None; snapshot_levels.len()];
    let mut state = WaveState::zero(grid);
    let trivial = stepper.is_trivial();

    for n in 0..levels {
        if n > 0 && !trivial {
            stepper.advance(&mut state);
            if n % 16 == 0 || n + 1 == levels {
                if state.u.iter().any(|v| !v.is_finite()) {
                    return Err(LabError::Instability { step: n, time: scenario.time(n) });
                }
            }
        }
        let u = &state.u;
        for (f, out) in point_fs.iter().zip(&mut point_series) {
            out.push(probes::apply(f, u));
        }
        for (((fv, ff), (v, fl)), spec) in plane_fs.iter().zip(&mut plane_series).zip(&probes.planes) {
            if n < scenario.levels_until(spec.until) {
                v.push(probes::apply(fv, u));
                fl.push(probes::apply(ff, u));
            }
        }
        let t = scenario.time(n);
        for (spec, rec) in probes.regions.iter().zip(&mut regions) {
            if n >= rec.first_level && t <= spec.t_hi + pad {
                rec.data.push(spec.nodes.iter().map(|&i| u[i as usize]).collect());
            }
        }
        for (slot, &lvl) in snapshot_levels.iter().enumerate() {
            if lvl == n {
                snapshots[slot] = Some(probes::snapshot_of(grid, u, t)?);
            }
        }
    }

    let series = |v: Vec<f64>| TimeSeries::new(scenario.t_start, scenario.dt, v);
    let points = probes
        .points
        .iter()
        .zip(point_series)
        .map(|(p, v)| Ok(PointRecord { name: p.name.clone(), x: p.x, series: series(v)? }))
        .collect::<Result<_>>()?;
    let planes = probes
        .planes
        .iter()
        .zip(plane_series)
        .map(|(p, (v, f))| {
            Ok(PlaneRecord {
                name: p.name.clone(),
                theta: p.theta,
                offset: p.offset,
                value: series(v)?,
                flux: series(f)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(WaveRun {
        scenario: scenario.clone(),
        points,
        planes,
        regions,
        snapshots: snapshots.into_iter().flatten().collect(),
        steps: levels - 1,
    })
}
