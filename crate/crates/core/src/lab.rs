//! Scenario files and the batch runner behind the command-line tool.
//!
//! A scenario is a JSON document naming one experiment kind, its potential(s) and grid. The
//! runner executes the matching pipeline and writes CSV tables, WBSL snapshots and a
//! `summary.json` holding one pass/fail entry per check. Every artifact is a deterministic
//! function of the scenario and the seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::farfield::{alpha_window_end, extract_alpha, extract_alpha_ut, measurement_offset, relative_l2, FarFieldTable};
use crate::geometry::{fibonacci_directions, write_field, Direction, Vec3};
use crate::harmonics::{angular_energy, laplace_beltrami_check, make_sphere_quadrature, HarmonicBasis, HarmonicExpansion};
use crate::inverse::{
    abel_chain, beta_integral, born_convergence, born_radial_trend, energy_profile, identity_check, translation_check,
    IdentitySetup,
};
use crate::potential::{c2_norm, Potential, PotentialSpec};
use crate::radon::{
    ptau_decomposition, radon_tau_derivative, sphere_delta_mollified, sphere_delta_weight,
    tangential_decomposition_check, RadonProfile,
};
use crate::solver::{
    characteristic_bound_check, front_fit, front_region, front_t_end, max_stable_dt, run, u_star_norm, u_star_run,
    ut_characteristic_check, wavefront_trace_check, CharacteristicData, ProbeSet, WaveScenario,
};

pub const DEFAULT_HALF_WIDTH: f64 = 3.0;
pub const DEFAULT_H: f64 = 1.0 / 16.0;
pub const DEFAULT_DIRECTIONS: usize = 64;
pub const DEFAULT_MAX_DEGREE: u32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Forward,
    Farfield,
    Identity,
    Born,
    Translate,
    Harmonics,
    Radon,
    Energy,
    Smallness,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: Option<f64>,
    pub h: Option<f64>,
    pub epsilon: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DirectionSpec {
    Fibonacci(usize),
    List(Vec<[f64; 3]>),
}

impl DirectionSpec {
    pub fn build(&self) -> Result<Vec<Direction>> {
        match self {
            DirectionSpec::Fibonacci(0) => Err(LabError::Configuration("a Fibonacci set needs at least one point".into())),
            DirectionSpec::Fibonacci(n) => Ok(fibonacci_directions(*n)),
            DirectionSpec::List(v) if v.is_empty() => Err(LabError::Configuration("direction list is empty".into())),
            DirectionSpec::List(v) => v.iter().map(|d| Direction::normalized(Vec3::from(*d))).collect(),
        }
    }
}

/// Scenario document as written on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub name: Option<String>,
    pub potential: PotentialSpec,
    /// Second potential: q₂ for `identity`, the characteristic source g for `smallness`.
    #[serde(default)]
    pub potential2: Option<PotentialSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub incidence: Option<[f64; 3]>,
    #[serde(default)]
    pub theta: Option<[f64; 3]>,
    #[serde(default)]
    pub directions: Option<DirectionSpec>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub max_degree: Option<u32>,
    #[serde(default)]
    pub amplitudes: Option<Vec<f64>>,
    #[serde(default)]
    pub shift: Option<[f64; 3]>,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default)]
    pub reconstruct: bool,
    /// Overrides of the default check tolerances, by check name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

/// Validated scenario with every default filled in.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub potential: Potential,
    pub potential2: Option<Potential>,
    pub half_width: f64,
    pub h: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub incidence: Direction,
    pub theta: Direction,
    pub directions: Vec<Direction>,
    pub max_degree: u32,
    pub amplitudes: Vec<f64>,
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| LabError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    Scenario::from_file(file)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_scenario(&text).map_err(|e| e.context(format!("scenario {}", path.display())))
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let potential = file.potential.build().map_err(|e| e.context("potential"))?;
        let potential2 = file.potential2.as_ref().map(|p| p.build()).transpose().map_err(|e| e.context("potential2"))?;
        let half_width = file.grid.half_width.unwrap_or(DEFAULT_HALF_WIDTH);
        let h = file.grid.h.unwrap_or(DEFAULT_H);
        if !(h > 0.0 && h.is_finite()) || !(half_width > 1.0 && half_width.is_finite()) {
            return Err(LabError::Configuration(format!("grid needs h > 0 and L > 1, got h = {h}, L = {half_width}")));
        }
        let epsilon = file.grid.epsilon.unwrap_or(4.0 * h);
        let dt = file.grid.dt.unwrap_or_else(|| max_stable_dt(h));
        let limit = max_stable_dt(h);
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(LabError::Configuration(format!("dt = {dt} exceeds the CFL bound 0.9·h/√3 = {limit:.6}")));
        }
        if !(epsilon > 0.0) {
            return Err(LabError::Configuration("ε must be positive".into()));
        }
        let incidence = Direction::normalized(Vec3::from(file.incidence.unwrap_or([0.0, 0.0, 1.0])))?;
        let theta = match file.theta {
            Some(t) => Direction::normalized(Vec3::from(t))?,
            None => Direction::new(-incidence.vec())?,
        };
        let directions = match &file.directions {
            Some(d) => d.build()?,
            None if file.kind == ExperimentKind::Farfield || file.kind == ExperimentKind::Radon => {
                fibonacci_directions(DEFAULT_DIRECTIONS)
            }
            None => vec![incidence],
        };
        let amplitudes = file.amplitudes.clone().unwrap_or_else(|| vec![0.2, 0.1, 0.05]);
        for (name, tol) in &file.tolerances {
            if !(*tol > 0.0) {
                return Err(LabError::Configuration(format!("tolerance {name:?} must be positive")));
            }
        }
        if file.kind == ExperimentKind::Identity && potential2.is_none() {
            return Err(LabError::Configuration("identity needs potential2 (q₂)".into()));
        }
        if file.kind == ExperimentKind::Translate && file.shift.is_none() {
            return Err(LabError::Configuration("translate needs a shift".into()));
        }
        let s = Scenario {
            max_degree: file.max_degree.unwrap_or(DEFAULT_MAX_DEGREE),
            file,
            potential,
            potential2,
            half_width,
            h,
            epsilon,
            dt,
            incidence,
            theta,
            directions,
            amplitudes,
        };
        s.check_causality()?;
        Ok(s)
    }

    fn wave(&self, q: &Potential, omega: Direction) -> Result<WaveScenario> {
        let s = WaveScenario::scattering(q.clone(), omega, self.half_width, self.h)?
            .with_epsilon(self.epsilon)
            .with_dt(self.dt);
        s.validate()?;
        Ok(s)
    }

    /// Every simulation the kind needs must end before boundary reflections reach its
    /// probes; otherwise report the smallest half-width that would do.
    fn check_causality(&self) -> Result<()> {
        // (potential, incidence, last time needed, recorded at unit-ball nodes rather than planes)
        let mut needs: Vec<(Potential, Direction, f64, bool)> = Vec::new();
        let q = &self.potential;
        match self.file.kind {
            ExperimentKind::Forward => {
                // snapshots are whole-field pictures and are not held to the reflection rule
                let w = self.wave(q, self.incidence)?;
                needs.push((q.clone(), self.incidence, front_t_end(&w, 1.0), true));
            }
            ExperimentKind::Farfield => {
                for th in &self.directions {
                    needs.push((q.clone(), self.incidence, alpha_window_end(q, th, &self.incidence, self.epsilon, 1.0), false));
                }
            }
            ExperimentKind::Identity => {
                let q2 = self.potential2.as_ref().expect("checked above");
                for w in &self.directions {
                    let back = Direction::new(-w.vec())?;
                    for p in [q, q2] {
                        needs.push((p.clone(), *w, alpha_window_end(p, &back, w, self.epsilon, 1.0), false));
                    }
                }
            }
            ExperimentKind::Born => {
                let back = Direction::new(-self.incidence.vec())?;
                for w in &self.directions {
                    let th = if self.file.reconstruct { Direction::new(-w.vec())? } else { self.theta };
                    needs.push((q.clone(), *w, alpha_window_end(q, &th, w, self.epsilon, 1.0), false));
                }
                needs.push((q.clone(), self.incidence, alpha_window_end(q, &back, &self.incidence, self.epsilon, 1.0), false));
            }
            ExperimentKind::Translate => {
                let moved = q.clone().translate(Vec3::from(self.file.shift.expect("checked above")));
                for p in [q.clone(), moved] {
                    let c = measurement_offset(&p, &self.theta);
                    let end = alpha_window_end(&p, &self.theta, &self.incidence, self.epsilon, c);
                    needs.push((p, self.incidence, end, false));
                }
            }
            ExperimentKind::Smallness => {
                let w = self.wave(q, self.incidence)?;
                needs.push((q.clone(), self.incidence, front_t_end(&w, 0.0), true));
            }
            ExperimentKind::Harmonics | ExperimentKind::Radon | ExperimentKind::Energy => {}
        }
        let corner = Vec3::new(1.0, 0.0, 0.0);
        for (p, w, end, ball) in needs {
            if p.is_zero() {
                continue;
            }
            let s = self.wave(&p, w)?;
            // the unit-ball node closest to a wall sits at distance L − 1 from it
            let (safe, probe) = if ball {
                (s.boundary_hit_time() + self.half_width - 1.0, Some(&corner))
            } else {
                (s.plane_safe_time(), None)
            };
            if end > safe + 1e-9 {
                let need = s.with_t_end(end).required_half_width(probe);
                return Err(LabError::Configuration(format!(
                    "causality sizing: data are needed up to t = {end:.3} but reflections from the box \
                     boundary arrive at t = {safe:.3}; use a half-width L ≥ {:.3} (got {})",
                    need, self.half_width
                )));
            }
        }
        Ok(())
    }

    fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.file.tolerances.get(name).copied().unwrap_or(default)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// "le": value ≤ tolerance; "ge": value ≥ tolerance; "in": lo ≤ value ≤ hi.
    pub comparison: String,
    pub tolerance: Vec<f64>,
    pub pass: bool,
}

impl Check {
    fn le(name: &str, value: f64, tol: f64) -> Self {
        Check { name: name.into(), value, comparison: "le".into(), tolerance: vec![tol], pass: value <= tol }
    }

    fn ge(name: &str, value: f64, tol: f64) -> Self {
        Check { name: name.into(), value, comparison: "ge".into(), tolerance: vec![tol], pass: value >= tol }
    }

    fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Check { name: name.into(), value, comparison: "in".into(), tolerance: vec![lo, hi], pass: (lo..=hi).contains(&value) }
    }

    fn flag(name: &str, ok: bool) -> Self {
        Check { name: name.into(), value: ok as u8 as f64, comparison: "ge".into(), tolerance: vec![1.0], pass: ok }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridSummary {
    pub half_width: f64,
    pub h: f64,
    pub epsilon: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub name: Option<String>,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub grid: GridSummary,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub artifacts: Vec<String>,
    pub details: serde_json::Value,
}

struct Output {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Output {
    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| LabError::io(&path, e))?;
        self.artifacts.push(name.into());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let body = serde_json::to_string_pretty(value).map_err(|e| LabError::Format(e.to_string()))?;
        self.text(name, &(body + "\n"))
    }
}

/// Runs the scenario, writes its artifacts into `out` and returns the summary (also written
/// as `summary.json`).
pub fn run_scenario(s: &Scenario, out: &Path, seed: u64) -> Result<Summary> {
    fs::create_dir_all(out).map_err(|e| LabError::io(out, e))?;
    let mut o = Output { dir: out.to_path_buf(), artifacts: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (checks, details) = match s.file.kind {
        ExperimentKind::Forward => forward(s, &mut o),
        ExperimentKind::Farfield => farfield(s, &mut o),
        ExperimentKind::Identity => identity(s, &mut o),
        ExperimentKind::Born => born(s, &mut o),
        ExperimentKind::Translate => translate(s),
        ExperimentKind::Harmonics => harmonics(s, &mut o),
        ExperimentKind::Radon => radon(s, &mut o, &mut rng),
        ExperimentKind::Energy => energy(s, &mut o, &mut rng),
        ExperimentKind::Smallness => smallness(s),
    }
    .map_err(|e| e.context(format!("{:?} scenario", s.file.kind).to_lowercase()))?;
    let mut artifacts = o.artifacts.clone();
    artifacts.push("summary.json".into());
    let summary = Summary {
        name: s.file.name.clone(),
        kind: s.file.kind,
        seed,
        grid: GridSummary { half_width: s.half_width, h: s.h, epsilon: s.epsilon, dt: s.dt },
        pass: checks.iter().all(|c| c.pass),
        checks,
        artifacts,
        details,
    };
    o.json("summary.json", &summary)?;
    Ok(summary)
}

type Outcome = Result<(Vec<Check>, serde_json::Value)>;

fn forward(s: &Scenario, o: &mut Output) -> Outcome {
    let w = s.wave(&s.potential, s.incidence)?;
    let snap_end = s.file.snapshots.iter().copied().fold(f64::MIN, f64::max);
    let w = w.clone().with_t_end(front_t_end(&w, 1.0).max(snap_end));
    let mut probes = ProbeSet::new().region(front_region(&w, 1.0)?);
    for &t in &s.file.snapshots {
        probes = probes.snapshot(t);
    }
    let r = run(&w, &probes)?;
    let jump = wavefront_trace_check(&r)?;
    let slope = ut_characteristic_check(&r)?;
    let mut csv = String::from("x,y,z,c0,c1\n");
    for f in front_fit(&r)? {
        let _ = writeln!(csv, "{},{},{},{},{}", f.x[0], f.x[1], f.x[2], f.c[0], f.c[1]);
    }
    o.text("front_fit.csv", &csv)?;
    for (k, snap) in r.snapshots.iter().enumerate() {
        let name = format!("snapshot_{k:03}.wbsl");
        write_field(snap, &o.dir.join(&name))?;
        o.artifacts.push(name);
    }
    let checks = vec![
        Check::le("wavefront-trace", jump.rel_l2, s.tolerance("wavefront-trace", 0.05)),
        Check::le("ut-characteristic-trace", slope.rel_l2, s.tolerance("ut-characteristic-trace", 0.08)),
    ];
    Ok((checks, serde_json::json!({ "run": r.summary(), "wavefront": jump, "ut_trace": slope })))
}

fn farfield(s: &Scenario, o: &mut Output) -> Outcome {
    let w = s.wave(&s.potential, s.incidence)?;
    let mut probes = ProbeSet::new();
    for (k, th) in s.directions.iter().enumerate() {
        probes = probes.plane(&format!("theta-{k}"), *th, 1.0);
    }
    let r = run(&w, &probes)?;
    let mut dirs = s.directions.clone();
    dirs.push(s.incidence);
    let omega_index = dirs.len() - 1;
    let mut table = FarFieldTable::new(dirs, s.epsilon);
    let mut worst = 0.0f64;
    for (k, th) in s.directions.iter().enumerate() {
        let a = extract_alpha(&r, th)?;
        let b = extract_alpha_ut(&r, th)?;
        // the two forms only agree where the field is resolved; skip silent directions
        if a.peak_abs() > 0.0 {
            worst = worst.max(relative_l2(&b, &a));
        }
        table.push(k, omega_index, a)?;
    }
    table.write(&o.dir, "farfield")?;
    o.artifacts.push("farfield.csv".into());
    o.artifacts.push("farfield.json".into());
    let checks = vec![Check::le("dn-equivalence", worst, s.tolerance("dn-equivalence", 0.02))];
    Ok((checks, serde_json::json!({ "run": r.summary(), "directions": s.directions.len() })))
}

fn identity(s: &Scenario, o: &mut Output) -> Outcome {
    let q2 = s.potential2.as_ref().expect("validated");
    let setup = IdentitySetup { half_width: s.half_width, h: s.h, ..IdentitySetup::default() };
    if s.file.grid.epsilon.is_some() || s.file.grid.dt.is_some() {
        return Err(LabError::Configuration("identity runs use the default ε and dt".into()));
    }
    let r = identity_check(&s.potential, q2, &s.directions, &setup)?;
    let mut csv = String::from("omega_index,tau,lhs,rhs,radon_term,kernel_term\n");
    for k in 0..r.omegas.len() {
        for (i, t) in r.tau.iter().enumerate() {
            let _ = writeln!(csv, "{k},{t},{},{},{},{}", r.lhs[k][i], r.rhs[k][i], r.radon_term[k][i], r.kernel_term[k][i]);
        }
    }
    o.text("identity.csv", &csv)?;
    let same = s.file.potential2.as_ref() == Some(&s.file.potential);
    let check = if same {
        Check::le("identity-noise-floor", r.residual_ratio, s.tolerance("identity-noise-floor", 1e-3))
    } else {
        Check::le("identity", r.discrepancy, s.tolerance("identity", 0.10))
    };
    Ok((
        vec![check],
        serde_json::json!({ "discrepancy": r.discrepancy, "residual_ratio": r.residual_ratio, "run": r.grid }),
    ))
}

fn born(s: &Scenario, o: &mut Output) -> Outcome {
    if s.file.grid.epsilon.is_some() || s.file.grid.dt.is_some() {
        return Err(LabError::Configuration("born runs use the default ε and dt".into()));
    }
    let r = born_convergence(&s.potential, s.incidence, s.theta, &s.amplitudes, s.half_width, s.h)?;
    let mut csv = String::from("amplitude,error,discrete_error\n");
    for ((a, e), d) in r.amplitudes.iter().zip(&r.errors).zip(&r.discrete_errors) {
        let _ = writeln!(csv, "{a},{e},{d}");
    }
    o.text("born.csv", &csv)?;
    let worst_ratio = r.ratios.iter().copied().fold(f64::NAN, |m, v| if (v - 2.0).abs() > (m - 2.0).abs() || m.is_nan() { v } else { m });
    let mut checks = vec![
        Check::within("born-ratio", worst_ratio, 1.7, 2.3),
        Check::within("born-order", r.order, 0.8, 1.3),
    ];
    let mut details = serde_json::json!({ "convergence": r });
    if s.file.reconstruct {
        let quad = make_sphere_quadrature(40);
        let grid = crate::geometry::Grid3D::cube(1.0, 1.0 / 16.0)?;
        let t = born_radial_trend(&s.potential, &s.amplitudes, &s.directions, &quad, &grid, s.half_width, s.h)?;
        let decreasing = t.errors.windows(2).all(|w| w[1] < w[0]);
        checks.push(Check::flag("born-reconstruction-trend", decreasing));
        let spread = t.radial_spread.iter().copied().fold(0.0, f64::max);
        checks.push(Check::le("born-radial-spread", spread, s.tolerance("born-radial-spread", 0.05)));
        details["reconstruction"] = serde_json::to_value(&t).map_err(|e| LabError::Format(e.to_string()))?;
    }
    Ok((checks, details))
}

fn translate(s: &Scenario) -> Outcome {
    if s.file.grid.epsilon.is_some() || s.file.grid.dt.is_some() {
        return Err(LabError::Configuration("translate runs use the default ε and dt".into()));
    }
    let a = Vec3::from(s.file.shift.expect("validated"));
    let r = translation_check(&s.potential, a, s.theta, s.incidence, s.half_width, s.h)?;
    let checks = vec![
        Check::le("translation", r.discrepancy, s.tolerance("translation", 0.02)),
        Check::le("translation-shift", (r.measured_shift - r.shift).abs(), s.tolerance("translation-shift", 0.01)),
    ];
    Ok((checks, serde_json::json!({ "translation": r })))
}

fn harmonics(s: &Scenario, o: &mut Output) -> Outcome {
    let basis = HarmonicBasis::new(s.max_degree);
    let quad = make_sphere_quadrature(2 * s.max_degree as usize + 2);
    let area = (quad.integrate(|_| 1.0) - 4.0 * std::f64::consts::PI).abs();
    let mut gram = 0.0f64;
    for a in &basis.entries {
        for b in &basis.entries {
            let g = quad.integrate(|w| a.eval(w) * b.eval(w));
            gram = gram.max((g - (a.index == b.index) as u8 as f64).abs());
        }
    }
    let lb = basis.entries.iter().map(|e| laplace_beltrami_check(e, &quad)).fold(0.0, f64::max);
    let fine = make_sphere_quadrature(4 * s.max_degree as usize + 8);
    let rho = [0.25, 0.5, 0.75];
    let mut energy = 0.0f64;
    for &r in &rho {
        let e = angular_energy(&s.potential, r, &basis, &fine)?;
        let scale = e.direct.abs().max(e.spectral.abs());
        if scale > 0.0 {
            energy = energy.max((e.direct - e.spectral).abs() / scale);
        }
    }
    let exp = HarmonicExpansion::compute(&s.potential, &rho, &basis, &fine)?;
    o.text("harmonics.csv", &exp.to_csv())?;
    let checks = vec![
        Check::le("sphere-area", area, s.tolerance("sphere-area", 1e-10)),
        Check::le("gram", gram, s.tolerance("gram", 1e-8)),
        Check::le("laplace-beltrami", lb, s.tolerance("laplace-beltrami", 1e-8)),
        Check::le("angular-energy", energy, s.tolerance("angular-energy", 1e-6)),
    ];
    Ok((checks, serde_json::json!({ "max_degree": s.max_degree, "basis_size": basis.len() })))
}

fn radon(s: &Scenario, o: &mut Output, rng: &mut ChaCha8Rng) -> Outcome {
    let tau: Vec<f64> = (0..=40).map(|i| -1.0 + 0.05 * i as f64).collect();
    let profile = RadonProfile::compute(&s.potential, &s.directions, &tau)?;
    o.text("radon.csv", &profile.to_csv())?;
    o.json("radon.json", &profile.sidecar())?;

    let mut tangential = 0.0f64;
    for k in 0..1000 {
        let x = if k == 0 { Vec3::zeros() } else { random_vec(rng, 3.0) };
        let v = random_vec(rng, 3.0);
        tangential = tangential.max(tangential_decomposition_check(&x, &v) / (1.0 + x.norm_squared() * v.norm()));
    }
    let w = s.directions[0];
    let mut ptau = 0.0f64;
    for i in 1..=9 {
        let t = 0.1 * i as f64;
        let d = ptau_decomposition(&s.potential, &w, t, 48)?;
        let reference = radon_tau_derivative(&s.potential, &w, t).divergence_value;
        let scale = reference.abs().max(1e-12);
        ptau = ptau.max((d.recombined - reference).abs() / scale);
    }
    let mut delta = 0.0f64;
    for _ in 0..20 {
        let x = random_vec(rng, 1.0).normalize() * rng.random_range(0.3..1.0);
        let t = rng.random_range(-0.9..0.9) * x.norm();
        let exact = sphere_delta_weight(&x, t)?;
        let smeared = sphere_delta_mollified(&x, t, 1e-3);
        delta = delta.max((smeared - exact).abs() / exact);
    }
    let checks = vec![
        Check::le("tangential-decomposition", tangential, s.tolerance("tangential-decomposition", 1e-12)),
        Check::le("ptau-decomposition", ptau, s.tolerance("ptau-decomposition", 1e-3)),
        Check::le("sphere-delta-weight", delta, s.tolerance("sphere-delta-weight", 0.01)),
    ];
    Ok((checks, serde_json::json!({ "directions": s.directions.len(), "tau_points": tau.len() })))
}

fn energy(s: &Scenario, o: &mut Output, rng: &mut ChaCha8Rng) -> Outcome {
    let quad = make_sphere_quadrature(24);
    let rho: Vec<f64> = (1..=20).map(|i| 0.05 * i as f64).collect();
    let e = energy_profile(&s.potential, &rho, &quad)?;
    let mut csv = String::from("rho,energy\n");
    for (r, v) in e.rho.iter().zip(&e.values) {
        let _ = writeln!(csv, "{r},{v}");
    }
    o.text("energy.csv", &csv)?;
    let mut chain = String::from("tau,lhs,abel_rhs,iterated_rhs\n");
    for t in [0.2, 0.4, 0.6, 0.8] {
        let c = abel_chain(&e, t)?;
        let _ = writeln!(chain, "{t},{},{},{}", c.lhs, c.abel_rhs, c.iterated_rhs);
    }
    o.text("abel_chain.csv", &chain)?;
    let mut beta = 0.0f64;
    for _ in 0..20 {
        let t = rng.random_range(-1.0..1.0);
        let sv = rng.random_range(t..1.0 + 1e-3);
        if sv > t {
            beta = beta.max((beta_integral(t, sv)? - std::f64::consts::PI).abs());
        }
    }
    Ok((vec![Check::le("beta-integral", beta, s.tolerance("beta-integral", 1e-6))], serde_json::json!({ "profile": e })))
}

fn smallness(s: &Scenario) -> Outcome {
    let c2 = c2_norm(&s.potential);
    let r = u_star_run(s.potential.clone(), s.incidence, s.half_width, s.h)?;
    let u_star = u_star_norm(&r)?;
    let mut checks = vec![Check::le("u-star-bound", u_star, 8.0 * c2.total)];
    let mut details = serde_json::json!({ "c2": c2, "u_star": u_star });
    if let Some(g) = &s.potential2 {
        let b = characteristic_bound_check(&s.potential, &CharacteristicData::new(g.clone(), s.incidence), s.half_width, s.h)?;
        checks.push(Check::le("characteristic-bound", b.a_max, 2.0 * b.f_star));
        details["characteristic"] = serde_json::to_value(&b).map_err(|e| LabError::Format(e.to_string()))?;
    }
    checks.push(Check::ge("smallness-precondition", 0.05 - c2.total, 0.0));
    Ok((checks, details))
}

fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_gets_defaults() {
        let s = parse_scenario(r#"{"kind":"forward","potential":{"variant":"exponential-bump","amplitude":0.2}}"#).unwrap();
        assert_eq!(s.half_width, 3.0);
        assert_eq!(s.h, 1.0 / 16.0);
        assert_eq!(s.epsilon, 0.25);
        assert_eq!(s.dt, max_stable_dt(1.0 / 16.0));
        assert_eq!(s.max_degree, 6);
        assert_eq!(s.incidence.vec(), Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn farfield_defaults_to_64_directions() {
        let s = parse_scenario(
            r#"{"kind":"farfield","potential":{"variant":"exponential-bump","amplitude":0.2},
                "grid":{"half_width":6.0},"directions":null}"#,
        )
        .unwrap();
        assert_eq!(s.directions.len(), 64);
    }

    #[test]
    fn cfl_violation_names_the_bound() {
        let err = parse_scenario(
            r#"{"kind":"forward","potential":{"variant":"exponential-bump","amplitude":0.2},"grid":{"dt":0.05}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("CFL bound"), "{err}");
    }

    #[test]
    fn unknown_kind_is_a_schema_error_with_path() {
        let err = parse_scenario(r#"{"kind":"holography","potential":{"variant":"exponential-bump","amplitude":0.2}}"#)
            .unwrap_err();
        assert!(matches!(err, LabError::Schema { ref path, .. } if path == "kind"), "{err}");
        let err = parse_scenario(
            r#"{"kind":"forward","potential":{"variant":"exponential-bump","amplitude":0.2},"grid":{"hh":1}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, LabError::Schema { ref path, .. } if path.starts_with("grid")), "{err}");
    }

    #[test]
    fn small_box_reports_minimum_half_width() {
        let err = parse_scenario(
            r#"{"kind":"farfield","potential":{"variant":"exponential-bump","amplitude":0.2},
                "directions":{"list":[[0,0,-1]]}}"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("causality sizing") && msg.contains("L ≥ 6.000"), "{msg}");
    }

    #[test]
    fn alpha_window_matches_backscatter_support() {
        let q = Potential::exp_bump(1.0);
        let w = Direction::axis(2);
        let back = Direction::new(-w.vec()).unwrap();
        assert!((alpha_window_end(&q, &back, &w, 0.25, 1.0) - 4.0).abs() < 1e-12);
        assert!((alpha_window_end(&q, &w, &w, 0.25, 1.0) - 2.0).abs() < 1e-12);
        let moved = q.translate(Vec3::new(0.0, 0.0, 0.5));
        assert!((measurement_offset(&moved, &back) - 1.5).abs() < 1e-12);
    }
}
