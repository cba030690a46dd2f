//! Recorded functionals of the field: point values, plane integrals, node regions and
//! snapshots. Every probe is a sparse linear functional evaluated once per level.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::error::{LabError, Result};
use crate::geometry::{Direction, Grid3D, ScalarField3D, TimeSeries, Vec3};

/// One-sided third-order weights (× 1/(6h)) for f′(0) from f(0), f(h), f(2h), f(3h).
const ONE_SIDED: [f64; 4] = [-11.0, 18.0, -9.0, 2.0];

#[derive(Clone, Debug, Serialize)]
pub struct PointSpec {
    pub name: String,
    pub x: Vec3,
}

#[derive(Clone, Debug, Serialize)]
pub struct PlaneSpec {
    pub name: String,
    /// Outward normal θ of the plane x·θ = offset.
    pub theta: Direction,
    pub offset: f64,
    /// Recording stops after this time (the run may continue for other probes).
    pub until: f64,
}

/// Grid nodes recorded at every level inside a time window.
#[derive(Clone, Debug)]
pub struct RegionSpec {
    pub name: String,
    /// Ascending node indices.
    pub nodes: Vec<u32>,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl RegionSpec {
    /// Nodes with |x| ≤ radius on the sub-lattice of every `stride`-th node through the origin.
    pub fn ball(name: &str, grid: &Grid3D, radius: f64, stride: usize, t_lo: f64, t_hi: f64) -> Result<Self> {
        let stride = stride.max(1);
        let zero = grid.origin.map(|o| -o / grid.spacing);
        if zero.iter().any(|z| (z - z.round()).abs() > 1e-9) {
            return Err(LabError::Configuration("region sub-lattice needs a node at the origin".into()));
        }
        let z = zero.map(|v| v.round() as usize);
        let mut nodes = Vec::new();
        for i in (z[0] % stride..grid.dims[0]).step_by(stride) {
            for j in (z[1] % stride..grid.dims[1]).step_by(stride) {
                for k in (z[2] % stride..grid.dims[2]).step_by(stride) {
                    if grid.position(i, j, k).norm() <= radius + 1e-12 {
                        nodes.push(grid.index(i, j, k) as u32);
                    }
                }
            }
        }
        Ok(RegionSpec { name: name.into(), nodes, t_lo, t_hi })
    }

    /// Keeps only nodes whose position passes `keep`.
    pub fn filtered(mut self, grid: &Grid3D, keep: impl Fn(&Vec3) -> bool) -> Self {
        self.nodes.retain(|&n| keep(&grid.position_of(n as usize)));
        self
    }
}

/// Everything a run should record.
#[derive(Clone, Debug, Default)]
pub struct ProbeSet {
    pub points: Vec<PointSpec>,
    pub planes: Vec<PlaneSpec>,
    pub regions: Vec<RegionSpec>,
    pub snapshot_times: Vec<f64>,
}

impl ProbeSet {
    pub fn new() -> Self {
        ProbeSet::default()
    }

    pub fn point(mut self, name: &str, x: Vec3) -> Self {
        self.points.push(PointSpec { name: name.into(), x });
        self
    }

    pub fn plane(self, name: &str, theta: Direction, offset: f64) -> Self {
        self.plane_until(name, theta, offset, f64::INFINITY)
    }

    pub fn plane_until(mut self, name: &str, theta: Direction, offset: f64, until: f64) -> Self {
        self.planes.push(PlaneSpec { name: name.into(), theta, offset, until });
        self
    }

    pub fn region(mut self, region: RegionSpec) -> Self {
        self.regions.push(region);
        self
    }

    pub fn snapshot(mut self, t: f64) -> Self {
        self.snapshot_times.push(t);
        self
    }
}

pub(crate) type Functional = Vec<(u32, f64)>;

pub(crate) fn apply(f: &Functional, u: &[f64]) -> f64 {
    f.iter().map(|&(i, w)| w * u[i as usize]).sum()
}

fn collect(acc: BTreeMap<u32, f64>) -> Functional {
    acc.into_iter().filter(|&(_, w)| w != 0.0).collect()
}

pub(crate) fn point_functional(grid: &Grid3D, x: &Vec3) -> Result<Functional> {
    let w = grid.trilinear_weights(x).ok_or(LabError::OutOfDomain { point: [x[0], x[1], x[2]] })?;
    let mut acc = BTreeMap::new();
    for (i, wt) in w {
        *acc.entry(i as u32).or_insert(0.0) += wt;
    }
    Ok(collect(acc))
}

/// (∫u dS, ∫θ·∇u dS) over the plane x·θ = c, trapezoid on a plane-aligned lattice of spacing h
/// with trilinear interpolation. Lattice points whose stencil leaves the box are dropped;
/// the field vanishes there while the probe is causality-safe.
pub(crate) fn plane_functionals(grid: &Grid3D, theta: &Direction, c: f64) -> (Functional, Functional) {
    let h = grid.spacing;
    let (e1, e2) = theta.plane_basis();
    let n = theta.vec();
    let centre = n * c;
    let reach = (grid.origin.norm().max(grid.upper().norm()) / h).ceil() as i64 + 1;
    let (mut value, mut flux) = (BTreeMap::new(), BTreeMap::new());
    for a in -reach..=reach {
        for b in -reach..=reach {
            let y = centre + e1 * (a as f64 * h) + e2 * (b as f64 * h);
            let stencil: Option<Vec<_>> =
                (0..4).map(|k| grid.trilinear_weights(&(y + n * (k as f64 * h)))).collect();
            let Some(stencil) = stencil else { continue };
            for (i, wt) in stencil[0] {
                *value.entry(i as u32).or_insert(0.0) += h * h * wt;
            }
            for (k, weights) in stencil.iter().enumerate() {
                let coeff = h * h * ONE_SIDED[k] / (6.0 * h);
                for &(i, wt) in weights {
                    *flux.entry(i as u32).or_insert(0.0) += coeff * wt;
                }
            }
        }
    }
    (collect(value), collect(flux))
}

#[derive(Clone, Debug)]
pub struct PointRecord {
    pub name: String,
    pub x: Vec3,
    pub series: TimeSeries,
}

#[derive(Clone, Debug)]
pub struct PlaneRecord {
    pub name: String,
    pub theta: Direction,
    pub offset: f64,
    /// ∫ u dS
    pub value: TimeSeries,
    /// ∫ θ·∇u dS
    pub flux: TimeSeries,
}

/// u at a fixed node set over a window of levels.
#[derive(Clone, Debug)]
pub struct RegionRecord {
    pub name: String,
    pub nodes: Vec<u32>,
    pub positions: Vec<Vec3>,
    pub first_level: usize,
    pub t0: f64,
    pub dt: f64,
    /// data[level − first_level][slot]
    pub data: Vec<Vec<f64>>,
}

impl RegionRecord {
    pub fn slot(&self, node: u32) -> Option<usize> {
        self.nodes.binary_search(&node).ok()
    }

    pub fn levels(&self) -> usize {
        self.data.len()
    }

    /// Time of stored row `r`.
    pub fn time(&self, r: usize) -> f64 {
        self.t0 + r as f64 * self.dt
    }

    /// Cubic interpolation in time of the slot's series (zero outside the window).
    pub fn value(&self, slot: usize, t: f64) -> f64 {
        let x = (t - self.t0) / self.dt;
        let n = self.data.len();
        if n == 0 || x < -1e-9 || x > (n - 1) as f64 + 1e-9 {
            return 0.0;
        }
        let i = (x.floor() as isize).clamp(0, n as isize - 1) as usize;
        let start = i.saturating_sub(1).min(n.saturating_sub(4));
        let end = (start + 4).min(n);
        let mut acc = 0.0;
        for a in start..end {
            let mut w = 1.0;
            for b in start..end {
                if a != b {
                    w *= (x - b as f64) / (a as f64 - b as f64);
                }
            }
            acc += w * self.data[a][slot];
        }
        acc
    }
}

impl PointRecord {
    pub fn header(&self) -> serde_json::Value {
        json!({
            "probe": "point",
            "name": self.name,
            "x": [self.x[0], self.x[1], self.x[2]],
            "t0": self.series.t0,
            "dt": self.series.dt,
            "samples": self.series.len(),
            "columns": ["t", "u"],
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_probe(dir, &self.name, &self.header(), &[&self.series])
    }
}

impl PlaneRecord {
    pub fn header(&self) -> serde_json::Value {
        let t = self.theta.vec();
        json!({
            "probe": "plane",
            "name": self.name,
            "theta": [t[0], t[1], t[2]],
            "offset": self.offset,
            "t0": self.value.t0,
            "dt": self.value.dt,
            "samples": self.value.len(),
            "columns": ["t", "integral_u", "integral_normal_derivative"],
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_probe(dir, &self.name, &self.header(), &[&self.value, &self.flux])
    }
}

/// `<name>.csv` with columns t, series… and `<name>.json` holding the header.
fn write_probe(dir: &Path, name: &str, header: &serde_json::Value, series: &[&TimeSeries]) -> Result<()> {
    let mut csv = String::new();
    let cols = header["columns"].as_array().map(|c| c.iter().filter_map(|v| v.as_str()).collect::<Vec<_>>());
    csv.push_str(&cols.unwrap_or_default().join(","));
    csv.push('\n');
    for n in 0..series[0].len() {
        csv.push_str(&format!("{:.12e}", series[0].time(n)));
        for s in series {
            csv.push_str(&format!(",{:.12e}", s.samples[n]));
        }
        csv.push('\n');
    }
    let csv_path = dir.join(format!("{name}.csv"));
    fs::write(&csv_path, csv).map_err(|e| LabError::io(&csv_path, e))?;
    let json_path = dir.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(header).expect("header serializes");
    fs::write(&json_path, text + "\n").map_err(|e| LabError::io(&json_path, e))
}

pub(crate) fn snapshot_of(grid: &Grid3D, u: &[f64], t: f64) -> Result<ScalarField3D> {
    Ok(ScalarField3D::new(grid.clone(), u.to_vec())?.with_time(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_functional_integrates_linear_field_exactly() {
        let g = Grid3D::cube(1.0, 0.125).unwrap();
        let theta = Direction::new(Vec3::new(0.0, 0.0, 1.0)).unwrap();
        let (value, flux) = plane_functionals(&g, &theta, 0.25);
        // u = 1 + 2z on the grid: plane value sums h² over the in-box plane, flux = 2 × area
        let u: Vec<f64> = (0..g.len()).map(|i| 1.0 + 2.0 * g.position_of(i)[2]).collect();
        let area: f64 = value.iter().map(|&(_, w)| w).sum();
        assert!((apply(&value, &u) - 1.5 * area).abs() < 1e-12);
        assert!((apply(&flux, &u) - 2.0 * area).abs() < 1e-10);
    }

    #[test]
    fn oblique_plane_flux_is_exact_for_linear_fields() {
        let g = Grid3D::cube(1.0, 0.1).unwrap();
        let theta = Direction::normalized(Vec3::new(1.0, 2.0, 2.0)).unwrap();
        let (value, flux) = plane_functionals(&g, &theta, 0.3);
        let u: Vec<f64> = (0..g.len()).map(|i| g.position_of(i).dot(&theta.vec())).collect();
        let area: f64 = value.iter().map(|&(_, w)| w).sum();
        assert!((apply(&value, &u) - 0.3 * area).abs() < 1e-10);
        assert!((apply(&flux, &u) - area).abs() < 1e-9);
    }

    #[test]
    fn region_ball_uses_origin_sub_lattice() {
        let g = Grid3D::cube(2.0, 0.25).unwrap();
        let r = RegionSpec::ball("b", &g, 1.0, 2, 0.0, 1.0).unwrap();
        for &n in &r.nodes {
            let p = g.position_of(n as usize);
            assert!(p.norm() <= 1.0 + 1e-12);
            for a in 0..3 {
                assert!((p[a] / 0.5 - (p[a] / 0.5).round()).abs() < 1e-12);
            }
        }
        let count = (-2..=2i32)
            .flat_map(|i| (-2..=2i32).flat_map(move |j| (-2..=2i32).map(move |k| (i, j, k))))
            .filter(|&(i, j, k)| i * i + j * j + k * k <= 4)
            .count();
        assert_eq!(r.nodes.len(), count);
    }
}
