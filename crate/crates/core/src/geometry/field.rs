use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{LabError, Result};

/// Uniform isotropic Cartesian grid; node (i, j, k) sits at origin + h·(i, j, k).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid3D {
    pub origin: Vec3,
    pub spacing: f64,
    pub dims: [usize; 3],
}

impl Grid3D {
    pub fn new(origin: Vec3, spacing: f64, dims: [usize; 3]) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(LabError::Configuration(format!("grid spacing must be positive, got {spacing}")));
        }
        if dims.iter().any(|&n| n < 2) {
            return Err(LabError::Configuration(format!("grid needs at least 2 nodes per axis, got {dims:?}")));
        }
        if !origin.iter().all(|c| c.is_finite()) {
            return Err(LabError::Configuration("grid origin must be finite".into()));
        }
        Ok(Grid3D { origin, spacing, dims })
    }

    /// The box [−half_width, half_width]³; half_width must be a multiple of h.
    pub fn cube(half_width: f64, spacing: f64) -> Result<Self> {
        let cells = 2.0 * half_width / spacing;
        let n = cells.round();
        if !(n >= 1.0) || (cells - n).abs() > 1e-9 * n.max(1.0) {
            return Err(LabError::Configuration(format!(
                "box half-width {half_width} is not a whole number of cells of size {spacing}"
            )));
        }
        let dim = n as usize + 1;
        Grid3D::new(Vec3::repeat(-half_width), spacing, [dim; 3])
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index, x slowest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.dims[2];
        let rest = idx / self.dims[2];
        [rest / self.dims[1], rest % self.dims[1], k]
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.spacing
    }

    pub fn position_of(&self, idx: usize) -> Vec3 {
        let [i, j, k] = self.unindex(idx);
        self.position(i, j, k)
    }

    pub fn upper(&self) -> Vec3 {
        self.origin
            + Vec3::new(
                (self.dims[0] - 1) as f64,
                (self.dims[1] - 1) as f64,
                (self.dims[2] - 1) as f64,
            ) * self.spacing
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        let hi = self.upper();
        (0..3).all(|a| p[a] >= self.origin[a] && p[a] <= hi[a])
    }

    /// Distance from `p` to the nearest face of the box (negative outside).
    pub fn distance_to_boundary(&self, p: &Vec3) -> f64 {
        let hi = self.upper();
        (0..3)
            .map(|a| (p[a] - self.origin[a]).min(hi[a] - p[a]))
            .fold(f64::INFINITY, f64::min)
    }

    /// The eight trilinear stencil entries for `p`, or `None` outside the box.
    ///
    /// Entries with zero weight are kept so the result has a fixed size; callers that
    /// build sparse functionals drop them.
    pub fn trilinear_weights(&self, p: &Vec3) -> Option<[(usize, f64); 8]> {
        if !p.iter().all(|c| c.is_finite()) || !self.contains(p) {
            return None;
        }
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let s = (p[a] - self.origin[a]) / self.spacing;
            let cell = (s.floor() as usize).min(self.dims[a] - 2);
            base[a] = cell;
            frac[a] = (s - cell as f64).clamp(0.0, 1.0);
        }
        let mut out = [(0usize, 0.0); 8];
        for (n, slot) in out.iter_mut().enumerate() {
            let (di, dj, dk) = (n >> 2 & 1, n >> 1 & 1, n & 1);
            let w = axis_weight(frac[0], di) * axis_weight(frac[1], dj) * axis_weight(frac[2], dk);
            *slot = (self.index(base[0] + di, base[1] + dj, base[2] + dk), w);
        }
        Some(out)
    }
}

#[inline]
fn axis_weight(f: f64, upper: usize) -> f64 {
    if upper == 1 {
        f
    } else {
        1.0 - f
    }
}

/// Gridded scalar samples, optionally stamped with the simulation time they belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField3D {
    grid: Grid3D,
    values: Vec<f64>,
    pub time: f64,
}

impl ScalarField3D {
    pub fn new(grid: Grid3D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::Configuration(format!(
                "field has {} values but grid {:?} needs {}",
                values.len(),
                grid.dims,
                grid.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::Configuration(format!("non-finite field value at index {pos}")));
        }
        Ok(ScalarField3D { grid, values, time: 0.0 })
    }

    pub fn zeros(grid: Grid3D) -> Self {
        let values = vec![0.0; grid.len()];
        ScalarField3D { grid, values, time: 0.0 }
    }

    pub fn from_fn(grid: Grid3D, f: impl Fn(&Vec3) -> f64) -> Self {
        let values = (0..grid.len()).map(|idx| f(&grid.position_of(idx))).collect();
        ScalarField3D { grid, values, time: 0.0 }
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn grid(&self) -> &Grid3D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }
}

pub fn trilinear_eval(field: &ScalarField3D, point: &Vec3) -> Result<f64> {
    let stencil = field
        .grid
        .trilinear_weights(point)
        .ok_or(LabError::OutOfDomain { point: [point[0], point[1], point[2]] })?;
    Ok(stencil.iter().map(|&(idx, w)| w * field.values[idx]).sum())
}

/// Uniformly sampled signal starting at `t0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(LabError::Configuration(format!("time step must be positive, got {dt}")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Instability { step: 0, time: t0 });
        }
        Ok(TimeSeries { t0, dt, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.samples.len().saturating_sub(1))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.samples.iter().enumerate().map(|(n, &v)| (self.time(n), v))
    }

    /// Cubic Lagrange interpolation (linear near the ends); zero outside the sampled window.
    pub fn sample(&self, t: f64) -> f64 {
        interpolate_uniform(&self.samples, self.t0, self.dt, t)
    }

    pub fn peak_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoid rule over the whole record.
    pub fn integral(&self) -> f64 {
        let n = self.samples.len();
        if n < 2 {
            return 0.0;
        }
        let inner: f64 = self.samples.iter().sum();
        self.dt * (inner - 0.5 * (self.samples[0] + self.samples[n - 1]))
    }
}

/// Four-point Lagrange interpolation on a uniform grid; zero outside [t0, t_last].
pub(crate) fn interpolate_uniform(samples: &[f64], t0: f64, dt: f64, t: f64) -> f64 {
    let n = samples.len();
    if n == 0 {
        return 0.0;
    }
    let x = (t - t0) / dt;
    let last = (n - 1) as f64;
    if !(x >= -1e-9 && x <= last + 1e-9) {
        return 0.0;
    }
    if n == 1 {
        return samples[0];
    }
    let i = (x.floor() as usize).min(n - 2);
    let f = x - i as f64;
    if n < 4 || i == 0 || i + 2 >= n {
        return samples[i] * (1.0 - f) + samples[i + 1] * f;
    }
    let (a, b, c, d) = (samples[i - 1], samples[i], samples[i + 1], samples[i + 2]);
    let wa = -f * (f - 1.0) * (f - 2.0) / 6.0;
    let wb = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
    let wc = -(f + 1.0) * f * (f - 2.0) / 2.0;
    let wd = (f + 1.0) * f * (f - 1.0) / 6.0;
    wa * a + wb * b + wc * c + wd * d
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_grid() -> Grid3D {
        Grid3D::new(Vec3::new(-1.0, -0.5, 0.25), 0.125, [9, 7, 6]).unwrap()
    }

    #[test]
    fn affine_function_is_reproduced() {
        let g = unit_grid();
        let f = |p: &Vec3| p[0] + 2.0 * p[1] - p[2];
        let field = ScalarField3D::from_fn(g.clone(), f);
        let p = Vec3::new(-0.61, -0.07, 0.51);
        assert!((trilinear_eval(&field, &p).unwrap() - f(&p)).abs() < 1e-12);
        // the far corner uses the clamped last cell
        let hi = g.upper();
        assert!((trilinear_eval(&field, &hi).unwrap() - f(&hi)).abs() < 1e-12);
    }

    #[test]
    fn node_values_are_returned_exactly() {
        let g = unit_grid();
        let field = ScalarField3D::from_fn(g.clone(), |p| (p[0] * 3.1).sin() + p[1] * p[2]);
        let p = g.position(3, 2, 4);
        assert_eq!(trilinear_eval(&field, &p).unwrap(), field.get(3, 2, 4));
    }

    #[test]
    fn outside_point_is_rejected() {
        let g = unit_grid();
        let field = ScalarField3D::zeros(g.clone());
        let p = g.origin - Vec3::new(g.spacing, 0.0, 0.0);
        assert!(matches!(trilinear_eval(&field, &p), Err(LabError::OutOfDomain { .. })));
    }

    #[test]
    fn cube_requires_whole_cells() {
        assert_eq!(Grid3D::cube(3.0, 1.0 / 16.0).unwrap().dims, [97; 3]);
        assert!(Grid3D::cube(1.0, 0.3).is_err());
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let ts: Vec<f64> = (0..20).map(|n| {
            let t = 0.3 + 0.1 * n as f64;
            t * t * t - 2.0 * t
        }).collect();
        let series = TimeSeries::new(0.3, 0.1, ts).unwrap();
        for t in [0.55, 1.234, 1.9] {
            assert!((series.sample(t) - (t * t * t - 2.0 * t)).abs() < 1e-12);
        }
        assert_eq!(series.sample(-1.0), 0.0);
    }

    proptest! {
        #[test]
        fn trilinear_reproduces_multilinear(
            a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64, d in -2.0..2.0f64,
            x in 0.0..1.0f64, y in 0.0..1.0f64, z in 0.0..1.0f64,
        ) {
            let g = unit_grid();
            let f = |p: &Vec3| a + b * p[0] + c * p[1] * p[2] + d * p[0] * p[1] * p[2];
            let field = ScalarField3D::from_fn(g.clone(), f);
            let p = g.origin + (g.upper() - g.origin).component_mul(&Vec3::new(x, y, z));
            prop_assert!((trilinear_eval(&field, &p).unwrap() - f(&p)).abs() < 1e-12);
        }
    }
}
