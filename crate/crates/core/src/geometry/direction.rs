use std::ops::Neg;

use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{LabError, Result};

/// A unit vector in R³ (an incidence or observation direction).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Direction(Vec3);

const UNIT_TOLERANCE: f64 = 1e-12;

impl Direction {
    /// Accepts `v` only if it is already unit length to within 1e-12.
    pub fn new(v: Vec3) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(LabError::DegenerateInput(format!(
                "direction {v:?} has norm {norm}, expected 1"
            )));
        }
        Ok(Direction(v))
    }

    pub fn normalized(v: Vec3) -> Result<Self> {
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(LabError::DegenerateInput(format!(
                "cannot normalize direction {v:?}"
            )));
        }
        Ok(Direction(v / norm))
    }

    pub fn axis(i: usize) -> Self {
        let mut v = Vec3::zeros();
        v[i] = 1.0;
        Direction(v)
    }

    /// Polar angle from +z, azimuth from +x.
    pub fn from_spherical(polar: f64, azimuth: f64) -> Self {
        let (st, ct) = polar.sin_cos();
        let (sp, cp) = azimuth.sin_cos();
        Direction(Vec3::new(st * cp, st * sp, ct))
    }

    pub fn vec(&self) -> Vec3 {
        self.0
    }

    pub fn dot(&self, x: &Vec3) -> f64 {
        self.0.dot(x)
    }

    /// Orthonormal in-plane basis (e1, e2) of the plane perpendicular to the direction.
    ///
    /// The basis depends only on the line ±ω, so planes x·ω = τ and x·(−ω) = −τ get
    /// identical quadrature nodes. For coordinate axes both vectors are coordinate axes,
    /// which keeps plane probes on lattice nodes.
    pub fn plane_basis(&self) -> (Vec3, Vec3) {
        let v = self.0;
        // canonical representative of the line: first nonzero component (by size order) positive
        let lead = (0..3)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
            .unwrap_or(2);
        let w = if v[lead] < 0.0 { -v } else { v };
        let least = (0..3)
            .min_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()).then(a.cmp(&b)))
            .unwrap_or(0);
        let mut axis = Vec3::zeros();
        axis[least] = 1.0;
        let e1 = axis.cross(&w).normalize();
        let e2 = w.cross(&e1);
        (e1, e2)
    }
}

impl Neg for Direction {
    type Output = Direction;
    fn neg(self) -> Direction {
        Direction(-self.0)
    }
}

impl TryFrom<[f64; 3]> for Direction {
    type Error = LabError;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Direction::normalized(Vec3::new(v[0], v[1], v[2]))
    }
}

impl From<Direction> for [f64; 3] {
    fn from(d: Direction) -> [f64; 3] {
        [d.0[0], d.0[1], d.0[2]]
    }
}

/// Near-uniform point set on the sphere (golden-angle spiral).
pub fn fibonacci_directions(n: usize) -> Vec<Direction> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            Direction(Vec3::new(r * phi.cos(), r * phi.sin(), z))
        })
        .collect()
}
