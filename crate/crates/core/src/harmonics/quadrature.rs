use std::f64::consts::PI;

use crate::geometry::{Direction, Vec3};
use crate::quad::GaussRule;

/// Product rule on the unit sphere: Gauss–Legendre in cos(polar) × uniform azimuth.
///
/// With n_θ = ⌊order/2⌋ + 1 polar nodes and n_φ = order + 1 azimuths, every polynomial of
/// degree ≤ order restricted to the sphere is integrated exactly.
#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    pub order: usize,
    pub nodes: Vec<Direction>,
    pub weights: Vec<f64>,
}

pub fn make_sphere_quadrature(order: usize) -> SphereQuadrature {
    let n_polar = order / 2 + 1;
    let n_azimuth = order + 1;
    let rule = GaussRule::legendre(n_polar);
    let mut nodes = Vec::with_capacity(n_polar * n_azimuth);
    let mut weights = Vec::with_capacity(n_polar * n_azimuth);
    let dphi = 2.0 * PI / n_azimuth as f64;
    for (&z, &w) in rule.nodes.iter().zip(&rule.weights) {
        let r = (1.0 - z * z).sqrt();
        for k in 0..n_azimuth {
            // half-step offset keeps nodes off the x–z plane
            let phi = (k as f64 + 0.5) * dphi;
            let v = Vec3::new(r * phi.cos(), r * phi.sin(), z);
            nodes.push(Direction::normalized(v).expect("unit node"));
            weights.push(w * dphi);
        }
    }
    SphereQuadrature { order, nodes, weights }
}

impl SphereQuadrature {
    pub fn integrate(&self, mut f: impl FnMut(&Vec3) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(d, &w)| w * f(&d.vec()))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
