//! Spherical harmonics, sphere quadrature and the angular-derivative identities.

pub mod basis;
pub mod poly;
pub mod quadrature;

use std::fmt::Write as _;

use crate::error::{LabError, Result};
use crate::geometry::Vec3;
use crate::potential::{omega_derivative, Analytic, Potential};

pub use basis::{solid_harmonic, BasisEntry, HarmonicBasis};
pub use poly::{Poly3, PolyJet};
pub use quadrature::{make_sphere_quadrature, SphereQuadrature};

/// The three axis pairs (i < j), 0-based.
pub const AXIS_PAIRS: [(usize, usize); 3] = poly::PAIRS;

/// Ω_ij f(x) = x_i ∂_j f − x_j ∂_i f with 1-based axis labels, i < j.
pub fn omega_ij(f: &impl Analytic, i: usize, j: usize, x: &Vec3) -> Result<f64> {
    if !(1 <= i && i < j && j <= 3) {
        return Err(LabError::Domain(format!("need 1 ≤ i < j ≤ 3, got ({i}, {j})")));
    }
    Ok(omega_derivative(f, i - 1, j - 1, x))
}

/// p_n(ρ) = ∫_S p(ρω) φ_n(ω) dω for every basis entry.
pub fn expand(p: &impl Analytic, rho: f64, basis: &HarmonicBasis, quad: &SphereQuadrature) -> Result<Vec<f64>> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(LabError::Domain(format!("ρ = {rho} outside (0, 1]")));
    }
    let samples: Vec<f64> = quad.nodes.iter().map(|w| p.value(&(w.vec() * rho))).collect();
    Ok(basis
        .entries
        .iter()
        .map(|e| {
            quad.nodes
                .iter()
                .zip(&quad.weights)
                .zip(&samples)
                .map(|((w, &wt), &s)| wt * s * e.eval(&w.vec()))
                .sum()
        })
        .collect())
}

/// Radial coefficient functions p_n(ρ) on a ρ-grid.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicExpansion {
    pub rho: Vec<f64>,
    pub degrees: Vec<u32>,
    pub orders: Vec<i32>,
    /// coefficients[ρ index][n]
    pub coefficients: Vec<Vec<f64>>,
}

impl HarmonicExpansion {
    pub fn compute(p: &impl Analytic, rho: &[f64], basis: &HarmonicBasis, quad: &SphereQuadrature) -> Result<Self> {
        if rho.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Domain("ρ-grid must be increasing".into()));
        }
        let coefficients = rho.iter().map(|&r| expand(p, r, basis, quad)).collect::<Result<_>>()?;
        Ok(HarmonicExpansion {
            rho: rho.to_vec(),
            degrees: basis.entries.iter().map(|e| e.degree).collect(),
            orders: basis.entries.iter().map(|e| e.order).collect(),
            coefficients,
        })
    }

    /// Σ_n p_n(ρ_k) φ_n(ω).
    pub fn reconstruct(&self, k: usize, basis: &HarmonicBasis, omega: &Vec3) -> f64 {
        self.coefficients[k]
            .iter()
            .zip(&basis.entries)
            .map(|(c, e)| c * e.eval(omega))
            .sum()
    }

    /// CSV with columns rho, n, degree, coefficient.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,n,degree,coefficient\n");
        for (r, row) in self.rho.iter().zip(&self.coefficients) {
            for (n, c) in row.iter().enumerate() {
                let _ = writeln!(out, "{r},{n},{},{c}", self.degrees[n]);
            }
        }
        out
    }
}

/// sup over quadrature nodes of |Δ_S φ_n + d_n(d_n+1) φ_n|, with Δ_S applied symbolically.
pub fn laplace_beltrami_check(entry: &BasisEntry, quad: &SphereQuadrature) -> f64 {
    let lap = entry.poly.sphere_laplacian();
    let d = entry.degree as f64;
    quad.nodes
        .iter()
        .map(|w| (lap.eval(&w.vec()) + d * (d + 1.0) * entry.poly.eval(&w.vec())).abs())
        .fold(0.0, f64::max)
}

/// Direct Σ_{i<j} ∫_S (Ω_ij p)² and spectral Σ_n d_n(d_n+1) p_n(ρ)² angular energies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngularEnergy {
    pub direct: f64,
    pub spectral: f64,
}

pub fn angular_energy(p: &Potential, rho: f64, basis: &HarmonicBasis, quad: &SphereQuadrature) -> Result<AngularEnergy> {
    let coeffs = expand(p, rho, basis, quad)?;
    let direct = AXIS_PAIRS
        .iter()
        .map(|&(i, j)| quad.integrate(|w| omega_derivative(p, i, j, &(w * rho)).powi(2)))
        .sum();
    let spectral = coeffs
        .iter()
        .zip(&basis.entries)
        .map(|(c, e)| {
            let d = e.degree as f64;
            d * (d + 1.0) * c * c
        })
        .sum();
    Ok(AngularEnergy { direct, spectral })
}

/// |∫(Ω_ij f) g + ∫ f (Ω_ij g)| over the sphere (1-based i < j).
pub fn ibyp_check(f: &impl Analytic, g: &impl Analytic, i: usize, j: usize, quad: &SphereQuadrature) -> Result<f64> {
    let mut total = 0.0;
    for (w, &wt) in quad.nodes.iter().zip(&quad.weights) {
        let x = w.vec();
        total += wt * (omega_ij(f, i, j, &x)? * g.value(&x) + f.value(&x) * omega_ij(g, i, j, &x)?);
    }
    Ok(total.abs())
}

/// max over ρ of Σ d_n(d_n+1) p_n² / Σ p_n², skipping shells with Σ p_n² < 1e-14.
pub fn angcond_constant_spectral(expansion: &HarmonicExpansion) -> Result<f64> {
    let mut best: Option<f64> = None;
    for row in &expansion.coefficients {
        let denom: f64 = row.iter().map(|c| c * c).sum();
        if denom < 1e-14 {
            continue;
        }
        let num: f64 = row
            .iter()
            .zip(&expansion.degrees)
            .map(|(c, &d)| (d * (d + 1)) as f64 * c * c)
            .sum();
        let ratio = num / denom;
        best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
    }
    best.ok_or_else(|| LabError::DegenerateInput("expansion vanishes on every shell".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::RadialProfile;
    use std::f64::consts::PI;

    #[test]
    fn gram_matrix_is_identity() {
        let basis = HarmonicBasis::new(6);
        let quad = make_sphere_quadrature(12);
        for a in &basis.entries {
            for b in &basis.entries {
                let g = quad.integrate(|w| a.eval(w) * b.eval(w));
                let target = if a.index == b.index { 1.0 } else { 0.0 };
                assert!((g - target).abs() < 1e-12, "({}, {})", a.index, b.index);
            }
        }
    }

    #[test]
    fn eigenrelation_holds_at_nodes() {
        let basis = HarmonicBasis::new(6);
        let quad = make_sphere_quadrature(12);
        for e in &basis.entries {
            assert!(laplace_beltrami_check(e, &quad) < 1e-10, "{}", e.index);
        }
    }

    #[test]
    fn expansion_of_x3() {
        let basis = HarmonicBasis::new(4);
        let quad = make_sphere_quadrature(10);
        let c = expand(&Poly3::coordinate(2), 1.0, &basis, &quad).unwrap();
        let target = HarmonicBasis::index_of(1, 0);
        for (n, v) in c.iter().enumerate() {
            if n == target {
                assert!((v - (4.0 * PI / 3.0).sqrt()).abs() < 1e-12);
            } else {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn angular_energy_of_x3_profile() {
        // p(ρω) = f(ρ)·ω₃ with f(ρ) = ρ·√(3/4π)·exp(−1/(1−ρ²)), so both energies are 8π/3·f²
        let p = Potential::radial_harmonic(1.0, RadialProfile::Exponential, 1, 0).unwrap();
        let basis = HarmonicBasis::new(3);
        let quad = make_sphere_quadrature(8);
        let rho = 0.5;
        let f = rho * (3.0 / (4.0 * PI)).sqrt() * (-1.0 / (1.0 - rho * rho)).exp();
        let e = angular_energy(&p, rho, &basis, &quad).unwrap();
        assert!((e.direct - 8.0 * PI / 3.0 * f * f).abs() < 1e-14);
        assert!((e.spectral - e.direct).abs() < 1e-14);
    }

    #[test]
    fn skew_adjointness_examples() {
        let quad = make_sphere_quadrature(8);
        let w1 = Poly3::coordinate(0);
        let w2 = Poly3::coordinate(1);
        assert!(ibyp_check(&w1, &w2, 1, 2, &quad).unwrap() < 1e-12);
        assert!(ibyp_check(&Poly3::constant(2.0), &w2, 1, 3, &quad).unwrap() < 1e-12);
        assert!(ibyp_check(&w1, &w1, 1, 2, &quad).unwrap() < 1e-12);
        assert!(omega_ij(&w1, 2, 1, &Vec3::zeros()).is_err());
    }

    #[test]
    fn spectral_constant_examples() {
        let shell = HarmonicExpansion {
            rho: vec![0.5, 0.9],
            degrees: vec![0, 1, 1, 1],
            orders: vec![0, -1, 0, 1],
            coefficients: vec![vec![0.0, 0.3, 0.0, -0.1], vec![0.0, 0.0, 2.0, 0.0]],
        };
        assert_eq!(angcond_constant_spectral(&shell).unwrap(), 2.0);
        let zero = HarmonicExpansion { coefficients: vec![vec![0.0; 4]; 2], ..shell.clone() };
        assert!(angcond_constant_spectral(&zero).is_err());
        let radial = HarmonicExpansion { coefficients: vec![vec![1.0, 0.0, 0.0, 0.0]; 2], ..shell };
        assert_eq!(angcond_constant_spectral(&radial).unwrap(), 0.0);
    }
}
