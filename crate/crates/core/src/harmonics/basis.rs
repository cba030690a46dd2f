use std::f64::consts::PI;

use super::poly::Poly3;
use crate::geometry::Vec3;

/// Real solid harmonic r^l·Y_lm as a homogeneous polynomial, normalized so that its
/// restriction to the unit sphere has unit L² norm.
///
/// Negative orders carry the sin(|m|φ) factor, nonnegative orders cos(mφ).
pub fn solid_harmonic(degree: u32, order: i32) -> Poly3 {
    let l = degree as i64;
    let m = order.unsigned_abs() as i64;
    assert!(m <= l, "order {order} exceeds degree {degree}");

    // r^{l−m}·P_l^{(m)}(z/r) = Σ_k a_k (l−2k)!/(l−2k−m)! z^{l−m−2k} r^{2k}
    let r2 = Poly3::radius_squared();
    let mut zonal = Poly3::zero();
    let mut k = 0;
    while l - 2 * k - m >= 0 {
        let a_k = sign(k) * factorial(2 * l - 2 * k)
            / (2f64.powi(l as i32) * factorial(k) * factorial(l - k) * factorial(l - 2 * k));
        let c = a_k * factorial(l - 2 * k) / factorial(l - 2 * k - m);
        let term = Poly3::monomial([0, 0, (l - m - 2 * k) as u32], c);
        zonal = zonal + &term * &r2.pow(k as u32);
        k += 1;
    }

    // Re or Im of (x + iy)^m
    let mut azimuthal = Poly3::zero();
    for j in 0..=m {
        let even = j % 2 == 0;
        if even != (order >= 0) {
            continue;
        }
        let s = if even { sign(j / 2) } else { sign((j - 1) / 2) };
        azimuthal = azimuthal + Poly3::monomial([(m - j) as u32, j as u32, 0], s * binomial(m, j));
    }

    let mut norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - m) / factorial(l + m)).sqrt();
    if m > 0 {
        norm *= 2f64.sqrt();
    }
    (&zonal * &azimuthal).scale(norm)
}

fn sign(k: i64) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn factorial(n: i64) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

fn binomial(n: i64, k: i64) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// One basis function φ_n with its degree d_n and order.
#[derive(Clone, Debug)]
pub struct BasisEntry {
    pub index: usize,
    pub degree: u32,
    pub order: i32,
    pub poly: Poly3,
}

impl BasisEntry {
    pub fn eval(&self, omega: &Vec3) -> f64 {
        self.poly.eval(omega)
    }
}

/// Real orthonormal spherical harmonics of degree ≤ `max_degree`, ordered by
/// (degree, order) with order running −d..=d.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    pub max_degree: u32,
    pub entries: Vec<BasisEntry>,
}

impl HarmonicBasis {
    pub fn new(max_degree: u32) -> Self {
        let mut entries = Vec::new();
        for d in 0..=max_degree {
            for m in -(d as i32)..=(d as i32) {
                entries.push(BasisEntry {
                    index: entries.len(),
                    degree: d,
                    order: m,
                    poly: solid_harmonic(d, m).pruned(1e-15),
                });
            }
        }
        HarmonicBasis { max_degree, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Position of (degree, order) in the ordering.
    pub fn index_of(degree: u32, order: i32) -> usize {
        (degree * degree) as usize + (order + degree as i32) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_closed_forms() {
        let x = Vec3::new(0.3, -0.4, 0.5);
        let y00 = solid_harmonic(0, 0).eval(&x);
        assert!((y00 - 0.5 / PI.sqrt()).abs() < 1e-15);
        let y10 = solid_harmonic(1, 0).eval(&x);
        assert!((y10 - (3.0 / (4.0 * PI)).sqrt() * 0.5).abs() < 1e-15);
        // √(15/16π)(x² − y²) for (2, 2)
        let y22 = solid_harmonic(2, 2).eval(&x);
        assert!((y22 - (15.0 / (16.0 * PI)).sqrt() * (0.09 - 0.16)).abs() < 1e-14);
    }

    #[test]
    fn solid_harmonics_are_harmonic_polynomials() {
        for d in 0..=6 {
            for m in -(d as i32)..=(d as i32) {
                let p = solid_harmonic(d, m);
                assert!(p.laplacian().pruned(1e-12).is_zero(), "({d},{m})");
                assert_eq!(p.degree(), Some(d));
            }
        }
    }

    #[test]
    fn index_matches_ordering() {
        let b = HarmonicBasis::new(4);
        for e in &b.entries {
            assert_eq!(HarmonicBasis::index_of(e.degree, e.order), e.index);
        }
        assert_eq!(b.len(), 25);
    }
}
