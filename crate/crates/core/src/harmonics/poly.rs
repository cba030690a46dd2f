use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::geometry::{Mat3, Vec3};

/// Real polynomial in (x, y, z), stored as exponent triple → coefficient.
///
/// Used for spherical harmonics and their angular derivatives, which stay polynomial, so
/// Ω_ij and Δ_S can be applied exactly instead of by finite differences.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly3 {
    terms: BTreeMap<[u32; 3], f64>,
}

impl Poly3 {
    pub fn zero() -> Self {
        Poly3::default()
    }

    pub fn constant(c: f64) -> Self {
        Poly3::monomial([0, 0, 0], c)
    }

    pub fn monomial(exp: [u32; 3], coeff: f64) -> Self {
        let mut p = Poly3::zero();
        p.add_term(exp, coeff);
        p
    }

    /// The coordinate x_i (0-based axis).
    pub fn coordinate(i: usize) -> Self {
        let mut e = [0; 3];
        e[i] = 1;
        Poly3::monomial(e, 1.0)
    }

    /// |x|².
    pub fn radius_squared() -> Self {
        (0..3).map(|i| Poly3::monomial(exp_unit(i, 2), 1.0)).fold(Poly3::zero(), |a, b| a + b)
    }

    fn add_term(&mut self, exp: [u32; 3], coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let slot = self.terms.entry(exp).or_insert(0.0);
        *slot += coeff;
        if *slot == 0.0 {
            self.terms.remove(&exp);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e[0] + e[1] + e[2]).max()
    }

    pub fn terms(&self) -> impl Iterator<Item = ([u32; 3], f64)> + '_ {
        self.terms.iter().map(|(&e, &c)| (e, c))
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Poly3::zero();
        for (&e, &v) in &self.terms {
            out.add_term(e, v * c);
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Poly3::constant(1.0), |acc, _| &acc * self)
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Poly3::zero();
        for (&e, &c) in &self.terms {
            if e[i] > 0 {
                let mut d = e;
                d[i] -= 1;
                out.add_term(d, c * e[i] as f64);
            }
        }
        out
    }

    /// x_i · p.
    pub fn times_coordinate(&self, i: usize) -> Self {
        let mut out = Poly3::zero();
        for (&e, &c) in &self.terms {
            let mut d = e;
            d[i] += 1;
            out.add_term(d, c);
        }
        out
    }

    /// Angular derivative Ω_ij p = x_i ∂_j p − x_j ∂_i p (0-based axes).
    pub fn omega(&self, i: usize, j: usize) -> Self {
        self.derivative(j).times_coordinate(i) - self.derivative(i).times_coordinate(j)
    }

    /// Δ_S p = Σ_{i<j} Ω_ij² p.
    pub fn sphere_laplacian(&self) -> Self {
        PAIRS
            .iter()
            .map(|&(i, j)| self.omega(i, j).omega(i, j))
            .fold(Poly3::zero(), |a, b| a + b)
    }

    pub fn laplacian(&self) -> Self {
        (0..3)
            .map(|i| self.derivative(i).derivative(i))
            .fold(Poly3::zero(), |a, b| a + b)
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        let Some(deg) = self.degree() else { return 0.0 };
        let powers = PowerTable::new(x, deg);
        self.terms
            .iter()
            .map(|(e, &c)| c * powers.get(0, e[0]) * powers.get(1, e[1]) * powers.get(2, e[2]))
            .sum()
    }

    /// Drops coefficients below `tol` in absolute value (cleans cancellation noise).
    pub fn pruned(&self, tol: f64) -> Self {
        let mut out = Poly3::zero();
        for (&e, &c) in &self.terms {
            if c.abs() > tol {
                out.add_term(e, c);
            }
        }
        out
    }
}

pub(crate) const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn exp_unit(i: usize, power: u32) -> [u32; 3] {
    let mut e = [0; 3];
    e[i] = power;
    e
}

struct PowerTable {
    table: [Vec<f64>; 3],
}

impl PowerTable {
    fn new(x: &Vec3, deg: u32) -> Self {
        let row = |v: f64| {
            let mut r = Vec::with_capacity(deg as usize + 1);
            let mut acc = 1.0;
            for _ in 0..=deg {
                r.push(acc);
                acc *= v;
            }
            r
        };
        PowerTable { table: [row(x[0]), row(x[1]), row(x[2])] }
    }

    #[inline]
    fn get(&self, axis: usize, power: u32) -> f64 {
        self.table[axis][power as usize]
    }
}

impl Add for Poly3 {
    type Output = Poly3;
    fn add(mut self, rhs: Poly3) -> Poly3 {
        for (e, c) in rhs.terms {
            self.add_term(e, c);
        }
        self
    }
}

impl Sub for Poly3 {
    type Output = Poly3;
    fn sub(self, rhs: Poly3) -> Poly3 {
        self + (-rhs)
    }
}

impl Neg for Poly3 {
    type Output = Poly3;
    fn neg(self) -> Poly3 {
        self.scale(-1.0)
    }
}

impl Mul for &Poly3 {
    type Output = Poly3;
    fn mul(self, rhs: &Poly3) -> Poly3 {
        let mut out = Poly3::zero();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &rhs.terms {
                out.add_term([a[0] + b[0], a[1] + b[1], a[2] + b[2]], ca * cb);
            }
        }
        out
    }
}

/// A polynomial together with its gradient and Hessian polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyJet {
    pub value: Poly3,
    pub grad: [Poly3; 3],
    pub hess: [[Poly3; 3]; 3],
}

impl PolyJet {
    pub fn new(p: Poly3) -> Self {
        let grad = [p.derivative(0), p.derivative(1), p.derivative(2)];
        let hess = std::array::from_fn(|i| std::array::from_fn(|j| grad[i].derivative(j)));
        PolyJet { value: p, grad, hess }
    }

    pub fn eval(&self, x: &Vec3) -> (f64, Vec3, Mat3) {
        let g = Vec3::new(self.grad[0].eval(x), self.grad[1].eval(x), self.grad[2].eval(x));
        let h = Mat3::from_fn(|i, j| self.hess[i][j].eval(x));
        (self.value.eval(x), g, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_examples() {
        let x1 = Poly3::coordinate(0);
        let x3 = Poly3::coordinate(2);
        assert_eq!(x1.omega(0, 1), -Poly3::coordinate(1));
        assert_eq!(x3.omega(0, 2), Poly3::coordinate(0));
        for (i, j) in PAIRS {
            assert!(Poly3::radius_squared().omega(i, j).is_zero());
        }
    }

    #[test]
    fn product_and_eval_agree() {
        let p = Poly3::coordinate(0) + Poly3::monomial([0, 2, 1], -3.0);
        let q = Poly3::radius_squared().scale(0.5) + Poly3::constant(2.0);
        let x = Vec3::new(0.3, -1.2, 0.7);
        assert!(((&p * &q).eval(&x) - p.eval(&x) * q.eval(&x)).abs() < 1e-13);
    }

    #[test]
    fn sphere_laplacian_of_linear_function() {
        // Δ_S x₃ = −2 x₃ on homogeneous degree-1 harmonics
        let z = Poly3::coordinate(2);
        assert_eq!(z.sphere_laplacian(), z.scale(-2.0));
    }
}
