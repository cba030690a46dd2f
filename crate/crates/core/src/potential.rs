//! Smooth compactly supported potentials with analytic value, gradient and Hessian.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{Direction, Mat3, Vec3};
use crate::harmonics::basis::solid_harmonic;
use crate::harmonics::poly::{Poly3, PolyJet, PAIRS};
use crate::harmonics::quadrature::make_sphere_quadrature;
use crate::quad::{adaptive, GaussRule};

/// Anything that can report value, gradient and Hessian at a point.
pub trait Analytic: Sync {
    fn jet(&self, x: &Vec3) -> (f64, Vec3, Mat3);

    fn value(&self, x: &Vec3) -> f64 {
        self.jet(x).0
    }

    fn gradient(&self, x: &Vec3) -> Vec3 {
        self.jet(x).1
    }
}

impl Analytic for Poly3 {
    fn jet(&self, x: &Vec3) -> (f64, Vec3, Mat3) {
        PolyJet::new(self.clone()).eval(x)
    }

    fn value(&self, x: &Vec3) -> f64 {
        self.eval(x)
    }

    fn gradient(&self, x: &Vec3) -> Vec3 {
        Vec3::new(self.derivative(0).eval(x), self.derivative(1).eval(x), self.derivative(2).eval(x))
    }
}

/// Radial profile φ(s) of s = |x|², vanishing for s ≥ 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum RadialProfile {
    /// exp(−1/(1−s))
    Exponential,
    /// (1−s)^order
    Polynomial { order: u32 },
}

impl RadialProfile {
    /// (φ, φ′, φ″) at s.
    fn derivs(self, s: f64) -> (f64, f64, f64) {
        if s >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let t = 1.0 - s;
        match self {
            RadialProfile::Exponential => {
                let phi = (-1.0 / t).exp();
                if phi == 0.0 {
                    return (0.0, 0.0, 0.0);
                }
                let t2 = t * t;
                (phi, -phi / t2, phi * (1.0 / (t2 * t2) - 2.0 / (t2 * t)))
            }
            RadialProfile::Polynomial { order: k } => {
                let k = k as i32;
                let kf = k as f64;
                let p = |e: i32| if e >= 0 { t.powi(e) } else { 0.0 };
                (p(k), -kf * p(k - 1), kf * (kf - 1.0) * p(k - 2))
            }
        }
    }

    /// Number of continuous derivatives across |x| = 1.
    fn smoothness(self) -> u32 {
        match self {
            RadialProfile::Exponential => u32::MAX,
            RadialProfile::Polynomial { order } => order.saturating_sub(1),
        }
    }
}

/// A potential q(x). Leaf variants are supported in the closed unit ball.
#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    /// A·exp(−1/(1−|x|²))
    ExpBump { amplitude: f64 },
    /// A·(1−|x|²)^order
    PolyBump { amplitude: f64, order: u32 },
    /// A·φ(|x|²)·Y(x) with Y a normalized real solid harmonic of the given degree/order.
    RadialHarmonic {
        amplitude: f64,
        profile: RadialProfile,
        degree: u32,
        order: i32,
        harmonic: Arc<PolyJet>,
    },
    /// x ↦ base(x + shift); support moves to the ball about −shift.
    Translate { base: Box<Potential>, shift: Vec3 },
    Scale { base: Box<Potential>, factor: f64 },
    Sum(Vec<Potential>),
}

impl Potential {
    pub fn zero() -> Self {
        Potential::Sum(Vec::new())
    }

    pub fn exp_bump(amplitude: f64) -> Self {
        Potential::ExpBump { amplitude }
    }

    /// (1−|x|²)^order scaled by `amplitude`. Orders 1 and 2 are not C² across the sphere and
    /// are only meant for quadrature checks; scenario files require order ≥ 3.
    pub fn poly_bump(amplitude: f64, order: u32) -> Result<Self> {
        if order == 0 {
            return Err(LabError::Configuration("polynomial bump order must be at least 1".into()));
        }
        Ok(Potential::PolyBump { amplitude, order })
    }

    pub fn radial_harmonic(amplitude: f64, profile: RadialProfile, degree: u32, order: i32) -> Result<Self> {
        if order.unsigned_abs() > degree {
            return Err(LabError::Configuration(format!(
                "harmonic order {order} exceeds degree {degree}"
            )));
        }
        if let RadialProfile::Polynomial { order: 0 } = profile {
            return Err(LabError::Configuration("polynomial profile order must be at least 1".into()));
        }
        Ok(Potential::RadialHarmonic {
            amplitude,
            profile,
            degree,
            order,
            harmonic: Arc::new(PolyJet::new(solid_harmonic(degree, order).pruned(1e-15))),
        })
    }

    pub fn translate(self, shift: Vec3) -> Self {
        Potential::Translate { base: Box::new(self), shift }
    }

    pub fn scale(self, factor: f64) -> Self {
        Potential::Scale { base: Box::new(self), factor }
    }

    pub fn sum(terms: Vec<Potential>) -> Self {
        Potential::Sum(terms)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::ExpBump { amplitude }
            | Potential::PolyBump { amplitude, .. }
            | Potential::RadialHarmonic { amplitude, .. } => *amplitude == 0.0,
            Potential::Translate { base, .. } => base.is_zero(),
            Potential::Scale { base, factor } => *factor == 0.0 || base.is_zero(),
            Potential::Sum(terms) => terms.iter().all(Potential::is_zero),
        }
    }

    /// Number of continuous derivatives (u32::MAX for C^∞).
    pub fn smoothness(&self) -> u32 {
        match self {
            Potential::ExpBump { .. } => u32::MAX,
            Potential::PolyBump { order, .. } => order.saturating_sub(1),
            Potential::RadialHarmonic { profile, .. } => profile.smoothness(),
            Potential::Translate { base, .. } | Potential::Scale { base, .. } => base.smoothness(),
            Potential::Sum(terms) => terms.iter().map(Potential::smoothness).min().unwrap_or(u32::MAX),
        }
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        match self {
            Potential::ExpBump { amplitude } => {
                amplitude * RadialProfile::Exponential.derivs(x.norm_squared()).0
            }
            Potential::PolyBump { amplitude, order } => {
                amplitude * RadialProfile::Polynomial { order: *order }.derivs(x.norm_squared()).0
            }
            Potential::RadialHarmonic { amplitude, profile, harmonic, .. } => {
                let phi = profile.derivs(x.norm_squared()).0;
                if phi == 0.0 {
                    0.0
                } else {
                    amplitude * phi * harmonic.value.eval(x)
                }
            }
            Potential::Translate { base, shift } => base.eval(&(x + shift)),
            Potential::Scale { base, factor } => factor * base.eval(x),
            Potential::Sum(terms) => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    /// Leaf support balls (centre, radius) in the physical frame.
    pub fn support_balls(&self) -> Vec<(Vec3, f64)> {
        let mut out = Vec::new();
        self.collect_balls(Vec3::zeros(), &mut out);
        out
    }

    fn collect_balls(&self, offset: Vec3, out: &mut Vec<(Vec3, f64)>) {
        if self.is_zero() {
            return;
        }
        match self {
            Potential::ExpBump { .. } | Potential::PolyBump { .. } | Potential::RadialHarmonic { .. } => {
                out.push((offset, 1.0))
            }
            Potential::Translate { base, shift } => base.collect_balls(offset - shift, out),
            Potential::Scale { base, .. } => base.collect_balls(offset, out),
            Potential::Sum(terms) => terms.iter().for_each(|t| t.collect_balls(offset, out)),
        }
    }

    /// Axis-aligned box containing the support, or `None` for the zero potential.
    pub fn support_box(&self) -> Option<(Vec3, Vec3)> {
        let balls = self.support_balls();
        let first = balls.first()?;
        let mut lo = first.0.add_scalar(-first.1);
        let mut hi = first.0.add_scalar(first.1);
        for (c, r) in &balls[1..] {
            lo = lo.inf(&c.add_scalar(-r));
            hi = hi.sup(&c.add_scalar(*r));
        }
        Some((lo, hi))
    }

    /// Smallest and largest x·ω over the support.
    pub fn support_extent(&self, omega: &Direction) -> Option<(f64, f64)> {
        let balls = self.support_balls();
        if balls.is_empty() {
            return None;
        }
        let lo = balls.iter().map(|(c, r)| omega.dot(c) - r).fold(f64::INFINITY, f64::min);
        let hi = balls.iter().map(|(c, r)| omega.dot(c) + r).fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }

    /// ∫ q dx, by radial Gauss–Legendre × sphere product quadrature on each leaf.
    pub fn integral(&self) -> f64 {
        match self {
            Potential::Translate { base, .. } => base.integral(),
            Potential::Scale { base, factor } => factor * base.integral(),
            Potential::Sum(terms) => terms.iter().map(Potential::integral).sum(),
            leaf => {
                if leaf.is_zero() {
                    return 0.0;
                }
                let sphere = make_sphere_quadrature(24);
                let radial = GaussRule::legendre(40);
                radial.composite(0.0, 1.0, 4, |rho| {
                    rho * rho * sphere.integrate(|w| leaf.eval(&(w * rho)))
                })
            }
        }
    }

    pub fn spec(&self) -> PotentialSpec {
        match self {
            Potential::ExpBump { amplitude } => PotentialSpec::ExponentialBump { amplitude: *amplitude },
            Potential::PolyBump { amplitude, order } => PotentialSpec::PolynomialBump {
                amplitude: *amplitude,
                order: *order,
            },
            Potential::RadialHarmonic { amplitude, profile, degree, order, .. } => PotentialSpec::RadialHarmonic {
                amplitude: *amplitude,
                profile: *profile,
                degree: *degree,
                order: *order,
            },
            Potential::Translate { base, shift } => PotentialSpec::Translate {
                base: Box::new(base.spec()),
                shift: [shift[0], shift[1], shift[2]],
            },
            Potential::Scale { base, factor } => PotentialSpec::Scale {
                base: Box::new(base.spec()),
                factor: *factor,
            },
            Potential::Sum(terms) => PotentialSpec::Sum {
                terms: terms.iter().map(Potential::spec).collect(),
            },
        }
    }
}

impl Analytic for Potential {
    fn jet(&self, x: &Vec3) -> (f64, Vec3, Mat3) {
        match self {
            Potential::ExpBump { amplitude } => radial_jet(RadialProfile::Exponential, *amplitude, x),
            Potential::PolyBump { amplitude, order } => {
                radial_jet(RadialProfile::Polynomial { order: *order }, *amplitude, x)
            }
            Potential::RadialHarmonic { amplitude, profile, harmonic, .. } => {
                let (phi, d1, d2) = profile.derivs(x.norm_squared());
                if phi == 0.0 && d1 == 0.0 && d2 == 0.0 {
                    return (0.0, Vec3::zeros(), Mat3::zeros());
                }
                let (y, gy, hy) = harmonic.eval(x);
                let gphi = x * (2.0 * d1);
                let hphi = Mat3::identity() * (2.0 * d1) + x * x.transpose() * (4.0 * d2);
                let value = phi * y;
                let grad = gphi * y + gy * phi;
                let hess = hphi * y + gphi * gy.transpose() + gy * gphi.transpose() + hy * phi;
                (amplitude * value, grad * *amplitude, hess * *amplitude)
            }
            Potential::Translate { base, shift } => base.jet(&(x + shift)),
            Potential::Scale { base, factor } => {
                let (v, g, h) = base.jet(x);
                (factor * v, g * *factor, h * *factor)
            }
            Potential::Sum(terms) => terms.iter().fold((0.0, Vec3::zeros(), Mat3::zeros()), |acc, t| {
                let (v, g, h) = t.jet(x);
                (acc.0 + v, acc.1 + g, acc.2 + h)
            }),
        }
    }

    fn value(&self, x: &Vec3) -> f64 {
        self.eval(x)
    }
}

fn radial_jet(profile: RadialProfile, amplitude: f64, x: &Vec3) -> (f64, Vec3, Mat3) {
    let (phi, d1, d2) = profile.derivs(x.norm_squared());
    let grad = x * (2.0 * d1);
    let hess = Mat3::identity() * (2.0 * d1) + x * x.transpose() * (4.0 * d2);
    (amplitude * phi, grad * amplitude, hess * amplitude)
}

/// Scenario-file description of a potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    ExponentialBump {
        amplitude: f64,
    },
    PolynomialBump {
        amplitude: f64,
        order: u32,
    },
    RadialHarmonic {
        amplitude: f64,
        profile: RadialProfile,
        degree: u32,
        order: i32,
    },
    Translate {
        base: Box<PotentialSpec>,
        shift: [f64; 3],
    },
    Scale {
        base: Box<PotentialSpec>,
        factor: f64,
    },
    Sum {
        terms: Vec<PotentialSpec>,
    },
}

impl PotentialSpec {
    /// Builds the potential, enforcing C² smoothness (polynomial orders ≥ 3).
    pub fn build(&self) -> Result<Potential> {
        let check_amp = |a: f64| {
            if a.is_finite() {
                Ok(())
            } else {
                Err(LabError::Configuration(format!("amplitude must be finite, got {a}")))
            }
        };
        let check_order = |k: u32| {
            if k >= 3 {
                Ok(())
            } else {
                Err(LabError::Configuration(format!(
                    "polynomial order {k} is not C²; use order ≥ 3"
                )))
            }
        };
        Ok(match self {
            PotentialSpec::ExponentialBump { amplitude } => {
                check_amp(*amplitude)?;
                Potential::exp_bump(*amplitude)
            }
            PotentialSpec::PolynomialBump { amplitude, order } => {
                check_amp(*amplitude)?;
                check_order(*order)?;
                Potential::poly_bump(*amplitude, *order)?
            }
            PotentialSpec::RadialHarmonic { amplitude, profile, degree, order } => {
                check_amp(*amplitude)?;
                if let RadialProfile::Polynomial { order: k } = profile {
                    check_order(*k)?;
                }
                if *degree > 10 {
                    return Err(LabError::Configuration(format!("harmonic degree {degree} exceeds 10")));
                }
                Potential::radial_harmonic(*amplitude, *profile, *degree, *order)?
            }
            PotentialSpec::Translate { base, shift } => {
                if !shift.iter().all(|c| c.is_finite()) {
                    return Err(LabError::Configuration("shift must be finite".into()));
                }
                base.build()?.translate(Vec3::from(*shift))
            }
            PotentialSpec::Scale { base, factor } => {
                check_amp(*factor)?;
                base.build()?.scale(*factor)
            }
            PotentialSpec::Sum { terms } => {
                Potential::sum(terms.iter().map(PotentialSpec::build).collect::<Result<_>>()?)
            }
        })
    }
}

/// Sampled C² size of a potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct C2Norm {
    pub sup_value: f64,
    pub sup_grad: f64,
    pub sup_hess: f64,
    pub total: f64,
    /// Finest sampling spacing used.
    pub resolution: f64,
}

pub const C2_DEFAULT_SPACING: f64 = 1.0 / 24.0;

pub fn c2_norm(q: &Potential) -> C2Norm {
    c2_norm_with(q, C2_DEFAULT_SPACING)
}

/// Sup norms sampled at spacing h and h/2 over the support box, combined by one
/// Richardson step (the sampled maximum converges at second order).
pub fn c2_norm_with(q: &Potential, h: f64) -> C2Norm {
    let Some((lo, hi)) = q.support_box() else {
        return C2Norm { sup_value: 0.0, sup_grad: 0.0, sup_hess: 0.0, total: 0.0, resolution: h / 2.0 };
    };
    let coarse = sampled_sups(q, lo, hi, h);
    let fine = sampled_sups(q, lo, hi, h / 2.0);
    let extrapolate = |c: f64, f: f64| f.max(f + (f - c) / 3.0);
    let sup_value = extrapolate(coarse[0], fine[0]);
    let sup_grad = extrapolate(coarse[1], fine[1]);
    let sup_hess = extrapolate(coarse[2], fine[2]);
    C2Norm { sup_value, sup_grad, sup_hess, total: sup_value + sup_grad + sup_hess, resolution: h / 2.0 }
}

fn sampled_sups(q: &Potential, lo: Vec3, hi: Vec3, h: f64) -> [f64; 3] {
    let n: Vec<usize> = (0..3).map(|a| ((hi[a] - lo[a]) / h).round() as usize + 1).collect();
    (0..n[0])
        .into_par_iter()
        .map(|i| {
            let mut m = [0.0f64; 3];
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let x = lo + Vec3::new(i as f64, j as f64, k as f64) * h;
                    let (v, g, hs) = q.jet(&x);
                    m[0] = m[0].max(v.abs());
                    m[1] = m[1].max(g.norm());
                    m[2] = m[2].max(hs.amax());
                }
            }
            m
        })
        .reduce(|| [0.0; 3], |a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2])])
}

/// Sampled sup |q| (used for the ‖q‖_∞ hypotheses).
pub fn sup_abs(q: &Potential) -> f64 {
    c2_norm(q).sup_value
}

/// ∫_{−∞}^0 q(x + σω) dσ.
pub fn chord_integral(q: &Potential, x: &Vec3, omega: &Direction) -> f64 {
    let w = omega.vec();
    ray_integral(q, x, omega, |s| q.eval(&(x + w * s)))
}

/// ∫_{−∞}^0 f(σ) dσ for an integrand vanishing wherever x + σω is outside the support of
/// `q`; the interval is split where the ray crosses support spheres.
pub fn ray_integral(q: &Potential, x: &Vec3, omega: &Direction, f: impl Fn(f64) -> f64) -> f64 {
    integrate_between(&ray_breaks(q, x, omega), f)
}

/// Sorted σ ≤ 0 where x + σω crosses a support sphere of `q` (clamped to 0).
pub fn ray_breaks(q: &Potential, x: &Vec3, omega: &Direction) -> Vec<f64> {
    let w = omega.vec();
    let mut breaks = Vec::new();
    for (c, r) in q.support_balls() {
        // |x + σω − c|² = r²
        let d = x - c;
        let b = d.dot(&w);
        let disc = b * b - (d.norm_squared() - r * r);
        if disc <= 0.0 {
            continue;
        }
        let s = disc.sqrt();
        for root in [-b - s, -b + s] {
            breaks.push(root.min(0.0));
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

/// Sum of adaptive integrals over consecutive breakpoints.
pub fn integrate_between(breaks: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    breaks.windows(2).map(|win| adaptive(&f, win[0], win[1], 1e-15)).sum()
}

/// Ω_ij f at x (0-based axes).
pub fn omega_derivative(f: &impl Analytic, i: usize, j: usize, x: &Vec3) -> f64 {
    let g = f.gradient(x);
    x[i] * g[j] - x[j] * g[i]
}

/// max over ρ and pairs (i<j) of ∫_S |Ω_ij p(ρω)|² / ∫_S |p(ρω)|².
pub fn angular_condition_constant(p: &Potential, rho: &[f64], sphere_order: usize) -> Result<f64> {
    if let Some(bad) = rho.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
        return Err(LabError::Domain(format!("ρ = {bad} outside (0, 1]")));
    }
    let quad = make_sphere_quadrature(sphere_order);
    let mut best: Option<f64> = None;
    for &r in rho {
        let denom = quad.integrate(|w| p.eval(&(w * r)).powi(2));
        if denom < 1e-14 {
            continue;
        }
        for (i, j) in PAIRS {
            let num = quad.integrate(|w| omega_derivative(p, i, j, &(w * r)).powi(2));
            let ratio = num / denom;
            best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
        }
    }
    best.ok_or_else(|| LabError::DegenerateInput("potential is negligible on every sampled sphere".into()))
}
