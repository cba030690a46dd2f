//! Plane Radon transforms and the geometry behind the τ-derivative identities.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::geometry::{Direction, Vec3};
use crate::harmonics::{SphereQuadrature, AXIS_PAIRS};
use crate::potential::{omega_derivative, Analytic, Potential};
use crate::quad::GaussRule;

pub use crate::geometry::fibonacci_directions;

/// Points per axis of the iterated disk rule.
pub const DEFAULT_PLANE_POINTS: usize = 48;

/// Iterated Gauss rule over a disk: outer coordinate u = R sin φ, inner v across the chord.
///
/// The sine map removes the square-root behaviour of the chord length at u = ±R, so smooth
/// integrands that vanish on the rim converge spectrally.
#[derive(Clone, Debug)]
pub struct DiskRule {
    rule: GaussRule,
}

impl DiskRule {
    pub fn new(points: usize) -> Self {
        DiskRule { rule: GaussRule::legendre(points) }
    }

    /// ∫ f(u, v) over the disk u² + v² ≤ R².
    pub fn integrate(&self, radius: f64, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        if radius <= 0.0 {
            return 0.0;
        }
        let mut total = 0.0;
        for (phi, wphi) in self.rule.on(-0.5 * PI, 0.5 * PI) {
            let (s, c) = phi.sin_cos();
            let u = radius * s;
            let half = radius * c;
            let inner: f64 = self.rule.on(-half, half).map(|(v, wv)| wv * f(u, v)).sum();
            total += wphi * radius * c * inner;
        }
        total
    }
}

impl Default for DiskRule {
    fn default() -> Self {
        DiskRule::new(DEFAULT_PLANE_POINTS)
    }
}

/// ∫_{x·ω=τ} g(x) dS for a function g living on a single leaf ball (centre, radius).
fn plane_integral_over_ball(
    rule: &DiskRule,
    omega: &Direction,
    tau: f64,
    centre: &Vec3,
    radius: f64,
    g: impl Fn(&Vec3) -> f64,
) -> f64 {
    let w = omega.vec();
    let offset = tau - w.dot(centre);
    if offset.abs() >= radius {
        return 0.0;
    }
    let (e1, e2) = omega.plane_basis();
    // disk centre: the foot of the perpendicular from the ball centre onto the plane
    let foot = centre + w * offset;
    rule.integrate((radius * radius - offset * offset).sqrt(), |u, v| g(&(foot + e1 * u + e2 * v)))
}

/// Splits a potential into (leaf, shift, factor) triples so plane integrals can be taken
/// leaf by leaf: q = Σ factor · leaf(x + shift).
fn leaves(q: &Potential) -> Vec<(&Potential, Vec3, f64)> {
    fn walk<'a>(q: &'a Potential, shift: Vec3, factor: f64, out: &mut Vec<(&'a Potential, Vec3, f64)>) {
        match q {
            Potential::Translate { base, shift: a } => walk(base, shift + a, factor, out),
            Potential::Scale { base, factor: c } => walk(base, shift, factor * c, out),
            Potential::Sum(terms) => terms.iter().for_each(|t| walk(t, shift, factor, out)),
            leaf => {
                if !leaf.is_zero() && factor != 0.0 {
                    out.push((leaf, shift, factor))
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(q, Vec3::zeros(), 1.0, &mut out);
    out
}

/// Plane integral of an arbitrary per-leaf functional L(leaf)(x), summed over leaves.
fn leafwise_plane_integral(
    q: &Potential,
    omega: &Direction,
    tau: f64,
    rule: &DiskRule,
    g: impl Fn(&Potential, &Vec3) -> f64,
) -> f64 {
    leaves(q)
        .into_iter()
        .map(|(leaf, shift, factor)| {
            // leaf(x + shift) is supported in the unit ball about −shift
            factor * plane_integral_over_ball(rule, omega, tau, &(-shift), 1.0, |x| g(leaf, &(x + shift)))
        })
        .sum()
}

/// P(τ, ω) = ∫_{x·ω=τ} p dS.
pub fn radon_plane(p: &Potential, omega: &Direction, tau: f64) -> f64 {
    radon_plane_with(p, omega, tau, &DiskRule::default())
}

pub fn radon_plane_with(p: &Potential, omega: &Direction, tau: f64, rule: &DiskRule) -> f64 {
    leafwise_plane_integral(p, omega, tau, rule, |leaf, x| leaf.eval(x))
}

/// P_τ two ways: central difference of P, and ∫_{x·ω=τ} ω·∇p dS.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TauDerivative {
    pub fd_value: f64,
    pub divergence_value: f64,
}

pub fn radon_tau_derivative(p: &Potential, omega: &Direction, tau: f64) -> TauDerivative {
    let rule = DiskRule::default();
    let step = 1e-3;
    let fd_value = (radon_plane_with(p, omega, tau + step, &rule) - radon_plane_with(p, omega, tau - step, &rule))
        / (2.0 * step);
    TauDerivative { fd_value, divergence_value: radon_tau_divergence(p, omega, tau, &rule) }
}

fn radon_tau_divergence(p: &Potential, omega: &Direction, tau: f64, rule: &DiskRule) -> f64 {
    let w = omega.vec();
    leafwise_plane_integral(p, omega, tau, rule, |leaf, x| leaf.gradient(x).dot(&w))
}

/// Base point x with the tangent vectors T_ij = x_i e_j − x_j e_i (pairs 12, 13, 23).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentFrame {
    pub x: Vec3,
    pub t: [Vec3; 3],
}

impl TangentFrame {
    pub fn new(x: Vec3) -> Self {
        let t = AXIS_PAIRS.map(|(i, j)| {
            let mut v = Vec3::zeros();
            v[j] += x[i];
            v[i] -= x[j];
            v
        });
        TangentFrame { x, t }
    }
}

/// | |x|² v − Σ_{i<j} (v·T_ij) T_ij − (v·x) x |.
pub fn tangential_decomposition_check(x: &Vec3, v: &Vec3) -> f64 {
    let frame = TangentFrame::new(*x);
    let tangential: Vec3 = frame.t.iter().map(|t| t * v.dot(t)).sum();
    (v * x.norm_squared() - tangential - x * v.dot(x)).norm()
}

/// The unit vector α ⟂ x with ω = (ρ/r) α + (τ/r) r̂ for x on the plane x·ω = τ.
pub fn alpha_direction(x: &Vec3, omega: &Direction, tau: f64) -> Result<Direction> {
    if !(tau > 0.0) {
        return Err(LabError::Domain(format!("τ = {tau} must be positive")));
    }
    let w = omega.vec();
    let radial = x - w * tau;
    let r = radial.norm();
    if r < 1e-12 {
        return Err(LabError::SingularGeometry("x lies on the ω axis (r = 0)".into()));
    }
    let rho = x.norm();
    let rhat = radial / r;
    Direction::normalized((w * r - rhat * tau) / rho)
}

/// The split P_τ = −2πτ p(τω) + ∫ (ρ/r)(α·∇p) dS.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PtauDecomposition {
    pub point_term: f64,
    pub angular_term: f64,
    pub recombined: f64,
}

/// Polar (r, θ) rule on the plane: `points` Gauss nodes in r per panel, 2·`points`
/// azimuths. dS = ρ dρ dθ = r dr dθ, so the (ρ/r) weight becomes ρ dr dθ.
pub fn ptau_decomposition(p: &Potential, omega: &Direction, tau: f64, points: usize) -> Result<PtauDecomposition> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(LabError::Domain(format!("τ = {tau} outside (0, 1)")));
    }
    let w = omega.vec();
    let (e1, e2) = omega.plane_basis();
    let r_max = p
        .support_balls()
        .iter()
        .map(|(c, rad)| (c - w * w.dot(c)).norm() + rad)
        .fold(0.0, f64::max);
    let radial = GaussRule::legendre(points.max(4));
    let n_theta = 2 * points.max(4);
    let dtheta = 2.0 * PI / n_theta as f64;
    let panels = 4;
    let mut angular_term = 0.0;
    for k in 0..n_theta {
        let theta = (k as f64 + 0.5) * dtheta;
        let rhat = e1 * theta.cos() + e2 * theta.sin();
        angular_term += dtheta
            * radial.composite(0.0, r_max, panels, |r| {
                let x = w * tau + rhat * r;
                let rho = x.norm();
                let alpha = (w * r - rhat * tau) / rho;
                rho * alpha.dot(&p.gradient(&x))
            });
    }
    let point_term = -2.0 * PI * tau * p.eval(&(w * tau));
    Ok(PtauDecomposition { point_term, angular_term, recombined: point_term + angular_term })
}

/// ∫_S δ(x·ω − τ) dω = 2π/|x| for |τ| < |x| and 0 for |τ| > |x|.
pub fn sphere_delta_weight(x: &Vec3, tau: f64) -> Result<f64> {
    let rho = x.norm();
    if rho == 0.0 {
        return Err(LabError::SingularGeometry("x = 0".into()));
    }
    let h = if tau.abs() < rho {
        1.0
    } else if tau.abs() == rho {
        0.5
    } else {
        0.0
    };
    Ok(2.0 * PI / rho * h)
}

/// ∫_S δ_η(x·ω − τ) dω with a Gaussian δ_η. The integrand depends on ω only through
/// z = x̂·ω, so the sphere integral is 2π∫_{−1}^{1} δ_η(|x|z − τ) dz, done by composite Gauss
/// on panels refined around the band z = τ/|x|.
pub fn sphere_delta_mollified(x: &Vec3, tau: f64, eta: f64) -> f64 {
    let rho = x.norm();
    if rho == 0.0 {
        return 4.0 * PI * crate::quad::delta_eps(-tau, eta);
    }
    let rule = GaussRule::legendre(16);
    let centre = tau / rho;
    let band = 10.0 * eta / rho;
    let (lo, hi) = ((centre - band).max(-1.0), (centre + band).min(1.0));
    let f = |z: f64| crate::quad::delta_eps(rho * z - tau, eta);
    let mut total = 0.0;
    if lo > -1.0 {
        total += rule.composite(-1.0, lo.min(1.0), 4, f);
    }
    if hi > lo {
        total += rule.composite(lo, hi, 32, f);
    }
    if hi < 1.0 {
        total += rule.composite(hi.max(-1.0), 1.0, 4, f);
    }
    2.0 * PI * total
}

/// The three quantities of the τ-derivative energy inequality at one τ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PtauDiffTerms {
    pub lhs: f64,
    pub radon_term: f64,
    pub abel_term: f64,
}

impl PtauDiffTerms {
    /// lhs / (radon_term + abel_term), or 0 when everything vanishes.
    pub fn ratio(&self) -> f64 {
        let rhs = self.radon_term + self.abel_term;
        if rhs == 0.0 {
            if self.lhs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.lhs / rhs
        }
    }
}

pub fn ptaudiff_terms(p: &Potential, tau: f64, quad: &SphereQuadrature) -> Result<PtauDiffTerms> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(LabError::Domain(format!("τ = {tau} outside (0, 1)")));
    }
    let lhs = tau * tau * quad.integrate(|w| p.eval(&(w * tau)).powi(2));
    let rule = DiskRule::default();
    let radon_term: f64 = quad
        .nodes
        .par_iter()
        .zip(&quad.weights)
        .map(|(w, &wt)| wt * radon_tau_divergence(p, w, tau, &rule).powi(2))
        .collect::<Vec<_>>()
        .iter()
        .sum();
    // ρ = √(τ² + σ²) turns ρ/√(ρ² − τ²) dρ into dσ
    let sigma_max = (1.0 - tau * tau).sqrt();
    let angular = |rho: f64| -> f64 {
        AXIS_PAIRS
            .iter()
            .map(|&(i, j)| quad.integrate(|w| omega_derivative(p, i, j, &(w * rho)).powi(2)))
            .sum()
    };
    let abel_term = GaussRule::legendre(24).composite(0.0, sigma_max, 4, |s| angular((tau * tau + s * s).sqrt()));
    Ok(PtauDiffTerms { lhs, radon_term, abel_term })
}

/// P(τ, ω) on a τ-grid for a set of directions.
#[derive(Clone, Debug, PartialEq)]
pub struct RadonProfile {
    pub directions: Vec<Direction>,
    pub tau: Vec<f64>,
    /// values[direction][τ]
    pub values: Vec<Vec<f64>>,
}

impl RadonProfile {
    pub fn compute(p: &Potential, directions: &[Direction], tau: &[f64]) -> Result<Self> {
        if tau.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Domain("τ-grid must be increasing".into()));
        }
        let rule = DiskRule::default();
        let values = directions
            .par_iter()
            .map(|w| tau.iter().map(|&t| radon_plane_with(p, w, t, &rule)).collect())
            .collect();
        Ok(RadonProfile { directions: directions.to_vec(), tau: tau.to_vec(), values })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega_index,tau,P\n");
        for (i, row) in self.values.iter().enumerate() {
            for (t, v) in self.tau.iter().zip(row) {
                let _ = writeln!(out, "{i},{t},{v}");
            }
        }
        out
    }

    /// JSON sidecar listing the direction vectors by index.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "directions": self.directions.iter().map(|d| <[f64; 3]>::from(*d)).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::RadialProfile;
    use proptest::prelude::*;

    fn paraboloid() -> Potential {
        Potential::poly_bump(1.0, 1).unwrap()
    }

    #[test]
    fn paraboloid_profile_closed_form() {
        let p = paraboloid();
        for tau in [0.0f64, 0.3, -0.8] {
            let exact = PI * (1.0 - tau * tau).powi(2) / 2.0;
            for w in fibonacci_directions(4) {
                assert!((radon_plane(&p, &w, tau) - exact).abs() < 1e-12);
            }
        }
        assert_eq!(radon_plane(&p, &Direction::axis(0), 1.0), 0.0);
    }

    #[test]
    fn tau_derivative_two_ways() {
        let d = radon_tau_derivative(&paraboloid(), &Direction::axis(2), 0.5);
        assert!((d.fd_value + 0.75 * PI).abs() < 1e-3);
        assert!((d.divergence_value + 0.75 * PI).abs() < 1e-10);
        let far = radon_tau_derivative(&paraboloid(), &Direction::axis(2), 1.5);
        assert_eq!((far.fd_value, far.divergence_value), (0.0, 0.0));
    }

    #[test]
    fn translated_profile_is_shifted() {
        let q = Potential::exp_bump(1.0);
        let a = Vec3::new(0.1, 0.2, -0.3);
        let w = fibonacci_directions(7)[3];
        let moved = q.clone().translate(a);
        for tau in [-1.0, -0.2, 0.4] {
            let lhs = radon_plane(&moved, &w, tau);
            let rhs = radon_plane(&q, &w, tau + w.dot(&a));
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_direction_example() {
        let w = Direction::axis(2);
        let x = Vec3::new(0.5, 0.0, 0.5);
        let a = alpha_direction(&x, &w, 0.5).unwrap();
        let (rho, r) = (0.5f64.sqrt(), 0.5);
        let rebuilt = a.vec() * (rho / r) + Vec3::new(1.0, 0.0, 0.0) * (0.5 / r);
        assert!((rebuilt - w.vec()).norm() < 1e-12);
        assert!(a.dot(&x).abs() < 1e-12);
        assert!(alpha_direction(&Vec3::new(0.0, 0.0, 0.5), &w, 0.5).is_err());
    }

    #[test]
    fn ptau_radial_reduction() {
        let p = paraboloid();
        for tau in [0.1, 0.5, 0.9] {
            let d = ptau_decomposition(&p, &Direction::axis(1), tau, 24).unwrap();
            assert!(d.angular_term.abs() < 1e-12);
            assert!((d.recombined + 2.0 * PI * tau * (1.0 - tau * tau)).abs() < 1e-12);
        }
        assert!(ptau_decomposition(&p, &Direction::axis(1), 1.0, 8).is_err());
    }

    #[test]
    fn ptau_degree_one_cross_check() {
        let p = Potential::radial_harmonic(1.0, RadialProfile::Polynomial { order: 4 }, 1, 0).unwrap();
        let w = fibonacci_directions(9)[2];
        let d = ptau_decomposition(&p, &w, 0.4, 32).unwrap();
        let fd = radon_tau_derivative(&p, &w, 0.4).fd_value;
        assert!((d.recombined - fd).abs() < 1e-3 * (1.0 + fd.abs()));
    }

    #[test]
    fn sphere_delta_weight_values() {
        assert!((sphere_delta_weight(&Vec3::new(1.0, 0.0, 0.0), 0.5).unwrap() - 2.0 * PI).abs() < 1e-15);
        assert_eq!(sphere_delta_weight(&Vec3::new(0.4, 0.0, 0.0), 0.5).unwrap(), 0.0);
        assert!(sphere_delta_weight(&Vec3::zeros(), 0.1).is_err());
    }

    #[test]
    fn ptaudiff_scales_quadratically() {
        let quad = crate::harmonics::make_sphere_quadrature(8);
        let p = Potential::radial_harmonic(1.0, RadialProfile::Exponential, 2, 1).unwrap();
        let a = ptaudiff_terms(&p, 0.4, &quad).unwrap();
        let b = ptaudiff_terms(&p.clone().scale(3.0), 0.4, &quad).unwrap();
        for (x, y) in [(a.lhs, b.lhs), (a.radon_term, b.radon_term), (a.abel_term, b.abel_term)] {
            assert!((y - 9.0 * x).abs() <= 1e-12 * y.abs().max(1e-30));
        }
        let radial = ptaudiff_terms(&paraboloid(), 0.4, &quad).unwrap();
        assert_eq!(radial.abel_term, 0.0);
    }

    proptest! {
        #[test]
        fn vx_identity(x in prop::array::uniform3(-10.0..10.0f64), v in prop::array::uniform3(-10.0..10.0f64)) {
            let (x, v) = (Vec3::from(x), Vec3::from(v));
            let scale = x.norm_squared() * v.norm();
            prop_assert!(tangential_decomposition_check(&x, &v) <= 1e-12 * scale.max(1.0));
            prop_assert_eq!(tangential_decomposition_check(&Vec3::zeros(), &v), 0.0);
        }

        #[test]
        fn tangent_frame_bounds(x in prop::array::uniform3(-5.0..5.0f64)) {
            let frame = TangentFrame::new(Vec3::from(x));
            for t in frame.t {
                prop_assert!(t.dot(&frame.x).abs() < 1e-12);
                prop_assert!(t.norm() <= 2f64.sqrt() * frame.x.norm() + 1e-12);
            }
        }

        #[test]
        fn opposite_direction_symmetry(k in 0usize..16, tau in -0.95..0.95f64) {
            let w = fibonacci_directions(16)[k];
            let q = Potential::radial_harmonic(1.0, RadialProfile::Exponential, 3, 2).unwrap()
                .translate(Vec3::new(0.05, -0.1, 0.0));
            let a = radon_plane(&q, &w, -tau);
            let b = radon_plane(&q, &(-w), tau);
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }
}
