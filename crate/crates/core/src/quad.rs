//! Small quadrature toolbox: fixed Gauss rules, an adaptive 1-D driver and the Gaussian
//! pulse used as the regularized delta.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::{GaussHermite, GaussLegendre};

/// Gauss–Legendre nodes and weights on [−1, 1].
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn legendre(n: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).expect("n >= 1"));
        let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        GaussRule { nodes, weights }
    }

    /// Nodes and weights mapped affinely onto [a, b].
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule: `panels` equal sub-intervals of [a, b].
    pub fn composite(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let step = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + p as f64 * step;
                self.integrate(lo, lo + step, &mut f)
            })
            .sum()
    }
}

/// Adaptive integral of a smooth integrand over [a, b] (double-exponential rule).
///
/// Interior kinks degrade it badly; callers split intervals at known breakpoints and
/// remove endpoint singularities by substitution before calling.
pub fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    quadrature::double_exponential::integrate(f, a, b, abs_tol).integral
}

/// Normalized Gaussian pulse of standard deviation `eps`.
#[inline]
pub fn delta_eps(s: f64, eps: f64) -> f64 {
    (-0.5 * (s / eps).powi(2)).exp() / (eps * (2.0 * PI).sqrt())
}

/// Integral of [`delta_eps`] up to `s` (the smeared Heaviside step).
#[inline]
pub fn heaviside_eps(s: f64, eps: f64) -> f64 {
    0.5 * libm::erfc(-s / (eps * std::f64::consts::SQRT_2))
}

/// Convolution of `f` with a centred Gaussian of standard deviation `sigma`, evaluated
/// at `t` with a Gauss–Hermite rule.
pub struct GaussianSmoother {
    pairs: Vec<(f64, f64)>,
}

impl GaussianSmoother {
    pub fn new(points: usize) -> Self {
        let rule = GaussHermite::new(NonZeroUsize::new(points.max(1)).expect("points >= 1"));
        let norm = PI.sqrt();
        let pairs = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (x * std::f64::consts::SQRT_2, w / norm))
            .collect();
        GaussianSmoother { pairs }
    }

    pub fn smooth(&self, sigma: f64, t: f64, f: impl Fn(f64) -> f64) -> f64 {
        if sigma == 0.0 {
            return f(t);
        }
        self.pairs.iter().map(|&(z, w)| w * f(t - sigma * z)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_on_polynomials() {
        let rule = GaussRule::legendre(5);
        let v = rule.integrate(-1.0, 2.0, |x| x.powi(9) - 3.0 * x * x);
        let exact = (2f64.powi(10) - 1.0) / 10.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn adaptive_matches_composite_gauss_on_flat_bump() {
        let bump = |x: f64| if x.abs() < 1.0 { (-1.0 / (1.0 - x * x)).exp() } else { 0.0 };
        let v = adaptive(bump, -1.0, 1.0, 1e-15);
        let reference = GaussRule::legendre(30).composite(-1.0, 1.0, 40, bump);
        assert!((v - reference).abs() < 1e-13);
    }

    #[test]
    fn pulse_is_normalized_and_step_matches() {
        let eps = 0.2;
        let mass = adaptive(|s| delta_eps(s, eps), -3.0, 3.0, 1e-14);
        assert!((mass - 1.0).abs() < 1e-10);
        let partial = adaptive(|s| delta_eps(s, eps), -3.0, 0.1, 1e-14);
        assert!((partial - heaviside_eps(0.1, eps)).abs() < 1e-10);
    }

    #[test]
    fn smoother_reproduces_gaussian_moments() {
        let sm = GaussianSmoother::new(20);
        // E[(t - σZ)²] = t² + σ²
        let v = sm.smooth(0.3, 0.5, |x| x * x);
        assert!((v - (0.25 + 0.09)).abs() < 1e-13);
    }
}
