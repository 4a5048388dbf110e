//! Gauss-Legendre rules, composite panel rules and an adaptive bisection
//! integrator for complex-valued integrands.

use crate::error::{LabError, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d.is_finite() { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes.iter().zip(self.weights.iter()).map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    pub fn integrate_complex<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> Complex64 {
        self.mapped(a, b).map(|(x, w)| f(x) * w).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A fixed composite rule: explicit nodes and weights on a union of panels.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    /// Gauss-Legendre on each of the given panel breakpoints.
    pub fn from_breaks(breaks: &[f64], base: &GaussLegendre) -> Self {
        let mut nodes = Vec::with_capacity(breaks.len().saturating_sub(1) * base.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in breaks.windows(2) {
            for (x, wt) in base.mapped(w[0], w[1]) {
                nodes.push(x);
                weights.push(wt);
            }
        }
        Self { nodes, weights }
    }

    /// Panels of width at most `width` covering `[a, b]`.
    pub fn uniform(a: f64, b: f64, width: f64, base: &GaussLegendre) -> Self {
        Self::from_breaks(&uniform_breaks(a, b, width), base)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Breakpoints `a = x0 < ... < xn = b` with spacing at most `width`.
pub fn uniform_breaks(a: f64, b: f64, width: f64) -> Vec<f64> {
    if b <= a {
        return vec![a];
    }
    let n = ((b - a) / width).ceil().max(1.0) as usize;
    (0..=n).map(|i| if i == n { b } else { a + (b - a) * i as f64 / n as f64 }).collect()
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveResult {
    pub value: Complex64,
    /// Estimated absolute error.
    pub error: f64,
    /// Integral of the modulus of the integrand (scale for relative targets).
    pub modulus: f64,
    pub panels: usize,
}

/// Adaptive bisection with a Gauss-Legendre base rule.
///
/// Each panel is compared with the sum over its two halves; panels whose
/// discrepancy exceeds their share of `tol * modulus` are bisected. The error
/// target is relative to the integral of `|f|`, which bounds `|value|` and
/// stays meaningful when the integral itself cancels to zero.
#[derive(Debug, Clone)]
pub struct AdaptiveIntegrator {
    base: GaussLegendre,
    pub tol: f64,
    pub max_panels: usize,
}

impl AdaptiveIntegrator {
    pub fn new(order: usize, tol: f64, max_panels: usize) -> Self {
        Self { base: GaussLegendre::new(order), tol, max_panels }
    }

    pub fn integrate<F>(&self, breaks: &[f64], mut f: F) -> Result<AdaptiveResult>
    where
        F: FnMut(f64) -> Complex64,
    {
        struct Panel {
            a: f64,
            b: f64,
            value: Complex64,
            modulus: f64,
        }
        let mut eval = |a: f64, b: f64| {
            let mut v = Complex64::new(0.0, 0.0);
            let mut m = 0.0;
            for (x, w) in self.base.mapped(a, b) {
                let y = f(x);
                v += y * w;
                m += y.norm() * w;
            }
            (v, m)
        };
        let mut work: Vec<Panel> = breaks
            .windows(2)
            .map(|w| {
                let (value, modulus) = eval(w[0], w[1]);
                Panel { a: w[0], b: w[1], value, modulus }
            })
            .collect();
        let total_len = breaks.last().copied().unwrap_or(0.0) - breaks.first().copied().unwrap_or(0.0);
        let mut done_value = Complex64::new(0.0, 0.0);
        let mut done_err = 0.0;
        let mut done_mod = 0.0;
        let mut panels = work.len();
        // The global scale is refined as panels are resolved.
        let mut scale: f64 = work.iter().map(|p| p.modulus).sum();
        while let Some(p) = work.pop() {
            let mid = 0.5 * (p.a + p.b);
            let (lv, lm) = eval(p.a, mid);
            let (rv, rm) = eval(mid, p.b);
            let refined = lv + rv;
            let err = (refined - p.value).norm();
            let share = self.tol * scale.max(f64::MIN_POSITIVE) * ((p.b - p.a) / total_len).max(1e-3);
            scale += lm + rm - p.modulus;
            if err <= share || (p.b - p.a) <= 1e-14 * (1.0 + p.a.abs()) {
                done_value += refined;
                done_err += err;
                done_mod += lm + rm;
                continue;
            }
            panels += 1;
            if panels > self.max_panels {
                return Err(LabError::QuadratureBudget { panels: self.max_panels, error: err });
            }
            work.push(Panel { a: p.a, b: mid, value: lv, modulus: lm });
            work.push(Panel { a: mid, b: p.b, value: rv, modulus: rm });
        }
        Ok(AdaptiveResult { value: done_value, error: done_err, modulus: done_mod, panels })
    }
}

/// Trapezoidal rule on `[0, period)` with `n` equispaced nodes; spectrally
/// accurate for smooth periodic integrands.
pub fn periodic_trapezoid<F: FnMut(f64) -> Complex64>(period: f64, n: usize, mut f: F) -> Complex64 {
    let h = period / n as f64;
    (0..n).map(|i| f(i as f64 * h)).sum::<Complex64>() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        for n in [1usize, 2, 5, 8, 16, 24] {
            let gl = GaussLegendre::new(n);
            assert!((gl.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got = gl.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                assert!((got - exact).abs() < 1e-14, "n={n} deg={deg} {got} {exact}");
            }
        }
    }

    #[test]
    fn composite_rule_integrates_exponential() {
        let rule = CompositeRule::uniform(0.0, 3.0, 0.5, &GaussLegendre::new(8));
        let got = rule.integrate(|x| x.exp());
        assert!((got - (3f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let ai = AdaptiveIntegrator::new(10, 1e-11, 1 << 16);
        let eps: f64 = 1e-4;
        // Lorentzian with width 1e-4 at x = 0.3
        let r = ai
            .integrate(&[0.0, 1.0], |x| Complex64::new(eps / ((x - 0.3).powi(2) + eps * eps), 0.0))
            .unwrap();
        let exact = (0.7 / eps).atan() + (0.3 / eps).atan();
        assert!((r.value.re - exact).abs() < 1e-9 * exact, "{} {}", r.value.re, exact);
    }

    #[test]
    fn adaptive_reports_budget() {
        let ai = AdaptiveIntegrator::new(4, 1e-15, 8);
        let r = ai.integrate(&[0.0, 1.0], |x| Complex64::new((1.0 / (x + 1e-9)).sin(), 0.0));
        assert!(matches!(r, Err(LabError::QuadratureBudget { .. })));
    }

    #[test]
    fn trapezoid_periodic() {
        let v = periodic_trapezoid(2.0 * PI, 64, |x| Complex64::new((x.cos()).exp(), 0.0));
        // 2 pi I_0(1)
        assert!((v.re - 2.0 * PI * 1.2660658777520082).abs() < 1e-13);
    }
}
