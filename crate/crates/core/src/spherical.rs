//! Elementary spherical functions of SL(2,R), the gauge `Xi`, the radial
//! Casimir operator and the c-function.
//!
//! `phi_lambda(a_t) = (1/2pi) int_0^{2pi} exp((i lambda - rho) H(a_t k_theta)) dtheta`.
//! For large `t` the integrand concentrates in a window of width `e^{-2t}`
//! around `theta = pi/2`. The substitution `tan theta = e^{t+z}` spreads it out:
//!
//! ```text
//! phi_lambda(a_t) = (2 sqrt 2 / pi) int_0^inf cos(lambda u(z)) / sqrt(cosh 2t + cosh 2z) dz,
//! u(z) = (ln cosh(t - z) - ln cosh(t + z)) / 2 = H(a_t k_theta),
//! ```
//!
//! a smooth integrand with `e^{-z}` decay past `z = t`. Both the adaptive and
//! the fixed-rule evaluators below integrate this form.

use crate::error::{LabError, Result};
use crate::gamma::ln_gamma;
use crate::quadrature::{periodic_trapezoid, AdaptiveIntegrator, CompositeRule, GaussLegendre};
use crate::radial::RadialFunction;
use crate::structure::{iwasawa_projection, sigma, GroupElement, RootDatum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI, SQRT_2};
use std::sync::OnceLock;

/// Spectral coordinate `lambda_hat`, identifying `a*_C` with `C` via `lambda(H0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParameter(pub Complex64);

impl SpectralParameter {
    pub fn new(re: f64, im: f64) -> Self {
        Self(Complex64::new(re, im))
    }

    pub fn real(x: f64) -> Self {
        Self::new(x, 0.0)
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn is_real(&self) -> bool {
        self.0.im == 0.0
    }

    pub fn weyl_image(&self) -> Self {
        Self(-self.0)
    }
}

impl From<f64> for SpectralParameter {
    fn from(x: f64) -> Self {
        Self::real(x)
    }
}

/// Length of the `z` range beyond `t` where the weight has decayed by `e^{-40}`.
const Z_TAIL: f64 = 40.0;
/// Past `z = t + Z_NEAR` the phase `lambda u(z)` is constant to `e^{-8}`.
const Z_NEAR: f64 = 4.0;

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// `u(z)`, the Iwasawa projection at the substituted angle.
#[inline]
fn u_of(t: f64, z: f64) -> f64 {
    0.5 * (ln_cosh(t - z) - ln_cosh(t + z))
}

/// `(2 sqrt 2 / pi) / sqrt(cosh 2t + cosh 2z)` without overflow.
#[inline]
fn weight_of(t: f64, z: f64) -> f64 {
    let m = 2.0 * t.max(z);
    let s = (2.0 * t - m).exp() + (-2.0 * t - m).exp() + (2.0 * z - m).exp() + (-2.0 * z - m).exp();
    let ln_sum = m + s.ln() - LN_2;
    2.0 * SQRT_2 / PI * (-0.5 * ln_sum).exp()
}

fn z_breaks(t: f64, lambda_scale: f64) -> Vec<f64> {
    let width = (8.0 / lambda_scale.max(1.0)).min(1.0);
    let near = t + Z_NEAR;
    let mut breaks = crate::quadrature::uniform_breaks(0.0, near, width);
    let far = crate::quadrature::uniform_breaks(near, t + Z_TAIL, 4.0);
    breaks.extend_from_slice(&far[1..]);
    breaks
}

fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// The fixed rule at radius `t`: weights and Iwasawa projections at the nodes.
#[derive(Debug, Clone)]
pub struct PhiRule {
    pub t: f64,
    pub weights: Vec<f64>,
    pub projections: Vec<f64>,
}

impl PhiRule {
    /// Panels resolve `cos(lambda u)` for `|lambda| <= lambda_max`.
    pub fn new(t: f64, lambda_max: f64) -> Self {
        let rule = CompositeRule::from_breaks(&z_breaks(t, lambda_max), gl16());
        let weights = rule.nodes.iter().zip(&rule.weights).map(|(&z, &w)| w * weight_of(t, z)).collect();
        let projections = rule.nodes.iter().map(|&z| u_of(t, z)).collect();
        Self { t, weights, projections }
    }

    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        self.weights
            .iter()
            .zip(&self.projections)
            .map(|(&w, &u)| (lambda * u).cos() * w)
            .sum()
    }

    pub fn eval_real(&self, lambda: f64) -> f64 {
        self.weights.iter().zip(&self.projections).map(|(&w, &u)| w * (lambda * u).cos()).sum()
    }
}

/// Default adaptive integrator for spherical functions: 16-point base rule,
/// relative target 1e-9, panel budget 2^16.
pub fn default_integrator() -> AdaptiveIntegrator {
    AdaptiveIntegrator::new(16, 1e-9, 1 << 16)
}

/// `phi_lambda(a_t)` by adaptive quadrature.
pub fn spherical_phi(lambda: SpectralParameter, t: f64) -> Result<Complex64> {
    spherical_phi_with(&default_integrator(), lambda, t)
}

pub fn spherical_phi_with(
    integrator: &AdaptiveIntegrator,
    lambda: SpectralParameter,
    t: f64,
) -> Result<Complex64> {
    let t = t.abs();
    if t == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let lam = lambda.value();
    let breaks = z_breaks(t, lam.norm());
    let r = integrator.integrate(&breaks, |z| (lam * u_of(t, z)).cos() * weight_of(t, z))?;
    Ok(r.value)
}

/// `phi_lambda(a_t)` with the fixed composite rule (no adaptivity).
pub fn spherical_phi_fixed(lambda: SpectralParameter, t: f64) -> Complex64 {
    let t = t.abs();
    if t == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    PhiRule::new(t, lambda.value().norm()).eval(lambda.value())
}

/// The defining K-integral evaluated literally with the periodic trapezoid
/// rule on `n` angles. Accurate only for moderate `t`; kept as an
/// independent reference.
pub fn spherical_phi_theta(lambda: SpectralParameter, t: f64, n: usize) -> Complex64 {
    let a = GroupElement::diagonal(t);
    let s = Complex64::new(0.0, 1.0) * lambda.value() - 1.0;
    periodic_trapezoid(2.0 * PI, n, |th| {
        let u = iwasawa_projection(&a.mul(&GroupElement::rotation(th))).expect("unimodular");
        (s * u).exp()
    }) / (2.0 * PI)
}

/// `phi_lambda` at an arbitrary group element through its polar radius.
pub fn spherical_phi_at(lambda: SpectralParameter, g: &GroupElement) -> Result<Complex64> {
    spherical_phi(lambda, sigma(g))
}

/// Harish-Chandra's gauge `Xi = phi_0`.
pub fn xi(t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(LabError::NegativeRadius(t));
    }
    Ok(spherical_phi(SpectralParameter::real(0.0), t)?.re)
}

/// `Xi` from the fixed rule; used for grid sweeps.
pub fn xi_fixed(t: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    PhiRule::new(t.abs(), 0.0).eval_real(0.0)
}

/// Table of `phi_lambda(a_t)` for real `lambda_j = j * step`, `j < n_lambda`.
#[derive(Debug, Clone)]
pub struct PhiTable {
    ts: Vec<f64>,
    step: f64,
    n_lambda: usize,
    data: Vec<f64>,
}

/// Exact phases are recomputed every this many recurrence steps.
const REANCHOR: usize = 32;

impl PhiTable {
    pub fn build(ts: &[f64], step: f64, n_lambda: usize) -> Self {
        let lambda_max = step * (n_lambda.max(1) - 1) as f64;
        let mut data = vec![0.0; ts.len() * n_lambda];
        for (row, &t) in data.chunks_mut(n_lambda).zip(ts) {
            if t == 0.0 {
                row.iter_mut().for_each(|v| *v = 1.0);
                continue;
            }
            let rule = PhiRule::new(t.abs(), lambda_max);
            for (&w, &u) in rule.weights.iter().zip(&rule.projections) {
                let (s1, c1) = (step * u).sin_cos();
                let rot = Complex64::new(c1, s1);
                let mut z = Complex64::new(1.0, 0.0);
                for (j, v) in row.iter_mut().enumerate() {
                    if j % REANCHOR == 0 {
                        let (s, c) = (j as f64 * step * u).sin_cos();
                        z = Complex64::new(c, s);
                    }
                    *v += w * z.re;
                    z *= rot;
                }
            }
        }
        Self { ts: ts.to_vec(), step, n_lambda, data }
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn lambda_step(&self) -> f64 {
        self.step
    }

    pub fn n_lambda(&self) -> usize {
        self.n_lambda
    }

    pub fn lambda(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_lambda..(i + 1) * self.n_lambda]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_lambda + j]
    }
}

/// Radial part of the Casimir operator,
/// `L = d^2/dt^2 + (2 m_alpha coth 2t + 4 m_2alpha coth 4t) d/dt`,
/// by fourth-order centered differences.
///
/// Requires an equispaced grid. The result lives on the nodes with a full
/// stencil and `t >= 2h`; nearer the origin the `coth` pole makes the stencil
/// meaningless and those nodes are dropped.
pub fn casimir_radial_apply(f: &RadialFunction, rd: &RootDatum) -> Result<RadialFunction> {
    let h = f
        .uniform_spacing()
        .ok_or_else(|| LabError::InvalidGrid("Casimir stencil needs an equispaced grid".into()))?;
    let g = f.grid();
    let v = f.values();
    let n = g.len();
    let limit = 2.0 * h * (1.0 - 1e-9);
    let mut grid = Vec::new();
    let mut out = Vec::new();
    for i in 2..n.saturating_sub(2) {
        if g[i] < limit {
            continue;
        }
        let (d1, d2) = stencil(v[i - 2], v[i - 1], v[i], v[i + 1], v[i + 2], h);
        grid.push(g[i]);
        out.push(d2 + d1 * rd.radial_drift(g[i]));
    }
    RadialFunction::new(grid, out)
}

/// `(Lf)(t)` with the stencil centered at `t` on spacing `h` (interpolated samples).
pub fn casimir_radial_at(f: &RadialFunction, t: f64, h: f64, rd: &RootDatum) -> Result<Complex64> {
    if t < 2.0 * h {
        return Err(LabError::RefusalZone { t, limit: 2.0 * h });
    }
    let s: [Complex64; 5] = std::array::from_fn(|k| f.eval(t + (k as f64 - 2.0) * h));
    let (d1, d2) = stencil(s[0], s[1], s[2], s[3], s[4], h);
    Ok(d2 + d1 * rd.radial_drift(t))
}

#[inline]
fn stencil(
    m2: Complex64,
    m1: Complex64,
    c: Complex64,
    p1: Complex64,
    p2: Complex64,
    h: f64,
) -> (Complex64, Complex64) {
    let d1 = (m2 - m1 * 8.0 + p1 * 8.0 - p2) / (12.0 * h);
    let d2 = (-m2 + m1 * 16.0 - c * 30.0 + p1 * 16.0 - p2) / (12.0 * h * h);
    (d1, d2)
}

fn c_unnormalized(lambda_alpha: Complex64, rd: &RootDatum) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let ma = f64::from(rd.m_alpha);
    let m2a = f64::from(rd.m_2alpha);
    let il = i * lambda_alpha;
    let ln_c = -il * LN_2 + ln_gamma(il)
        - ln_gamma(0.5 * (0.5 * ma + 1.0 + il))
        - ln_gamma(0.5 * (0.5 * ma + m2a + il));
    ln_c.exp()
}

/// Closed-form rank one c-function (Gindikin-Karpelevich product of Gamma
/// ratios), normalized by `c(-i rho) = 1`.
///
/// With `alpha(H0) = 2` the root coordinate is `lambda_alpha = lambda_hat / 2`.
pub fn c_function_closed_form(lambda: SpectralParameter, rd: &RootDatum) -> Complex64 {
    let lam_a = lambda.value() * 0.5;
    let norm = c_unnormalized(Complex64::new(0.0, -rd.rho_alpha_units()), rd);
    c_unnormalized(lam_a, rd) / norm
}

/// Plancherel density `c(lambda)^{-1} c(-lambda)^{-1}` from the closed form.
/// Vanishes at `lambda = 0`.
pub fn plancherel_density_closed(lambda: f64, rd: &RootDatum) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let l = SpectralParameter::real(lambda);
    let cp = c_function_closed_form(l, rd);
    let cm = c_function_closed_form(l.weyl_image(), rd);
    (cp * cm).inv().re
}

/// Result of the far-field fit of `phi_lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CFit {
    /// Fitted `c(lambda)`.
    pub c_plus: Complex64,
    /// Fitted `c(-lambda)`.
    pub c_minus: Complex64,
    /// `|y - model| / |y|` with `y = phi e^{rho t}`.
    pub residual: f64,
    /// Condition number of the normal equations.
    pub condition: f64,
}

impl CFit {
    /// `1 / (c(lambda) c(-lambda))`.
    pub fn density(&self) -> f64 {
        (self.c_plus * self.c_minus).inv().re
    }
}

/// Far-field window for the c-function fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t1: f64,
    pub t2: f64,
    pub samples: usize,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self { t1: 8.0, t2: 12.0, samples: 81 }
    }
}

impl FitWindow {
    pub fn nodes(&self) -> Vec<f64> {
        let n = self.samples.max(2);
        (0..n).map(|i| self.t1 + (self.t2 - self.t1) * i as f64 / (n - 1) as f64).collect()
    }
}

/// Least-squares fit of `phi(t) ~ A e^{(i lambda - rho) t} + B e^{(-i lambda - rho) t}`
/// on given samples; `A = c(lambda)`, `B = c(-lambda)`.
pub fn fit_c_from_samples(lambda: f64, rho: f64, ts: &[f64], phis: &[Complex64]) -> Result<CFit> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(LabError::InvalidArgument("c-function fit needs real lambda != 0".into()));
    }
    let n = ts.len();
    if n < 4 || phis.len() != n {
        return Err(LabError::InvalidArgument("fit needs at least 4 matched samples".into()));
    }
    let max_gap = ts.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let period = 2.0 * PI / lambda.abs();
    if max_gap > period / 4.0 {
        return Err(LabError::IllConditioned {
            condition: f64::INFINITY,
            reason: format!("sample gap {max_gap:.3} under-resolves period {period:.3}"),
        });
    }
    let i = Complex64::new(0.0, 1.0);
    let mut s = Complex64::new(0.0, 0.0);
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    let mut yy = 0.0;
    let ys: Vec<Complex64> = ts.iter().zip(phis).map(|(&t, &p)| p * (rho * t).exp()).collect();
    for (&t, &y) in ts.iter().zip(&ys) {
        let e = (i * lambda * t).exp();
        s += e * e;
        b1 += e.conj() * y;
        b2 += e * y;
        yy += y.norm_sqr();
    }
    let nf = n as f64;
    // Gram [[n, conj(s)], [s, n]] for columns e^{i l t}, e^{-i l t}
    let condition = (nf + s.norm()) / (nf - s.norm()).max(f64::MIN_POSITIVE);
    if condition > 1e8 {
        return Err(LabError::IllConditioned {
            condition,
            reason: "oscillation too slow across the window".into(),
        });
    }
    let det = nf * nf - s.norm_sqr();
    let a = (b1 * nf - s.conj() * b2) / det;
    let b = (b2 * nf - s * b1) / det;
    let mut misfit = 0.0;
    for (&t, &y) in ts.iter().zip(&ys) {
        let e = (i * lambda * t).exp();
        misfit += (y - a * e - b * e.conj()).norm_sqr();
    }
    let residual = if yy > 0.0 { (misfit / yy).sqrt() } else { 0.0 };
    Ok(CFit { c_plus: a, c_minus: b, residual, condition })
}

/// `c(lambda)` from the asymptotics of `phi_lambda` on the window.
pub fn c_function_estimate(lambda: SpectralParameter, window: &FitWindow) -> Result<CFit> {
    if !lambda.is_real() {
        return Err(LabError::InvalidArgument("c-function fit needs real lambda".into()));
    }
    let ts = window.nodes();
    let integrator = AdaptiveIntegrator::new(16, 1e-13, 1 << 16);
    let phis = ts
        .iter()
        .map(|&t| spherical_phi_with(&integrator, lambda, t))
        .collect::<Result<Vec<_>>>()?;
    fit_c_from_samples(lambda.value().re, RootDatum::sl2().rho(), &ts, &phis)
}

/// `|(1/2pi) int phi(x k_theta y) dtheta - phi(x) phi(y)|`.
pub fn functional_equation_residual(
    x: &GroupElement,
    y: &GroupElement,
    lambda: SpectralParameter,
) -> Result<f64> {
    let px = spherical_phi_at(lambda, x)?;
    let py = spherical_phi_at(lambda, y)?;
    // the integrand is pi-periodic and analytic; double until stable
    let mut n = 32;
    let mut prev: Option<Complex64> = None;
    loop {
        let h = PI / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let g = x.mul(&GroupElement::rotation(j as f64 * h)).mul(y);
            acc += spherical_phi_at(lambda, &g)?;
        }
        let avg = acc / n as f64;
        if let Some(p) = prev {
            if (avg - p).norm() < 1e-13 || n >= 4096 {
                return Ok((avg - px * py).norm());
            }
        }
        prev = Some(avg);
        n *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::uniform_grid;

    #[test]
    fn phi_at_origin_is_one() {
        for &l in &[0.0, 1.0, 3.7] {
            assert_eq!(spherical_phi(SpectralParameter::real(l), 0.0).unwrap(), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn substituted_form_matches_theta_integral() {
        for &(l, t) in &[(0.0, 0.5), (1.0, 1.0), (2.5, 1.5), (0.7, 2.0)] {
            let lam = SpectralParameter::real(l);
            let a = spherical_phi(lam, t).unwrap();
            let b = spherical_phi_theta(lam, t, 4096);
            assert!((a - b).norm() < 1e-9, "l={l} t={t}: {a} vs {b}");
        }
        let lam = SpectralParameter::new(0.8, 0.4);
        let a = spherical_phi(lam, 1.2).unwrap();
        let b = spherical_phi_theta(lam, 1.2, 4096);
        assert!((a - b).norm() < 1e-9);
    }

    #[test]
    fn fixed_rule_matches_adaptive() {
        for &(l, t) in &[(0.0, 3.0), (4.0, 6.0), (15.9, 12.0), (8.0, 0.01)] {
            let lam = SpectralParameter::real(l);
            let a = spherical_phi(lam, t).unwrap();
            let b = spherical_phi_fixed(lam, t);
            assert!((a - b).norm() < 1e-10 * xi(t).unwrap(), "l={l} t={t}");
        }
    }

    #[test]
    fn table_matches_fixed_rule() {
        let ts = [0.0, 0.3, 2.0, 9.5];
        let table = PhiTable::build(&ts, 16.0 / 1023.0, 1024);
        for (i, &t) in ts.iter().enumerate() {
            for &j in &[0usize, 1, 100, 511, 1023] {
                let l = table.lambda(j);
                let direct = spherical_phi_fixed(SpectralParameter::real(l), t).re;
                assert!((table.get(i, j) - direct).abs() < 1e-14 * (1.0 + direct.abs()), "t={t} j={j}");
            }
        }
    }

    #[test]
    fn legendre_series_near_origin() {
        // phi = 2F1(-nu, nu+1; 1; -sinh^2 t), nu = (i lambda - 1)/2
        let l = 1.3;
        let t: f64 = 0.4;
        let nu = Complex64::new(-0.5, 0.5 * l);
        let x = -t.sinh().powi(2);
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 0..200 {
            let kf = k as f64;
            term *= (-nu + kf) * (nu + 1.0 + kf) / ((kf + 1.0) * (kf + 1.0)) * x;
            sum += term;
        }
        let phi = spherical_phi(SpectralParameter::real(l), t).unwrap();
        assert!((phi - sum).norm() < 1e-12);
    }

    #[test]
    fn xi_bounds() {
        let mut prev = 1.0;
        for k in 1..=40 {
            let t = k as f64 * 0.25;
            let x = xi(t).unwrap();
            assert!(x < prev && x > 0.0);
            assert!(x * t.exp() >= 1.0);
            prev = x;
        }
        assert!(xi(-1.0).is_err());
    }

    #[test]
    fn casimir_on_constant_is_zero() {
        let f = RadialFunction::from_real_fn(uniform_grid(2.0, 201), |_| 1.0).unwrap();
        let lf = casimir_radial_apply(&f, &RootDatum::sl2()).unwrap();
        assert!(lf.max_abs() == 0.0);
        assert!((lf.t_min() - 0.02).abs() < 1e-12);
        assert!(matches!(
            casimir_radial_at(&f, 0.01, 0.01, &RootDatum::sl2()),
            Err(LabError::RefusalZone { .. })
        ));
    }

    #[test]
    fn casimir_rejects_nonuniform_grid() {
        let f = RadialFunction::from_real_fn(vec![0.0, 0.1, 0.3, 0.35, 0.6, 0.9], |t| t).unwrap();
        assert!(casimir_radial_apply(&f, &RootDatum::sl2()).is_err());
    }

    #[test]
    fn closed_form_density_is_pi_lambda_tanh() {
        let rd = RootDatum::sl2();
        for &l in &[0.1, 0.5, 1.0, 4.0, 12.0] {
            let d = plancherel_density_closed(l, &rd);
            let expect = 0.5 * PI * l * (0.5 * PI * l).tanh();
            assert!((d - expect).abs() < 1e-12 * expect, "{l}: {d} {expect}");
        }
        assert_eq!(plancherel_density_closed(0.0, &rd), 0.0);
        let c = c_function_closed_form(SpectralParameter::new(0.0, -1.0), &rd);
        assert!((c - 1.0).norm() < 1e-13);
    }

    #[test]
    fn fit_rejects_small_and_underresolved_lambda() {
        let w = FitWindow::default();
        assert!(matches!(
            c_function_estimate(SpectralParameter::real(1e-6), &w),
            Err(LabError::IllConditioned { .. })
        ));
        let coarse = FitWindow { t1: 8.0, t2: 12.0, samples: 5 };
        assert!(matches!(
            c_function_estimate(SpectralParameter::real(4.0), &coarse),
            Err(LabError::IllConditioned { .. })
        ));
    }

    #[test]
    fn functional_relation_with_identity() {
        let x = GroupElement::identity();
        let y = GroupElement::diagonal(0.8).mul(&GroupElement::rotation(0.3));
        let r = functional_equation_residual(&x, &y, SpectralParameter::real(1.0)).unwrap();
        assert!(r < 1e-10);
    }
}
