//! Spherical transform, its AN form, the symmetric-space transform, radial
//! group convolution and `L^2(J)` inner products.
//!
//! All `t`-integrals use a composite Gauss-Legendre rule on `[0, T]` (panels
//! of width 1/4, 10 nodes each) applied to the interpolated samples.

use crate::error::{LabError, Result};
use crate::quadrature::{CompositeRule, GaussLegendre};
use crate::radial::RadialFunction;
use crate::spherical::{xi_fixed, PhiRule, SpectralParameter};
use crate::structure::{polar_decompose, radial_density, GroupElement, RootDatum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2, TAU};
use std::sync::OnceLock;

pub const PANEL_WIDTH: f64 = 0.25;
pub const PANEL_ORDER: usize = 10;
/// Relative size of the neglected tail accepted by the transforms.
pub const TAIL_TOLERANCE: f64 = 1e-10;

fn gl10() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(PANEL_ORDER))
}

fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

/// Composite rule on `[lo, hi]` with the default panels.
pub fn panel_rule(lo: f64, hi: f64) -> CompositeRule {
    CompositeRule::uniform(lo, hi, PANEL_WIDTH, gl10())
}

fn require_origin(f: &RadialFunction) -> Result<()> {
    if f.t_min() != 0.0 {
        return Err(LabError::InvalidGrid(format!(
            "transform needs samples from t = 0, grid starts at {}",
            f.t_min()
        )));
    }
    Ok(())
}

/// Estimate of `int_T^inf w` from samples of a non-negative weight `w` near
/// the end of its range, assuming exponential decay past the last node.
/// Returns infinity when the samples do not decay.
fn exponential_tail(t_a: f64, w_a: f64, t_b: f64, w_b: f64) -> f64 {
    if w_b == 0.0 {
        return 0.0;
    }
    if !(w_a > w_b) {
        return f64::INFINITY;
    }
    let rate = (w_a / w_b).ln() / (t_b - t_a);
    w_b / rate
}

/// Neglected tail of `int |f| Xi J dt` beyond the last node of `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub tail: f64,
    /// `int_0^T |f| Xi J dt`.
    pub total: f64,
}

impl TailReport {
    pub fn relative(&self) -> f64 {
        if self.tail == 0.0 {
            0.0
        } else {
            self.tail / self.total
        }
    }
}

/// Tail of the transform integral past `T_max`.
///
/// With a decay hint the declared envelope `Xi^{2/p} (1 + t)^{-m}`, scaled to
/// dominate the last quarter of the samples, is integrated over `[T, T + 40]`.
/// Without one the last unit of samples is extrapolated exponentially.
pub fn transform_tail(f: &RadialFunction, rd: &RootDatum) -> TailReport {
    let t_max = f.t_max();
    let weight = |t: f64| xi_fixed(t) * radial_density(t, rd);
    let total = panel_rule(f.t_min(), t_max).integrate(|t| f.eval(t).norm() * weight(t));
    let tail = match f.decay_hint() {
        Some(hint) => {
            let env = |t: f64| xi_fixed(t).powf(2.0 / hint.p) * (1.0 + t).powf(-hint.m);
            let from = 0.75 * t_max;
            let scale = f
                .grid()
                .iter()
                .zip(f.values())
                .filter(|(t, _)| **t >= from)
                .map(|(&t, v)| v.norm() / env(t))
                .fold(0.0, f64::max);
            scale * panel_rule(t_max, t_max + 40.0).integrate(|t| env(t) * weight(t))
        }
        None => {
            let t_a = (t_max - 1.0).max(f.t_min());
            // values at rounding level carry no decay information
            let floor = 256.0 * f64::EPSILON * f.max_abs();
            if f.eval(t_a).norm() <= floor && f.eval(t_max).norm() <= floor {
                return TailReport { tail: 0.0, total };
            }
            exponential_tail(
                t_a,
                f.eval(t_a).norm() * weight(t_a),
                t_max,
                f.eval(t_max).norm() * weight(t_max),
            )
        }
    };
    TailReport { tail, total }
}

pub(crate) fn check_tail(report: TailReport) -> Result<TailReport> {
    if report.tail > TAIL_TOLERANCE * report.total || report.tail.is_nan() {
        return Err(LabError::InsufficientDecay {
            tail: report.tail,
            bound: TAIL_TOLERANCE * report.total,
        });
    }
    Ok(report)
}

/// A transform value with the tail estimate that qualified it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformValue {
    pub value: Complex64,
    pub tail: TailReport,
}

/// `Hf(lambda) = int_0^T f(t) phi_{-lambda}(a_t) J(t) dt`, polar constant 1.
pub fn spherical_transform(f: &RadialFunction, lambda: SpectralParameter) -> Result<TransformValue> {
    require_origin(f)?;
    let rd = RootDatum::sl2();
    let tail = check_tail(transform_tail(f, &rd))?;
    let lam = -lambda.value();
    let rule = panel_rule(0.0, f.t_max());
    let mut value = Complex64::new(0.0, 0.0);
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let fv = f.eval(t);
        if fv == Complex64::new(0.0, 0.0) {
            continue;
        }
        let phi = PhiRule::new(t, lam.norm()).eval(lam);
        value += fv * phi * (w * radial_density(t, &rd));
    }
    Ok(TransformValue { value, tail })
}

/// `sigma(a(u) n(x))` with `x = sqrt 2 e^{-u} sinh v`:
/// `cosh 2 sigma = cosh 2u + sinh^2 v`.
#[inline]
fn sigma_uv(u: f64, v: f64) -> f64 {
    let d = 2.0 * u.sinh().powi(2) + v.sinh().powi(2);
    0.5 * (d + (d * (d + 2.0)).sqrt()).ln_1p()
}

/// The `x`-integral of the AN form, tabulated on `u`-nodes:
/// `A(u) = int f(sigma(a(u) n(x))) dx * e^{rho u}`, so that
/// `H_AN f(lambda) = int A(u) e^{-i lambda u} du`.
///
/// The substitution `x = sqrt 2 e^{-u} sinh v` makes the inner integrand
/// `sqrt 2 f(sigma) cosh v`, smooth and supported on `|v| <= T + 1`.
#[derive(Debug, Clone)]
pub struct AnProfile {
    /// Non-negative `u` nodes; `A` is even in `u`.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<Complex64>,
    pub tail: TailReport,
}

impl AnProfile {
    pub fn new(f: &RadialFunction) -> Result<Self> {
        require_origin(f)?;
        let tail = check_tail(transform_tail(f, &RootDatum::sl2()))?;
        let t_max = f.t_max();
        let u_rule = panel_rule(0.0, t_max);
        let v_rule = panel_rule(0.0, t_max + 1.0);
        let values = u_rule
            .nodes
            .iter()
            .map(|&u| {
                let inner: Complex64 = v_rule
                    .nodes
                    .iter()
                    .zip(&v_rule.weights)
                    .map(|(&v, &w)| f.eval(sigma_uv(u, v)) * (w * v.cosh()))
                    .sum();
                // both halves in v
                inner * (2.0 * SQRT_2)
            })
            .collect();
        Ok(Self { nodes: u_rule.nodes, weights: u_rule.weights, values, tail })
    }

    pub fn eval(&self, lambda: SpectralParameter) -> Complex64 {
        let lam = lambda.value();
        let half: Complex64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.values)
            .map(|((&u, &w), &a)| a * (lam * u).cos() * w)
            .sum();
        half * 2.0
    }
}

/// `int_{AN} f(an) e^{(-lambda + rho) log a} da dn` for radial `f`.
pub fn an_form_transform(f: &RadialFunction, lambda: SpectralParameter) -> Result<TransformValue> {
    let profile = AnProfile::new(f)?;
    Ok(TransformValue { value: profile.eval(lambda), tail: profile.tail })
}

/// A function on `G/K` sampled in geodesic polar coordinates.
///
/// The coset `k(b/2) a(t) K` has boundary angle `b` in `[0, 2 pi)` and radius
/// `t >= 0`; `b` is the angle of the corresponding point of the unit disk.
/// Angles are equispaced (an even count, so that `b + pi` is a node) and the
/// radial grid starts at 0. Crossing the origin continues `(b, -t)` as
/// `(b + pi, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricFunction {
    n_angles: usize,
    grid: Vec<f64>,
    /// Row-major: one radial row per angle.
    values: Vec<Complex64>,
}

impl SymmetricFunction {
    pub fn new(n_angles: usize, grid: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if n_angles < 4 || n_angles % 2 == 1 {
            return Err(LabError::InvalidGrid(format!("need an even angle count >= 4, got {n_angles}")));
        }
        // validates the radial grid
        RadialFunction::zero(grid.clone())?;
        if grid[0] != 0.0 {
            return Err(LabError::InvalidGrid("symmetric radial grid must start at 0".into()));
        }
        if values.len() != n_angles * grid.len() {
            return Err(LabError::InvalidGrid("value count does not match the product grid".into()));
        }
        Ok(Self { n_angles, grid, values })
    }

    pub fn from_fn<F: FnMut(f64, f64) -> Complex64>(
        n_angles: usize,
        grid: Vec<f64>,
        mut f: F,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(n_angles * grid.len());
        for j in 0..n_angles {
            let b = Self::angle_of(n_angles, j);
            values.extend(grid.iter().map(|&t| f(b, t)));
        }
        Self::new(n_angles, grid, values)
    }

    /// Radial function copied to every angle.
    pub fn from_radial(n_angles: usize, f: &RadialFunction) -> Result<Self> {
        let values = f.values().repeat(n_angles);
        Self::new(n_angles, f.grid().to_vec(), values)
    }

    fn angle_of(n: usize, j: usize) -> f64 {
        TAU * j as f64 / n as f64
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn angle(&self, j: usize) -> f64 {
        Self::angle_of(self.n_angles, j)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn t_max(&self) -> f64 {
        *self.grid.last().expect("non-empty grid")
    }

    pub fn row(&self, j: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.values[j * n..(j + 1) * n]
    }

    /// The radial function along angle `j`.
    pub fn ray(&self, j: usize) -> Result<RadialFunction> {
        RadialFunction::new(self.grid.clone(), self.row(j).to_vec())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn radial_at(&self, j: usize, t: f64) -> Complex64 {
        let n = self.grid.len();
        let half = self.n_angles / 2;
        let i = match self.grid.binary_search_by(|x| x.partial_cmp(&t).expect("finite grid")) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        } as isize;
        let start = (i - 1).min(n as isize - 4);
        let mut acc = Complex64::new(0.0, 0.0);
        let node = |k: isize| -> (f64, Complex64) {
            if k < 0 {
                let jj = (j + half) % self.n_angles;
                (-self.grid[(-k) as usize], self.row(jj)[(-k) as usize])
            } else {
                (self.grid[k as usize], self.row(j)[k as usize])
            }
        };
        let pts: [(f64, Complex64); 4] = std::array::from_fn(|k| node(start + k as isize));
        for (a, &(xa, ya)) in pts.iter().enumerate() {
            let mut l = 1.0;
            for (c, &(xc, _)) in pts.iter().enumerate() {
                if a != c {
                    l *= (t - xc) / (xa - xc);
                }
            }
            acc += ya * l;
        }
        acc
    }

    /// Value at boundary angle `b` and radius `t`; zero past the last node.
    pub fn eval(&self, b: f64, t: f64) -> Complex64 {
        let (b, t) = if t < 0.0 { (b + PI, -t) } else { (b, t) };
        if t > self.t_max() {
            return Complex64::new(0.0, 0.0);
        }
        let h = TAU / self.n_angles as f64;
        let x = b.rem_euclid(TAU) / h;
        let j0 = x.floor() as isize;
        let frac = x - j0 as f64;
        // periodic four-point Lagrange in the angle, offsets -1..=2
        let mut acc = Complex64::new(0.0, 0.0);
        for k in -1isize..=2 {
            let mut l = 1.0;
            for m in -1isize..=2 {
                if m != k {
                    l *= (frac - m as f64) / (k - m) as f64;
                }
            }
            let j = (j0 + k).rem_euclid(self.n_angles as isize) as usize;
            acc += self.radial_at(j, t) * l;
        }
        acc
    }

    /// Coordinates `(b, t)` of the coset `gK`.
    pub fn coordinates(g: &GroupElement) -> (f64, f64) {
        let p = polar_decompose(g);
        ((2.0 * p.theta1).rem_euclid(TAU), p.t)
    }

    pub fn eval_at(&self, g: &GroupElement) -> Complex64 {
        let (b, t) = Self::coordinates(g);
        self.eval(b, t)
    }
}

/// `A_b(u) = int f(k(b/2) a(u) n(x) K) dx e^{rho u}` on a full `u` rule; the
/// symmetric transform at angle `b` is `int A_b(u) e^{-i lambda u} du`.
#[derive(Debug, Clone)]
pub struct SymmetricProfile {
    pub b: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl SymmetricProfile {
    pub fn new(f: &SymmetricFunction, b: f64) -> Result<Self> {
        for j in 0..f.n_angles() {
            check_tail(transform_tail(&f.ray(j)?, &RootDatum::sl2()))?;
        }
        let t_max = f.t_max();
        let u_rule = panel_rule(-t_max, t_max);
        let v_rule = panel_rule(-(t_max + 1.0), t_max + 1.0);
        let k = GroupElement::rotation(0.5 * b);
        let values = u_rule
            .nodes
            .iter()
            .map(|&u| {
                let a = k.mul(&GroupElement::diagonal(u));
                let inner: Complex64 = v_rule
                    .nodes
                    .iter()
                    .zip(&v_rule.weights)
                    .map(|(&v, &w)| {
                        let x = SQRT_2 * (-u).exp() * v.sinh();
                        let g = a.mul(&GroupElement::unipotent(x));
                        f.eval_at(&g) * (w * v.cosh())
                    })
                    .sum();
                inner * SQRT_2
            })
            .collect();
        Ok(Self { b, nodes: u_rule.nodes, weights: u_rule.weights, values })
    }

    pub fn eval(&self, lambda: SpectralParameter) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        let lam = lambda.value();
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.values)
            .map(|((&u, &w), &a)| a * (-i * lam * u).exp() * w)
            .sum()
    }
}

/// `H(f)(kM : lambda)` at boundary angle `b`.
pub fn symmetric_transform(f: &SymmetricFunction, b: f64, lambda: SpectralParameter) -> Result<Complex64> {
    Ok(SymmetricProfile::new(f, b)?.eval(lambda))
}

/// `y`-breakpoints for the inner convolution average; the transition of
/// `sigma` from `|s - t|` to `s + t` sits near `y = -2 min(s, t)`.
fn inner_breaks(s: f64, t: f64) -> Vec<f64> {
    let c = -2.0 * s.min(t);
    let mut b = crate::quadrature::uniform_breaks(c - 28.0, c - 4.0, 4.0);
    b.extend_from_slice(&crate::quadrature::uniform_breaks(c - 4.0, 4.0, 1.0)[1..]);
    b.extend_from_slice(&crate::quadrature::uniform_breaks(4.0, 28.0, 4.0)[1..]);
    b
}

/// `sigma` from `cosh 2 sigma - 1 = (A e^{2y} + B) / (1 + e^{2y})`.
#[inline]
fn sigma_mix(a: f64, b: f64, e2: f64) -> f64 {
    let d = (a * e2 + b) / (1.0 + e2);
    0.5 * (d + (d * (d + 2.0)).sqrt()).ln_1p()
}

/// `sigma(a(-s) k(theta) a(t))` with `tan theta = e^y`:
/// `cosh 2 sigma = cosh 2(s+t) / (1 + e^{-2y}) + cosh 2(s-t) / (1 + e^{2y})`.
#[cfg(test)]
fn sigma_syt(s: f64, y: f64, t: f64) -> f64 {
    sigma_mix(2.0 * (s + t).sinh().powi(2), 2.0 * (s - t).sinh().powi(2), (2.0 * y).exp())
}

/// `(1/2pi) int_0^{2pi} g(sigma(a(-s) k(theta) a(t))) dtheta`
/// `= (1/pi) int g(sigma(y)) / cosh y dy`.
pub fn spherical_mean(g: &RadialFunction, s: f64, t: f64) -> Complex64 {
    if (s - t).abs() > g.t_max() {
        return Complex64::new(0.0, 0.0);
    }
    let a = 2.0 * (s + t).sinh().powi(2);
    let b = 2.0 * (s - t).sinh().powi(2);
    let mut acc = Complex64::new(0.0, 0.0);
    for w in inner_breaks(s, t).windows(2) {
        for (y, wt) in gl8().mapped(w[0], w[1]) {
            let ey = y.exp();
            let sigma = sigma_mix(a, b, ey * ey);
            acc += g.eval(sigma) * (wt * 2.0 / (ey + ey.recip()));
        }
    }
    acc / PI
}

const OUTER_CUTOFF: f64 = 1e-17;

/// `(f * g)(a_t)` on the grid of `f`.
pub fn group_convolve(f: &RadialFunction, g: &RadialFunction) -> Result<RadialFunction> {
    group_convolve_on(f, g, f.grid().to_vec())
}

/// `(f * g)(a_t) = int_0^inf f(s) J(s) M_g(s, t) ds` on the given grid, with
/// `M_g` the spherical mean of `g`.
pub fn group_convolve_on(f: &RadialFunction, g: &RadialFunction, grid: Vec<f64>) -> Result<RadialFunction> {
    require_origin(f)?;
    require_origin(g)?;
    let rd = RootDatum::sl2();
    check_tail(transform_tail(f, &rd))?;
    check_tail(transform_tail(g, &rd))?;
    let rule = panel_rule(0.0, f.t_max());
    let mut outer: Vec<(f64, Complex64)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&s, &w)| (s, f.eval(s) * (w * radial_density(s, &rd))))
        .collect();
    // nodes below 1e-17 of the largest weight cannot move the result
    let peak = outer.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
    outer.retain(|(_, v)| v.norm() > OUTER_CUTOFF * peak);
    let values = grid
        .iter()
        .map(|&t| outer.iter().map(|&(s, fw)| fw * spherical_mean(g, s, t)).sum())
        .collect();
    RadialFunction::new(grid, values)
}

/// `int_0^T f conj(g) J dt` over the common range of both grids.
pub fn l2_inner_product(f: &RadialFunction, g: &RadialFunction) -> Result<Complex64> {
    let lo = f.t_min().max(g.t_min());
    let hi = f.t_max().min(g.t_max());
    let rd = RootDatum::sl2();
    let weight = |t: f64| (f.eval(t) * g.eval(t).conj()).norm() * radial_density(t, &rd);
    let total = panel_rule(lo, hi).integrate(weight);
    let t_a = (hi - 1.0).max(lo);
    let tail = exponential_tail(t_a, weight(t_a), hi, weight(hi));
    if tail > TAIL_TOLERANCE * total {
        return Err(LabError::InsufficientDecay { tail, bound: TAIL_TOLERANCE * total });
    }
    l2_inner_product_on(f, g, lo, hi)
}

/// `int_lo^hi f conj(g) J dt`; no tail check.
pub fn l2_inner_product_on(f: &RadialFunction, g: &RadialFunction, lo: f64, hi: f64) -> Result<Complex64> {
    if lo < f.t_min() || lo < g.t_min() || hi <= lo {
        return Err(LabError::InvalidArgument(format!("window [{lo}, {hi}] outside the sampled range")));
    }
    let rd = RootDatum::sl2();
    let rule = panel_rule(lo, hi);
    Ok(rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| f.eval(t) * g.eval(t).conj() * (w * radial_density(t, &rd)))
        .sum())
}

/// `||f - g|| / ||g||` in `L^2(J)` restricted to `[lo, hi]`.
pub fn relative_l2_difference(f: &RadialFunction, g: &RadialFunction, lo: f64, hi: f64) -> Result<f64> {
    if lo < f.t_min() || lo < g.t_min() || hi <= lo {
        return Err(LabError::InvalidArgument(format!("window [{lo}, {hi}] outside the sampled range")));
    }
    let rd = RootDatum::sl2();
    let rule = panel_rule(lo, hi);
    let (mut num, mut den) = (0.0, 0.0);
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let j = w * radial_density(t, &rd);
        let gv = g.eval(t);
        num += (f.eval(t) - gv).norm_sqr() * j;
        den += gv.norm_sqr() * j;
    }
    if den == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((num / den).sqrt())
}
