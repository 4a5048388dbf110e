//! Tube domains over the spectral line and the symbol functions living on them.
//!
//! Symbols are closed-form expression trees in the spectral coordinate, so they
//! can be evaluated anywhere on a strip, serialized to text and read back
//! bit-exactly. The text form is `tag(arg, ...)`, for instance
//! `product(gaussian(1.0),poly(4.0,0.0,1.0))`.

use crate::error::{LabError, Result};
use crate::radial::RadialFunction;
use crate::spherical::SpectralParameter;
use crate::structure::RootDatum;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;

/// The strip `{lambda : |Im lambda| <= epsilon * rho}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeDomain {
    pub epsilon: f64,
    pub rho: f64,
}

impl TubeDomain {
    pub fn new(epsilon: f64, rho: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && rho > 0.0 && epsilon.is_finite() && rho.is_finite()) {
            return Err(LabError::InvalidArgument(format!("bad tube epsilon={epsilon} rho={rho}")));
        }
        Ok(Self { epsilon, rho })
    }

    pub fn half_width(&self) -> f64 {
        self.epsilon * self.rho
    }

    pub fn contains(&self, lambda: SpectralParameter) -> bool {
        lambda.value().im.abs() <= self.half_width()
    }

    /// Membership in the open strip, which is the union of the smaller tubes.
    pub fn interior_contains(&self, lambda: SpectralParameter) -> bool {
        lambda.value().im.abs() < self.half_width()
    }
}

pub fn tube_contains(td: &TubeDomain, lambda: SpectralParameter) -> bool {
    td.contains(lambda)
}

/// Convex hull of the Weyl orbit of `rho`; in rank one the interval `[-rho, rho]`.
pub fn c_rho(rd: &RootDatum) -> (f64, f64) {
    let rho = rd.rho();
    let orbit = [rho, -rho];
    let lo = orbit.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = orbit.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// A function of the spectral coordinate given in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SymbolFunction {
    Zero,
    Constant(f64),
    /// `exp(-beta lambda^2)`.
    Gaussian { beta: f64 },
    /// `sum_j c_j lambda^j`.
    Poly(Vec<f64>),
    /// `(c0^2 + lambda^2)^{-k}`.
    XiHat { k: u32, c0: f64 },
    Product(Vec<SymbolFunction>),
    Sum(Vec<SymbolFunction>),
    Scaled(f64, Box<SymbolFunction>),
    /// `(c0^2 + lambda^2)^{2k} h(lambda)`.
    Wrapped { h: Box<SymbolFunction>, k: u32, c0: f64 },
    /// Samples at `lambda_j = j * step`, continued evenly and interpolated;
    /// defined on the real axis only.
    Sampled { step: f64, values: Vec<Complex64> },
}

fn quad_power(lambda: Complex64, c0: f64, power: u32) -> Complex64 {
    let q = lambda * lambda + c0 * c0;
    let mut acc = Complex64::new(1.0, 0.0);
    for _ in 0..power {
        acc *= q;
    }
    acc
}

impl SymbolFunction {
    pub fn gaussian(beta: f64) -> Self {
        Self::Gaussian { beta }
    }

    pub fn product(a: Self, b: Self) -> Self {
        Self::Product(vec![a, b])
    }

    pub fn sampled_from(step: f64, values: Vec<Complex64>) -> Result<Self> {
        if !(step > 0.0) || values.len() < 4 {
            return Err(LabError::InvalidArgument("sampled symbol needs step > 0 and 4 samples".into()));
        }
        Ok(Self::Sampled { step, values })
    }

    /// Value at `lambda`; NaN where the symbol is undefined.
    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        match self {
            Self::Zero => Complex64::new(0.0, 0.0),
            Self::Constant(c) => Complex64::new(*c, 0.0),
            Self::Gaussian { beta } => (-*beta * lambda * lambda).exp(),
            Self::Poly(c) => c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &x| acc * lambda + x),
            Self::XiHat { k, c0 } => quad_power(lambda, *c0, *k).inv(),
            Self::Product(parts) => parts.iter().fold(Complex64::new(1.0, 0.0), |acc, p| acc * p.eval(lambda)),
            Self::Sum(parts) => parts.iter().map(|p| p.eval(lambda)).sum(),
            Self::Scaled(c, s) => s.eval(lambda) * *c,
            Self::Wrapped { h, k, c0 } => quad_power(lambda, *c0, 2 * k) * h.eval(lambda),
            Self::Sampled { step, values } => {
                if lambda.im != 0.0 {
                    return Complex64::new(f64::NAN, f64::NAN);
                }
                sampled_eval(*step, values, lambda.re)
            }
        }
    }

    pub fn eval_real(&self, lambda: f64) -> Complex64 {
        self.eval(Complex64::new(lambda, 0.0))
    }

    /// As [`eval`](Self::eval) but reports evaluation off the real axis of
    /// sampled symbols.
    pub fn try_eval(&self, lambda: Complex64) -> Result<Complex64> {
        if lambda.im != 0.0 && !self.is_analytic() {
            return Err(LabError::RealAxisOnly(format!("{} at {lambda}", self.tag())));
        }
        Ok(self.eval(lambda))
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Constant(_) => "const",
            Self::Gaussian { .. } => "gaussian",
            Self::Poly(_) => "poly",
            Self::XiHat { .. } => "xihat",
            Self::Product(_) => "product",
            Self::Sum(_) => "sum",
            Self::Scaled(..) => "scaled",
            Self::Wrapped { .. } => "wrapped",
            Self::Sampled { .. } => "sampled",
        }
    }

    /// False if any part is only known on the real axis.
    pub fn is_analytic(&self) -> bool {
        match self {
            Self::Sampled { .. } => false,
            Self::Product(p) | Self::Sum(p) => p.iter().all(Self::is_analytic),
            Self::Scaled(_, s) => s.is_analytic(),
            Self::Wrapped { h, .. } => h.is_analytic(),
            _ => true,
        }
    }

    /// Structural evenness in `lambda`.
    pub fn weyl_invariant(&self) -> bool {
        match self {
            Self::Poly(c) => c.iter().skip(1).step_by(2).all(|&x| x == 0.0),
            Self::Product(p) | Self::Sum(p) => p.iter().all(Self::weyl_invariant),
            Self::Scaled(_, s) => s.weyl_invariant(),
            Self::Wrapped { h, .. } => h.weyl_invariant(),
            _ => true,
        }
    }

    /// Distance from the real axis to the nearest pole, infinite if none.
    pub fn pole_offset(&self) -> f64 {
        match self {
            Self::XiHat { k, c0 } if *k > 0 => c0.abs(),
            Self::Product(p) | Self::Sum(p) => p.iter().map(Self::pole_offset).fold(f64::INFINITY, f64::min),
            Self::Scaled(_, s) => s.pole_offset(),
            Self::Wrapped { h, .. } => h.pole_offset(),
            _ => f64::INFINITY,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Constant(c) => *c == 0.0,
            Self::Poly(c) => c.iter().all(|&x| x == 0.0),
            Self::Product(p) => p.iter().any(Self::is_zero),
            Self::Sum(p) => p.iter().all(Self::is_zero),
            Self::Scaled(c, s) => *c == 0.0 || s.is_zero(),
            Self::Wrapped { h, .. } => h.is_zero(),
            Self::Sampled { values, .. } => values.iter().all(|v| *v == Complex64::new(0.0, 0.0)),
            _ => false,
        }
    }

    /// Largest real `lambda` at which the symbol is known (infinite for
    /// closed forms).
    pub fn real_extent(&self) -> f64 {
        match self {
            Self::Sampled { step, values } => step * (values.len() - 1) as f64,
            Self::Product(p) | Self::Sum(p) => p.iter().map(Self::real_extent).fold(f64::INFINITY, f64::min),
            Self::Scaled(_, s) => s.real_extent(),
            Self::Wrapped { h, .. } => h.real_extent(),
            _ => f64::INFINITY,
        }
    }
}

fn sampled_eval(step: f64, values: &[Complex64], x: f64) -> Complex64 {
    let grid: Vec<f64> = (0..values.len()).map(|j| j as f64 * step).collect();
    match RadialFunction::new(grid, values.to_vec()) {
        Ok(r) => r.eval(x),
        Err(_) => Complex64::new(f64::NAN, f64::NAN),
    }
}

fn write_float(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    // Debug formatting is the shortest representation that reads back exactly
    write!(f, "{x:?}")
}

impl fmt::Display for SymbolFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, tag: &str, parts: &[SymbolFunction]| -> fmt::Result {
            write!(f, "{tag}(")?;
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{p}")?;
            }
            write!(f, ")")
        };
        match self {
            Self::Zero => write!(f, "zero"),
            Self::Constant(c) => {
                write!(f, "const(")?;
                write_float(f, *c)?;
                write!(f, ")")
            }
            Self::Gaussian { beta } => {
                write!(f, "gaussian(")?;
                write_float(f, *beta)?;
                write!(f, ")")
            }
            Self::Poly(c) => {
                write!(f, "poly(")?;
                for (i, &x) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write_float(f, x)?;
                }
                write!(f, ")")
            }
            Self::XiHat { k, c0 } => {
                write!(f, "xihat({k},")?;
                write_float(f, *c0)?;
                write!(f, ")")
            }
            Self::Product(p) => list(f, "product", p),
            Self::Sum(p) => list(f, "sum", p),
            Self::Scaled(c, s) => {
                write!(f, "scaled(")?;
                write_float(f, *c)?;
                write!(f, ",{s})")
            }
            Self::Wrapped { h, k, c0 } => {
                write!(f, "wrapped({h},{k},")?;
                write_float(f, *c0)?;
                write!(f, ")")
            }
            Self::Sampled { step, values } => {
                write!(f, "sampled(")?;
                write_float(f, *step)?;
                for v in values {
                    write!(f, ",")?;
                    write_float(f, v.re)?;
                    write!(f, ",")?;
                    write_float(f, v.im)?;
                }
                write!(f, ")")
            }
        }
    }
}

impl std::str::FromStr for SymbolFunction {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s.as_bytes(), pos: 0 };
        let sym = p.symbol()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        Ok(sym)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

enum Arg {
    Number(f64),
    Symbol(SymbolFunction),
}

impl Parser<'_> {
    fn error(&self, what: &str) -> LabError {
        LabError::Parse(format!("{what} at byte {} of symbol text", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphabetic() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        (self.pos > start).then(|| String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && matches!(self.src[self.pos], b'0'..=b'9' | b'.' | b'-' | b'+' | b'e' | b'E') {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).map_err(|_| self.error("bad utf-8"))?;
        let x: f64 = text.parse().map_err(|_| self.error(&format!("bad number '{text}'")))?;
        if !x.is_finite() {
            return Err(self.error("non-finite number"));
        }
        Ok(x)
    }

    fn arg(&mut self) -> Result<Arg> {
        self.skip_ws();
        match self.src.get(self.pos) {
            Some(c) if c.is_ascii_alphabetic() => Ok(Arg::Symbol(self.symbol()?)),
            Some(_) => Ok(Arg::Number(self.number()?)),
            None => Err(self.error("unexpected end")),
        }
    }

    fn args(&mut self) -> Result<Vec<Arg>> {
        if !self.eat(b'(') {
            return Err(self.error("expected '('"));
        }
        let mut out = Vec::new();
        if self.eat(b')') {
            return Ok(out);
        }
        loop {
            out.push(self.arg()?);
            if self.eat(b')') {
                return Ok(out);
            }
            if !self.eat(b',') {
                return Err(self.error("expected ',' or ')'"));
            }
        }
    }

    fn symbol(&mut self) -> Result<SymbolFunction> {
        let tag = self.ident().ok_or_else(|| self.error("expected a symbol tag"))?;
        if tag == "zero" {
            self.skip_ws();
            if self.src.get(self.pos) == Some(&b'(') {
                let a = self.args()?;
                if !a.is_empty() {
                    return Err(self.error("zero takes no arguments"));
                }
            }
            return Ok(SymbolFunction::Zero);
        }
        let args = self.args()?;
        let nums = |args: &[Arg]| -> Result<Vec<f64>> {
            args.iter()
                .map(|a| match a {
                    Arg::Number(x) => Ok(*x),
                    Arg::Symbol(_) => Err(LabError::Parse(format!("{tag} expects numeric arguments"))),
                })
                .collect()
        };
        let order = |x: f64| -> Result<u32> {
            if x >= 0.0 && x.fract() == 0.0 && x <= 64.0 {
                Ok(x as u32)
            } else {
                Err(LabError::Parse(format!("order {x} is not a small non-negative integer")))
            }
        };
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(LabError::Parse(format!("{tag} takes {n} arguments, got {}", args.len())))
            }
        };
        match tag.as_str() {
            "const" => {
                arity(1)?;
                Ok(SymbolFunction::Constant(nums(&args)?[0]))
            }
            "gaussian" => {
                arity(1)?;
                Ok(SymbolFunction::Gaussian { beta: nums(&args)?[0] })
            }
            "poly" => {
                if args.is_empty() {
                    return Err(LabError::Parse("poly needs coefficients".into()));
                }
                Ok(SymbolFunction::Poly(nums(&args)?))
            }
            "xihat" => {
                arity(2)?;
                let n = nums(&args)?;
                Ok(SymbolFunction::XiHat { k: order(n[0])?, c0: n[1] })
            }
            "product" | "sum" => {
                let parts = args
                    .into_iter()
                    .map(|a| match a {
                        Arg::Symbol(s) => Ok(s),
                        Arg::Number(_) => Err(LabError::Parse(format!("{tag} expects symbols"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                if parts.is_empty() {
                    return Err(LabError::Parse(format!("{tag} needs at least one factor")));
                }
                Ok(if tag == "product" { SymbolFunction::Product(parts) } else { SymbolFunction::Sum(parts) })
            }
            "scaled" => {
                arity(2)?;
                let mut it = args.into_iter();
                match (it.next(), it.next()) {
                    (Some(Arg::Number(c)), Some(Arg::Symbol(s))) => Ok(SymbolFunction::Scaled(c, Box::new(s))),
                    _ => Err(LabError::Parse("scaled(c, symbol)".into())),
                }
            }
            "wrapped" => {
                arity(3)?;
                let mut it = args.into_iter();
                match (it.next(), it.next(), it.next()) {
                    (Some(Arg::Symbol(h)), Some(Arg::Number(k)), Some(Arg::Number(c0))) => {
                        Ok(SymbolFunction::Wrapped { h: Box::new(h), k: order(k)?, c0 })
                    }
                    _ => Err(LabError::Parse("wrapped(symbol, k, c0)".into())),
                }
            }
            "sampled" => {
                let n = nums(&args)?;
                if n.len() < 3 || n.len() % 2 == 0 {
                    return Err(LabError::Parse("sampled(step, re, im, ...)".into()));
                }
                let values = n[1..].chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
                SymbolFunction::sampled_from(n[0], values).map_err(|e| LabError::Parse(e.to_string()))
            }
            other => Err(LabError::Parse(format!("unknown symbol tag '{other}'"))),
        }
    }
}

/// The conjugating symbol `xi_hat(lambda) = (c0^2 + lambda^2)^{-k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiHat {
    pub k: u32,
    pub c0: f64,
}

impl Default for XiHat {
    fn default() -> Self {
        Self { k: 1, c0: 2.0 }
    }
}

impl XiHat {
    pub fn new(k: u32, c0: f64) -> Result<Self> {
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(LabError::InvalidArgument(format!("xi_hat needs c0 > 0, got {c0}")));
        }
        Ok(Self { k, c0 })
    }

    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        self.symbol().eval(lambda)
    }

    pub fn symbol(&self) -> SymbolFunction {
        SymbolFunction::XiHat { k: self.k, c0: self.c0 }
    }

    /// `xi_hat^{-1}`, a polynomial in `lambda^2`.
    pub fn reciprocal(&self) -> SymbolFunction {
        let mut c = vec![1.0];
        for _ in 0..self.k {
            // multiply by c0^2 + lambda^2
            let mut next = vec![0.0; c.len() + 2];
            for (i, &x) in c.iter().enumerate() {
                next[i] += self.c0 * self.c0 * x;
                next[i + 2] += x;
            }
            c = next;
        }
        SymbolFunction::Poly(c)
    }

    /// Checks `c0 > epsilon rho`, so `xi_hat` is pole-free on the tube.
    pub fn check_tube(&self, td: &TubeDomain) -> Result<()> {
        if self.k > 0 && self.c0 <= td.half_width() {
            return Err(LabError::InvalidArgument(format!(
                "xi_hat pole offset {} inside tube of half-width {}",
                self.c0,
                td.half_width()
            )));
        }
        Ok(())
    }
}

/// Rectangular sample grid of a strip, `|Re lambda| <= re_max`.
///
/// Nodes include `lambda = 0`; refining `n -> 2n - 1` keeps the old nodes, so
/// grid-sup estimates cannot decrease under refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripGrid {
    pub re_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl Default for StripGrid {
    fn default() -> Self {
        Self { re_max: 32.0, n_re: 257, n_im: 65 }
    }
}

fn linspace(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n == 1 {
        return 0.5 * (lo + hi);
    }
    lo + (hi - lo) * i as f64 / (n - 1) as f64
}

impl StripGrid {
    pub fn refined(&self) -> Self {
        Self { re_max: self.re_max, n_re: 2 * self.n_re - 1, n_im: 2 * self.n_im - 1 }
    }

    /// Points of the closed strip of half-width `h`; a single row if `h = 0`.
    pub fn points(&self, half_width: f64) -> Vec<Complex64> {
        let n_im = if half_width == 0.0 { 1 } else { self.n_im };
        let mut out = Vec::with_capacity(self.n_re * n_im);
        for j in 0..n_im {
            let im = if n_im == 1 { 0.0 } else { linspace(-half_width, half_width, n_im, j) };
            for i in 0..self.n_re {
                out.push(Complex64::new(linspace(-self.re_max, self.re_max, self.n_re, i), im));
            }
        }
        out
    }
}

/// `max |s(lambda) - s(-lambda)|` over the points; points where the symbol is
/// undefined are skipped.
pub fn weyl_invariance_check(s: &SymbolFunction, points: &[Complex64]) -> f64 {
    points
        .iter()
        .filter(|z| z.im == 0.0 || s.is_analytic())
        .map(|&z| (s.eval(z) - s.eval(-z)).norm())
        .filter(|d| !d.is_nan())
        .fold(0.0, f64::max)
}

/// Grid-sup estimate of a seminorm; a lower bound for the true sup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeminormEstimate {
    pub value: f64,
    pub argmax: (f64, f64),
    pub grid: StripGrid,
    pub half_width: f64,
}

const CAUCHY_NODES: usize = 64;

fn cauchy_derivative(s: &SymbolFunction, z: Complex64, order: usize, r: f64) -> (Complex64, f64) {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut peak: f64 = 0.0;
    for j in 0..CAUCHY_NODES {
        let w = Complex64::from_polar(1.0, TAU * j as f64 / CAUCHY_NODES as f64);
        let v = s.eval(z + w * r);
        peak = peak.max(v.norm());
        acc += v * w.powi(-(order as i32));
    }
    let fact: f64 = (1..=order).map(|k| k as f64).product();
    (acc * (fact / (CAUCHY_NODES as f64 * r.powi(order as i32))), peak)
}

/// `d^n s / d lambda^n` at `z` from Cauchy integrals on two radii; a mismatch
/// between them reveals a singularity inside the larger circle.
pub fn symbol_derivative(s: &SymbolFunction, z: Complex64, order: usize, radius: f64) -> Result<Complex64> {
    if order == 0 {
        let v = s.eval(z);
        if !v.is_finite() {
            return Err(LabError::PoleInCircle { re: z.re, im: z.im, discrepancy: f64::INFINITY });
        }
        return Ok(v);
    }
    let (d1, peak) = cauchy_derivative(s, z, order, radius);
    let (d2, _) = cauchy_derivative(s, z, order, 0.5 * radius);
    let fact: f64 = (1..=order).map(|k| k as f64).product();
    let noise = 1e-9 * fact * peak / (0.5 * radius).powi(order as i32);
    let discrepancy = (d1 - d2).norm();
    if !(discrepancy <= 1e-6 * d1.norm().max(d2.norm()) + noise + f64::MIN_POSITIVE) {
        return Err(LabError::PoleInCircle { re: z.re, im: z.im, discrepancy });
    }
    Ok(d2)
}

/// Grid estimate of `sup |lambda|^d |s^{(n)}(lambda)|` over the strip of `td`.
pub fn zbar_seminorm(s: &SymbolFunction, td: &TubeDomain, poly_degree: u32, deriv_order: usize) -> Result<SeminormEstimate> {
    zbar_seminorm_on(s, td, poly_degree, deriv_order, &StripGrid::default())
}

pub fn zbar_seminorm_on(
    s: &SymbolFunction,
    td: &TubeDomain,
    poly_degree: u32,
    deriv_order: usize,
    grid: &StripGrid,
) -> Result<SeminormEstimate> {
    let hw = td.half_width();
    if hw > 0.0 && !s.is_analytic() {
        return Err(LabError::RealAxisOnly(format!("{} has no strip extension", s.tag())));
    }
    let gap = s.pole_offset() - hw;
    let radius = if gap.is_finite() && gap > 0.0 { (0.5 * gap).min(0.1) } else { 0.1 };
    let mut best = 0.0;
    let mut argmax = (0.0, 0.0);
    if s.is_zero() {
        return Ok(SeminormEstimate { value: 0.0, argmax, grid: *grid, half_width: hw });
    }
    for z in grid.points(hw) {
        let d = symbol_derivative(s, z, deriv_order, radius)?;
        let v = z.norm().powi(poly_degree as i32) * d.norm();
        if v > best {
            best = v;
            argmax = (z.re, z.im);
        }
    }
    Ok(SeminormEstimate { value: best, argmax, grid: *grid, half_width: hw })
}

/// `a = xi_hat^{-1} h xi_hat^{-1}`, the canonical symbol attached to `h`.
pub fn cp_hat_wrap(h: &SymbolFunction, xi: &XiHat) -> Result<SymbolFunction> {
    let probe: Vec<Complex64> = StripGrid { re_max: 16.0, n_re: 65, n_im: 1 }.points(0.0);
    let deviation = weyl_invariance_check(h, &probe);
    let scale = probe.iter().map(|&z| h.eval(z).norm()).fold(0.0, f64::max);
    if !h.weyl_invariant() || deviation > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(LabError::NotWeylInvariant { deviation });
    }
    Ok(SymbolFunction::Wrapped { h: Box::new(h.clone()), k: xi.k, c0: xi.c0 })
}

/// `h = xi_hat a xi_hat`.
pub fn cp_hat_unwrap(a: &SymbolFunction, xi: &XiHat) -> SymbolFunction {
    SymbolFunction::Product(vec![a.clone(), xi.symbol(), xi.symbol()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tube_membership() {
        let t0 = TubeDomain::new(0.0, 1.0).unwrap();
        assert!(t0.contains(SpectralParameter::real(0.5)));
        let t1 = TubeDomain::new(1.0, 1.0).unwrap();
        assert!(t1.contains(SpectralParameter::new(2.0, 0.5)));
        assert!(!t1.contains(SpectralParameter::new(0.0, 1.5)));
        assert!(t1.contains(SpectralParameter::new(0.0, 1.0)));
        assert!(!t1.interior_contains(SpectralParameter::new(0.0, 1.0)));
        assert_eq!(c_rho(&RootDatum::sl2()), (-1.0, 1.0));
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let specs = [
            "zero",
            "gaussian(0.3)",
            "product(gaussian(1.0),poly(4.0,0.0,1.0))",
            "wrapped(sum(gaussian(2.0),scaled(-0.1,xihat(2,3.5))),1,2.0)",
            "sampled(0.5,1.0,0.0,0.9,0.1,0.7,0.0,0.2,-0.25)",
        ];
        for spec in specs {
            let s: SymbolFunction = spec.parse().unwrap();
            let back: SymbolFunction = s.to_string().parse().unwrap();
            assert_eq!(s, back);
            for x in [0.0, 0.37, 1.9] {
                assert_eq!(s.eval_real(x).re.to_bits(), back.eval_real(x).re.to_bits());
            }
        }
        let odd = SymbolFunction::Gaussian { beta: 0.1 + 0.2 };
        let back: SymbolFunction = odd.to_string().parse().unwrap();
        assert_eq!(odd, back);
    }

    #[test]
    fn malformed_specs_fail() {
        for bad in ["", "gauss(1)", "gaussian(1", "gaussian(1,2)", "xihat(1.5,2)", "product(1)", "poly()", "gaussian(inf)"] {
            assert!(matches!(bad.parse::<SymbolFunction>(), Err(LabError::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn seminorm_of_gaussian_on_real_line() {
        let td = TubeDomain::new(0.0, 1.0).unwrap();
        let e = zbar_seminorm(&SymbolFunction::gaussian(1.0), &td, 0, 0).unwrap();
        assert_eq!(e.value, 1.0);
        let z = zbar_seminorm(&SymbolFunction::Zero, &td, 3, 2).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn cauchy_derivatives_of_gaussian() {
        let g = SymbolFunction::gaussian(1.0);
        let z = Complex64::new(0.7, 0.4);
        // d^3/dz^3 e^{-z^2} = (12 z - 8 z^3) e^{-z^2}
        let exact = (z * 12.0 - z * z * z * 8.0) * (-z * z).exp();
        let d = symbol_derivative(&g, z, 3, 0.1).unwrap();
        assert!((d - exact).norm() < 1e-10 * exact.norm());
    }

    #[test]
    fn pole_inside_circle_is_reported() {
        let s = SymbolFunction::XiHat { k: 1, c0: 1.0 };
        let z = Complex64::new(0.0, 0.95);
        assert!(matches!(symbol_derivative(&s, z, 1, 0.1), Err(LabError::PoleInCircle { .. })));
        assert!(symbol_derivative(&s, Complex64::new(0.0, 0.5), 1, 0.1).is_ok());
    }

    #[test]
    fn wrap_unwrap_and_cancellation() {
        let xi = XiHat::default();
        let h = SymbolFunction::gaussian(1.0);
        let a = cp_hat_wrap(&h, &xi).unwrap();
        let back = cp_hat_unwrap(&a, &xi);
        let sq = SymbolFunction::product(xi.symbol(), xi.symbol());
        let one = cp_hat_wrap(&sq, &xi).unwrap();
        for x in [0.0, 0.5, 3.0, 7.5] {
            let z = Complex64::new(x, 0.3);
            assert!((back.eval(z) - h.eval(z)).norm() <= 1e-12 * h.eval(z).norm());
            assert!((one.eval(z) - 1.0).norm() < 1e-14);
            let expect = (4.0 + z * z).powi(2) * (-z * z).exp();
            assert!((a.eval(z) - expect).norm() < 1e-13 * expect.norm());
        }
        let odd = SymbolFunction::Poly(vec![0.0, 1.0]);
        assert!(matches!(cp_hat_wrap(&odd, &xi), Err(LabError::NotWeylInvariant { .. })));
    }

    #[test]
    fn reciprocal_is_polynomial_inverse() {
        let xi = XiHat::new(2, 1.5).unwrap();
        for x in [0.0, 1.0, 4.0] {
            let z = Complex64::new(x, 0.2);
            assert!((xi.reciprocal().eval(z) * xi.eval(z) - 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn weyl_check_of_odd_symbol() {
        let grid = StripGrid { re_max: 3.0, n_re: 7, n_im: 3 };
        let pts = grid.points(0.5);
        let dev = weyl_invariance_check(&SymbolFunction::Poly(vec![0.0, 1.0]), &pts);
        let max_abs = pts.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((dev - 2.0 * max_abs).abs() < 1e-14);
        assert_eq!(weyl_invariance_check(&SymbolFunction::gaussian(1.0), &pts), 0.0);
    }
}
