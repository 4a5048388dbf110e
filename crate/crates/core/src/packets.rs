//! Wave-packet synthesis, Plancherel calibration and the checks built on it.
//!
//! A spherical wave-packet is
//! `psi_a(a_t) = (1/2) int_R a(lambda) phi_lambda(a_t) |c(lambda)|^{-2} dlambda`.
//! For even integrands this is `int_0^inf`, evaluated by the trapezoid rule on
//! the uniform grid `lambda_j = j * step`; the integrand is analytic in a strip
//! around the real axis, so the rule converges geometrically.

use crate::error::{LabError, Result};
use crate::quadrature::CompositeRule;
use crate::radial::{uniform_grid, RadialFunction};
use crate::spherical::{
    casimir_radial_apply, fit_c_from_samples, plancherel_density_closed, xi_fixed, FitWindow, PhiTable,
};
use crate::structure::{radial_density, sigma, GroupElement, RootDatum};
use crate::transforms::{
    check_tail, l2_inner_product_on, panel_rule, relative_l2_difference, transform_tail, SymmetricFunction,
};
use crate::tube::{cp_hat_wrap, SymbolFunction, XiHat};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::OnceLock;

/// Where the Plancherel density comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensitySource {
    /// Far-field fit of `phi_lambda`, closed form below `closed_below`.
    Fit,
    Closed,
}

impl fmt::Display for DensitySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fit => "fit",
            Self::Closed => "closed",
        })
    }
}

/// Synthesis route of a canonical wave-packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Direct,
    Factorized,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Direct => "direct",
            Self::Factorized => "factorized",
        })
    }
}

impl std::str::FromStr for Route {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Self::Direct),
            "factorized" => Ok(Self::Factorized),
            other => Err(LabError::Parse(format!("unknown route '{other}'"))),
        }
    }
}

/// Grids and tolerances of the synthesis side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    pub t_max: f64,
    pub n_t: usize,
    pub lambda_max: f64,
    pub n_lambda: usize,
    pub density: DensitySource,
    /// Below this `lambda` the fitted density is replaced by the closed form.
    pub closed_below: f64,
    pub fit_window: FitWindow,
    /// Relative symbol tail beyond `lambda_max` accepted by synthesis.
    pub symbol_tail: f64,
    /// Total derivative order available to finite-difference operators.
    pub max_derivative_order: usize,
    /// Frozen Plancherel constant; calibrated on first use when absent.
    pub kappa: Option<f64>,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            t_max: 16.0,
            n_t: 2048,
            lambda_max: 16.0,
            n_lambda: 1024,
            density: DensitySource::Fit,
            closed_below: 0.5,
            fit_window: FitWindow::default(),
            symbol_tail: 1e-8,
            max_derivative_order: 8,
            kappa: None,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(LabError::Config(what.to_string()));
        if !(self.t_max >= 4.0 && self.t_max.is_finite()) {
            return bad("t_max must be at least 4");
        }
        if self.n_t < 16 || self.n_lambda < 16 {
            return bad("grids need at least 16 nodes");
        }
        if !(self.lambda_max > 0.0 && self.lambda_max.is_finite()) {
            return bad("lambda_max must be positive");
        }
        if !(self.symbol_tail > 0.0) || !(self.closed_below >= 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.fit_window.t2 > self.fit_window.t1 && self.fit_window.t1 > 0.0 && self.fit_window.samples >= 4) {
            return bad("fit window must satisfy 0 < t1 < t2 with at least 4 samples");
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0 && k.is_finite()) {
                return bad("kappa must be positive");
            }
        }
        Ok(())
    }
}

/// Grid and rule metadata attached to every synthesized payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rule: String,
    pub lambda_max: f64,
    pub n_lambda: usize,
    pub t_max: f64,
    pub n_t: usize,
    pub density: DensitySource,
    pub closed_below: f64,
    pub fit_window: FitWindow,
    pub symbol_tail: f64,
}

impl fmt::Display for QuadratureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} lambda=[0,{:?}] n={}; t=[0,{:?}] n={}; density={}",
            self.rule, self.lambda_max, self.n_lambda, self.t_max, self.n_t, self.density
        )?;
        if self.density == DensitySource::Fit {
            write!(
                f,
                " window=[{:?},{:?}] samples={} closed_below={:?}",
                self.fit_window.t1, self.fit_window.t2, self.fit_window.samples, self.closed_below
            )?;
        }
        Ok(())
    }
}

/// A synthesized radial function tagged with how it was made.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavePacket {
    pub payload: RadialFunction,
    pub symbol: String,
    pub route: Route,
    pub quadrature: QuadratureSpec,
    pub kappa: Option<f64>,
}

impl WavePacket {
    /// `(t, value)` table with a `#` header block.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# symbol: {}\n", self.symbol));
        out.push_str(&format!("# route: {}\n", self.route));
        out.push_str(&format!("# quadrature: {}\n", self.quadrature));
        match self.kappa {
            Some(k) => out.push_str(&format!("# kappa: {k:?}\n")),
            None => out.push_str("# kappa: uncalibrated\n"),
        }
        out.push_str(&format!(
            "# tolerances: symbol_tail={:?} transform_tail={:?}\n",
            self.quadrature.symbol_tail,
            crate::transforms::TAIL_TOLERANCE
        ));
        out.push_str("t,re,im\n");
        for (t, v) in self.payload.grid().iter().zip(self.payload.values()) {
            out.push_str(&format!("{t:?},{:?},{:?}\n", v.re, v.im));
        }
        out
    }
}

/// Reads a table written by [`WavePacket::to_csv`]; returns the header
/// entries and the payload.
pub fn read_packet_csv(text: &str) -> Result<(Vec<(String, String)>, RadialFunction)> {
    let mut header = Vec::new();
    let mut grid = Vec::new();
    let mut values = Vec::new();
    let mut seen_columns = false;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                header.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        if !seen_columns {
            if line != "t,re,im" {
                return Err(LabError::Parse(format!("line {}: expected column header 't,re,im'", n + 1)));
            }
            seen_columns = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(LabError::Parse(format!("line {}: expected 3 columns", n + 1)));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| LabError::Parse(format!("line {}: bad number", n + 1)));
        grid.push(num(cols[0])?);
        values.push(Complex64::new(num(cols[1])?, num(cols[2])?));
    }
    Ok((header, RadialFunction::new(grid, values)?))
}

/// The Plancherel constant `kappa` in `psi_{Hf} = kappa f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlancherelCalibration {
    pub kappa: f64,
    pub reference: String,
    /// `||psi_{Hf} - kappa f|| / ||kappa f||` for the reference.
    pub residual: f64,
}

/// Angular dependence of a symmetric symbol term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AngularFactor {
    One,
    Cos(u32),
    Sin(u32),
}

impl AngularFactor {
    pub fn eval(&self, b: f64) -> f64 {
        match *self {
            Self::One => 1.0,
            Self::Cos(n) => (f64::from(n) * b).cos(),
            Self::Sin(n) => (f64::from(n) * b).sin(),
        }
    }
}

/// `a(b; lambda) = sum_i A_i(b) s_i(lambda)` on `K/M x` spectral line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricSymbol {
    pub terms: Vec<(AngularFactor, SymbolFunction)>,
}

impl SymmetricSymbol {
    pub fn radial(s: SymbolFunction) -> Self {
        Self { terms: vec![(AngularFactor::One, s)] }
    }

    pub fn eval(&self, b: f64, lambda: f64) -> Complex64 {
        self.terms.iter().map(|(a, s)| s.eval_real(lambda) * a.eval(b)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricWavePacket {
    pub payload: SymmetricFunction,
    pub quadrature: QuadratureSpec,
}

/// Result of comparing `q(L) psi_a` with `psi_{gamma(q) a}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorCheck {
    pub residual: f64,
    pub lhs: RadialFunction,
    pub rhs: RadialFunction,
}

/// Grid-sup estimate with the range it was taken over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSup {
    pub value: f64,
    pub argmax_t: f64,
    pub t_max: f64,
    pub nodes: usize,
}

struct TransformTable {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    phi: PhiTable,
}

/// Shared state of a run: grids, tables of `phi_lambda`, the density and the
/// Plancherel constant. Tables are built on first use and then read-only.
pub struct Lab {
    config: SynthesisConfig,
    grid: Vec<f64>,
    rd: RootDatum,
    phi_out: OnceLock<PhiTable>,
    transform: OnceLock<TransformTable>,
    density: OnceLock<std::result::Result<Vec<f64>, LabError>>,
    kappa: OnceLock<std::result::Result<PlancherelCalibration, LabError>>,
}

impl Lab {
    pub fn new(config: SynthesisConfig) -> Result<Self> {
        config.validate()?;
        let grid = uniform_grid(config.t_max, config.n_t);
        Ok(Self {
            config,
            grid,
            rd: RootDatum::sl2(),
            phi_out: OnceLock::new(),
            transform: OnceLock::new(),
            density: OnceLock::new(),
            kappa: OnceLock::new(),
        })
    }

    pub fn config(&self) -> &SynthesisConfig {
        &self.config
    }

    /// Output grid of every synthesized payload.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn lambda_step(&self) -> f64 {
        self.config.lambda_max / (self.config.n_lambda - 1) as f64
    }

    pub fn lambda(&self, j: usize) -> f64 {
        j as f64 * self.lambda_step()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        (0..self.config.n_lambda).map(|j| self.lambda(j)).collect()
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        QuadratureSpec {
            rule: "trapezoid".into(),
            lambda_max: self.config.lambda_max,
            n_lambda: self.config.n_lambda,
            t_max: self.config.t_max,
            n_t: self.config.n_t,
            density: self.config.density,
            closed_below: self.config.closed_below,
            fit_window: self.config.fit_window,
            symbol_tail: self.config.symbol_tail,
        }
    }

    fn phi_out(&self) -> &PhiTable {
        self.phi_out
            .get_or_init(|| PhiTable::build(&self.grid, self.lambda_step(), self.config.n_lambda))
    }

    fn transform_table(&self) -> &TransformTable {
        self.transform.get_or_init(|| {
            let rule: CompositeRule = panel_rule(0.0, self.config.t_max);
            let weights = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&t, &w)| w * radial_density(t, &self.rd))
                .collect();
            let phi = PhiTable::build(&rule.nodes, self.lambda_step(), self.config.n_lambda);
            TransformTable { nodes: rule.nodes, weights, phi }
        })
    }

    /// `|c(lambda_j)|^{-2}` on the spectral grid.
    pub fn density(&self) -> Result<&[f64]> {
        self.density
            .get_or_init(|| self.compute_density())
            .as_deref()
            .map_err(Clone::clone)
    }

    fn compute_density(&self) -> Result<Vec<f64>> {
        let closed = |l: f64| plancherel_density_closed(l, &self.rd);
        if self.config.density == DensitySource::Closed {
            return Ok(self.lambdas().into_iter().map(closed).collect());
        }
        let ts = self.config.fit_window.nodes();
        let table = PhiTable::build(&ts, self.lambda_step(), self.config.n_lambda);
        (0..self.config.n_lambda)
            .map(|j| {
                let l = self.lambda(j);
                if l < self.config.closed_below {
                    return Ok(closed(l));
                }
                let phis: Vec<Complex64> = (0..ts.len()).map(|i| Complex64::new(table.get(i, j), 0.0)).collect();
                Ok(fit_c_from_samples(l, self.rd.rho(), &ts, &phis)?.density())
            })
            .collect()
    }

    /// `Xi` on the output grid.
    pub fn xi_on_grid(&self) -> RadialFunction {
        let table = self.phi_out();
        let values = (0..self.grid.len()).map(|i| Complex64::new(table.get(i, 0), 0.0)).collect();
        RadialFunction::new(self.grid.clone(), values).expect("output grid is valid")
    }

    fn trapezoid_weight(&self, j: usize) -> f64 {
        let h = self.lambda_step();
        if j == 0 {
            0.5 * h
        } else {
            h
        }
    }

    /// Relative tail of `int |a| |c|^{-2}` beyond the spectral grid.
    fn check_symbol_tail(&self, a: &SymbolFunction, samples: &[Complex64], density: &[f64]) -> Result<()> {
        let total: f64 = samples
            .iter()
            .zip(density)
            .enumerate()
            .map(|(j, (s, d))| self.trapezoid_weight(j) * s.norm() * d)
            .sum();
        if total == 0.0 {
            return Ok(());
        }
        let lmax = self.config.lambda_max;
        let m = |l: f64| a.eval_real(l).norm() * plancherel_density_closed(l, &self.rd);
        let (tail, exponent) = if a.real_extent().is_finite() {
            // sampled symbols: extrapolate the last unit exponentially
            let (ma, mb) = (m(lmax - 1.0), m(lmax));
            let exponent = (mb / ma).ln() / (lmax / (lmax - 1.0)).ln();
            let tail = if mb == 0.0 {
                0.0
            } else if ma > mb {
                mb / (ma / mb).ln()
            } else {
                f64::INFINITY
            };
            (tail, exponent)
        } else {
            let (m2, m4) = (m(2.0 * lmax), m(4.0 * lmax));
            let exponent = if m2 == 0.0 { f64::NEG_INFINITY } else { (m4 / m2).ln() / 2f64.ln() };
            let near = panel_rule(lmax, 4.0 * lmax).integrate(m);
            let far = if m4 == 0.0 {
                0.0
            } else if exponent < -1.0 {
                m4 * 4.0 * lmax / (-exponent - 1.0)
            } else {
                f64::INFINITY
            };
            (near + far, exponent)
        };
        if !(tail <= self.config.symbol_tail * total) {
            return Err(LabError::NotIntegrable { exponent, tail: tail / total });
        }
        Ok(())
    }

    fn synthesize_samples(&self, samples: &[Complex64]) -> Result<Vec<Complex64>> {
        let density = self.density()?;
        let coeffs: Vec<(usize, Complex64)> = samples
            .iter()
            .zip(density)
            .enumerate()
            .map(|(j, (s, d))| (j, s * (self.trapezoid_weight(j) * d)))
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .collect();
        if coeffs.is_empty() {
            return Ok(vec![Complex64::new(0.0, 0.0); self.grid.len()]);
        }
        let table = self.phi_out();
        Ok((0..self.grid.len())
            .map(|i| {
                let row = table.row(i);
                coeffs.iter().map(|&(j, c)| c * row[j]).sum()
            })
            .collect())
    }

    fn symbol_samples(&self, a: &SymbolFunction) -> Result<Vec<Complex64>> {
        if let SymbolFunction::Sampled { step, values } = a {
            if *step == self.lambda_step() && values.len() == self.config.n_lambda {
                return Ok(values.clone());
            }
        }
        let samples: Vec<Complex64> = self.lambdas().into_iter().map(|l| a.eval_real(l)).collect();
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidArgument(format!("symbol {} is not finite on the spectral grid", a.tag())));
        }
        Ok(samples)
    }

    /// `psi_a` on the output grid.
    pub fn synthesize(&self, a: &SymbolFunction) -> Result<RadialFunction> {
        let samples = self.symbol_samples(a)?;
        self.check_symbol_tail(a, &samples, self.density()?)?;
        RadialFunction::new(self.grid.clone(), self.synthesize_samples(&samples)?)
    }

    fn packet(&self, payload: RadialFunction, symbol: &SymbolFunction, route: Route) -> WavePacket {
        WavePacket {
            payload,
            symbol: symbol.to_string(),
            route,
            quadrature: self.quadrature_spec(),
            kappa: self.kappa.get().and_then(|k| k.as_ref().ok()).map(|c| c.kappa).or(self.config.kappa),
        }
    }

    pub fn spherical_wave_packet(&self, a: &SymbolFunction) -> Result<WavePacket> {
        Ok(self.packet(self.synthesize(a)?, a, Route::Direct))
    }

    /// `psi_a` for `a = xi_hat^{-1} h xi_hat^{-1}`, synthesized from `a`.
    pub fn canonical_wave_packet_direct(&self, h: &SymbolFunction, xi: &XiHat) -> Result<WavePacket> {
        let a = cp_hat_wrap(h, xi)?;
        Ok(self.packet(self.synthesize(&a)?, &a, Route::Direct))
    }

    /// `P^k psi_h P^k` with `P = c0^2 - rho^2 - L`, whose spectral image is
    /// `(c0^2 + lambda^2)^k = xi_hat^{-1}`.
    pub fn canonical_wave_packet_factorized(&self, h: &SymbolFunction, xi: &XiHat) -> Result<WavePacket> {
        let order = 4 * xi.k as usize;
        if order > self.config.max_derivative_order {
            return Err(LabError::DerivativeBudget { requested: order, allowed: self.config.max_derivative_order });
        }
        let a = cp_hat_wrap(h, xi)?;
        self.check_symbol_tail(&a, &self.symbol_samples(&a)?, self.density()?)?;
        let mut f = self.synthesize(h)?;
        let shift = Complex64::new(xi.c0 * xi.c0 - self.rd.rho().powi(2), 0.0);
        for _ in 0..2 * xi.k {
            f = self.shifted_casimir(&f, shift)?;
        }
        Ok(self.packet(f, &a, Route::Factorized))
    }

    /// `shift f - L f` on the nodes where `L f` is defined.
    fn shifted_casimir(&self, f: &RadialFunction, shift: Complex64) -> Result<RadialFunction> {
        let lf = casimir_radial_apply(f, &self.rd)?;
        let base = f.restrict(lf.t_min(), lf.t_max())?;
        base.linear_combination(shift, &lf, Complex64::new(-1.0, 0.0))
    }

    /// Compares `q(L) psi_a` with `psi_{gamma(q) a}` on `t in [0.2, 4]`, where
    /// `q(L) = sum_m q_m L^m` and `gamma(q)(lambda) = q(-(lambda^2 + rho^2))`.
    pub fn operator_transform_check(&self, a: &SymbolFunction, q: &[f64]) -> Result<OperatorCheck> {
        let degree = q.len().saturating_sub(1);
        if 2 * degree > self.config.max_derivative_order {
            return Err(LabError::DerivativeBudget {
                requested: 2 * degree,
                allowed: self.config.max_derivative_order,
            });
        }
        let psi = self.synthesize(a)?;
        let mut powers = vec![psi];
        for m in 1..=degree {
            let next = casimir_radial_apply(&powers[m - 1], &self.rd)?;
            powers.push(next);
        }
        let last = powers.last().expect("at least one power");
        let (lo, hi) = (last.t_min(), last.t_max());
        let mut lhs = RadialFunction::zero(last.grid().to_vec())?;
        for (m, &c) in q.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let term = powers[m].restrict(lo, hi)?;
            lhs = lhs.linear_combination(Complex64::new(1.0, 0.0), &term, Complex64::new(c, 0.0))?;
        }
        let gamma = SymbolFunction::Poly(gamma_polynomial(q, self.rd.rho()));
        let rhs = self.synthesize(&SymbolFunction::product(a.clone(), gamma))?;
        let residual = relative_l2_difference(&lhs, &rhs, 0.2, 4.0)?;
        Ok(OperatorCheck { residual, lhs, rhs })
    }

    /// `Hf(lambda_j)` on the spectral grid.
    pub fn transform_on_grid(&self, f: &RadialFunction) -> Result<Vec<Complex64>> {
        if f.t_min() != 0.0 || f.t_max() > self.config.t_max * (1.0 + 1e-12) {
            return Err(LabError::InvalidGrid(format!(
                "transform needs a grid inside [0, {}] starting at 0",
                self.config.t_max
            )));
        }
        check_tail(transform_tail(f, &self.rd))?;
        let table = self.transform_table();
        let mut out = vec![Complex64::new(0.0, 0.0); self.config.n_lambda];
        for (q, (&t, &w)) in table.nodes.iter().zip(&table.weights).enumerate() {
            let fv = f.eval(t) * w;
            if fv == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(table.phi.row(q)) {
                *o += fv * p;
            }
        }
        Ok(out)
    }

    /// `Hf` as a sampled symbol.
    pub fn transform_symbol(&self, f: &RadialFunction) -> Result<SymbolFunction> {
        SymbolFunction::sampled_from(self.lambda_step(), self.transform_on_grid(f)?)
    }

    /// Fits `kappa` from `psi_{Hf} = kappa f` in `L^2(J)`.
    pub fn calibrate_with(&self, f: &RadialFunction, label: &str) -> Result<PlancherelCalibration> {
        let psi = self.synthesize(&self.transform_symbol(f)?)?;
        let t_hi = f.t_max().min(self.config.t_max);
        let num = l2_inner_product_on(&psi, f, 0.0, t_hi)?.re;
        let den = l2_inner_product_on(f, f, 0.0, t_hi)?.re;
        let kappa = num / den;
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(LabError::InvalidArgument(format!("calibration produced kappa = {kappa}")));
        }
        let residual = relative_l2_difference(&psi, &f.scaled(Complex64::new(kappa, 0.0)), 0.0, t_hi)?;
        Ok(PlancherelCalibration { kappa, reference: label.to_string(), residual })
    }

    /// Reference function for calibration: `exp(-t^2)` on the output grid.
    pub fn calibration_reference(&self) -> RadialFunction {
        RadialFunction::from_real_fn(self.grid.clone(), |t| (-t * t).exp()).expect("output grid is valid")
    }

    /// The Plancherel calibration: frozen from the configuration, or fitted
    /// once against the reference Gaussian.
    pub fn calibration(&self) -> Result<PlancherelCalibration> {
        self.kappa
            .get_or_init(|| match self.config.kappa {
                Some(k) => Ok(PlancherelCalibration { kappa: k, reference: "frozen".into(), residual: 0.0 }),
                None => self.calibrate_with(&self.calibration_reference(), "exp(-t^2)"),
            })
            .clone()
    }

    pub fn kappa(&self) -> Result<f64> {
        Ok(self.calibration()?.kappa)
    }

    /// `P f = kappa^{-1} psi_{Hf}`.
    pub fn projection(&self, f: &RadialFunction) -> Result<RadialFunction> {
        let psi = self.synthesize(&self.transform_symbol(f)?)?;
        Ok(psi.scaled(Complex64::new(1.0 / self.kappa()?, 0.0)))
    }

    /// `f * g = kappa^{-1} psi_{Hf Hg}`, the spectral fast path of the
    /// convolution; compare with [`crate::transforms::group_convolve`].
    pub fn convolve_spectral(&self, f: &RadialFunction, g: &RadialFunction) -> Result<RadialFunction> {
        let hf = self.transform_on_grid(f)?;
        let hg = self.transform_on_grid(g)?;
        let prod = hf.iter().zip(&hg).map(|(a, b)| a * b).collect();
        let psi = self.synthesize(&SymbolFunction::sampled_from(self.lambda_step(), prod)?)?;
        Ok(psi.scaled(Complex64::new(1.0 / self.kappa()?, 0.0)))
    }

    /// Symmetric wave-packet on `n_angles` boundary angles: one `lambda`
    /// integral per angle.
    pub fn symmetric_wave_packet(&self, a: &SymmetricSymbol, n_angles: usize) -> Result<SymmetricWavePacket> {
        let density = self.density()?;
        for (_, s) in &a.terms {
            self.check_symbol_tail(s, &self.symbol_samples(s)?, density)?;
        }
        let lambdas = self.lambdas();
        let mut values = Vec::with_capacity(n_angles * self.grid.len());
        for j in 0..n_angles {
            let b = std::f64::consts::TAU * j as f64 / n_angles as f64;
            let samples: Vec<Complex64> = lambdas.iter().map(|&l| a.eval(b, l)).collect();
            values.extend(self.synthesize_samples(&samples)?);
        }
        Ok(SymmetricWavePacket {
            payload: SymmetricFunction::new(n_angles, self.grid.clone(), values)?,
            quadrature: self.quadrature_spec(),
        })
    }
}

/// Coefficients in `lambda` of `q(-(lambda^2 + rho^2))`.
pub fn gamma_polynomial(q: &[f64], rho: f64) -> Vec<f64> {
    let mut out = vec![0.0; 2 * q.len().max(1) - 1];
    // base = -(rho^2) - lambda^2
    let mut power = vec![1.0];
    for &c in q {
        for (i, &p) in power.iter().enumerate() {
            out[i] += c * p;
        }
        let mut next = vec![0.0; power.len() + 2];
        for (i, &p) in power.iter().enumerate() {
            next[i] -= rho * rho * p;
            next[i + 2] -= p;
        }
        power = next;
    }
    out
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 2.0) {
        return Err(LabError::InvalidArgument(format!("p = {p} outside (0, 2]")));
    }
    Ok(())
}

/// Grid-sup of `|f(t)| Xi(t)^{-2/p} (1 + t)^m` over nodes with `t <= t_max`.
pub fn schwartz_seminorm_mu(f: &RadialFunction, p: f64, m: u32, t_max: f64) -> Result<GridSup> {
    check_p(p)?;
    if f.t_max() < t_max * (1.0 - 1e-12) {
        return Err(LabError::InvalidGrid(format!("grid ends at {} < {t_max}", f.t_max())));
    }
    let mut best = GridSup { value: 0.0, argmax_t: 0.0, t_max, nodes: 0 };
    for (&t, v) in f.grid().iter().zip(f.values()) {
        if t > t_max {
            break;
        }
        best.nodes += 1;
        let val = v.norm() * xi_fixed(t).powf(-2.0 / p) * (1.0 + t).powi(m as i32);
        if val > best.value {
            best.value = val;
            best.argmax_t = t;
        }
    }
    Ok(best)
}

/// Least `c_r` on the grid with `|f(y)| <= c_r Xi(y^{-1} x) (1 + sigma(y^{-1} x))^{-r}`,
/// `y = a_t`, `t <= t_max`.
pub fn strong_inequality_check(f: &RadialFunction, x: &GroupElement, r: f64, t_max: f64) -> Result<GridSup> {
    if f.t_max() < t_max * (1.0 - 1e-12) {
        return Err(LabError::InvalidGrid(format!("grid ends at {} < {t_max}", f.t_max())));
    }
    let mut best = GridSup { value: 0.0, argmax_t: 0.0, t_max, nodes: 0 };
    for (&t, v) in f.grid().iter().zip(f.values()) {
        if t > t_max {
            break;
        }
        best.nodes += 1;
        let s = sigma(&GroupElement::diagonal(-t).mul(x));
        let val = v.norm() / xi_fixed(s) * (1.0 + s).powf(r);
        if val > best.value {
            best.value = val;
            best.argmax_t = t;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_polynomial_of_casimir_powers() {
        // gamma(Omega) = -(lambda^2 + 1)
        assert_eq!(gamma_polynomial(&[0.0, 1.0], 1.0), vec![-1.0, 0.0, -1.0]);
        // gamma(Omega^2) = (lambda^2 + 1)^2
        assert_eq!(gamma_polynomial(&[0.0, 0.0, 1.0], 1.0), vec![1.0, 0.0, 2.0, 0.0, 1.0]);
        assert_eq!(gamma_polynomial(&[3.0], 1.0), vec![3.0]);
    }

    #[test]
    fn route_and_density_text() {
        assert_eq!("factorized".parse::<Route>().unwrap(), Route::Factorized);
        assert!("sideways".parse::<Route>().is_err());
        assert_eq!(DensitySource::Closed.to_string(), "closed");
    }

    #[test]
    fn config_validation() {
        assert!(SynthesisConfig::default().validate().is_ok());
        let bad = SynthesisConfig { t_max: 2.0, ..Default::default() };
        assert!(matches!(bad.validate(), Err(LabError::Config(_))));
        let bad = SynthesisConfig { kappa: Some(-1.0), ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn seminorm_of_xi_squared() {
        let grid = crate::radial::uniform_grid(12.0, 97);
        let f = RadialFunction::from_real_fn(grid, |t| xi_fixed(t).powi(2)).unwrap();
        let mu = schwartz_seminorm_mu(&f, 2.0, 0, 10.0).unwrap();
        assert!((mu.value - 1.0).abs() < 1e-14 && mu.argmax_t == 0.0);
        let xi = RadialFunction::from_real_fn(crate::radial::uniform_grid(12.0, 97), xi_fixed).unwrap();
        let c = strong_inequality_check(&xi, &GroupElement::identity(), 0.0, 10.0).unwrap();
        assert!((c.value - 1.0).abs() < 1e-12);
    }
}
