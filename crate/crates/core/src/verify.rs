//! The verification suite: one record per acceptance criterion plus records
//! for the module invariants.

use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::packets::{
    schwartz_seminorm_mu, strong_inequality_check, AngularFactor, Lab, SymmetricSymbol,
};
use crate::radial::{uniform_grid, RadialFunction};
use crate::spherical::{
    c_function_closed_form, c_function_estimate, casimir_radial_apply, functional_equation_residual,
    spherical_phi, spherical_phi_fixed, xi, SpectralParameter,
};
use crate::structure::{
    iwasawa_decompose, iwasawa_projection, polar_decompose, sigma, GroupElement, RootDatum,
};
use crate::transforms::{
    group_convolve_on, l2_inner_product_on, relative_l2_difference, spherical_transform, symmetric_transform,
    AnProfile, SymmetricFunction,
};
use crate::tube::{c_rho, cp_hat_unwrap, cp_hat_wrap, tube_contains, zbar_seminorm_on, SymbolFunction, TubeDomain, XiHat};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Structure,
    Spherical,
    Transforms,
    Tube,
    Packets,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["structure", "spherical", "transforms", "tube", "packets", "all"];

    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = *self as usize;
        f.write_str(Self::NAMES[i])
    }
}

impl std::str::FromStr for Suite {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "structure" => Self::Structure,
            "spherical" => Self::Spherical,
            "transforms" => Self::Transforms,
            "tube" => Self::Tube,
            "packets" => Self::Packets,
            "all" => Self::All,
            other => {
                return Err(LabError::InvalidArgument(format!(
                    "unknown suite '{other}' (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }
}

/// One measured quantity; passes when `value <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub label: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Measurement {
    pub fn new(label: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { label: label.into(), value, threshold, pass: value <= threshold }
    }

    fn ratio(&self) -> f64 {
        if self.value.is_nan() {
            f64::INFINITY
        } else if self.threshold > 0.0 {
            self.value / self.threshold
        } else if self.value <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// A named check. With several measurements, `value` is the worst
/// `measured / threshold` ratio and `threshold` is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub name: String,
    pub suite: Suite,
    pub criterion: Option<u32>,
    pub anchor: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub measurements: Vec<Measurement>,
}

impl ReportRecord {
    fn new(name: &str, suite: Suite, criterion: Option<u32>, anchor: &str, measurements: Vec<Measurement>) -> Self {
        let pass = !measurements.is_empty() && measurements.iter().all(|m| m.pass);
        let (value, threshold) = match measurements.as_slice() {
            [one] => (one.value, one.threshold),
            many => (many.iter().map(Measurement::ratio).fold(0.0, f64::max), 1.0),
        };
        Self {
            name: name.to_string(),
            suite,
            criterion,
            anchor: anchor.to_string(),
            value,
            threshold,
            pass,
            measurements,
        }
    }

    fn failed(name: &str, suite: Suite, criterion: Option<u32>, anchor: &str, err: &LabError) -> Self {
        let mut r = Self::new(name, suite, criterion, anchor, vec![]);
        r.value = f64::NAN;
        r.measurements.push(Measurement {
            label: format!("error: {err}"),
            value: f64::NAN,
            threshold: 0.0,
            pass: false,
        });
        r
    }
}

/// Structured report. Wall-clock times are kept apart in [`Timing`] so that
/// identical runs give identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: Suite,
    pub seed: u64,
    pub pass: bool,
    pub records: Vec<ReportRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub name: String,
    pub seconds: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn record(&self, name: &str) -> Option<&ReportRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn criterion(&self, n: u32) -> Option<&ReportRecord> {
        self.records.iter().find(|r| r.criterion == Some(n))
    }

    /// Human-readable summary, one line per record.
    pub fn to_text(&self, timings: &[Timing]) -> String {
        let mut out = format!("suite {} seed {}\n", self.suite, self.seed);
        for r in &self.records {
            let crit = r.criterion.map(|c| format!("[{c:>2}]")).unwrap_or_else(|| "[  ]".into());
            let secs = timings.iter().find(|t| t.name == r.name).map(|t| t.seconds).unwrap_or(f64::NAN);
            out.push_str(&format!(
                "{} {crit} {:<32} value {:>11.3e} threshold {:>9.1e} ({secs:.2}s)  {}\n",
                if r.pass { "PASS" } else { "FAIL" },
                r.name,
                r.value,
                r.threshold,
                r.anchor
            ));
            if r.measurements.len() > 1 || !r.pass {
                for m in &r.measurements {
                    out.push_str(&format!(
                        "       {} {:<48} {:>11.3e} <= {:.1e}\n",
                        if m.pass { "ok  " } else { "FAIL" },
                        m.label,
                        m.value,
                        m.threshold
                    ));
                }
            }
        }
        out.push_str(if self.pass { "all records pass\n" } else { "some records FAILED\n" });
        out
    }
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    lab: Lab,
    suite: Suite,
    records: Vec<ReportRecord>,
    timings: Vec<Timing>,
}

type Check<'a> = fn(&Runner<'a>) -> Result<Vec<Measurement>>;

impl<'a> Runner<'a> {
    fn run(&mut self, name: &str, suite: Suite, criterion: Option<u32>, anchor: &str, check: Check<'a>) {
        if !self.suite.includes(suite) {
            return;
        }
        let start = Instant::now();
        let rec = match check(self) {
            Ok(ms) => ReportRecord::new(name, suite, criterion, anchor, ms),
            Err(e) => ReportRecord::failed(name, suite, criterion, anchor, &e),
        };
        self.timings.push(Timing { name: name.to_string(), seconds: start.elapsed().as_secs_f64() });
        self.records.push(rec);
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.run.seed);
        rng.set_stream(stream);
        rng
    }

    fn tol(&self) -> &crate::config::Tolerances {
        &self.cfg.tolerances
    }

    fn gaussian(&self, beta: f64) -> Result<RadialFunction> {
        RadialFunction::from_real_fn(self.lab.grid().to_vec(), |t| (-beta * t * t).exp())
    }
}

/// Runs a suite with a fresh [`Lab`].
pub fn run_suite(cfg: &RunConfig, suite: Suite) -> Result<(Report, Vec<Timing>)> {
    cfg.validate()?;
    let (mut report, mut timings) = run_records(cfg, suite)?;
    if suite == Suite::All {
        let start = Instant::now();
        let (again, _) = run_records(cfg, suite)?;
        let first = serde_json::to_string(&report.records).expect("records serialize");
        let second = serde_json::to_string(&again.records).expect("records serialize");
        let differing = report.records.iter().zip(&again.records).filter(|(a, b)| a != b).count()
            + report.records.len().abs_diff(again.records.len());
        let m = vec![
            Measurement::new("records differing between two fresh runs", differing as f64, 0.0),
            Measurement::new("serialized reports differ", f64::from(u8::from(first != second)), 0.0),
        ];
        report.records.push(ReportRecord::new(
            "determinism",
            Suite::All,
            Some(11),
            "identical configuration and seed give identical structured reports",
            m,
        ));
        timings.push(Timing { name: "determinism".into(), seconds: start.elapsed().as_secs_f64() });
        report.pass = report.records.iter().all(|r| r.pass);
    }
    Ok((report, timings))
}

fn run_records(cfg: &RunConfig, suite: Suite) -> Result<(Report, Vec<Timing>)> {
    let mut r = Runner {
        cfg,
        lab: Lab::new(cfg.packets.synthesis.clone())?,
        suite,
        records: Vec::new(),
        timings: Vec::new(),
    };
    use Suite::*;
    r.run("structure.round_trips", Structure, Some(1),
        "Iwasawa and polar factors recompose the matrix; sigma is bi-K-invariant", structure_round_trips);
    r.run("structure.sigma_symmetry", Structure, None, "sigma(g^-1) = sigma(g)", structure_sigma_symmetry);
    r.run("structure.projection_additivity", Structure, None,
        "the Iwasawa projection is additive on A", structure_additivity);
    r.run("spherical.identities", Spherical, Some(2),
        "phi(e) = 1, Weyl invariance and the functional relation of spherical functions", spherical_identities);
    r.run("spherical.casimir", Spherical, Some(3),
        "phi_lambda is an eigenfunction of the Casimir operator with eigenvalue -(lambda^2 + rho^2)",
        spherical_casimir);
    r.run("spherical.c_function", Spherical, Some(4),
        "far-field asymptotics of phi_lambda determine c(lambda), a Gamma-function ratio", spherical_c_function);
    r.run("spherical.gauge_bounds", Spherical, None,
        "|phi_lambda| <= Xi <= 1 for real lambda", spherical_gauge_bounds);
    r.run("transforms.algebra", Transforms, Some(5),
        "the transform turns convolution into multiplication; AN and polar forms differ by a constant",
        transforms_algebra);
    r.run("transforms.evenness", Transforms, None,
        "transforms of radial functions are Weyl-invariant", transforms_evenness);
    r.run("transforms.associativity", Transforms, None,
        "radial convolution is associative", transforms_associativity);
    r.run("transforms.symmetric_reduction", Transforms, None,
        "on radial inputs the symmetric transform is the spherical AN form", transforms_symmetric_reduction);
    r.run("tube.membership", Tube, None,
        "C_rho is the hull of the Weyl orbit of rho; tubes are strips", tube_membership);
    r.run("tube.zbar_refinement", Tube, None,
        "symbol seminorms of a Gaussian on the tube are finite and grid-stable", tube_zbar_refinement);
    r.run("tube.wrap", Tube, None,
        "canonical symbols are xi_hat^-1 h xi_hat^-1 with an explicit inverse", tube_wrap);
    r.run("packets.inversion", Packets, Some(6),
        "the wave-packet of Hf is a fixed multiple of f", packets_inversion);
    r.run("packets.factorization", Packets, Some(7),
        "canonical wave-packets factor through the spherical packet of h", packets_factorization);
    r.run("packets.operator_identity", Packets, Some(8),
        "q(L) acting on psi_a is the packet of gamma(q) a", packets_operator_identity);
    r.run("packets.projection", Packets, Some(9),
        "P = W H / kappa is an orthogonal projection, the identity on the spherical slice", packets_projection);
    r.run("packets.seminorms", Packets, Some(10),
        "wave-packets of tube-holomorphic symbols have finite Schwartz seminorms; Xi(t) e^{rho t} >= 1",
        packets_seminorms);
    r.run("packets.linearity", Packets, None, "synthesis is linear in the symbol", packets_linearity);
    r.run("packets.symmetric", Packets, None,
        "symmetric packets reduce to spherical ones and follow the angular factor", packets_symmetric);
    r.run("packets.strong_inequality", Packets, None,
        "wave-packets satisfy the strong inequality around a shifted point", packets_strong_inequality);
    let pass = r.records.iter().all(|x| x.pass);
    Ok((Report { suite, seed: cfg.run.seed, pass, records: r.records }, r.timings))
}

fn structure_round_trips(r: &Runner) -> Result<Vec<Measurement>> {
    let mut rng = r.rng(1);
    let (mut iw, mut po, mut bi): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..r.cfg.structure.samples {
        let g = GroupElement::random(&mut rng, r.cfg.structure.entry_bound);
        iw = iw.max(iwasawa_decompose(&g)?.recompose().max_abs_diff(&g));
        let p = polar_decompose(&g);
        po = po.max(p.recompose().max_abs_diff(&g));
        let k1 = GroupElement::rotation(rng.gen_range(0.0..TAU));
        let k2 = GroupElement::rotation(rng.gen_range(0.0..TAU));
        bi = bi.max((polar_decompose(&k1.mul(&g).mul(&k2)).t - p.t).abs());
    }
    let t = r.tol();
    Ok(vec![
        Measurement::new("Iwasawa recomposition, max entry error", iw, t.recompose),
        Measurement::new("polar recomposition, max entry error", po, t.recompose),
        Measurement::new("sigma(k1 g k2) - sigma(g)", bi, t.bi_invariance),
    ])
}

fn structure_sigma_symmetry(r: &Runner) -> Result<Vec<Measurement>> {
    let mut rng = r.rng(2);
    let worst = (0..r.cfg.structure.samples)
        .map(|_| {
            let g = GroupElement::random(&mut rng, r.cfg.structure.entry_bound);
            (sigma(&g.inverse()) - sigma(&g)).abs()
        })
        .fold(0.0, f64::max);
    Ok(vec![Measurement::new("sigma(g^-1) - sigma(g)", worst, r.tol().bi_invariance)])
}

fn structure_additivity(r: &Runner) -> Result<Vec<Measurement>> {
    let mut rng = r.rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let s = rng.gen_range(-5.0..5.0);
        let t = rng.gen_range(-5.0..5.0);
        let u = iwasawa_projection(&GroupElement::diagonal(s).mul(&GroupElement::diagonal(t)))?;
        worst = worst.max((u - (s + t)).abs() / (s + t).abs().max(1.0));
    }
    Ok(vec![Measurement::new("relative error in ulps", worst / f64::EPSILON, 4.0)])
}

fn spherical_identities(r: &Runner) -> Result<Vec<Measurement>> {
    let s = &r.cfg.spherical;
    let mut at_e: f64 = 0.0;
    let mut weyl: f64 = 0.0;
    for &l in &s.weyl_lambdas {
        at_e = at_e.max((spherical_phi(SpectralParameter::real(l), 0.0)? - 1.0).norm());
        for &t in &[0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let a = spherical_phi(SpectralParameter::real(l), t)?;
            let b = spherical_phi(SpectralParameter::real(-l), t)?;
            weyl = weyl.max((a - b).norm());
        }
    }
    let mut rng = r.rng(4);
    let mut fe: f64 = 0.0;
    let draw = |rng: &mut ChaCha8Rng| {
        GroupElement::rotation(rng.gen_range(0.0..TAU))
            .mul(&GroupElement::diagonal(rng.gen_range(0.0..=s.fe_sigma_max)))
            .mul(&GroupElement::rotation(rng.gen_range(0.0..TAU)))
    };
    for i in 0..s.fe_cases {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let l = s.fe_lambdas[i % s.fe_lambdas.len()];
        fe = fe.max(functional_equation_residual(&x, &y, SpectralParameter::real(l))?);
    }
    let t = r.tol();
    Ok(vec![
        Measurement::new("|phi_lambda(e) - 1|", at_e, 0.0),
        Measurement::new("|phi_lambda - phi_-lambda|", weyl, t.weyl_phi),
        Measurement::new(format!("functional relation residual, {} cases", s.fe_cases), fe, t.functional_equation),
    ])
}

fn spherical_casimir(r: &Runner) -> Result<Vec<Measurement>> {
    let s = &r.cfg.spherical;
    let rd = RootDatum::sl2();
    let n = ((s.casimir_t_max / s.casimir_step).ceil() as usize) + 4;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 * s.casimir_step).collect();
    let mut out = Vec::new();
    for &l in &s.casimir_lambdas {
        let f = RadialFunction::from_fn(grid.clone(), |t| spherical_phi_fixed(SpectralParameter::real(l), t))?;
        let lf = casimir_radial_apply(&f, &rd)?.restrict(s.casimir_t_min, s.casimir_t_max)?;
        let base = f.restrict(lf.t_min(), lf.t_max())?;
        let ev = Complex64::new(l * l + rd.rho().powi(2), 0.0);
        let res = lf.linear_combination(Complex64::new(1.0, 0.0), &base, ev)?;
        out.push(Measurement::new(format!("lambda = {l}: |L phi + (lambda^2 + rho^2) phi| / |phi|"),
            res.max_abs() / base.max_abs(), r.tol().casimir));
    }
    Ok(out)
}

fn spherical_c_function(r: &Runner) -> Result<Vec<Measurement>> {
    let s = &r.cfg.spherical;
    let rd = RootDatum::sl2();
    let (mut err, mut shift, mut resid): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..s.fit_lambda_count {
        let l = s.fit_lambda_min + (s.fit_lambda_max - s.fit_lambda_min) * i as f64 / (s.fit_lambda_count - 1) as f64;
        let lam = SpectralParameter::real(l);
        let exact = c_function_closed_form(lam, &rd);
        let a = c_function_estimate(lam, &s.fit_window)?;
        let b = c_function_estimate(lam, &s.shifted_window)?;
        err = err.max((a.c_plus - exact).norm() / exact.norm());
        shift = shift.max((a.c_plus - b.c_plus).norm() / exact.norm());
        resid = resid.max(a.residual);
    }
    let t = r.tol();
    Ok(vec![
        Measurement::new("fitted vs closed-form c, relative", err, t.c_function),
        Measurement::new("window shift, relative change of c", shift, t.fit_window_shift),
        Measurement::new("far-field fit residual", resid, 1e-4),
    ])
}

fn spherical_gauge_bounds(r: &Runner) -> Result<Vec<Measurement>> {
    let mut worst: f64 = 0.0;
    let mut im: f64 = 0.0;
    for k in 0..=40 {
        let t = 0.25 * f64::from(k);
        let x = xi(t)?;
        worst = worst.max(x - 1.0);
        for &l in &r.cfg.spherical.casimir_lambdas {
            let p = spherical_phi(SpectralParameter::real(l), t)?;
            worst = worst.max(p.norm() - x);
            im = im.max(p.im.abs());
        }
    }
    Ok(vec![
        Measurement::new("max(|phi| - Xi, Xi - 1)", worst, 1e-10),
        Measurement::new("|Im phi| for real lambda", im, 1e-10),
    ])
}

fn transform_lambdas(r: &Runner) -> Vec<f64> {
    let t = &r.cfg.transforms;
    (0..t.check_lambda_count).map(|i| t.check_lambda_max * i as f64 / (t.check_lambda_count - 1) as f64).collect()
}

fn transform_pair(r: &Runner) -> Result<(RadialFunction, RadialFunction)> {
    let (a, b) = r.cfg.transforms.pair;
    Ok((r.gaussian(a)?, r.gaussian(b)?))
}

fn convolution_grid(r: &Runner) -> Vec<f64> {
    uniform_grid(r.cfg.transforms.convolution_t_max, r.cfg.transforms.convolution_points)
}

fn transforms_algebra(r: &Runner) -> Result<Vec<Measurement>> {
    let (f, g) = transform_pair(r)?;
    let fg = group_convolve_on(&f, &g, convolution_grid(r))?;
    let gf = group_convolve_on(&g, &f, convolution_grid(r))?;
    let comm = fg.values().iter().zip(gf.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / fg.max_abs();
    let lambdas = transform_lambdas(r);
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for &l in &lambdas {
        let lam = SpectralParameter::real(l);
        lhs.push(spherical_transform(&fg, lam)?.value);
        rhs.push(spherical_transform(&f, lam)?.value * spherical_transform(&g, lam)?.value);
    }
    let scale = rhs.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let prod = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
    let profile = AnProfile::new(&f)?;
    let ratios: Vec<f64> = lambdas
        .iter()
        .map(|&l| {
            let lam = SpectralParameter::real(l);
            Ok((profile.eval(lam) / spherical_transform(&f, lam)?.value).re)
        })
        .collect::<Result<_>>()?;
    let reference = r.cfg.transforms.an_ratio.unwrap_or(ratios[0]);
    let spread = ratios.iter().map(|q| (q / reference - 1.0).abs()).fold(0.0, f64::max);
    let t = r.tol();
    Ok(vec![
        Measurement::new("max |H(f*g) - Hf Hg| / max |Hf Hg|", prod, t.convolution_product),
        Measurement::new("max |f*g - g*f| / max |f*g|", comm, t.commutativity),
        Measurement::new(format!("AN/polar ratio spread (ratio {reference:.10})"), spread, t.an_ratio),
    ])
}

fn transforms_evenness(r: &Runner) -> Result<Vec<Measurement>> {
    let mut rng = r.rng(5);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let beta = rng.gen_range(0.5..3.0);
        let gamma = rng.gen_range(0.0..1.0);
        let f = RadialFunction::from_real_fn(uniform_grid(8.0, 513), |t| (1.0 + gamma * t * t) * (-beta * t * t).exp())?;
        for &l in &[0.5, 1.5, 3.0] {
            let a = spherical_transform(&f, SpectralParameter::real(l))?.value;
            let b = spherical_transform(&f, SpectralParameter::real(-l))?.value;
            worst = worst.max((a - b).norm());
        }
    }
    Ok(vec![Measurement::new("|Hf(lambda) - Hf(-lambda)|", worst, 1e-10)])
}

fn transforms_associativity(r: &Runner) -> Result<Vec<Measurement>> {
    let (f, g) = transform_pair(r)?;
    let h = r.gaussian(1.5)?;
    let fine = convolution_grid(r);
    let coarse = uniform_grid(4.0, 65);
    let fg = group_convolve_on(&f, &g, fine.clone())?;
    let gh = group_convolve_on(&g, &h, fine)?;
    let left = group_convolve_on(&fg, &h, coarse.clone())?;
    let right = group_convolve_on(&f, &gh, coarse)?;
    let diff = left.values().iter().zip(right.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(vec![Measurement::new("max |(f*g)*h - f*(g*h)| / max", diff / left.max_abs(), 1e-5)])
}

fn transforms_symmetric_reduction(_: &Runner) -> Result<Vec<Measurement>> {
    let f = RadialFunction::from_real_fn(uniform_grid(8.0, 257), |t| (-t * t).exp())?;
    let sym = SymmetricFunction::from_radial(8, &f)?;
    let profile = AnProfile::new(&f)?;
    let mut worst: f64 = 0.0;
    for &l in &[0.0, 1.0, 2.5] {
        let lam = SpectralParameter::real(l);
        let an = profile.eval(lam);
        for &b in &[0.0, 1.0, 2.0, 4.0] {
            worst = worst.max((symmetric_transform(&sym, b, lam)? - an).norm() / an.norm());
        }
    }
    Ok(vec![Measurement::new("|H_sym(b) - H_AN| / |H_AN|", worst, 1e-8)])
}

fn tube_membership(r: &Runner) -> Result<Vec<Measurement>> {
    let rd = RootDatum::sl2();
    let (lo, hi) = c_rho(&rd);
    let exact = f64::from(u8::from(lo != -rd.rho() || hi != rd.rho()));
    let td = TubeDomain::new(r.cfg.tube.epsilon, rd.rho())?;
    let small = TubeDomain::new(0.5 * r.cfg.tube.epsilon, rd.rho())?;
    let hw = td.half_width();
    let cases = [
        (SpectralParameter::new(3.0, hw), true, false),
        (SpectralParameter::new(-1.0, 0.25 * hw), true, true),
        (SpectralParameter::new(0.0, 1.5 * hw + 0.1), false, false),
    ];
    let mut wrong = 0;
    for (z, closed, inner) in cases {
        wrong += usize::from(tube_contains(&td, z) != closed);
        wrong += usize::from(td.interior_contains(z) != inner);
        wrong += usize::from(inner && !tube_contains(&small, z) && hw > 0.0 && z.value().im.abs() <= small.half_width());
    }
    Ok(vec![
        Measurement::new("C_rho endpoints differ from -rho, rho", exact, 0.0),
        Measurement::new("misclassified strip points", wrong as f64, 0.0),
    ])
}

fn tube_zbar_refinement(r: &Runner) -> Result<Vec<Measurement>> {
    let t = &r.cfg.tube;
    let td = TubeDomain::new(t.epsilon, RootDatum::sl2().rho())?;
    let s = SymbolFunction::gaussian(t.gaussian_beta);
    let grid = t.strip;
    let fine = grid.refined();
    let (mut change, mut drop): (f64, f64) = (0.0, 0.0);
    for degree in [0, t.max_degree / 2, t.max_degree] {
        for order in 0..=t.max_order {
            let a = zbar_seminorm_on(&s, &td, degree, order, &grid)?;
            let b = zbar_seminorm_on(&s, &td, degree, order, &fine)?;
            if !(a.value.is_finite() && b.value.is_finite()) {
                return Err(LabError::InvalidArgument("seminorm estimate is not finite".into()));
            }
            change = change.max((b.value - a.value).abs() / a.value);
            drop = drop.max(a.value - b.value);
        }
    }
    Ok(vec![
        Measurement::new("relative change under grid doubling", change, r.tol().zbar_refinement),
        Measurement::new("decrease under refinement", drop, 0.0),
    ])
}

fn tube_wrap(r: &Runner) -> Result<Vec<Measurement>> {
    let xi = r.cfg.tube.xi()?;
    let h1 = SymbolFunction::gaussian(r.cfg.packets.h_beta);
    let h2 = SymbolFunction::gaussian(2.0 * r.cfg.packets.h_beta);
    let a1 = cp_hat_wrap(&h1, &xi)?;
    let a2 = cp_hat_wrap(&h2, &xi)?;
    let back = cp_hat_unwrap(&a1, &xi);
    let x2 = SymbolFunction::Product(vec![xi.reciprocal(), xi.reciprocal()]);
    let joint = cp_hat_wrap(&SymbolFunction::Product(vec![h1.clone(), h2, x2]), &xi)?;
    let hw = 0.9 * xi.c0.min(1.0);
    let mut round: f64 = 0.0;
    let mut closure: f64 = 0.0;
    for k in -32..=32 {
        for &im in &[0.0, 0.5 * hw, hw] {
            let z = Complex64::new(0.5 * f64::from(k), im);
            round = round.max((back.eval(z) - h1.eval(z)).norm() / h1.eval(z).norm().max(1e-300));
            let p = a1.eval(z) * a2.eval(z);
            closure = closure.max((joint.eval(z) - p).norm() / p.norm().max(1e-300));
        }
    }
    let unit = cp_hat_wrap(&SymbolFunction::Product(vec![xi.symbol(), xi.symbol()]), &xi)?;
    let cancel = (0..=32).map(|k| (unit.eval_real(0.5 * f64::from(k)) - 1.0).norm()).fold(0.0, f64::max);
    let t = r.tol();
    Ok(vec![
        Measurement::new("unwrap(wrap(h)) - h, relative", round, t.wrap_round_trip),
        Measurement::new("wrap(h1 h2 xi^-2) - wrap(h1) wrap(h2), relative", closure, t.wrap_round_trip),
        Measurement::new("wrap(xi^2) - 1", cancel, t.wrap_round_trip),
    ])
}

fn packets_inversion(r: &Runner) -> Result<Vec<Measurement>> {
    let cal = r.lab.calibration()?;
    let t_max = r.lab.config().t_max;
    let mut out = vec![Measurement::new(
        format!("calibration residual (kappa {:.10})", cal.kappa),
        cal.residual,
        r.tol().inversion,
    )];
    for &beta in &r.cfg.packets.held_out {
        let f = r.gaussian(beta)?;
        let psi = r.lab.synthesize(&r.lab.transform_symbol(&f)?)?;
        let err = relative_l2_difference(&psi, &f.scaled(Complex64::new(cal.kappa, 0.0)), 0.0, t_max)?;
        out.push(Measurement::new(format!("exp(-{beta} t^2): |psi_Hf - kappa f| / |kappa f|"), err, r.tol().inversion));
    }
    Ok(out)
}

fn packets_factorization(r: &Runner) -> Result<Vec<Measurement>> {
    let xi = r.cfg.tube.xi()?;
    let h = SymbolFunction::gaussian(r.cfg.packets.h_beta);
    let direct = r.lab.canonical_wave_packet_direct(&h, &xi)?;
    let factored = r.lab.canonical_wave_packet_factorized(&h, &xi)?;
    let dual = relative_l2_difference(&direct.payload, &factored.payload, 0.2, 4.0)?;
    let flat = XiHat::new(0, xi.c0)?;
    let d0 = r.lab.canonical_wave_packet_direct(&h, &flat)?;
    let f0 = r.lab.canonical_wave_packet_factorized(&h, &flat)?;
    let degenerate = relative_l2_difference(&d0.payload, &f0.payload, 0.2, 4.0)?;
    let g = SymbolFunction::gaussian(r.cfg.packets.symbol_beta);
    let cancel_h = SymbolFunction::Product(vec![xi.symbol(), xi.symbol(), g.clone()]);
    let cancelled = r.lab.canonical_wave_packet_factorized(&cancel_h, &xi)?;
    let plain = r.lab.synthesize(&g)?;
    let cancel = relative_l2_difference(&cancelled.payload, &plain.restrict(0.0, r.lab.config().t_max)?, 0.2, 4.0)?;
    let t = r.tol();
    Ok(vec![
        Measurement::new(format!("direct vs factorized, k = {}, c0 = {}", xi.k, xi.c0), dual, t.dual_route),
        Measurement::new("direct vs factorized, k = 0", degenerate, t.degenerate_route),
        Measurement::new("factorized packet of xi^2 g vs packet of g", cancel, t.dual_route),
    ])
}

fn packets_operator_identity(r: &Runner) -> Result<Vec<Measurement>> {
    let a = SymbolFunction::gaussian(r.cfg.packets.symbol_beta);
    let one = r.lab.operator_transform_check(&a, &[1.0])?;
    let omega = r.lab.operator_transform_check(&a, &[0.0, 1.0])?;
    let omega2 = r.lab.operator_transform_check(&a, &[0.0, 0.0, 1.0])?;
    let t = r.tol();
    Ok(vec![
        Measurement::new("q = 1", one.residual, 1e-14),
        Measurement::new("q = Omega", omega.residual, t.omega),
        Measurement::new("q = Omega^2", omega2.residual, t.omega_squared),
    ])
}

fn packets_projection(r: &Runner) -> Result<Vec<Measurement>> {
    let t_max = r.lab.config().t_max;
    let norm = |f: &RadialFunction| -> Result<f64> { Ok(l2_inner_product_on(f, f, 0.0, t_max)?.re.sqrt()) };
    let (mut idem, mut ident): (f64, f64) = (0.0, 0.0);
    for &beta in &r.cfg.packets.held_out {
        let f = r.gaussian(beta)?;
        let pf = r.lab.projection(&f)?;
        let ppf = r.lab.projection(&pf)?;
        idem = idem.max(relative_l2_difference(&ppf, &pf, 0.0, t_max)?);
        ident = ident.max(relative_l2_difference(&pf, &f, 0.0, t_max)?);
    }
    let mut rng = r.rng(6);
    let mut sym: f64 = 0.0;
    for _ in 0..3 {
        let (b1, b2) = (rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0));
        let (c1, c2) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let f = RadialFunction::from_real_fn(r.lab.grid().to_vec(), |t| (1.0 + c1 * t * t) * (-b1 * t * t).exp())?;
        let g = RadialFunction::from_real_fn(r.lab.grid().to_vec(), |t| (1.0 + c2 * t * t) * (-b2 * t * t).exp())?;
        let lhs = l2_inner_product_on(&r.lab.projection(&f)?, &g, 0.0, t_max)?;
        let rhs = l2_inner_product_on(&f, &r.lab.projection(&g)?, 0.0, t_max)?;
        sym = sym.max((lhs - rhs).norm() / (norm(&f)? * norm(&g)?));
    }
    let t = r.tol().projection;
    Ok(vec![
        Measurement::new("|P(Pf) - Pf| / |Pf|", idem, t),
        Measurement::new("|<Pf, g> - <f, Pg>| / (|f| |g|)", sym, t),
        Measurement::new("|Pf - f| / |f|", ident, t),
    ])
}

fn seminorm_order(p: f64) -> u32 {
    if p <= 1.0 {
        2
    } else {
        4
    }
}

fn packets_seminorms(r: &Runner) -> Result<Vec<Measurement>> {
    let pk = &r.cfg.packets;
    let a = SymbolFunction::gaussian(pk.symbol_beta);
    let psi = r.lab.synthesize(&a)?;
    let mut out = Vec::new();
    for &p in &pk.p_values {
        let m = seminorm_order(p);
        let short = schwartz_seminorm_mu(&psi, p, m, pk.seminorm_t_short)?;
        let long = schwartz_seminorm_mu(&psi, p, m, pk.seminorm_t_long)?;
        let change = if long.value.is_finite() && short.value > 0.0 {
            (long.value - short.value).abs() / short.value
        } else {
            f64::INFINITY
        };
        out.push(Measurement::new(
            format!("p = {p}, eps = {}, m = {m}: mu (T {} -> {}) relative change", 2.0 / p - 1.0,
                pk.seminorm_t_short, pk.seminorm_t_long),
            change,
            r.tol().seminorm_extension,
        ));
    }
    let xi_grid = r.lab.xi_on_grid();
    let deficit = xi_grid
        .grid()
        .iter()
        .zip(xi_grid.values())
        .map(|(&t, v)| 1.0 - v.re * (RootDatum::sl2().rho() * t).exp())
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    out.push(Measurement::new("max(0, 1 - Xi(t) e^{rho t}) on the grid", deficit, 0.0));
    Ok(out)
}

fn packets_linearity(r: &Runner) -> Result<Vec<Measurement>> {
    let a = SymbolFunction::gaussian(0.5);
    let b = SymbolFunction::Product(vec![SymbolFunction::Poly(vec![1.0, 0.0, 1.0]), SymbolFunction::gaussian(1.0)]);
    let (alpha, beta) = (1.75, -0.6);
    let mix = SymbolFunction::Sum(vec![
        SymbolFunction::Scaled(alpha, Box::new(a.clone())),
        SymbolFunction::Scaled(beta, Box::new(b.clone())),
    ]);
    let lhs = r.lab.synthesize(&mix)?;
    let rhs = r.lab.synthesize(&a)?.linear_combination(
        Complex64::new(alpha, 0.0),
        &r.lab.synthesize(&b)?,
        Complex64::new(beta, 0.0),
    )?;
    let zero = r.lab.synthesize(&SymbolFunction::Zero)?.max_abs();
    let diff = lhs.values().iter().zip(rhs.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    Ok(vec![
        Measurement::new("max |psi(alpha a + beta b) - alpha psi(a) - beta psi(b)| / max", diff / lhs.max_abs(), r.tol().linearity),
        Measurement::new("max |psi(0)|", zero, 0.0),
        Measurement::new("max |Im psi| / max |psi| for a real even symbol", lhs.imaginary_ratio(), 1e-14),
    ])
}

fn packets_symmetric(r: &Runner) -> Result<Vec<Measurement>> {
    let g = SymbolFunction::gaussian(r.cfg.packets.symbol_beta);
    let n = 8;
    let radial = r.lab.symmetric_wave_packet(&SymmetricSymbol::radial(g.clone()), n)?;
    let spherical = r.lab.synthesize(&g)?;
    let mut reduce: f64 = 0.0;
    for j in 0..n {
        for (a, b) in radial.payload.row(j).iter().zip(spherical.values()) {
            reduce = reduce.max((a - b).norm());
        }
    }
    let cos = SymmetricSymbol { terms: vec![(AngularFactor::Cos(1), g)] };
    let packet = r.lab.symmetric_wave_packet(&cos, n)?;
    let mut prop: f64 = 0.0;
    for j in 0..n {
        let c = (TAU * j as f64 / n as f64).cos();
        for (a, b) in packet.payload.row(j).iter().zip(spherical.values()) {
            prop = prop.max((a - b * c).norm());
        }
    }
    let scale = spherical.max_abs();
    Ok(vec![
        Measurement::new("radial symbol: |psi_symm(b) - psi_sph|", reduce / scale, 1e-10),
        Measurement::new("cos(b) symbol: |psi_symm(b) - cos(b) psi_sph|", prop / scale, 1e-8),
    ])
}

fn packets_strong_inequality(r: &Runner) -> Result<Vec<Measurement>> {
    let pk = &r.cfg.packets;
    let psi = r.lab.synthesize(&SymbolFunction::gaussian(pk.symbol_beta))?;
    let x = GroupElement::diagonal(1.0);
    let short = strong_inequality_check(&psi, &x, 2.0, pk.seminorm_t_short)?;
    let long = strong_inequality_check(&psi, &x, 2.0, pk.seminorm_t_long)?;
    let change = (long.value - short.value).abs() / short.value;
    Ok(vec![Measurement::new(
        format!("x = a(1), r = 2: c_r (T {} -> {}) relative change", pk.seminorm_t_short, pk.seminorm_t_long),
        change,
        r.tol().seminorm_extension,
    )])
}
