//! Run configuration, read from TOML with one table per module.

use crate::error::{LabError, Result};
use crate::packets::SynthesisConfig;
use crate::spherical::FitWindow;
use crate::tube::{StripGrid, XiHat};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 17, out: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StructureSection {
    /// Size of the random det-1 corpus.
    pub samples: usize,
    /// Entries are drawn from `[-entry_bound, entry_bound]` before rescaling.
    pub entry_bound: f64,
}

impl Default for StructureSection {
    fn default() -> Self {
        Self { samples: 10_000, entry_bound: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SphericalSection {
    pub weyl_lambdas: Vec<f64>,
    pub casimir_lambdas: Vec<f64>,
    pub casimir_t_min: f64,
    pub casimir_t_max: f64,
    pub casimir_step: f64,
    pub fe_cases: usize,
    pub fe_sigma_max: f64,
    pub fe_lambdas: Vec<f64>,
    pub fit_window: FitWindow,
    pub shifted_window: FitWindow,
    pub fit_lambda_min: f64,
    pub fit_lambda_max: f64,
    pub fit_lambda_count: usize,
}

impl Default for SphericalSection {
    fn default() -> Self {
        Self {
            weyl_lambdas: vec![0.5, 1.0, 2.0, 4.0],
            casimir_lambdas: vec![0.0, 0.5, 1.0, 2.0, 4.0],
            casimir_t_min: 0.1,
            casimir_t_max: 4.0,
            casimir_step: 0.005,
            fe_cases: 20,
            fe_sigma_max: 2.0,
            fe_lambdas: vec![0.0, 1.0, 2.0],
            fit_window: FitWindow::default(),
            shifted_window: FitWindow { t1: 10.0, t2: 14.0, samples: 81 },
            fit_lambda_min: 0.5,
            fit_lambda_max: 8.0,
            fit_lambda_count: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformsSection {
    /// Output nodes of the direct convolution on `[0, t_max]`.
    pub convolution_points: usize,
    pub convolution_t_max: f64,
    /// Widths `beta` of the Gaussian pair `exp(-beta t^2)`.
    pub pair: (f64, f64),
    pub check_lambda_max: f64,
    pub check_lambda_count: usize,
    /// Frozen AN-form to polar-form ratio; fitted at `lambda = 0` when absent.
    pub an_ratio: Option<f64>,
}

impl Default for TransformsSection {
    fn default() -> Self {
        Self {
            convolution_points: 513,
            convolution_t_max: 16.0,
            pair: (1.0, 0.7),
            check_lambda_max: 4.0,
            check_lambda_count: 41,
            an_ratio: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TubeSection {
    pub epsilon: f64,
    pub strip: StripGrid,
    pub xi_k: u32,
    pub xi_c0: f64,
    pub max_degree: u32,
    pub max_order: usize,
    pub gaussian_beta: f64,
}

impl Default for TubeSection {
    fn default() -> Self {
        let xi = XiHat::default();
        Self {
            epsilon: 1.0,
            strip: StripGrid::default(),
            xi_k: xi.k,
            xi_c0: xi.c0,
            max_degree: 6,
            max_order: 3,
            gaussian_beta: 1.0,
        }
    }
}

impl TubeSection {
    pub fn xi(&self) -> Result<XiHat> {
        XiHat::new(self.xi_k, self.xi_c0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacketsSection {
    #[serde(flatten)]
    pub synthesis: SynthesisConfig,
    /// Gaussian symbol `exp(-beta lambda^2)` used by packet checks.
    pub symbol_beta: f64,
    /// Width of the canonical core `h`.
    pub h_beta: f64,
    /// Widths of the held-out radial Gaussians.
    pub held_out: Vec<f64>,
    pub p_values: Vec<f64>,
    pub seminorm_t_short: f64,
    pub seminorm_t_long: f64,
}

impl Default for PacketsSection {
    fn default() -> Self {
        Self {
            synthesis: SynthesisConfig::default(),
            symbol_beta: 1.0,
            h_beta: 0.5,
            held_out: vec![0.5, 0.8, 1.3, 2.0, 3.0],
            p_values: vec![1.0, 2.0],
            seminorm_t_short: 10.0,
            seminorm_t_long: 14.0,
        }
    }
}

/// Acceptance thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub recompose: f64,
    pub bi_invariance: f64,
    pub weyl_phi: f64,
    pub functional_equation: f64,
    pub casimir: f64,
    pub c_function: f64,
    pub fit_window_shift: f64,
    pub convolution_product: f64,
    pub commutativity: f64,
    pub an_ratio: f64,
    pub inversion: f64,
    pub dual_route: f64,
    pub degenerate_route: f64,
    pub omega: f64,
    pub omega_squared: f64,
    pub projection: f64,
    pub seminorm_extension: f64,
    pub zbar_refinement: f64,
    pub linearity: f64,
    pub wrap_round_trip: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            recompose: 1e-10,
            bi_invariance: 1e-12,
            weyl_phi: 1e-10,
            functional_equation: 1e-6,
            casimir: 1e-4,
            c_function: 1e-3,
            fit_window_shift: 5e-4,
            convolution_product: 1e-4,
            commutativity: 1e-6,
            an_ratio: 1e-3,
            inversion: 1e-3,
            dual_route: 1e-3,
            degenerate_route: 1e-12,
            omega: 1e-3,
            omega_squared: 5e-3,
            projection: 1e-3,
            seminorm_extension: 0.05,
            zbar_refinement: 0.02,
            linearity: 1e-10,
            wrap_round_trip: 1e-12,
        }
    }
}

impl Tolerances {
    fn all(&self) -> [(&'static str, f64); 20] {
        [
            ("recompose", self.recompose),
            ("bi_invariance", self.bi_invariance),
            ("weyl_phi", self.weyl_phi),
            ("functional_equation", self.functional_equation),
            ("casimir", self.casimir),
            ("c_function", self.c_function),
            ("fit_window_shift", self.fit_window_shift),
            ("convolution_product", self.convolution_product),
            ("commutativity", self.commutativity),
            ("an_ratio", self.an_ratio),
            ("inversion", self.inversion),
            ("dual_route", self.dual_route),
            ("degenerate_route", self.degenerate_route),
            ("omega", self.omega),
            ("omega_squared", self.omega_squared),
            ("projection", self.projection),
            ("seminorm_extension", self.seminorm_extension),
            ("zbar_refinement", self.zbar_refinement),
            ("linearity", self.linearity),
            ("wrap_round_trip", self.wrap_round_trip),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub structure: StructureSection,
    pub spherical: SphericalSection,
    pub transforms: TransformsSection,
    pub tube: TubeSection,
    pub packets: PacketsSection,
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(LabError::Config(what));
        for (name, v) in self.tolerances.all() {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("tolerance {name} must be positive"));
            }
        }
        if self.structure.samples == 0 || !(self.structure.entry_bound > 0.0) {
            return bad("structure corpus must be non-empty with a positive bound".into());
        }
        let s = &self.spherical;
        if !(s.casimir_t_min > 0.0 && s.casimir_t_max > s.casimir_t_min && s.casimir_step > 0.0) {
            return bad("casimir window must satisfy 0 < t_min < t_max with positive step".into());
        }
        if s.casimir_step > 1e-2 {
            return bad("casimir_step must be at most 1e-2".into());
        }
        for w in [&s.fit_window, &s.shifted_window] {
            if !(w.t1 > 0.0 && w.t2 > w.t1 && w.samples >= 4) {
                return bad("fit windows must satisfy 0 < t1 < t2 with at least 4 samples".into());
            }
        }
        if !(s.fit_lambda_min > 0.0 && s.fit_lambda_max > s.fit_lambda_min && s.fit_lambda_count >= 2) {
            return bad("c-function lambda range must be increasing and positive".into());
        }
        let t = &self.transforms;
        if t.convolution_points < 16 || !(t.convolution_t_max >= 4.0) {
            return bad("convolution grid needs at least 16 nodes on [0, T] with T >= 4".into());
        }
        if !(t.pair.0 > 0.0 && t.pair.1 > 0.0) || t.check_lambda_count < 2 || !(t.check_lambda_max > 0.0) {
            return bad("transform test pair and lambda range must be positive".into());
        }
        if let Some(r) = t.an_ratio {
            if !(r > 0.0 && r.is_finite()) {
                return bad("an_ratio must be positive".into());
            }
        }
        let tube = &self.tube;
        if !(tube.epsilon >= 0.0) || !(tube.gaussian_beta > 0.0) {
            return bad("tube epsilon must be non-negative and gaussian_beta positive".into());
        }
        if tube.strip.n_re < 3 || tube.strip.n_im < 2 || !(tube.strip.re_max > 0.0) {
            return bad("strip grid too small".into());
        }
        let xi = tube.xi()?;
        xi.check_tube(&crate::tube::TubeDomain::new(tube.epsilon, crate::structure::RootDatum::sl2().rho())?)
            .map_err(|e| LabError::Config(e.to_string()))?;
        let p = &self.packets;
        p.synthesis.validate()?;
        if !(p.symbol_beta > 0.0 && p.h_beta > 0.0) || p.held_out.iter().any(|b| !(*b > 0.0)) {
            return bad("Gaussian widths must be positive".into());
        }
        if p.p_values.iter().any(|&v| !(v > 0.0 && v <= 2.0)) {
            return bad("p values must lie in (0, 2]".into());
        }
        if !(p.seminorm_t_short >= 10.0 && p.seminorm_t_long > p.seminorm_t_short) {
            return bad("seminorm ranges must satisfy 10 <= short < long".into());
        }
        if p.seminorm_t_long > p.synthesis.t_max {
            return bad("seminorm_t_long exceeds the synthesis grid".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let cfg = RunConfig::from_toml("[run]\nseed = 5\n[packets]\nn_lambda = 512\n").unwrap();
        assert_eq!(cfg.run.seed, 5);
        assert_eq!(cfg.packets.synthesis.n_lambda, 512);
        assert_eq!(cfg.tolerances, Tolerances::default());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml("[tolerances]\ncasimir = 0.0\n").is_err());
        assert!(RunConfig::from_toml("[tube]\nxi_c0 = -1.0\n").is_err());
        assert!(RunConfig::from_toml("[tube]\nxi_c0 = 0.5\n").is_err());
        assert!(RunConfig::from_toml("[nonsense]\nx = 1\n").is_err());
        assert!(RunConfig::from_toml("[packets]\np_values = [3.0]\n").is_err());
    }
}
