//! Structure theory of SL(2,R) at the matrix level.
//!
//! Normalization used throughout the crate: `H0 = diag(1, -1)`, `alpha(H0) = 2`,
//! `rho(H0) = 1`, `a(t) = diag(e^t, e^-t)`, `k(theta)` the rotation by `theta`,
//! `n(x)` the upper unitriangular matrix with off-diagonal `x`, and `|H0| = 1`
//! so that `sigma(a(t)) = |t|`.

use crate::error::{LabError, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Tolerance on `det g - 1` accepted by [`GroupElement::new`].
pub const DET_TOLERANCE: f64 = 1e-12;

/// An element of SL(2,R), stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    entries: [f64; 4],
}

impl GroupElement {
    /// Builds an element, rejecting matrices whose determinant is not 1.
    pub fn new(g11: f64, g12: f64, g21: f64, g22: f64) -> Result<Self> {
        let det = g11 * g22 - g12 * g21;
        if !det.is_finite() || (det - 1.0).abs() > DET_TOLERANCE {
            return Err(LabError::NotUnimodular { det, tol: DET_TOLERANCE });
        }
        Ok(Self { entries: [g11, g12, g21, g22] })
    }

    /// Rescales a matrix with positive determinant onto SL(2,R).
    ///
    /// A negative determinant is fixed by flipping the sign of the second row.
    pub fn normalized(g11: f64, g12: f64, g21: f64, g22: f64) -> Result<Self> {
        let (mut g21, mut g22) = (g21, g22);
        let mut det = g11 * g22 - g12 * g21;
        if det < 0.0 {
            g21 = -g21;
            g22 = -g22;
            det = -det;
        }
        if !(det.is_finite() && det > 1e-300) {
            return Err(LabError::NotUnimodular { det, tol: DET_TOLERANCE });
        }
        let s = det.sqrt().recip();
        Self::new(g11 * s, g12 * s, g21 * s, g22 * s)
    }

    pub fn identity() -> Self {
        Self { entries: [1.0, 0.0, 0.0, 1.0] }
    }

    /// `k(theta)`: rotation by `theta` in SO(2).
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { entries: [c, -s, s, c] }
    }

    /// `a(t) = diag(e^t, e^-t)`.
    pub fn diagonal(t: f64) -> Self {
        Self { entries: [t.exp(), 0.0, 0.0, (-t).exp()] }
    }

    /// `n(x)`: upper unitriangular.
    pub fn unipotent(x: f64) -> Self {
        Self { entries: [1.0, x, 0.0, 1.0] }
    }

    pub fn entries(&self) -> [f64; 4] {
        self.entries
    }

    pub fn det(&self) -> f64 {
        let [a, b, c, d] = self.entries;
        a * d - b * c
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let [a, b, c, d] = self.entries;
        let [e, f, g, h] = rhs.entries;
        Self { entries: [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h] }
    }

    /// Inverse; exact for unimodular matrices.
    pub fn inverse(&self) -> Self {
        let [a, b, c, d] = self.entries;
        Self { entries: [d, -b, -c, a] }
    }

    /// Squared Hilbert-Schmidt norm.
    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Uniform entries in `[-bound, bound]`, rescaled onto det 1. Near-singular
    /// draws (|det| < 1e-3) are rejected and redrawn.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, bound: f64) -> Self {
        loop {
            let e: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-bound..=bound));
            let det = e[0] * e[3] - e[1] * e[2];
            if det.abs() < 1e-3 {
                continue;
            }
            if let Ok(g) = Self::normalized(e[0], e[1], e[2], e[3]) {
                return g;
            }
        }
    }
}

/// Restricted-root data of a real rank one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootDatum {
    pub m_alpha: u32,
    pub m_2alpha: u32,
}

impl RootDatum {
    pub const fn new(m_alpha: u32, m_2alpha: u32) -> Self {
        Self { m_alpha, m_2alpha }
    }

    pub const fn sl2() -> Self {
        Self::new(1, 0)
    }

    /// `rho(H0)` with `alpha(H0) = 2`.
    pub fn rho(&self) -> f64 {
        f64::from(self.m_alpha) + 2.0 * f64::from(self.m_2alpha)
    }

    /// `rho` in units of the simple root alpha.
    pub fn rho_alpha_units(&self) -> f64 {
        0.5 * (f64::from(self.m_alpha) + 2.0 * f64::from(self.m_2alpha))
    }

    pub fn weyl_order(&self) -> usize {
        2
    }

    /// Action of the non-trivial Weyl element on the spectral coordinate.
    pub fn weyl_reflect(&self, lambda: num_complex::Complex64) -> num_complex::Complex64 {
        -lambda
    }

    /// First-order coefficient of the radial Laplacian, `J'(t)/J(t)`.
    pub fn radial_drift(&self, t: f64) -> f64 {
        let coth = |x: f64| x.cosh() / x.sinh();
        2.0 * f64::from(self.m_alpha) * coth(2.0 * t)
            + 4.0 * f64::from(self.m_2alpha) * coth(4.0 * t)
    }
}

impl Default for RootDatum {
    fn default() -> Self {
        Self::sl2()
    }
}

/// Factors of `g = k(theta) a(u) n(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IwasawaFactors {
    pub theta: f64,
    pub u: f64,
    pub x: f64,
}

impl IwasawaFactors {
    pub fn recompose(&self) -> GroupElement {
        GroupElement::rotation(self.theta)
            .mul(&GroupElement::diagonal(self.u))
            .mul(&GroupElement::unipotent(self.x))
    }
}

/// Factors of `g = k(theta1) a(t) k(theta2)` with `t >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarFactors {
    pub theta1: f64,
    pub t: f64,
    pub theta2: f64,
}

impl PolarFactors {
    pub fn recompose(&self) -> GroupElement {
        GroupElement::rotation(self.theta1)
            .mul(&GroupElement::diagonal(self.t))
            .mul(&GroupElement::rotation(self.theta2))
    }
}

/// Iwasawa decomposition `G = KAN`.
///
/// The first column of `g` equals `e^u (cos theta, sin theta)`, which fixes
/// `theta` and `u`; `x` is read off `a(u)^{-1} k(theta)^{-1} g`.
pub fn iwasawa_decompose(g: &GroupElement) -> Result<IwasawaFactors> {
    let [g11, g12, g21, g22] = g.entries();
    let r = g11.hypot(g21);
    if !(r > 0.0 && r.is_finite()) {
        return Err(LabError::Invariant(format!("degenerate first column ({g11}, {g21})")));
    }
    let theta = g21.atan2(g11);
    let (s, c) = (g21 / r, g11 / r);
    // second row of k^{-1} g is (0, e^{-u}) and first row is (e^u, e^u x)
    let top_right = c * g12 + s * g22;
    Ok(IwasawaFactors { theta, u: r.ln(), x: top_right / r })
}

/// `u` such that `g in K exp(u H0) N`.
pub fn iwasawa_projection(g: &GroupElement) -> Result<f64> {
    let [g11, _, g21, _] = g.entries();
    let r = g11.hypot(g21);
    if !(r > 0.0 && r.is_finite()) {
        return Err(LabError::Invariant(format!("degenerate first column ({g11}, {g21})")));
    }
    Ok(r.ln())
}

/// Polar decomposition `G = K cl(A+) K` via the singular value decomposition.
pub fn polar_decompose(g: &GroupElement) -> PolarFactors {
    let [a, b, c, d] = g.entries();
    // g = k(theta1) diag(s1, s2) k(theta2) with s1 >= s2 > 0
    let e = 0.5 * (a + d);
    let f = 0.5 * (a - d);
    let gg = 0.5 * (c + b);
    let h = 0.5 * (c - b);
    let q = e.hypot(h);
    let r = f.hypot(gg);
    let a1 = gg.atan2(f);
    let a2 = h.atan2(e);
    let theta2 = 0.5 * (a2 - a1);
    let theta1 = 0.5 * (a2 + a1);
    let s1 = q + r;
    // s1 * s2 = det = 1; sigma = log s1 keeps full relative accuracy
    PolarFactors { theta1, t: s1.ln().max(0.0), theta2 }
}

/// `sigma(g)`, the polar radial coordinate.
pub fn sigma(g: &GroupElement) -> f64 {
    let hs = g.frobenius_sq();
    // cosh(2 sigma) = |g|^2 / 2
    let ch = (0.5 * hs).max(1.0);
    0.5 * ch.acosh()
}

/// Radial Haar density `(2 sinh 2t)^{m_alpha} (2 sinh 4t)^{m_2alpha}`.
pub fn haar_radial_density(t: f64, rd: &RootDatum) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(LabError::NegativeRadius(t));
    }
    Ok(radial_density(t, rd))
}

/// Unchecked density; callers guarantee `t >= 0`.
#[inline]
pub(crate) fn radial_density(t: f64, rd: &RootDatum) -> f64 {
    (2.0 * (2.0 * t).sinh()).powi(rd.m_alpha as i32)
        * (2.0 * (4.0 * t).sinh()).powi(rd.m_2alpha as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_diagonal_iwasawa() {
        let f = iwasawa_decompose(&GroupElement::identity()).unwrap();
        assert_eq!((f.theta, f.u, f.x), (0.0, 0.0, 0.0));
        let f = iwasawa_decompose(&GroupElement::diagonal(1.0)).unwrap();
        assert!(f.theta.abs() < 1e-15 && (f.u - 1.0).abs() < 1e-15 && f.x.abs() < 1e-15);
    }

    #[test]
    fn rejects_non_unimodular() {
        assert!(matches!(
            GroupElement::new(2.0, 0.0, 0.0, 1.0),
            Err(LabError::NotUnimodular { .. })
        ));
        let g = GroupElement::normalized(2.0, 1.0, 3.0, -4.0).unwrap();
        assert!((g.det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn projection_of_a_k() {
        for &(t, th) in &[(0.3, 0.4), (1.5, 2.0), (2.0, -1.1)] {
            let g = GroupElement::diagonal(t).mul(&GroupElement::rotation(th));
            let expect = 0.5
                * ((2.0 * t).exp() * th.cos().powi(2) + (-2.0 * t).exp() * th.sin().powi(2)).ln();
            assert!((iwasawa_projection(&g).unwrap() - expect).abs() < 1e-13);
            assert_eq!(iwasawa_projection(&g).unwrap(), iwasawa_decompose(&g).unwrap().u);
        }
        assert!((iwasawa_projection(&GroupElement::diagonal(0.7)).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn projection_additive_on_a() {
        let g = GroupElement::diagonal(0.5).mul(&GroupElement::diagonal(0.25));
        // exact up to the rounding of exp/ln
        assert!((iwasawa_projection(&g).unwrap() - 0.75).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn polar_of_diagonal_and_identity() {
        assert_eq!(polar_decompose(&GroupElement::identity()).t, 0.0);
        let p = polar_decompose(&GroupElement::diagonal(1.3));
        assert!((p.t - 1.3).abs() < 1e-14);
        let p = polar_decompose(&GroupElement::diagonal(-1.3));
        assert!((p.t - 1.3).abs() < 1e-14);
        assert!(p.recompose().max_abs_diff(&GroupElement::diagonal(-1.3)) < 1e-12);
    }

    #[test]
    fn round_trips_on_random_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let g = GroupElement::random(&mut rng, 5.0);
            let iw = iwasawa_decompose(&g).unwrap();
            assert!(iw.recompose().max_abs_diff(&g) < 1e-10);
            let p = polar_decompose(&g);
            assert!(p.t >= 0.0);
            assert!(p.recompose().max_abs_diff(&g) < 1e-10, "{g:?} {p:?}");
            assert!((p.t - sigma(&g)).abs() < 1e-8);
            assert!((polar_decompose(&g.inverse()).t - p.t).abs() < 1e-12);
        }
    }

    #[test]
    fn density_values() {
        let rd = RootDatum::sl2();
        assert_eq!(haar_radial_density(0.0, &rd).unwrap(), 0.0);
        assert!((haar_radial_density(1.0, &rd).unwrap() - 2.0 * 2f64.sinh()).abs() < 1e-14);
        assert!(haar_radial_density(-0.1, &rd).is_err());
        let mut prev = -1.0;
        for i in 0..=500 {
            let j = haar_radial_density(i as f64 * 0.01, &rd).unwrap();
            assert!(j > prev);
            prev = j;
        }
    }

    #[test]
    fn drift_is_log_derivative_of_density() {
        for rd in [RootDatum::sl2(), RootDatum::new(2, 1), RootDatum::new(3, 0)] {
            for &t in &[0.2, 0.9, 2.5] {
                let h = 1e-5;
                let num = (radial_density(t + h, &rd).ln() - radial_density(t - h, &rd).ln())
                    / (2.0 * h);
                assert!((num - rd.radial_drift(t)).abs() < 1e-7 * num.abs());
            }
        }
        assert_eq!(RootDatum::sl2().rho(), 1.0);
    }
}
