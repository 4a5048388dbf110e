//! Bi-K-invariant functions represented by their restriction to `A+`.

use crate::error::{LabError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Envelope `Xi(t)^{2/p} (1 + t)^{-m}` declared by the producer of a function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayHint {
    pub p: f64,
    pub m: f64,
}

/// Samples `f(a_t)` on a strictly increasing grid, evaluated between nodes by
/// local four-point Lagrange interpolation.
///
/// Radial functions are even in `t` (`a_{-t}` is K-conjugate to `a_t`), so a
/// grid starting at 0 is continued by reflection. Past the last node the
/// function is taken to be zero; transforms check that this truncation is
/// harmless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialFunction {
    grid: Vec<f64>,
    values: Vec<Complex64>,
    decay_hint: Option<DecayHint>,
    /// Node spacing when the grid is equispaced; enables O(1) lookup.
    #[serde(skip)]
    spacing: Option<f64>,
}

/// `n` equispaced nodes on `[0, t_max]`.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    let step = t_max / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { t_max } else { i as f64 * step }).collect()
}

fn equispaced(grid: &[f64]) -> Option<f64> {
    let n = grid.len();
    let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h).then_some(h)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 4 {
        return Err(LabError::InvalidGrid(format!("need at least 4 nodes, got {}", grid.len())));
    }
    if grid[0] < 0.0 || !grid[0].is_finite() {
        return Err(LabError::InvalidGrid(format!("grid starts at {}", grid[0])));
    }
    if let Some(w) = grid.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(LabError::InvalidGrid(format!("not strictly increasing at {} -> {}", w[0], w[1])));
    }
    Ok(())
}

impl RadialFunction {
    pub fn new(grid: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        check_grid(&grid)?;
        if grid.len() != values.len() {
            return Err(LabError::InvalidGrid(format!(
                "{} nodes but {} values",
                grid.len(),
                values.len()
            )));
        }
        let spacing = equispaced(&grid);
        Ok(Self { grid, values, decay_hint: None, spacing })
    }

    pub fn from_fn<F: FnMut(f64) -> Complex64>(grid: Vec<f64>, mut f: F) -> Result<Self> {
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn from_real_fn<F: FnMut(f64) -> f64>(grid: Vec<f64>, mut f: F) -> Result<Self> {
        Self::from_fn(grid, |t| Complex64::new(f(t), 0.0))
    }

    pub fn zero(grid: Vec<f64>) -> Result<Self> {
        Self::from_real_fn(grid, |_| 0.0)
    }

    pub fn with_decay_hint(mut self, hint: DecayHint) -> Self {
        self.decay_hint = Some(hint);
        self
    }

    pub fn decay_hint(&self) -> Option<DecayHint> {
        self.decay_hint
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn t_min(&self) -> f64 {
        self.grid[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.grid.last().expect("grid is non-empty")
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Common node spacing if the grid is equispaced (relative tolerance 1e-9).
    pub fn uniform_spacing(&self) -> Option<f64> {
        equispaced(&self.grid)
    }

    pub fn is_identically_zero(&self) -> bool {
        self.values.iter().all(|v| *v == Complex64::new(0.0, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest imaginary part relative to the largest modulus.
    pub fn imaginary_ratio(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max) / m
    }

    fn locate(&self, t: f64) -> usize {
        // index i with grid[i] <= t < grid[i+1], clamped to the last interval
        let n = self.grid.len();
        if let Some(h) = self.spacing {
            let mut i = (((t - self.grid[0]) / h) as usize).min(n - 2);
            // the guess can be off by one through rounding
            if self.grid[i] > t && i > 0 {
                i -= 1;
            } else if i + 2 < n && self.grid[i + 1] <= t {
                i += 1;
            }
            return i;
        }
        match self.grid.binary_search_by(|x| x.partial_cmp(&t).expect("finite grid")) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    fn node(&self, j: isize) -> (f64, Complex64) {
        if j < 0 {
            // reflected ghost node; only reached when the grid starts at 0
            let k = (-j) as usize;
            (-self.grid[k], self.values[k])
        } else {
            (self.grid[j as usize], self.values[j as usize])
        }
    }

    /// Interpolated value at `t >= 0`. Returns zero past the last node and NaN
    /// below the first node of a grid that does not start at 0.
    pub fn eval(&self, t: f64) -> Complex64 {
        let t = t.abs();
        let n = self.grid.len() as isize;
        if t > self.t_max() {
            return Complex64::new(0.0, 0.0);
        }
        let from_origin = self.grid[0] == 0.0;
        if t < self.grid[0] {
            return Complex64::new(f64::NAN, f64::NAN);
        }
        let i = self.locate(t) as isize;
        let mut start = i - 1;
        if start < 0 && !from_origin {
            start = 0;
        }
        if start + 3 > n - 1 {
            start = n - 4;
        }
        let pts: [(f64, Complex64); 4] = std::array::from_fn(|k| self.node(start + k as isize));
        lagrange4(&pts, t)
    }

    pub fn eval_re(&self, t: f64) -> f64 {
        self.eval(t).re
    }

    /// Pointwise `alpha * self + beta * other` on a shared grid.
    pub fn linear_combination(
        &self,
        alpha: Complex64,
        other: &Self,
        beta: Complex64,
    ) -> Result<Self> {
        if self.grid != other.grid {
            return Err(LabError::InvalidGrid("linear combination needs identical grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| alpha * a + beta * b).collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * alpha).collect(),
            decay_hint: self.decay_hint,
            spacing: self.spacing,
        }
    }

    /// Resamples onto another grid by interpolation.
    pub fn resample(&self, grid: Vec<f64>) -> Result<Self> {
        Self::from_fn(grid, |t| self.eval(t))
    }

    /// Sub-function on the nodes with `lo <= t <= hi`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Self> {
        let (grid, values): (Vec<f64>, Vec<Complex64>) = self
            .grid
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .map(|(t, v)| (*t, *v))
            .unzip();
        Self::new(grid, values)
    }
}

fn lagrange4(pts: &[(f64, Complex64); 4], t: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &(xj, yj)) in pts.iter().enumerate() {
        let mut l = 1.0;
        for (m, &(xm, _)) in pts.iter().enumerate() {
            if m != j {
                l *= (t - xm) / (xj - xm);
            }
        }
        acc += yj * l;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(RadialFunction::zero(vec![0.0, 1.0, 2.0]).is_err());
        assert!(RadialFunction::zero(vec![0.0, 1.0, 1.0, 2.0]).is_err());
        assert!(RadialFunction::zero(vec![-1.0, 0.0, 1.0, 2.0]).is_err());
        assert!(RadialFunction::new(vec![0.0, 1.0, 2.0, 3.0], vec![Complex64::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn interpolates_cubics_exactly() {
        let f = |t: f64| 1.0 + 0.5 * t * t - 0.1 * t.powi(3);
        let r = RadialFunction::from_real_fn(vec![0.5, 0.9, 1.4, 2.0, 2.2, 3.1], f).unwrap();
        for &t in &[0.5, 0.7, 1.0, 1.9, 2.5, 3.1] {
            assert!((r.eval_re(t) - f(t)).abs() < 1e-12, "{t}");
        }
        assert_eq!(r.eval(3.2), Complex64::new(0.0, 0.0));
        assert!(r.eval(0.1).re.is_nan());
    }

    #[test]
    fn even_reflection_near_origin() {
        let f = |t: f64| (-t * t).exp();
        let r = RadialFunction::from_real_fn(uniform_grid(4.0, 401), f).unwrap();
        for &t in &[0.0, 0.003, 0.011, 0.5, 3.995] {
            assert!((r.eval_re(t) - f(t)).abs() < 1e-8, "{t}");
        }
        assert_eq!(r.uniform_spacing().map(|h| (h - 0.01).abs() < 1e-15), Some(true));
    }

    #[test]
    fn deterministic_evaluation() {
        let r = RadialFunction::from_real_fn(uniform_grid(2.0, 33), |t| t.cos()).unwrap();
        assert_eq!(r.eval(0.777).to_string(), r.clone().eval(0.777).to_string());
    }
}
