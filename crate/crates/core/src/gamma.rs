//! Complex Gamma function via the Lanczos approximation (g = 7, n = 9).

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(z)` on the principal branch of the Lanczos form. Uses the
/// reflection formula for `Re z < 1/2`.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Gamma(z) Gamma(1-z) = pi / sin(pi z)
        let s = (z * PI).sin();
        return Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma(Complex64::new(1.0, 0.0) - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

pub fn gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let s = (z * PI).sin();
        return PI / (s * gamma(Complex64::new(1.0, 0.0) - z));
    }
    ln_gamma(z).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn real_values() {
        let one = Complex64::new(1.0, 0.0);
        assert!(rel(gamma(one), one) < 1e-14);
        assert!(rel(gamma(Complex64::new(5.0, 0.0)), Complex64::new(24.0, 0.0)) < 1e-13);
        assert!(rel(gamma(Complex64::new(0.5, 0.0)), Complex64::new(PI.sqrt(), 0.0)) < 1e-14);
        assert!(rel(gamma(Complex64::new(-0.5, 0.0)), Complex64::new(-2.0 * PI.sqrt(), 0.0)) < 1e-13);
    }

    #[test]
    fn modulus_on_imaginary_axes() {
        // |Gamma(iy)|^2 = pi / (y sinh(pi y)); |Gamma(1/2 + iy)|^2 = pi / cosh(pi y)
        for &y in &[0.1, 0.5, 1.0, 3.0, 8.0] {
            let g = gamma(Complex64::new(0.0, y));
            let expect = PI / (y * (PI * y).sinh());
            assert!((g.norm_sqr() - expect).abs() < 1e-12 * expect);
            let g = gamma(Complex64::new(0.5, y));
            let expect = PI / (PI * y).cosh();
            assert!((g.norm_sqr() - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn recurrence_holds_off_axis() {
        for &(x, y) in &[(0.3, 2.0), (1.7, -4.0), (-2.3, 0.7), (4.0, 10.0)] {
            let z = Complex64::new(x, y);
            let lhs = gamma(z + 1.0);
            let rhs = z * gamma(z);
            assert!(rel(lhs, rhs) < 1e-12, "{z}");
        }
    }
}
