//! Property tests for the module invariants.

use num_complex::Complex64;
use proptest::prelude::*;
use sl2lab::packets::{Lab, SynthesisConfig};
use sl2lab::radial::{uniform_grid, RadialFunction};
use sl2lab::spherical::{spherical_phi, spherical_phi_fixed, xi_fixed, SpectralParameter};
use sl2lab::structure::{iwasawa_decompose, iwasawa_projection, polar_decompose, sigma, GroupElement};
use sl2lab::transforms::{l2_inner_product, spherical_transform};
use sl2lab::tube::{
    cp_hat_unwrap, cp_hat_wrap, tube_contains, zbar_seminorm_on, StripGrid, SymbolFunction, TubeDomain, XiHat,
};
use std::sync::OnceLock;

fn small_lab() -> &'static Lab {
    static LAB: OnceLock<Lab> = OnceLock::new();
    LAB.get_or_init(|| {
        let cfg = SynthesisConfig { n_t: 257, n_lambda: 256, density: sl2lab::packets::DensitySource::Closed, ..Default::default() };
        Lab::new(cfg).unwrap()
    })
}

fn det_one() -> impl Strategy<Value = GroupElement> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64)
        .prop_filter("near-singular", |(a, b, c, d)| (a * d - b * c).abs() > 1e-3)
        .prop_map(|(a, b, c, d)| GroupElement::normalized(a, b, c, d).unwrap())
}

fn finite_float() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        -10.0..10.0f64,
    ]
}

fn symbol() -> impl Strategy<Value = SymbolFunction> {
    let leaf = prop_oneof![
        Just(SymbolFunction::Zero),
        finite_float().prop_map(SymbolFunction::Constant),
        (0.01..5.0f64).prop_map(SymbolFunction::gaussian),
        prop::collection::vec(finite_float(), 1..5).prop_map(SymbolFunction::Poly),
        (0u32..3, 0.1..4.0f64).prop_map(|(k, c0)| SymbolFunction::XiHat { k, c0 }),
        (0.01..1.0f64, prop::collection::vec((finite_float(), finite_float()), 4..8)).prop_map(|(step, v)| {
            SymbolFunction::Sampled { step, values: v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect() }
        }),
    ];
    leaf.prop_recursive(3, 16, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(SymbolFunction::Product),
            prop::collection::vec(inner.clone(), 1..4).prop_map(SymbolFunction::Sum),
            (finite_float(), inner.clone()).prop_map(|(c, s)| SymbolFunction::Scaled(c, Box::new(s))),
            (inner, 0u32..3, 0.1..4.0f64).prop_map(|(h, k, c0)| SymbolFunction::Wrapped { h: Box::new(h), k, c0 }),
        ]
    })
}

fn same_bits(a: Complex64, b: Complex64) -> bool {
    a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn iwasawa_and_polar_recompose(g in det_one()) {
        prop_assert!(iwasawa_decompose(&g).unwrap().recompose().max_abs_diff(&g) < 1e-10);
        let p = polar_decompose(&g);
        prop_assert!(p.t >= 0.0);
        prop_assert!(p.recompose().max_abs_diff(&g) < 1e-10);
    }

    #[test]
    fn sigma_is_bi_invariant_and_symmetric(g in det_one(), a in 0.0..6.3f64, b in 0.0..6.3f64) {
        let moved = GroupElement::rotation(a).mul(&g).mul(&GroupElement::rotation(b));
        prop_assert!((polar_decompose(&moved).t - polar_decompose(&g).t).abs() < 1e-12);
        prop_assert!((sigma(&g.inverse()) - sigma(&g)).abs() < 1e-12);
    }

    #[test]
    fn projection_is_additive_on_a(s in -5.0..5.0f64, t in -5.0..5.0f64) {
        let u = iwasawa_projection(&GroupElement::diagonal(s).mul(&GroupElement::diagonal(t))).unwrap();
        prop_assert!((u - (s + t)).abs() <= 4.0 * f64::EPSILON * (s + t).abs().max(1.0));
    }

    #[test]
    fn phi_bounds_and_symmetry(l in 0.0..8.0f64, t in 0.0..6.0f64) {
        prop_assert_eq!(spherical_phi(SpectralParameter::real(l), 0.0).unwrap(), Complex64::new(1.0, 0.0));
        let p = spherical_phi(SpectralParameter::real(l), t).unwrap();
        let q = spherical_phi(SpectralParameter::real(-l), t).unwrap();
        prop_assert!((p - q).norm() < 1e-10);
        prop_assert!(p.im.abs() < 1e-10);
        let x = xi_fixed(t);
        prop_assert!(p.norm() <= x + 1e-10 && x <= 1.0 + 1e-10);
        prop_assert!(x * t.exp() >= 1.0 - 1e-12);
    }

    #[test]
    fn symbol_text_round_trips_bit_exactly(s in symbol(), re in -20.0..20.0f64, im in -1.0..1.0f64) {
        let text = s.to_string();
        let back: SymbolFunction = text.parse().unwrap();
        prop_assert_eq!(back.to_string(), text);
        for z in [Complex64::new(re, 0.0), Complex64::new(re, im)] {
            let (a, b) = (s.eval(z), back.eval(z));
            prop_assert!(same_bits(a, b) || (a.is_nan() && b.is_nan()));
        }
    }

    #[test]
    fn interior_is_union_of_smaller_tubes(eps in 0.05..2.0f64, re in -10.0..10.0f64, frac in 0.0..1.5f64) {
        let td = TubeDomain::new(eps, 1.0).unwrap();
        let z = SpectralParameter::new(re, frac * eps);
        let inside_smaller = (1..=64).any(|k| {
            let e = eps * (1.0 - 1.0 / (k as f64 + 1.0));
            tube_contains(&TubeDomain::new(e, 1.0).unwrap(), z)
        }) || frac == 0.0;
        prop_assert_eq!(td.interior_contains(z), frac < 1.0);
        if frac < 0.98 {
            prop_assert!(inside_smaller);
        }
        if frac >= 1.0 {
            prop_assert!(!inside_smaller);
        }
    }

    #[test]
    fn wrap_unwrap_and_closure(b1 in 0.2..3.0f64, b2 in 0.2..3.0f64, k in 0u32..3, c0 in 1.2..4.0f64,
                               re in -6.0..6.0f64, im in -1.0..1.0f64) {
        let xi = XiHat::new(k, c0).unwrap();
        let (h1, h2) = (SymbolFunction::gaussian(b1), SymbolFunction::gaussian(b2));
        let a1 = cp_hat_wrap(&h1, &xi).unwrap();
        let a2 = cp_hat_wrap(&h2, &xi).unwrap();
        let z = Complex64::new(re, im);
        let back = cp_hat_unwrap(&a1, &xi).eval(z);
        prop_assert!((back - h1.eval(z)).norm() <= 1e-12 * h1.eval(z).norm());
        let joint = cp_hat_wrap(
            &SymbolFunction::Product(vec![h1, h2, xi.reciprocal(), xi.reciprocal()]), &xi).unwrap();
        let p = a1.eval(z) * a2.eval(z);
        prop_assert!((joint.eval(z) - p).norm() <= 1e-12 * p.norm());
    }

    #[test]
    fn odd_polynomials_are_rejected(c in 0.1..3.0f64) {
        let odd = SymbolFunction::Poly(vec![0.0, c]);
        prop_assert!(cp_hat_wrap(&odd, &XiHat::default()).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn zbar_estimates_grow_under_refinement(beta in 0.3..2.0f64, degree in 0u32..4, order in 0usize..3) {
        let td = TubeDomain::new(1.0, 1.0).unwrap();
        let grid = StripGrid { re_max: 8.0, n_re: 33, n_im: 5 };
        let s = SymbolFunction::gaussian(beta);
        let a = zbar_seminorm_on(&s, &td, degree, order, &grid).unwrap();
        let b = zbar_seminorm_on(&s, &td, degree, order, &grid.refined()).unwrap();
        prop_assert!(b.value >= a.value && a.value.is_finite());
    }

    #[test]
    fn inner_product_is_hermitian_and_cauchy_schwarz(b1 in 0.3..3.0f64, b2 in 0.3..3.0f64, c in -2.0..2.0f64) {
        let grid = uniform_grid(10.0, 401);
        let f = RadialFunction::from_fn(grid.clone(), |t| Complex64::new(1.0, c) * (-b1 * t * t).exp()).unwrap();
        let g = RadialFunction::from_fn(grid, |t| Complex64::new(c, 1.0 + t * t) * (-b2 * t * t).exp()).unwrap();
        let fg = l2_inner_product(&f, &g).unwrap();
        let gf = l2_inner_product(&g, &f).unwrap();
        prop_assert!((fg - gf.conj()).norm() <= 1e-14 * fg.norm().max(1e-300));
        let ff = l2_inner_product(&f, &f).unwrap();
        let gg = l2_inner_product(&g, &g).unwrap();
        prop_assert!(ff.re > 0.0 && ff.im.abs() <= 1e-15 * ff.re);
        prop_assert!(fg.norm_sqr() <= ff.re * gg.re * (1.0 + 1e-12));
    }

    #[test]
    fn transform_is_linear_and_even(b1 in 0.3..3.0f64, b2 in 0.3..3.0f64, al in -2.0..2.0f64, l in 0.0..4.0f64) {
        let grid = uniform_grid(14.0, 449);
        let f = RadialFunction::from_real_fn(grid.clone(), |t| (-b1 * t * t).exp()).unwrap();
        let g = RadialFunction::from_real_fn(grid, |t| (1.0 + t * t) * (-b2 * t * t).exp()).unwrap();
        let mix = f.linear_combination(Complex64::new(al, 0.0), &g, Complex64::new(1.0, 0.0)).unwrap();
        let lam = SpectralParameter::real(l);
        let hf = spherical_transform(&f, lam).unwrap().value;
        let hg = spherical_transform(&g, lam).unwrap().value;
        let hm = spherical_transform(&mix, lam).unwrap().value;
        prop_assert!((hm - (hf * al + hg)).norm() <= 1e-12 * (hf.norm() + hg.norm()));
        let minus = spherical_transform(&f, SpectralParameter::real(-l)).unwrap().value;
        prop_assert!((hf - minus).norm() <= 1e-10);
    }

    #[test]
    fn synthesis_is_linear(b1 in 0.3..2.0f64, b2 in 0.3..2.0f64, al in -3.0..3.0f64, be in -3.0..3.0f64) {
        let lab = small_lab();
        let (a, b) = (SymbolFunction::gaussian(b1), SymbolFunction::gaussian(b2));
        let mix = SymbolFunction::Sum(vec![
            SymbolFunction::Scaled(al, Box::new(a.clone())),
            SymbolFunction::Scaled(be, Box::new(b.clone())),
        ]);
        let lhs = lab.synthesize(&mix).unwrap();
        let rhs = lab.synthesize(&a).unwrap()
            .linear_combination(Complex64::new(al, 0.0), &lab.synthesize(&b).unwrap(), Complex64::new(be, 0.0))
            .unwrap();
        let scale = lab.synthesize(&a).unwrap().max_abs() * al.abs() + lab.synthesize(&b).unwrap().max_abs() * be.abs();
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((x - y).norm() <= 1e-10 * scale.max(1e-300));
        }
        prop_assert!(lhs.imaginary_ratio() == 0.0);
    }

    #[test]
    fn packet_at_origin_is_the_plancherel_integral(beta in 0.3..2.0f64) {
        let lab = small_lab();
        let a = SymbolFunction::gaussian(beta);
        let psi = lab.synthesize(&a).unwrap();
        // trapezoid rule on the closed-form density, independently of the table
        let h = lab.lambda_step();
        let mut sum = 0.0;
        for j in 0..lab.config().n_lambda {
            let l = lab.lambda(j);
            let w = if j == 0 { 0.5 * h } else { h };
            sum += w * (-beta * l * l).exp() * 0.5 * std::f64::consts::PI * l * (0.5 * std::f64::consts::PI * l).tanh();
        }
        prop_assert!((psi.values()[0].re - sum).abs() <= 1e-12 * sum);
        let phi = spherical_phi_fixed(SpectralParameter::real(0.0), 1.0);
        prop_assert!(phi.re > 0.0);
    }
}
