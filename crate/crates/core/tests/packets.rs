use num_complex::Complex64;
use sl2lab::packets::{read_packet_csv, AngularFactor, Lab, Route, SymmetricSymbol, SynthesisConfig};
use sl2lab::radial::RadialFunction;
use sl2lab::transforms::relative_l2_difference;
use sl2lab::tube::{SymbolFunction, XiHat};
use sl2lab::LabError;
use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

fn frozen() -> &'static Lab {
    static LAB: OnceLock<Lab> = OnceLock::new();
    LAB.get_or_init(|| Lab::new(SynthesisConfig { kappa: Some(TAU), ..Default::default() }).unwrap())
}

#[test]
fn calibrated_kappa_is_two_pi() {
    let lab = Lab::new(SynthesisConfig::default()).unwrap();
    let cal = lab.calibration().unwrap();
    assert!((cal.kappa - TAU).abs() < 1e-6 * TAU, "kappa {}", cal.kappa);
    assert!(cal.residual < 1e-6);
}

#[test]
fn density_fit_matches_closed_form() {
    let lab = frozen();
    let d = lab.density().unwrap();
    for j in [0usize, 1, 40, 300, 700, 1023] {
        let l = lab.lambda(j);
        let closed = 0.5 * PI * l * (0.5 * PI * l).tanh();
        assert!((d[j] - closed).abs() <= 1e-9 * closed.max(1e-12), "j {j}: {} vs {closed}", d[j]);
    }
}

#[test]
fn synthesis_inverts_the_transform() {
    let lab = frozen();
    let f = RadialFunction::from_real_fn(lab.grid().to_vec(), |t| (1.0 + t * t) * (-2.0 * t * t).exp()).unwrap();
    let psi = lab.synthesize(&lab.transform_symbol(&f).unwrap()).unwrap();
    let back = psi.scaled(Complex64::new(1.0 / TAU, 0.0));
    assert!(relative_l2_difference(&back, &f, 0.0, 4.0).unwrap() < 1e-6);
    let proj = lab.projection(&f).unwrap();
    assert!(relative_l2_difference(&proj, &f, 0.0, 4.0).unwrap() < 1e-6);
}

#[test]
fn zero_symbol_gives_the_zero_packet() {
    let p = frozen().spherical_wave_packet(&SymbolFunction::Zero).unwrap();
    assert!(p.payload.is_identically_zero());
    assert!(p.to_csv().lines().filter(|l| !l.starts_with('#')).skip(1).all(|l| l.ends_with(",0.0,0.0")));
}

#[test]
fn csv_round_trip_is_exact() {
    let p = frozen().spherical_wave_packet(&SymbolFunction::gaussian(0.7)).unwrap();
    let text = p.to_csv();
    let (header, back) = read_packet_csv(&text).unwrap();
    assert_eq!(back, p.payload);
    let keys: Vec<&str> = header.iter().map(|(k, _)| k.as_str()).collect();
    assert_eq!(keys, ["symbol", "route", "quadrature", "kappa", "tolerances"]);
    assert_eq!(header[0].1, "gaussian(0.7)");
    assert_eq!(header[3].1, format!("{TAU:?}"));
    assert!(read_packet_csv("t,re\n0,1\n").is_err());
}

#[test]
fn trivial_weight_routes_agree() {
    let lab = frozen();
    let h = SymbolFunction::gaussian(0.5);
    let xi = XiHat::new(0, 2.0).unwrap();
    let plain = lab.spherical_wave_packet(&h).unwrap().payload;
    let direct = lab.canonical_wave_packet_direct(&h, &xi).unwrap();
    let fact = lab.canonical_wave_packet_factorized(&h, &xi).unwrap();
    assert_eq!(fact.route, Route::Factorized);
    for (a, b) in [(&direct.payload, &plain), (&fact.payload, &plain)] {
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).norm() <= 1e-12 * plain.max_abs());
        }
    }
}

#[test]
fn direct_and_factorized_routes_agree() {
    let lab = frozen();
    let h = SymbolFunction::gaussian(0.5);
    let xi = XiHat::new(1, 2.0).unwrap();
    let direct = lab.canonical_wave_packet_direct(&h, &xi).unwrap();
    let fact = lab.canonical_wave_packet_factorized(&h, &xi).unwrap();
    assert_eq!(direct.symbol, fact.symbol);
    let diff = relative_l2_difference(&direct.payload, &fact.payload, 0.2, 4.0).unwrap();
    assert!(diff < 1e-3, "route difference {diff}");
}

#[test]
fn slowly_decaying_symbols_are_rejected() {
    let err = frozen().synthesize(&SymbolFunction::Poly(vec![1.0])).unwrap_err();
    assert!(matches!(err, LabError::NotIntegrable { .. }), "{err}");
}

#[test]
fn factorized_route_respects_the_derivative_budget() {
    let xi = XiHat::new(3, 2.0).unwrap();
    let err = frozen().canonical_wave_packet_factorized(&SymbolFunction::gaussian(1.0), &xi).unwrap_err();
    assert!(matches!(err, LabError::DerivativeBudget { requested: 12, allowed: 8 }), "{err}");
}

#[test]
fn operator_identity_for_the_casimir() {
    // L psi_a = psi_{-(lambda^2 + 1) a}
    let check = frozen().operator_transform_check(&SymbolFunction::gaussian(0.5), &[0.0, 1.0]).unwrap();
    assert!(check.residual < 1e-3, "{}", check.residual);
}

#[test]
fn symmetric_packet_separates_angle_and_radius() {
    let lab = frozen();
    let s = SymbolFunction::gaussian(0.8);
    let sym = SymmetricSymbol { terms: vec![(AngularFactor::Cos(1), s.clone())] };
    let packet = lab.symmetric_wave_packet(&sym, 8).unwrap();
    let radial = lab.synthesize(&s).unwrap();
    for j in 0..8 {
        let c = packet.payload.angle(j).cos();
        for (x, y) in packet.payload.row(j).iter().zip(radial.values()) {
            assert!((x - y * c).norm() <= 1e-12 * radial.max_abs());
        }
    }
}
