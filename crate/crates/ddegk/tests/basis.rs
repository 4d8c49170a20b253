mod common;

use ddegk::basis::{
    history_from_coeffs, koornwinder_coeffs, koornwinder_eval, koornwinder_norms_sq, legendre_eval,
    legendre_with_derivative, project_history, reconstruct_history, HistorySegment,
    KoornwinderBasis,
};
use ddegk::Error;

#[test]
fn legendre_values() {
    assert_eq!(legendre_eval(0, 0.37).unwrap(), 1.0);
    assert_eq!(legendre_eval(1, -0.5).unwrap(), -0.5);
    assert!((legendre_eval(2, 0.5).unwrap() + 0.125).abs() < 1e-15);
    let (_, d) = legendre_with_derivative(3, 0.2).unwrap();
    assert!((d - (7.5 * 0.04 - 1.5)).abs() < 1e-14);
    assert!(matches!(legendre_eval(2, 1.5), Err(Error::Domain(_))));
}

#[test]
fn koornwinder_values() {
    for n in 0..=10 {
        assert!((koornwinder_eval(n, 1.0).unwrap() - 1.0).abs() < 1e-12);
    }
    assert_eq!(koornwinder_eval(1, -1.0).unwrap(), -3.0);
    assert!((koornwinder_eval(2, 0.0).unwrap() + 3.5).abs() < 1e-14);
    assert!(matches!(koornwinder_eval(1, -1.01), Err(Error::Domain(_))));
}

#[test]
fn norm_lists() {
    assert_eq!(koornwinder_norms_sq(1), vec![2.0]);
    let polys = common::koornwinder_scaled(12);
    for (n, v) in koornwinder_norms_sq(13).iter().enumerate() {
        let (num, den) = common::koornwinder_inner_exact(&polys, n, n);
        assert!((v - num as f64 / den as f64).abs() < 1e-13 * v);
        assert!(*v > 1.0);
    }
}

#[test]
fn basis_invariants() {
    let b = KoornwinderBasis::new(1.58, 8).unwrap();
    for n in 0..8 {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        assert_eq!(b.left_values[n], sign * (n * n + n + 1) as f64);
    }
    assert!((b.a(1, 0) - 2.0).abs() < 1e-14);
    assert!((b.a(2, 0) - 4.5).abs() < 1e-13);
    assert!((b.a(2, 1) - 7.5).abs() < 1e-13);
    assert_eq!(b.a(2, 2), 0.0);
}

#[test]
fn rescaling_identity() {
    let b = KoornwinderBasis::new(1.58, 6).unwrap();
    for k in 0..100 {
        let theta = -1.58 * ((k as f64 * 0.618_033_988_7) % 1.0);
        for j in 0..6 {
            let direct = koornwinder_eval(j, 1.0 + 2.0 * theta / 1.58).unwrap();
            assert_eq!(b.eval_scaled(j, theta).unwrap(), direct);
        }
    }
    assert!(b.eval_scaled(0, 0.1).is_err());
}

#[test]
fn projection_examples() {
    let b = KoornwinderBasis::new(1.58, 6).unwrap();
    let zero = HistorySegment::constant(1.58, 0.0).unwrap();
    assert!(project_history(&zero, &b)
        .unwrap()
        .iter()
        .all(|z| *z == 0.0));
    let mut e0 = vec![0.0; 6];
    e0[0] = 1.0;
    assert_eq!(reconstruct_history(&e0, &b, -0.7).unwrap(), 1.0);
    let xi = [0.3, -0.1, 0.02, 0.5, -0.2, 0.01];
    let at0 = reconstruct_history(&xi, &b, 0.0).unwrap();
    assert!((at0 - xi.iter().sum::<f64>()).abs() < 1e-14);
    assert!(matches!(
        reconstruct_history(&xi, &b, -1.6),
        Err(Error::Domain(_))
    ));
}

#[test]
fn cubic_history_round_trip() {
    let tau = 1.58;
    let b = KoornwinderBasis::new(tau, 6).unwrap();
    let f = |t: f64| 0.2 - 0.5 * t + 0.3 * t * t + 0.1 * t * t * t;
    let phi = HistorySegment::from_fn(tau, 400, f, f(0.0)).unwrap();
    let zeta = project_history(&phi, &b).unwrap();
    for k in 0..=20 {
        let th = -tau * k as f64 / 20.0;
        assert!((reconstruct_history(&zeta, &b, th).unwrap() - f(th)).abs() < 1e-12);
    }
    assert!(zeta[4].abs() < 1e-13 && zeta[5].abs() < 1e-13);
}

#[test]
fn projection_left_inverse_of_reconstruction() {
    let b = KoornwinderBasis::new(2.0, 7).unwrap();
    // Cubic sampling is exact up to degree 3; higher modes carry
    // interpolation error of order h^4.
    for (xi, tol) in [
        ([0.1, -0.3, 0.05, 0.02, 0.0, 0.0, 0.0], 1e-12),
        ([0.1, -0.3, 0.05, 0.02, -0.01, 0.004, 0.001], 1e-7),
    ] {
        let phi = history_from_coeffs(&xi, &b, 200).unwrap();
        let back = project_history(&phi, &b).unwrap();
        for (a, c) in back.iter().zip(&xi) {
            assert!((a - c).abs() < tol, "{a} vs {c}");
        }
    }
}

#[test]
fn exact_coefficients_are_capped() {
    assert!(koornwinder_coeffs(20).is_ok());
    assert!(matches!(koornwinder_coeffs(21), Err(Error::Capability(_))));
}

#[test]
fn tau_mismatch_is_a_config_error() {
    let b = KoornwinderBasis::new(1.0, 3).unwrap();
    let phi = HistorySegment::constant(2.0, 1.0).unwrap();
    assert!(matches!(project_history(&phi, &b), Err(Error::Config(_))));
}

#[test]
fn basis_csv_layout() {
    let csv = KoornwinderBasis::new(1.0, 3).unwrap().to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "n,norm_sq,left_value,a_0,a_1");
    assert_eq!(lines.count(), 3);
}
