mod common;

use ddegk::basis::{
    derivative_coefficients, history_from_coeffs, koornwinder_eval, project_history,
    reconstruct_history, HistorySegment, KoornwinderBasis,
};
use ddegk::cases::{self, Case, InitSource, HORIZON, MU, TAU};
use ddegk::dde::{evaluate_cost, integrate_dde, ControlSignal, DdeModel};
use ddegk::diagnostics::{compare_controls, theorem_bound, BoundConstants};
use ddegk::galerkin::{build_gk, eigen_project_2d, eigen_project_2d_scaled, integrate_reduced};
use ddegk::hjb::{eno2_gradients, lf_hamiltonian, solve_hjb, GridSpec, Hamiltonian2};
use ddegk::quad::{gauss_legendre, simpson, simpson_uniform};
use ddegk::{Exec, ReducedSystem};
use nalgebra::Complex;
use proptest::prelude::*;

fn projected() -> ReducedSystem {
    let phi = cases::initial_history(InitSource::Printed, TAU, HORIZON).unwrap();
    cases::case_system(Case::Wright2Proj, &cases::model(TAU).unwrap(), &phi).unwrap()
}

fn six_mode() -> ReducedSystem {
    let phi = cases::initial_history(InitSource::Printed, TAU, HORIZON).unwrap();
    cases::case_system(Case::Wright6, &cases::model(TAU).unwrap(), &phi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn orthogonality_in_the_weighted_product(m in 0usize..12, n in 0usize..12) {
        // (1/2) int K_m K_n ds + K_m(1) K_n(1) by Gauss-Legendre, exact for degree <= 2 * 13 - 1.
        let (x, w) = gauss_legendre(13);
        let mut ip = 1.0;
        for (xi, wi) in x.iter().zip(&w) {
            ip += 0.5 * wi * koornwinder_eval(m, *xi).unwrap() * koornwinder_eval(n, *xi).unwrap();
        }
        let l = (n * n + n + 1) as f64;
        let norm = (l * l + 1.0) / (2 * n + 1) as f64;
        if m == n {
            prop_assert!((ip - norm).abs() < 1e-11 * norm);
        } else {
            prop_assert!(ip.abs() < 1e-10 * norm);
        }
    }

    #[test]
    fn rescaled_basis_is_a_pure_change_of_variable(tau in 0.2f64..3.0, frac in 0.0f64..1.0, j in 0usize..10) {
        let b = KoornwinderBasis::new(tau, 10).unwrap();
        let theta = -tau * frac;
        prop_assert_eq!(b.eval_scaled(j, theta).unwrap(), koornwinder_eval(j, 1.0 + 2.0 * theta / tau).unwrap());
    }

    #[test]
    fn derivative_identity(n in 1usize..12, s in -1.0f64..1.0) {
        let polys = common::koornwinder_scaled(n);
        let exact = common::scaled_eval(&common::scaled_derivative(&polys[n]), n, s);
        let a = derivative_coefficients(n + 1).unwrap();
        let sum: f64 = (0..n).map(|k| a[n][k] * koornwinder_eval(k, s).unwrap()).sum();
        prop_assert!((sum - exact).abs() < 1e-8 * (1.0 + exact.abs()), "{} vs {}", sum, exact);
    }

    #[test]
    fn projection_recovers_low_degree_coefficients(xi in prop::collection::vec(-1.0f64..1.0, 4), tau in 0.5f64..2.5) {
        let b = KoornwinderBasis::new(tau, 6).unwrap();
        let mut full = xi.clone();
        full.resize(6, 0.0);
        let phi = history_from_coeffs(&full, &b, 120).unwrap();
        let back = project_history(&phi, &b).unwrap();
        for (a, c) in back.iter().zip(&full) {
            prop_assert!((a - c).abs() < 1e-11);
        }
        let theta = -0.37 * tau;
        let direct: f64 = (0..6).map(|j| full[j] * b.eval_scaled(j, theta).unwrap()).sum();
        prop_assert!((reconstruct_history(&full, &b, theta).unwrap() - direct).abs() < 1e-13);
    }

    #[test]
    fn projection_is_linear(a in -2.0f64..2.0, c in -2.0f64..2.0, w in 0.5f64..4.0) {
        let b = KoornwinderBasis::new(TAU, 8).unwrap();
        let f = |t: f64| (w * t).sin();
        let g = |t: f64| t * t - 0.3;
        let phi_f = HistorySegment::from_fn(TAU, 200, f, f(0.0)).unwrap();
        let phi_g = HistorySegment::from_fn(TAU, 200, g, g(0.0)).unwrap();
        let mix = |t: f64| a * f(t) + c * g(t);
        let phi = HistorySegment::from_fn(TAU, 200, mix, mix(0.0)).unwrap();
        let (zf, zg, z) = (
            project_history(&phi_f, &b).unwrap(),
            project_history(&phi_g, &b).unwrap(),
            project_history(&phi, &b).unwrap(),
        );
        for j in 0..8 {
            prop_assert!((z[j] - a * zf[j] - c * zg[j]).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn eigen_projection_scale_invariance(re in -3.0f64..3.0, im in -3.0f64..3.0) {
        prop_assume!(re.hypot(im) > 1e-2);
        let sys = six_mode();
        let u = ControlSignal::function(HORIZON, |t| 0.03 * (1.1 * t).cos());
        let base = integrate_reduced(&eigen_project_2d(&sys).unwrap(), &u, HORIZON, 0.02).unwrap();
        let p = eigen_project_2d_scaled(&sys, Complex::new(re, im)).unwrap();
        let run = integrate_reduced(&p, &u, HORIZON, 0.02).unwrap();
        for (x, y) in run.output.iter().zip(&base.output) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        prop_assert!((evaluate_cost(&run, &u, MU).unwrap() - evaluate_cost(&base, &u, MU).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn nested_linear_blocks(n in 1usize..8, extra in 1usize..6) {
        let model = DdeModel::wright(TAU).unwrap();
        let big = build_gk(&model, &KoornwinderBasis::new(TAU, n + extra).unwrap(), n + extra).unwrap();
        let small = build_gk(&model, &KoornwinderBasis::new(TAU, n).unwrap(), n).unwrap();
        for j in 0..n {
            for k in 0..n {
                prop_assert_eq!(small.linear[(j, k)], big.linear[(j, k)]);
            }
        }
    }

    #[test]
    fn serial_and_parallel_hjb_agree_bitwise(lo in -0.05f64..-0.02, span in 0.04f64..0.08) {
        let sys = projected();
        let grid = GridSpec::new([lo; 2], [lo + span; 2], [span / 20.0; 2], 2e-4, 0.05, [1.5, 1.5], 5).unwrap();
        let a = solve_hjb(&sys, MU, &grid, Exec::Serial).unwrap();
        let b = solve_hjb(&sys, MU, &grid, Exec::Parallel).unwrap();
        prop_assert_eq!(a.slices, b.slices);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hamiltonian_is_the_minimum_over_controls(
        e0 in -0.05f64..0.05, e1 in -0.05f64..0.05,
        p0 in -3.0f64..3.0, p1 in -3.0f64..3.0,
        u in -10.0f64..10.0,
    ) {
        let h = Hamiltonian2::new(&projected(), MU).unwrap();
        let (e, p) = ([e0, e1], [p0, p1]);
        let f = h.drift(e);
        let at_u = h.running(e) + (f[0] + h.alpha[0] * u) * p[0] + (f[1] + h.alpha[1] * u) * p[1] + 0.5 * MU * u * u;
        prop_assert!(h.eval(e, p) <= at_u + 1e-14);
        let us = h.control(p);
        let at_opt = h.running(e) + (f[0] + h.alpha[0] * us) * p[0] + (f[1] + h.alpha[1] * us) * p[1] + 0.5 * MU * us * us;
        prop_assert!((h.eval(e, p) - at_opt).abs() < 1e-14);
    }

    #[test]
    fn lax_friedrichs_reduces_to_h_on_equal_momenta(
        e0 in -0.05f64..0.05, e1 in -0.05f64..0.05,
        p0 in -3.0f64..3.0, p1 in -3.0f64..3.0,
        nu in 0.0f64..5.0,
    ) {
        let h = Hamiltonian2::new(&projected(), MU).unwrap();
        let (e, p) = ([e0, e1], [p0, p1]);
        prop_assert_eq!(lf_hamiltonian(|a, b| h.eval(a, b), e, p, p, [nu, nu]), h.eval(e, p));
        // Upwind dissipation only lowers the value when p+ exceeds p-.
        let up = lf_hamiltonian(|a, b| h.eval(a, b), e, [p0 + 0.1, p1], [p0 - 0.1, p1], [nu, nu]);
        let mid = lf_hamiltonian(|a, b| h.eval(a, b), e, [p0 + 0.1, p1], [p0 - 0.1, p1], [0.0, 0.0]);
        prop_assert!((up - (mid - 0.1 * nu)).abs() < 1e-12);
    }

    #[test]
    fn eno_is_exact_on_quadratics(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, d in -5.0f64..5.0) {
        let g = GridSpec::new([-1.0; 2], [1.0; 2], [0.1; 2], 1e-3, 0.01, [1.0; 2], 1).unwrap();
        let v = |e: [f64; 2]| a * e[0] * e[0] + b * e[0] * e[1] + c * e[1] * e[1] + d * e[0];
        let mut slice = Vec::new();
        for k in 0..g.points[0] {
            for l in 0..g.points[1] {
                slice.push(v(g.node(k, l)));
            }
        }
        let eno = eno2_gradients(&slice, &g).unwrap();
        let p2 = g.points[1];
        for k in [2, 7, 12, 18] {
            for l in [2, 9, 18] {
                let e = g.node(k, l);
                let want = [2.0 * a * e[0] + b * e[1] + d, b * e[0] + 2.0 * c * e[1]];
                for got in [eno.plus[k * p2 + l], eno.minus[k * p2 + l]] {
                    prop_assert!((got[0] - want[0]).abs() < 1e-10 && (got[1] - want[1]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn bound_is_linear_in_the_residual(r in 0.0f64..10.0, k in 0.0f64..5.0, t in 0.0f64..4.0) {
        let c = BoundConstants::default();
        let b1 = theorem_bound(&c, 4.0, t, r);
        prop_assert!(b1 >= 0.0);
        prop_assert!((theorem_bound(&c, 4.0, t, k * r) - k * b1).abs() <= 1e-12 * (1.0 + k * b1));
    }

    #[test]
    fn simpson_is_exact_on_cubics(c0 in -2.0f64..2.0, c3 in -2.0f64..2.0, n in 1usize..20) {
        let f = |x: f64| c0 + c3 * x * x * x - x;
        let h = 2.0 / (2 * n) as f64;
        let ys: Vec<f64> = (0..=2 * n).map(|i| f(i as f64 * h)).collect();
        let exact = 2.0 * c0 + 4.0 * c3 - 2.0;
        prop_assert!((simpson_uniform(h, &ys) - exact).abs() < 1e-12);
        // Irregular abscissae with an odd trailing interval: exact on quadratics.
        let q = |x: f64| c0 + c3 * x * x - x;
        let t: Vec<f64> = (0..=2 * n + 1).map(|i| { let s = i as f64 / (2 * n + 1) as f64; 2.0 * s * (1.0 + s) / 2.0 }).collect();
        let y: Vec<f64> = t.iter().map(|x| q(*x)).collect();
        let exact_q = 2.0 * c0 + 8.0 * c3 / 3.0 - 2.0;
        prop_assert!((simpson(&t, &y) - exact_q).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn control_comparison_is_symmetric(a in -0.1f64..0.1, w in 0.1f64..3.0) {
        let u1 = ControlSignal::function(HORIZON, move |t| a * (w * t).sin());
        let u2 = ControlSignal::function(HORIZON, |t| 0.01 * t);
        let g12 = compare_controls(&u1, &u2, 200, None).unwrap();
        let g21 = compare_controls(&u2, &u1, 200, None).unwrap();
        prop_assert_eq!(g12, g21);
        prop_assert!(g12.l2 <= g12.sup * HORIZON.sqrt() + 1e-15);
    }

    #[test]
    fn cost_is_nonnegative_and_grows_with_control_weight(a in -0.2f64..0.2) {
        let model = DdeModel::wright(TAU).unwrap();
        let phi = HistorySegment::constant(TAU, 0.02).unwrap();
        let u = ControlSignal::function(HORIZON, move |t| a * (0.5 * t).cos());
        let tr = integrate_dde(&model, &phi, &u, HORIZON, TAU / 100.0).unwrap();
        let c1 = evaluate_cost(&tr, &u, MU).unwrap();
        let c2 = evaluate_cost(&tr, &u, 2.0 * MU).unwrap();
        prop_assert!(c1 >= 0.0 && c2 >= c1);
    }
}
