use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use poro_core::assembly::assemble_c_mass;
use poro_core::diagnostics::{convergence_rates, l2_error_scalar};
use poro_core::fem::{build_spaces, interpolate_scalar, SpacePair};
use poro_core::mesh::build_unit_square_mesh;
use poro_core::model::{derive_kappas, recover_pq, to_reformulated, PhysicalParams};
use poro_core::projections::{project_qh, project_sh};

fn spaces(n: usize) -> SpacePair {
    build_spaces(Arc::new(build_unit_square_mesh(n).unwrap()))
}

fn params(alpha: f64, lambda: f64, c0: f64) -> PhysicalParams {
    let mut p = PhysicalParams::from_young(1.0, 0.3, c0, alpha, 1.0, 1.0).unwrap();
    p.lambda = lambda;
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn kappa_identities(a in -6f64..6.0, l in -6f64..6.0, c in -6f64..6.0) {
        let (alpha, lambda, c0) = (10f64.powf(a), 10f64.powf(l), 10f64.powf(c));
        let k = derive_kappas(alpha, lambda, c0).unwrap();
        prop_assert!((k.k1 * alpha + k.k2 * c0 - 1.0).abs() <= 1e-12);
        prop_assert!((k.k1 * alpha + k.k3 * lambda - 1.0).abs() <= 1e-12);
        prop_assert!((k.k2 * alpha - k.k1 * lambda).abs() <= 1e-12 * k.k1 * lambda);
        prop_assert!((k.k1 * c0 - k.k3 * alpha).abs() <= 1e-12 * k.k1 * c0);
    }

    #[test]
    fn reformulation_round_trip(
        alpha in 0.1f64..1.0,
        lambda in 1e-4f64..2e5,
        c0 in 1e-5f64..1.0,
        p in prop::collection::vec(-1e3f64..1e3, 1..8),
        q in prop::collection::vec(-1e3f64..1e3, 8),
    ) {
        let pr = params(alpha, lambda, c0);
        let q = &q[..p.len()];
        let (xi, eta) = to_reformulated(&p, q, &pr);
        let (p2, q2) = recover_pq(&xi, &eta, &pr);
        for i in 0..p.len() {
            let scale = p[i].abs() + q[i].abs() + 1.0;
            prop_assert!((p2[i] - p[i]).abs() <= 1e-12 * scale);
            prop_assert!((q2[i] - q[i]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn rates_are_scale_invariant(
        e in prop::collection::vec(1e-8f64..1.0, 3),
        c in 1e-3f64..1e3,
        s in 1e-2f64..1e2,
    ) {
        let h = [0.4, 0.2, 0.1];
        let base = convergence_rates(&e, &h).unwrap();
        let scaled_e: Vec<f64> = e.iter().map(|v| c * v).collect();
        let scaled_h: Vec<f64> = h.iter().map(|v| s * v).collect();
        let r1 = convergence_rates(&scaled_e, &h).unwrap();
        let r2 = convergence_rates(&e, &scaled_h).unwrap();
        for i in 0..base.len() {
            let b = base[i].unwrap();
            prop_assert!((r1[i].unwrap() - b).abs() <= 1e-9 * (1.0 + b.abs()));
            prop_assert!((r2[i].unwrap() - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }
}

#[test]
fn rate_of_exact_power_law() {
    let h = [0.5, 0.25, 0.125];
    let e: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
    for r in convergence_rates(&e, &h).unwrap() {
        assert!((r.unwrap() - 2.0).abs() < 1e-12);
    }
    assert!(convergence_rates(&e[..1], &h[..1]).is_err());
    assert!(convergence_rates(&e, &[0.1, 0.2, 0.4]).is_err());
}

#[test]
fn discrete_norm_properties() {
    let sp = spaces(4);
    let mass = assemble_c_mass(&sp, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let zero = |_: [f64; 2]| 0.0;
    for _ in 0..50 {
        let a: Vec<f64> = (0..sp.num_scalar_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..sp.num_scalar_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s: f64 = rng.random_range(-3.0..3.0);
        let na = l2_error_scalar(&sp, &a, &zero);
        let nb = l2_error_scalar(&sp, &b, &zero);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let scaled: Vec<f64> = a.iter().map(|x| s * x).collect();
        assert!(na >= 0.0);
        assert!(l2_error_scalar(&sp, &sum, &zero) <= na + nb + 1e-12);
        assert!((l2_error_scalar(&sp, &scaled, &zero) - s.abs() * na).abs() <= 1e-12);
        // The quadrature norm agrees with the mass-matrix norm on M_h.
        assert!((mass.quad_form(&a).sqrt() - na).abs() <= 1e-12);
    }
}

#[test]
fn projections_are_linear_and_qh_is_stable() {
    let sp = spaces(5);
    let mass = assemble_c_mass(&sp, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let (a, b, w) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(0.5..4.0));
        let f = move |x: [f64; 2]| (w * x[0]).sin() + x[1] * x[1];
        let fg = move |x: [f64; 2]| [w * (w * x[0]).cos(), 2.0 * x[1]];
        let g = move |x: [f64; 2]| (x[0] * x[1] * w).exp();
        let gg = move |x: [f64; 2]| {
            let e = (x[0] * x[1] * w).exp();
            [w * x[1] * e, w * x[0] * e]
        };
        let comb = move |x: [f64; 2]| a * f(x) + b * g(x);
        let combg = move |x: [f64; 2]| {
            let (u, v) = (fg(x), gg(x));
            [a * u[0] + b * v[0], a * u[1] + b * v[1]]
        };
        let qf = project_qh(&sp, &f, "f").unwrap().coefficients;
        let qg = project_qh(&sp, &g, "g").unwrap().coefficients;
        let qc = project_qh(&sp, &comb, "c").unwrap().coefficients;
        let sf = project_sh(&sp, &f, &fg, "f").unwrap().coefficients;
        let sg = project_sh(&sp, &g, &gg, "g").unwrap().coefficients;
        let sc = project_sh(&sp, &comb, &combg, "c").unwrap().coefficients;
        for i in 0..qc.len() {
            assert!((qc[i] - a * qf[i] - b * qg[i]).abs() <= 1e-12 * (1.0 + qc[i].abs()));
            assert!((sc[i] - a * sf[i] - b * sg[i]).abs() <= 1e-12 * (1.0 + sc[i].abs()));
        }
        let exact_norm = l2_error_scalar(&sp, &vec![0.0; qf.len()], &f);
        assert!(mass.quad_form(&qf).sqrt() <= exact_norm + 1e-12);
        // A field already in M_h is reproduced.
        let lin = |x: [f64; 2]| 1.0 - 2.0 * x[0] + 0.5 * x[1];
        let ql = project_qh(&sp, &lin, "lin").unwrap().coefficients;
        for (x, y) in ql.iter().zip(interpolate_scalar(&sp, lin)) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}
