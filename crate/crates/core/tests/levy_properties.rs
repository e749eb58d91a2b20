//! Properties of ψ, Φ and the scale functions over randomly drawn models.

use parisian_core::scale::{ScaleFn, ScaleTable};
use parisian_core::{LevyModel, Phase};
use proptest::prelude::*;

fn model_strategy() -> impl Strategy<Value = LevyModel> {
    prop_oneof![
        (-1.0..1.0f64, 0.3..2.0f64).prop_map(|(mu, s)| LevyModel::brownian(mu, s).unwrap()),
        (0.5..3.0f64, 0.2..2.0f64, 0.5..3.0f64)
            .prop_map(|(c, lam, alpha)| LevyModel::cramer_lundberg(c, lam, vec![Phase { alpha, weight: 1.0 }]).unwrap()),
        (0.0..2.0f64, 0.3..1.5f64, 0.2..2.0f64, 0.5..3.0f64, 3.5..6.0f64, 0.1..0.9f64).prop_map(
            |(c, s, lam, a1, a2, w)| {
                let phases = vec![Phase { alpha: a1, weight: w }, Phase { alpha: a2, weight: 1.0 - w }];
                LevyModel::jump_diffusion(c, s, lam, phases).unwrap()
            }
        ),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_inverts_psi(m in model_strategy()) {
        for k in 0..=10 {
            let q = 1e-4 * 10f64.powf(5.0 * k as f64 / 10.0);
            let phi = m.phi(q).unwrap();
            let back = m.psi_real(phi);
            prop_assert!((back - q).abs() <= 1e-10 * q, "q={q}: psi(phi)={back}");
        }
    }

    #[test]
    fn phi_is_increasing(m in model_strategy(), q in 0.0..5.0f64, r in 0.01..5.0f64) {
        prop_assert!(m.phi(q + r).unwrap() > m.phi(q).unwrap());
    }

    #[test]
    fn psi_is_convex(m in model_strategy(), t1 in 0.0..5.0f64, d1 in 0.01..3.0f64, d2 in 0.01..3.0f64) {
        let (t2, t3) = (t1 + d1, t1 + d1 + d2);
        let lin = m.psi_real(t1) + (m.psi_real(t3) - m.psi_real(t1)) * d1 / (d1 + d2);
        prop_assert!(m.psi_real(t2) <= lin + 1e-12);
    }

    #[test]
    fn psi_prime_matches_finite_difference(m in model_strategy(), t in 0.0..5.0f64) {
        let h = 1e-6;
        let fd = (m.psi_real(t + h) - m.psi_real(t - h)) / (2.0 * h);
        let d = m.psi_prime_real(t);
        prop_assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0), "{fd} vs {d}");
    }

    #[test]
    fn z_theta_prime_matches_finite_difference(
        m in model_strategy(),
        q in 0.0..1.0f64,
        x in 0.05..5.0f64,
        theta in 0.0..2.0f64,
    ) {
        let s = ScaleFn::new(&m, q).unwrap();
        let h = 1e-5;
        let fd = (s.z_theta(x + h, theta).unwrap() - s.z_theta(x - h, theta).unwrap()) / (2.0 * h);
        let d = s.z_theta_prime(x, theta).unwrap();
        prop_assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0), "{fd} vs {d}");
    }

    #[test]
    fn negative_half_line_is_exact(m in model_strategy(), q in 0.0..1.0f64, x in -5.0..0.0f64, theta in 0.0..2.0f64) {
        let s = ScaleFn::new(&m, q).unwrap();
        prop_assert_eq!(s.w(x).unwrap(), 0.0);
        prop_assert_eq!(s.w_bar(x).unwrap(), 0.0);
        prop_assert_eq!(s.w_bar2(x).unwrap(), 0.0);
        prop_assert_eq!(s.z(x).unwrap(), 1.0);
        prop_assert_eq!(s.z_bar(x).unwrap(), x);
        prop_assert_eq!(s.z_theta(x, theta).unwrap(), (theta * x).exp());
    }

    #[test]
    fn tilted_scale_function_is_nondecreasing(m in model_strategy(), q in 0.0..1.0f64) {
        // Construction validates the envelope; check it again from the nodes.
        let t = ScaleTable::build(&m, q, 10.0, 0.01).unwrap();
        let phi = m.phi(q).unwrap();
        let mut prev = 0.0;
        for (i, w) in t.node_w().iter().enumerate() {
            let v = (-phi * t.node(i)).exp() * w;
            prop_assert!(v >= prev * (1.0 - 1e-9));
            prev = v;
        }
    }
}
