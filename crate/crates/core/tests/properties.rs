mod common;

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use baxter_lab::benzaid_lutz::{commutation_residual, v_matrix, y_iterate};
use baxter_lab::measure::{DensityRule, MeasureSpec};
use baxter_lab::params::ParameterSequence;
use baxter_lab::recurrence::{iterate, kappa_sequence, transfer_matrix, Flavor};
use baxter_lab::tauberian::tauberian_report_with;
use baxter_lab::toeplitz::sylvester_check;
use baxter_lab::C64;
use common::rel_vec;
use proptest::prelude::*;

fn complex(radius: f64) -> impl Strategy<Value = C64> {
    (0.0..=1.0f64, 0.0..TAU).prop_map(move |(s, t)| C64::from_polar(radius * s.sqrt(), t))
}

fn point(lo: f64, hi: f64) -> impl Strategy<Value = C64> {
    (lo..=hi, 0.0..TAU).prop_map(|(r, t)| C64::from_polar(r, t))
}

/// Decaying parameters `|alpha_k|, |beta_k| <= 0.9 k^{-0.6}`.
fn params(len: impl Into<prop::collection::SizeRange>) -> impl Strategy<Value = ParameterSequence> {
    prop::collection::vec((complex(0.9), complex(0.9)), len).prop_map(|pairs| {
        let decay = |k: usize| (k as f64 + 1.0).powf(-0.6);
        let alpha = pairs.iter().enumerate().map(|(k, p)| p.0 * decay(k)).collect();
        let beta = pairs.iter().enumerate().map(|(k, p)| p.1 * decay(k)).collect();
        ParameterSequence::explicit(alpha, beta).unwrap()
    })
}

fn trig_coefficients() -> impl Strategy<Value = BTreeMap<i64, C64>> {
    prop::collection::vec(complex(0.2), 6).prop_map(|cs| {
        [1i64, -1, 2, -2, 3, -3].iter().copied().zip(cs).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trig_moments_match_quadrature(coefficients in trig_coefficients(), k in -5i64..=5) {
        let spec = MeasureSpec::TrigDensity { coefficients };
        let exact = spec.moment(k).unwrap();
        let quad = spec.quadrature_moment(k, 256).unwrap();
        prop_assert!((exact - quad).norm() < 1e-13);
    }

    #[test]
    fn real_densities_have_conjugate_moments(
        radius in 0.0..0.9f64, angle in 0.0..TAU, k in 1i64..=8,
    ) {
        let spec = MeasureSpec::OpucDensity {
            rule: DensityRule::Poisson { radius, angle },
            nodes: 1024,
        };
        let (p, m) = (spec.moment(k).unwrap(), spec.moment(-k).unwrap());
        prop_assert!((p - m.conj()).norm() < 1e-13);
    }

    #[test]
    fn moments_are_linear(
        a in trig_coefficients(), b in trig_coefficients(),
        angle in 0.0..TAU, w in complex(1.0), k in -4i64..=4,
    ) {
        let (sa, sb) = (
            MeasureSpec::TrigDensity { coefficients: a },
            MeasureSpec::TrigDensity { coefficients: b },
        );
        let atom = MeasureSpec::lebesgue_plus_atom(angle, w);
        let sum = MeasureSpec::Sum { parts: vec![sa.clone(), sb.clone(), atom.clone()] };
        let want = sa.moment(k).unwrap() + sb.moment(k).unwrap() + atom.moment(k).unwrap();
        prop_assert!((sum.moment(k).unwrap() - want).norm() < 1e-13);
    }

    #[test]
    fn sylvester_holds_on_random_tables(
        values in prop::collection::vec(complex(0.5), 17), n in 1usize..=6,
    ) {
        let mut values = values;
        values[8] = C64::new(1.0, 0.0);
        let table = MeasureSpec::raw(&values).unwrap().moment_table(8).unwrap();
        prop_assert!(sylvester_check(&table, n).unwrap() < 1e-12);
    }

    #[test]
    fn monic_step_determinant(z in point(0.05, 2.0), p in params(8), n in 0usize..8) {
        let (a, b) = p.pair(n + 1).unwrap();
        let t = transfer_matrix(z, n, &p, Flavor::MonicPhi).unwrap();
        let want = z * (C64::new(1.0, 0.0) - a * b);
        prop_assert!((t.det() - want).norm() <= 1e-14 * (1.0 + want.norm()));
    }

    #[test]
    fn kappa_product(p in params(1..40)) {
        let n = 40;
        let k = kappa_sequence(&p, n).unwrap();
        let mut prod = C64::new(1.0, 0.0);
        for j in 1..=n {
            let (a, b) = p.pair(j).unwrap();
            prod *= C64::new(1.0, 0.0) - a * b;
            let inv_sq = (k.values[j] * k.values[j]).inv();
            prop_assert!((inv_sq - prod).norm() <= 1e-12 * prod.norm());
        }
    }

    #[test]
    fn swapping_twice_is_identity(p in params(1..20), n in 1usize..30) {
        prop_assert_eq!(p.swapped().swapped().pair(n).unwrap(), p.pair(n).unwrap());
        let (a, b) = p.pair(n).unwrap();
        prop_assert_eq!(p.swapped().pair(n).unwrap(), (b, a));
    }

    #[test]
    fn psi_is_phi_at_reciprocal_with_swapped_parameters(p in params(30), z in point(0.3, 1.5)) {
        let psi = iterate(z, &p, 30, Flavor::Psi).unwrap();
        let phi = iterate(z.inv(), &p.swapped(), 30, Flavor::Phi).unwrap();
        for n in 0..=30 {
            prop_assert!(rel_vec(psi.value(n), phi.value(n)) < 1e-12);
        }
    }

    #[test]
    fn commutation_relation(p in params(41..=80), z in complex(0.99)) {
        let cutoff = 40;
        for n in 0..cutoff {
            prop_assert!(commutation_residual(z, n, &p, cutoff).unwrap() < 1e-13);
        }
    }

    #[test]
    fn reconstruction_matches_direct_recurrence(p in params(1..150), z in complex(0.9)) {
        let traj = y_iterate(z, &p, 120, 300).unwrap();
        let direct = iterate(z, &p, 120, Flavor::MonicPhi).unwrap();
        for n in 0..=120 {
            let d = direct.value(n);
            let r = traj.reconstruct(n);
            let err = (r[0] - d[0]).norm() + (r[1] - d[1]).norm();
            prop_assert!(err <= 1e-10 * (d[0].norm() + d[1].norm()));
        }
    }

    #[test]
    fn growth_and_coordinate_bounds(
        p in params(1..200), z in complex(0.95), m in 0usize..256, len in 0usize..256,
    ) {
        let traj = y_iterate(z, &p, 512, 1024).unwrap();
        let n = (m + len).min(512);
        let (lhs, rhs) = traj.growth_bound(n);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        let (lhs, rhs) = traj.coordinate_bound(m, n);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn telescoping_bound(p in params(1..60), theta in 0.0..TAU, n in 0usize..60) {
        let v = v_matrix(C64::from_polar(1.0, theta), n, &p, 64).unwrap();
        prop_assert!(v.telescoping_lhs <= v.telescoping_rhs * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn absolute_partial_sums_are_monotone(p in params(1..300), theta in 0.0..TAU) {
        let coeffs = p.take(1024).unwrap();
        let rep = tauberian_report_with(theta, &coeffs, 512, 1024, &[0.5, 0.9], 64).unwrap();
        for series in [&rep.e_series, &rep.e_tilde_series] {
            prop_assert!(series.partial_sums.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}
