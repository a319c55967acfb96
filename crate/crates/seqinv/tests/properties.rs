//! Property tests for the structural invariants: metric axioms, quantizer
//! behavior, scaling homogeneity, and rate-exponent monotonicity.

use proptest::prelude::*;
use seqinv::net::NetSpec;
use seqinv::rates::rate_convolution;
use seqinv::seq::{l2_dist, CoefVec, EllipsoidSpec, MultiIndex};

fn coef_vec_strategy(max_index: u32) -> impl Strategy<Value = CoefVec> {
    proptest::collection::vec((0..=max_index, -3.0f64..3.0), 0..6).prop_map(|pairs| {
        CoefVec::from_pairs(
            pairs
                .into_iter()
                .map(|(j, v)| (MultiIndex::scalar(j), v)),
        )
    })
}

proptest! {
    #[test]
    fn l2_dist_is_a_metric(
        a in coef_vec_strategy(8),
        b in coef_vec_strategy(8),
        c in coef_vec_strategy(8),
    ) {
        prop_assert_eq!(l2_dist(&a, &a), 0.0);
        let ab = l2_dist(&a, &b);
        let ba = l2_dist(&b, &a);
        prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab));
        let ac = l2_dist(&a, &c);
        let cb = l2_dist(&c, &b);
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn weighted_norm_dominates_plain_norm(
        theta in coef_vec_strategy(10),
        s in 0.25f64..4.0,
    ) {
        let spec = EllipsoidSpec::new(1, s, 1.0).unwrap();
        prop_assert!(spec.weighted_norm_sq(&theta) >= theta.norm_sq() - 1e-12);
    }

    #[test]
    fn quantize_idempotent_and_bounded(
        y in coef_vec_strategy(12),
        delta in 0.05f64..0.9,
    ) {
        let spec = EllipsoidSpec::new(1, 2.0, 1.0).unwrap();
        let net = NetSpec::build(spec, delta).unwrap();
        let q1 = net.quantize(&y);
        let q2 = net.quantize(&q1);
        prop_assert_eq!(&q1, &q2);
        // Outputs sit on the grid within the box.
        for (i, j) in net.active().iter().enumerate() {
            let v = q1.get(j);
            prop_assert!(v.abs() <= net.bounds()[i] + 1e-12);
            let steps = v / net.eps();
            prop_assert!((steps - steps.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn quantize_commutes_with_power_of_two_scaling(
        y in coef_vec_strategy(8),
        log_c in -2i32..3,
    ) {
        // Powers of two scale floats exactly, so homogeneity of the
        // quadratic risk makes the scaled argmin bit-exact.
        let c = 2f64.powi(log_c);
        let spec = EllipsoidSpec::new(1, 2.0, 1.0).unwrap();
        let net = NetSpec::build(spec, 0.3).unwrap();
        let scaled = net.with_grid_scaled(c);
        prop_assert_eq!(scaled.quantize(&y.scale(c)), net.quantize(&y).scale(c));
    }

    #[test]
    fn mise_exponents_dimensionless_and_monotone(
        s in 0.3f64..6.0,
        q in 0.0f64..3.0,
        d in 1usize..4,
    ) {
        let e = rate_convolution(s, q, d).unwrap();
        prop_assert!(e > 0.0 && e < 1.0);
        prop_assert!(rate_convolution(s * 1.5, q, d).unwrap() > e);
        prop_assert!(rate_convolution(s, q + 0.5, d).unwrap() < e);
        prop_assert!(rate_convolution(s, q, d + 1).unwrap() < e);
    }
}
