//! Randomized property tests for the structural invariants that every
//! valid input must satisfy, regardless of magnitude or atom layout.

use laplace_deconv::distances::{hellinger_sq_laplace_shift, wasserstein_1d};
use laplace_deconv::measures::DiscreteMeasure;
use proptest::prelude::*;

fn measures(max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((-1.0f64..1.0, 0.01f64..1.0), 1..=max_atoms).prop_map(|pairs| {
        let total: f64 = pairs.iter().map(|(_, w)| w).sum();
        let (atoms, weights) = pairs
            .into_iter()
            .map(|(z, w)| (z, w / total))
            .unzip::<f64, f64, Vec<_>, Vec<_>>();
        DiscreteMeasure::new(atoms, weights, 1.0).expect("normalized inputs are valid")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn construction_normalizes_and_orders(g in measures(8)) {
        let sum: f64 = g.weights().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(g.atoms().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(g.weights().iter().all(|&w| w > 0.0));
        prop_assert!((g.interval_mass(-1.0, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_is_bit_exact(g in measures(8)) {
        let back = DiscreteMeasure::from_json(&g.to_json().unwrap()).unwrap();
        prop_assert_eq!(g.atoms(), back.atoms());
        prop_assert_eq!(g.weights(), back.weights());
        prop_assert_eq!(g.halfwidth(), back.halfwidth());
    }

    #[test]
    fn wasserstein_is_a_metric(
        g in measures(6),
        gp in measures(6),
        gq in measures(6),
        k in prop::sample::select(vec![1.0f64, 2.0, 4.0]),
    ) {
        let d_gg = wasserstein_1d(&g, &g, k).unwrap();
        prop_assert!(d_gg.abs() < 1e-12, "self distance {}", d_gg);

        let d1 = wasserstein_1d(&g, &gp, k).unwrap();
        let d2 = wasserstein_1d(&gp, &g, k).unwrap();
        prop_assert!((d1 - d2).abs() < 1e-10, "asymmetry {} vs {}", d1, d2);

        let d13 = wasserstein_1d(&g, &gq, k).unwrap();
        let d32 = wasserstein_1d(&gq, &gp, k).unwrap();
        prop_assert!(d1 <= d13 + d32 + 1e-10, "triangle: {} > {} + {}", d1, d13, d32);
    }

    #[test]
    fn wasserstein_nondecreasing_in_order(g in measures(6), gp in measures(6)) {
        let w1 = wasserstein_1d(&g, &gp, 1.0).unwrap();
        let w2 = wasserstein_1d(&g, &gp, 2.0).unwrap();
        let w4 = wasserstein_1d(&g, &gp, 4.0).unwrap();
        prop_assert!(w1 <= w2 + 1e-12 && w2 <= w4 + 1e-12, "{} {} {}", w1, w2, w4);
    }

    #[test]
    fn shift_hellinger_stays_in_bounds(theta in 0.0f64..5.0) {
        let h2 = hellinger_sq_laplace_shift(theta);
        prop_assert!(h2 >= 0.0 && h2 < 2.0);
        prop_assert!(h2 <= 2.0 * theta * theta);
        // monotone in the shift
        let h2_further = hellinger_sq_laplace_shift(theta + 0.1);
        prop_assert!(h2_further >= h2);
    }

    #[test]
    fn point_mass_wasserstein_is_displacement(
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
        k in prop::sample::select(vec![1.0f64, 2.0, 4.0]),
    ) {
        let g = DiscreteMeasure::point_mass(x, 1.0).unwrap();
        let gp = DiscreteMeasure::point_mass(y, 1.0).unwrap();
        let w = wasserstein_1d(&g, &gp, k).unwrap();
        prop_assert!((w - (x - y).abs()).abs() < 1e-12);
    }
}
