//! Property tests for the letter metrics, transport bounds and basis-state indexing.

use proptest::prelude::*;

use crate::pauli::ShadowState;
use crate::wasserstein::{ot_distance, product_w, CostKind, CostMode, DiagonalMixture};

fn state(n: usize) -> impl Strategy<Value = ShadowState> {
    (0..6usize.pow(n as u32)).prop_map(move |i| ShadowState::from_index(n, i))
}

fn mode() -> impl Strategy<Value = CostMode> {
    (prop_oneof![Just(CostKind::Hamming6), Just(CostKind::ExactSiteW1)], 1.0f64..4.0)
        .prop_map(|(kind, order)| CostMode::new(kind, order).expect("valid order"))
}

fn mixture(n: usize) -> impl Strategy<Value = DiagonalMixture> {
    prop::collection::btree_set(0..6usize.pow(n as u32), 1..5)
        .prop_flat_map(move |idx| {
            let len = idx.len();
            (Just(idx), prop::collection::vec(0.05f64..1.0, len))
        })
        .prop_map(move |(idx, w)| {
            let sum: f64 = w.iter().sum();
            let support = idx.into_iter().map(|i| ShadowState::from_index(n, i)).collect();
            DiagonalMixture::new(support, w.iter().map(|x| x / sum).collect()).expect("valid mixture")
        })
}

proptest! {
    #[test]
    fn product_metric_axioms(a in state(4), b in state(4), c in state(4), m in mode()) {
        let ab = product_w(&a, &b, m).unwrap();
        prop_assert_eq!(product_w(&a, &a, m).unwrap(), 0.0);
        prop_assert_eq!(ab, product_w(&b, &a, m).unwrap());
        prop_assert!(a == b || ab > 0.0);
        let via = product_w(&a, &c, m).unwrap() + product_w(&c, &b, m).unwrap();
        prop_assert!(ab <= via + 1e-12);
    }

    #[test]
    fn index_round_trip(n in 1usize..6, seed in any::<usize>()) {
        let idx = seed % 6usize.pow(n as u32);
        let w = ShadowState::from_index(n, idx);
        let back = w.letters().iter().fold(0usize, |acc, &l| acc * 6 + l as usize);
        prop_assert_eq!(back, idx);
        prop_assert_eq!(ShadowState::from_letters(&w.letters()).unwrap(), w);
    }

    #[test]
    fn transport_bounds_are_ordered_and_symmetric(p in mixture(2), q in mixture(2), alpha in 1.0f64..3.0) {
        let m = CostMode::hamming();
        let pq = ot_distance(&p, &q, m, alpha).unwrap();
        let qp = ot_distance(&q, &p, m, alpha).unwrap();
        prop_assert!(pq.lower >= -1e-12);
        prop_assert!(pq.lower <= pq.upper + 1e-9);
        prop_assert!((pq.lower - qp.lower).abs() <= 1e-9);
        prop_assert!(ot_distance(&p, &p, m, alpha).unwrap().lower.abs() <= 1e-9);
    }
}
