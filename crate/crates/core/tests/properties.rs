use num_rational::BigRational;
use offload_core::objective::Cost;
use offload_core::{confidence_interval, ObjectiveWeights};
use proptest::prelude::*;

fn cost(lambda_quarters: u8, n: usize, drops: usize, terms: &[(i64, i64)]) -> Cost {
    let mut c = Cost::zero(ObjectiveWeights::new(f64::from(lambda_quarters) / 4.0).unwrap(), n);
    for _ in 0..drops {
        c.push_drop();
    }
    for &(w, s) in terms {
        c.push_wait(0, w, s).unwrap();
    }
    c
}

fn terms() -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((1i64..1000, 1i64..1000).prop_map(|(w, s)| (w.min(s), s)), 0..8)
}

proptest! {
    #[test]
    fn comparison_agrees_with_exact_order(
        lq in 0u8..=4, n in 1usize..20, da in 0usize..20, db in 0usize..20, ta in terms(), tb in terms()
    ) {
        let a = cost(lq, n, da.min(n), &ta);
        let b = cost(lq, n, db.min(n), &tb);
        prop_assert_eq!(a.compare(&b), a.exact().cmp(&b.exact()));
        prop_assert_eq!(a.compare(&b), b.compare(&a).reverse());
    }

    #[test]
    fn reordered_terms_are_equal(lq in 0u8..=4, t in terms()) {
        let a = cost(lq, 10, 3, &t);
        let mut rev = t.clone();
        rev.reverse();
        let b = cost(lq, 10, 3, &rev);
        prop_assert_eq!(a.compare(&b), core::cmp::Ordering::Equal);
        prop_assert!((a.value() - b.value()).abs() < 1e-12);
    }

    #[test]
    fn absorb_is_sum(t1 in terms(), t2 in terms()) {
        let mut a = cost(2, 6, 1, &t1);
        let b = cost(2, 6, 2, &t2);
        let sum: BigRational = a.exact() + b.exact();
        a.absorb(&b);
        prop_assert_eq!(a.exact(), sum);
    }

    #[test]
    fn interval_is_translation_invariant(xs in prop::collection::vec(-1e3f64..1e3, 2..40), shift in -1e3f64..1e3) {
        let a = confidence_interval(&xs, 0.95).unwrap();
        let moved: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let b = confidence_interval(&moved, 0.95).unwrap();
        prop_assert!((b.mean - a.mean - shift).abs() < 1e-9);
        prop_assert!((b.half_width - a.half_width).abs() < 1e-6 * (1.0 + a.half_width));
        prop_assert!(a.lower() <= a.mean && a.mean <= a.upper());
    }
}
