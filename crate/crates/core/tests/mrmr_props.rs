use arfault::features::FeatureId;
use arfault::mrmr::{discrete_mi, equal_frequency_bins, mutual_information, rank, ColumnId, FeatureMatrix};
use proptest::prelude::*;

fn labels() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..3, 30..120)
}

proptest! {
    #[test]
    fn mi_symmetric_and_nonnegative(y in labels(), seed in 0u64..1000, bins in 2usize..12) {
        let x: Vec<f64> = y.iter().enumerate().map(|(i, &c)| ((i as u64 * 2654435761 + seed) % 97) as f64 + c as f64 * 10.0).collect();
        let b = equal_frequency_bins(&x, bins);
        let a = discrete_mi(&b, &y);
        let s = discrete_mi(&y, &b);
        prop_assert!(a >= 0.0);
        prop_assert!((a - s).abs() < 1e-12);
        prop_assert_eq!(a, mutual_information(&x, &y, bins).unwrap());
    }

    #[test]
    fn rank_invariant_under_monotone_transform(
        y in labels(),
        cols in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 120), 3..6),
        k in 1usize..3,
    ) {
        let n = y.len();
        prop_assume!(y.iter().any(|&c| c != y[0]));
        let data: Vec<Vec<f64>> = cols.iter().map(|c| c[..n].to_vec()).collect();
        let ids: Vec<ColumnId> = (0..data.len()).map(|i| ColumnId::new(FeatureId::new(i as u16 + 1).unwrap(), None)).collect();
        let m = FeatureMatrix::new(ids.clone(), data.clone(), y.clone()).unwrap();
        let transformed: Vec<Vec<f64>> = data
            .iter()
            .enumerate()
            .map(|(j, c)| c.iter().map(|v| if j % 2 == 0 { v.exp() } else { 3.0 * v * v * v + v }).collect())
            .collect();
        let mt = FeatureMatrix::new(ids, transformed, y).unwrap();
        let r = rank(&m, k, 6).unwrap();
        let rt = rank(&mt, k, 6).unwrap();
        prop_assert_eq!(r.order(), rt.order());

        // The first pick is the standalone MI argmax.
        let best = (0..m.columns().len())
            .map(|i| (i, mutual_information(m.column(i), m.target(), 6).unwrap()))
            .fold((0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
        prop_assert_eq!(r.steps[0].column, m.columns()[best.0]);
    }
}
