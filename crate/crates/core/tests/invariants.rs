use proptest::prelude::*;
use segrand::oracle::pair_count;
use segrand::{
    adjusted_metrics, build_contingency, evaluate_pair, foreground_mask, relabel_compact, unadjusted_metrics,
    ContingencyTable, Degeneracy, EvalOptions, SegmentationMap,
};

fn pair() -> impl Strategy<Value = (Vec<u32>, Vec<u32>)> {
    (2usize..120, 1u32..10, 1u32..10)
        .prop_flat_map(|(m, kt, kp)| (prop::collection::vec(0..kt, m), prop::collection::vec(0..kp, m)))
}

fn table(truth: &[u32], pred: &[u32]) -> ContingencyTable {
    let t = SegmentationMap::from_flat(truth.to_vec()).unwrap();
    let p = SegmentationMap::from_flat(pred.to_vec()).unwrap();
    build_contingency(&t, &p, None).unwrap()
}

fn naive_square_sums(truth: &[u32], pred: &[u32]) -> (u128, u128, u128) {
    use std::collections::HashMap;
    let mut cells: HashMap<(u32, u32), u128> = HashMap::new();
    let mut rows: HashMap<u32, u128> = HashMap::new();
    let mut cols: HashMap<u32, u128> = HashMap::new();
    for (&t, &p) in truth.iter().zip(pred) {
        *cells.entry((t, p)).or_default() += 1;
        *rows.entry(t).or_default() += 1;
        *cols.entry(p).or_default() += 1;
    }
    let sq = |it: &mut dyn Iterator<Item = &u128>| it.map(|c| c * c).sum::<u128>();
    (
        sq(&mut cells.values()),
        sq(&mut rows.values()),
        sq(&mut cols.values()),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn square_sums_match_recount((truth, pred) in pair()) {
        let t = table(&truth, &pred);
        let (s, a, b) = naive_square_sums(&truth, &pred);
        prop_assert_eq!(t.sum_sq_cells(), s);
        prop_assert_eq!(t.row_sq_sum(), a);
        prop_assert_eq!(t.col_sq_sum(), b);
        prop_assert_eq!(t.total() as usize, truth.len());
    }

    #[test]
    fn transpose_swaps_precision_and_recall((truth, pred) in pair()) {
        let forward = adjusted_metrics(&table(&truth, &pred)).unwrap();
        let backward = adjusted_metrics(&table(&pred, &truth)).unwrap();
        prop_assert_eq!(forward.arp.value.to_bits(), backward.arr.value.to_bits());
        prop_assert_eq!(forward.arr.value.to_bits(), backward.arp.value.to_bits());
        prop_assert_eq!(forward.ari.value.to_bits(), backward.ari.value.to_bits());
        prop_assert_eq!(table(&truth, &pred).transpose(), table(&pred, &truth));
    }

    #[test]
    fn pixel_order_is_irrelevant((truth, pred) in pair(), seed in any::<u64>()) {
        let n = truth.len();
        let mut order: Vec<usize> = (0..n).collect();
        // Cheap deterministic shuffle.
        let mut state = seed | 1;
        for i in (1..n).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            order.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let t2: Vec<u32> = order.iter().map(|&i| truth[i]).collect();
        let p2: Vec<u32> = order.iter().map(|&i| pred[i]).collect();
        prop_assert_eq!(table(&truth, &pred), table(&t2, &p2));
    }

    #[test]
    fn relabelling_leaves_scores_unchanged((truth, pred) in pair(), offset in 1u32..1_000_000) {
        let before = adjusted_metrics(&table(&truth, &pred)).unwrap();
        let shifted: Vec<u32> = truth.iter().map(|&t| (t * 7919) + offset).collect();
        let compact = relabel_compact(&SegmentationMap::from_flat(pred.clone()).unwrap());
        let after = adjusted_metrics(&table(&shifted, compact.labels())).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn unadjusted_matches_pair_counts((truth, pred) in pair()) {
        let t = SegmentationMap::from_flat(truth.clone()).unwrap();
        let p = SegmentationMap::from_flat(pred.clone()).unwrap();
        let counts = pair_count(&t, &p, None).unwrap();
        let scores = unadjusted_metrics(&table(&truth, &pred)).unwrap();
        let (pn, pd) = counts.precision();
        let (rn, rd) = counts.recall();
        if pd > 0 {
            prop_assert!((scores.rp.value - pn as f64 / pd as f64).abs() < 1e-15);
        }
        if rd > 0 {
            prop_assert!((scores.rr.value - rn as f64 / rd as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn ari_is_harmonic_mean_and_bounded((truth, pred) in pair()) {
        let s = adjusted_metrics(&table(&truth, &pred)).unwrap();
        prop_assume!(s.degeneracy == Degeneracy::None);
        let (p, r, a) = (s.arp.value, s.arr.value, s.ari.value);
        prop_assert!(p <= 1.0 + 1e-12 && r <= 1.0 + 1e-12);
        if p + r != 0.0 {
            prop_assert!((a - 2.0 * p * r / (p + r)).abs() <= 1e-10);
        }
        prop_assert!(a <= p.max(r) + 1e-10 && a >= p.min(r) - 1e-10);
    }

    #[test]
    fn refinement_keeps_precision_at_one(truth in prop::collection::vec(0u32..6, 2..100), bits in any::<u64>()) {
        // Split every truth object on a pseudo-random bit: the prediction
        // only ever divides objects, never joins them.
        let pred: Vec<u32> = truth
            .iter()
            .enumerate()
            .map(|(i, &t)| t * 2 + ((bits >> (i % 64)) & 1) as u32)
            .collect();
        let s = adjusted_metrics(&table(&truth, &pred)).unwrap();
        prop_assert_eq!(s.arp.value, 1.0);
        let coarse = adjusted_metrics(&table(&pred, &truth)).unwrap();
        prop_assert_eq!(coarse.arr.value, 1.0);
    }

    #[test]
    fn foreground_equals_restricted_global((truth, pred) in pair()) {
        let t = SegmentationMap::from_flat(truth.clone()).unwrap();
        let p = SegmentationMap::from_flat(pred.clone()).unwrap();
        let mask = foreground_mask(&t, &[0]);
        prop_assume!(mask.kept_count() >= 2);
        let report = evaluate_pair(&t, &p, &EvalOptions::default()).unwrap();
        let kept: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] != 0).collect();
        let ft: Vec<u32> = kept.iter().map(|&i| truth[i]).collect();
        let fp: Vec<u32> = kept.iter().map(|&i| pred[i]).collect();
        let direct = adjusted_metrics(&table(&ft, &fp)).unwrap();
        prop_assert_eq!(report.fg_ari, Some(direct.ari));
        prop_assert_eq!(report.fg_arp, Some(direct.arp));
        prop_assert_eq!(report.fg_arr, Some(direct.arr));
    }
}
