use proptest::prelude::*;

use schema_align::evaluation::{usability, wilcoxon_signed_rank, Prf, WILCOXON_EXACT_MAX};
use schema_align::table::DataTable;

/// Two-sided p by enumerating every sign vector over average ranks.
fn enumerate_p(diffs: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = diffs.iter().copied().filter(|x| *x != 0.0).collect();
    let ranks: Vec<f64> = d
        .iter()
        .map(|x| {
            let below = d.iter().filter(|y| y.abs() < x.abs()).count() as f64;
            let ties = d.iter().filter(|y| y.abs() == x.abs()).count() as f64;
            below + (ties + 1.0) / 2.0
        })
        .collect();
    let total: f64 = ranks.iter().sum();
    let plus: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let w = plus.min(total - plus);
    let n = d.len();
    let hits = (0u32..1 << n)
        .filter(|mask| {
            let p: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            p.min(total - p) <= w
        })
        .count();
    (plus, (hits as f64 / f64::from(1u32 << n)).min(1.0))
}

proptest! {
    #[test]
    fn exact_p_matches_enumeration(pairs in prop::collection::vec((-4i32..=4, -4i32..=4), 1..=10)) {
        let a: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let b: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        match wilcoxon_signed_rank(&a, &b) {
            Ok(r) => {
                let (plus, p) = enumerate_p(&diffs);
                prop_assert!(r.exact);
                prop_assert_eq!(r.w_plus, plus);
                prop_assert_eq!(r.p_value, p);
                let n = r.n_effective as f64;
                prop_assert_eq!(r.w_plus + r.w_minus, n * (n + 1.0) / 2.0);
                prop_assert_eq!(r.statistic, r.w_plus.min(r.w_minus));
            }
            Err(_) => prop_assert!(diffs.iter().all(|d| *d == 0.0)),
        }
    }

    #[test]
    fn rank_sum_identity_holds_for_large_samples(d in prop::collection::vec(-50i32..50, 21..60)) {
        let a: Vec<f64> = d.iter().map(|&x| f64::from(x)).collect();
        let b = vec![0.0; a.len()];
        if let Ok(r) = wilcoxon_signed_rank(&a, &b) {
            let n = r.n_effective as f64;
            prop_assert_eq!(r.w_plus + r.w_minus, n * (n + 1.0) / 2.0);
            prop_assert_eq!(r.exact, r.n_effective <= WILCOXON_EXACT_MAX);
            prop_assert!((0.0..=1.0).contains(&r.p_value));
        }
    }

    #[test]
    fn f1_is_harmonic_mean(tp in 0usize..50, fp in 0usize..50, fn_ in 0usize..50) {
        let s = Prf::from_counts(tp, fp, fn_);
        if s.precision + s.recall > 0.0 {
            let h = 2.0 * s.precision * s.recall / (s.precision + s.recall);
            prop_assert!((s.f1 - h).abs() <= 1e-12);
        } else {
            prop_assert_eq!(s.f1, 0.0);
        }
    }

    #[test]
    fn usability_counts_match_cell_scan(cells in prop::collection::vec(prop::collection::vec(prop::option::of("[a-c]{1,2}"), 3), 0..12)) {
        let mut table = DataTable::new(vec!["x".into(), "y".into(), "z".into()]);
        table.rows = cells.clone();
        let u = usability(&table);
        let nulls = cells.iter().flatten().filter(|c| c.is_none()).count();
        prop_assert_eq!(u.null_cells, nulls);
        prop_assert_eq!(u.row_count, cells.len());
        prop_assert_eq!(u.column_count, 3);
        if !cells.is_empty() {
            prop_assert_eq!(u.null_fraction, nulls as f64 / (3 * cells.len()) as f64);
        }
    }
}

#[test]
fn worked_example() {
    let r = wilcoxon_signed_rank(&[1.0, -2.0, 3.0, -4.0, 5.0], &[0.0; 5]).unwrap();
    assert_eq!((r.w_plus, r.w_minus, r.statistic), (9.0, 6.0, 6.0));
    assert_eq!(r.p_value, enumerate_p(&[1.0, -2.0, 3.0, -4.0, 5.0]).1);
}
