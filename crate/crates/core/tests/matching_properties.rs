use proptest::prelude::*;

use schema_align::matcher::{assign, greedy_assign, MetricWeights, ScoreMatrix, WeightConfig, combine};
use schema_align::metrics::{MetricId, MetricValues};
use schema_align::schema::DataType;

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Best total over every partial injection of rows into columns, counting
/// only cells at or above the threshold.
fn brute_force(scores: &[f64], rows: usize, cols: usize, theta: f64) -> f64 {
    fn go(r: usize, used: &mut Vec<bool>, s: &[f64], rows: usize, cols: usize, theta: f64) -> f64 {
        if r == rows {
            return 0.0;
        }
        let mut best = go(r + 1, used, s, rows, cols, theta);
        for c in 0..cols {
            let v = s[r * cols + c];
            if !used[c] && v >= theta {
                used[c] = true;
                best = best.max(v + go(r + 1, used, s, rows, cols, theta));
                used[c] = false;
            }
        }
        best
    }
    go(0, &mut vec![false; cols], scores, rows, cols, theta)
}

fn matrix() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
        (Just(r), Just(c), prop::collection::vec(0.0f64..1.0, r * c))
    })
}

proptest! {
    #[test]
    fn assignment_is_optimal((rows, cols, scores) in matrix(), theta in 0.0f64..0.9) {
        let m = ScoreMatrix::from_scores(labels("c", rows), labels("a", cols), scores.clone(), theta);
        let got = assign(&m);
        let brute = brute_force(&scores, rows, cols, theta);
        prop_assert!((got.total_score() - brute).abs() <= 1e-9, "{} vs {brute}", got.total_score());
        prop_assert!(got.total_score() + 1e-12 >= greedy_assign(&m).total_score());
        for p in &got.pairs {
            prop_assert!(p.score >= theta);
        }
        let mut attrs: Vec<usize> = got.pairs.iter().map(|p| p.attribute).collect();
        attrs.sort_unstable();
        attrs.dedup();
        prop_assert_eq!(attrs.len(), got.pairs.len());
    }

    #[test]
    fn raising_threshold_never_raises_total((rows, cols, scores) in matrix(), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let at = |t| assign(&ScoreMatrix::from_scores(labels("c", rows), labels("a", cols), scores.clone(), t)).total_score();
        prop_assert!(at(hi) <= at(lo) + 1e-9);
    }

    #[test]
    fn assignment_follows_row_permutation((rows, cols, scores) in matrix(), shift in 0usize..5) {
        let shift = shift % rows;
        let perm: Vec<usize> = (0..rows).map(|r| (r + shift) % rows).collect();
        let mut permuted = vec![0.0; scores.len()];
        for (new, &old) in perm.iter().enumerate() {
            permuted[new * cols..(new + 1) * cols].copy_from_slice(&scores[old * cols..(old + 1) * cols]);
        }
        let a = assign(&ScoreMatrix::from_scores(labels("c", rows), labels("a", cols), scores.clone(), 0.3));
        let b = assign(&ScoreMatrix::from_scores(labels("c", rows), labels("a", cols), permuted, 0.3));
        prop_assert!((a.total_score() - b.total_score()).abs() <= 1e-9);
    }

    #[test]
    fn group_rescaling_leaves_scores_unchanged(
        values in prop::collection::vec(0.0f64..1.0, 7),
        weights in prop::collection::vec(0.05f64..1.0, 7),
        schema_scale in 0.1f64..1.0,
        instance_scale in 0.1f64..1.0,
        alpha in 0.0f64..1.0,
    ) {
        let mut v = MetricValues::default();
        let mut w = MetricWeights::uniform();
        let mut scaled = MetricWeights::uniform();
        for (i, m) in MetricId::ALL.into_iter().enumerate() {
            v[m] = values[i];
            w.set(m, weights[i]);
            let k = match m.group() {
                schema_align::metrics::MetricGroup::Schema => schema_scale,
                schema_align::metrics::MetricGroup::Instance => instance_scale,
            };
            scaled.set(m, weights[i] * k);
        }
        for dt in [DataType::String, DataType::Decimal, DataType::Date] {
            let a = combine(&v, &w, dt, alpha).hybrid;
            let b = combine(&v, &scaled, dt, alpha).hybrid;
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}

#[test]
fn default_config_is_uniform_global() {
    let c = WeightConfig::default();
    assert_eq!((c.alpha, c.theta), (0.5, 0.5));
    assert_eq!(c.global, MetricWeights::uniform());
}
