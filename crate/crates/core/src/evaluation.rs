//! Accuracy and usability measures, the Wilcoxon signed-rank test, weight
//! analysis and report emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::matcher::WeightConfig;
use crate::metrics::{MetricGroup, MetricId};
use crate::schema::{DataType, TargetSchema};
use crate::table::DataTable;

/// Precision, recall and F1 with the counts they came from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Prf {
    /// Zero denominators give 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UsabilityReport {
    pub column_count: usize,
    pub row_count: usize,
    pub null_cells: usize,
    pub null_fraction: f64,
    pub per_column_null_fraction: BTreeMap<String, f64>,
    /// Set when the table has no rows; `null_fraction` is then 0.
    pub empty: bool,
}

pub fn usability(table: &DataTable) -> UsabilityReport {
    let rows = table.row_count();
    let mut per_column = vec![0usize; table.col_count()];
    for row in &table.rows {
        for (c, cell) in row.iter().enumerate() {
            if cell.is_none() {
                per_column[c] += 1;
            }
        }
    }
    let null_cells: usize = per_column.iter().sum();
    let total = rows * table.col_count();
    let frac = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    UsabilityReport {
        column_count: table.col_count(),
        row_count: rows,
        null_cells,
        null_fraction: frac(null_cells, total),
        per_column_null_fraction: table
            .headers
            .iter()
            .zip(&per_column)
            .map(|(h, &n)| (h.clone(), frac(n, rows)))
            .collect(),
        empty: rows == 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilcoxonResult {
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    pub n_effective: usize,
    pub exact: bool,
}

/// Largest sample for which the exact null distribution is enumerated.
pub const WILCOXON_EXACT_MAX: usize = 20;

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped and tied magnitudes get average ranks. `W = min(W+, W−)`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "paired samples must be equal-length and non-empty, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(Error::NoNonzeroPairs);
    }
    diffs.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    let n = diffs.len();

    // doubled average ranks stay integral
    let mut ranks2 = vec![0u64; n];
    let mut tie_groups = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[j + 1].abs() == diffs[i].abs() {
            j += 1;
        }
        let r2 = (i + 1 + j + 1) as u64;
        ranks2[i..=j].fill(r2);
        tie_groups.push(j - i + 1);
        i = j + 1;
    }
    let plus2: u64 = diffs.iter().zip(&ranks2).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total2: u64 = ranks2.iter().sum();
    let minus2 = total2 - plus2;
    let w2 = plus2.min(minus2);

    let (p_value, exact) = if n <= WILCOXON_EXACT_MAX {
        // counts[s] = number of sign vectors whose positive-rank sum is s/2
        let mut counts = vec![0f64; total2 as usize + 1];
        counts[0] = 1.0;
        for &r in &ranks2 {
            for s in (r as usize..counts.len()).rev() {
                counts[s] += counts[s - r as usize];
            }
        }
        let hits: f64 = counts
            .iter()
            .enumerate()
            .filter(|(s, _)| (*s as u64).min(total2 - *s as u64) <= w2)
            .map(|(_, c)| c)
            .sum();
        ((hits / 2f64.powi(n as i32)).min(1.0), true)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie_term: f64 = tie_groups.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term).sqrt();
        let w = w2 as f64 / 2.0;
        let z = ((w - mean).abs() - 0.5).max(0.0) / sd;
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        ((2.0 * normal.cdf(-z)).min(1.0), false)
    };

    Ok(WilcoxonResult {
        statistic: w2 as f64 / 2.0,
        w_plus: plus2 as f64 / 2.0,
        w_minus: minus2 as f64 / 2.0,
        p_value,
        n_effective: n,
        exact,
    })
}

/// Average normalized metric weight per group for one data type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypeWeightGap {
    pub attributes: usize,
    pub schema_avg: f64,
    /// Absent when the type has no applicable instance metric.
    pub instance_avg: Option<f64>,
    pub gap: Option<f64>,
}

/// Attribute name, type, and schema / instance group means.
pub type GroupMeans = (String, DataType, Option<f64>, Option<f64>);

/// Per-attribute mean normalized weight of each metric group. Weights are
/// normalized jointly over all metrics applicable to the attribute.
pub fn attribute_group_means(
    config: &WeightConfig,
    schema: &TargetSchema,
) -> Result<Vec<GroupMeans>> {
    let mut out = Vec::new();
    for attr in &schema.attributes {
        let w = config.weights_for(&attr.name)?;
        let applicable = MetricId::applicable(attr.data_type);
        let total: f64 = applicable.iter().map(|&m| w.get(m)).sum();
        if total <= 0.0 {
            continue;
        }
        let mean = |group| {
            let ws: Vec<f64> = applicable
                .iter()
                .filter(|m| m.group() == group)
                .map(|&m| w.get(m) / total)
                .collect();
            (!ws.is_empty()).then(|| ws.iter().sum::<f64>() / ws.len() as f64)
        };
        out.push((
            attr.name.clone(),
            attr.data_type,
            mean(MetricGroup::Schema),
            mean(MetricGroup::Instance),
        ));
    }
    Ok(out)
}

pub fn weight_gap_analysis(
    config: &WeightConfig,
    schema: &TargetSchema,
) -> Result<BTreeMap<DataType, TypeWeightGap>> {
    let means = attribute_group_means(config, schema)?;
    let mut out = BTreeMap::new();
    for dt in DataType::ALL {
        let rows: Vec<_> = means.iter().filter(|r| r.1 == dt).collect();
        if rows.is_empty() {
            continue;
        }
        let avg = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
        let schema_avg = avg(rows.iter().filter_map(|r| r.2).collect()).unwrap_or(0.0);
        let instance_avg = avg(rows.iter().filter_map(|r| r.3).collect());
        out.insert(
            dt,
            TypeWeightGap {
                attributes: rows.len(),
                schema_avg,
                instance_avg,
                gap: instance_avg.map(|i| i - schema_avg),
            },
        );
    }
    Ok(out)
}

/// Signed-rank test of instance-group against schema-group mean weight,
/// paired per attribute that has both groups.
pub fn weight_wilcoxon(config: &WeightConfig, schema: &TargetSchema) -> Result<WilcoxonResult> {
    let (instance, schema_side): (Vec<f64>, Vec<f64>) = attribute_group_means(config, schema)?
        .into_iter()
        .filter_map(|(_, _, s, i)| Some((i?, s?)))
        .unzip();
    wilcoxon_signed_rank(&instance, &schema_side)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HybridResult {
    pub method: String,
    pub alpha: f64,
    pub theta: f64,
    pub score: Prf,
    pub usability: UsabilityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineResult {
    pub method: String,
    pub tau: f64,
    pub cluster_score: Prf,
    pub usability: UsabilityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightAnalysis {
    pub gaps: BTreeMap<DataType, TypeWeightGap>,
    /// `None` when every attribute has equal group means.
    pub wilcoxon: Option<WilcoxonResult>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonReport {
    pub hybrid: Vec<HybridResult>,
    pub baseline: Option<BaselineResult>,
    pub weight_analysis: Option<WeightAnalysis>,
}

impl ComparisonReport {
    /// JSON body with sorted keys; absent branches are the string "skipped".
    pub fn to_json(&self) -> serde_json::Value {
        let skipped = || serde_json::Value::String("skipped".into());
        serde_json::json!({
            "hybrid": if self.hybrid.is_empty() { skipped() } else { to(&self.hybrid) },
            "baseline": self.baseline.as_ref().map_or_else(skipped, to),
            "weight_analysis": self.weight_analysis.as_ref().map_or_else(skipped, to),
        })
    }

    /// Plain-text table: Method, F1, Precision, Recall, Compactness, Null %.
    pub fn summary_table(&self) -> String {
        let mut rows = vec![[
            "Method".to_string(),
            "F1".into(),
            "Precision".into(),
            "Recall".into(),
            "Compactness".into(),
            "Null %".into(),
        ]];
        let line = |name: &str, s: &Prf, u: &UsabilityReport| {
            [
                name.to_string(),
                format!("{:.3}", s.f1),
                format!("{:.3}", s.precision),
                format!("{:.3}", s.recall),
                u.column_count.to_string(),
                format!("{:.1}%", 100.0 * u.null_fraction),
            ]
        };
        for h in &self.hybrid {
            rows.push(line(&h.method, &h.score, &h.usability));
        }
        match &self.baseline {
            Some(b) => rows.push(line(&format!("{}*", b.method), &b.cluster_score, &b.usability)),
            None => rows.push([
                "baseline".into(),
                "skipped".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]),
        }
        let widths: Vec<usize> = (0..6)
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, r) in rows.iter().enumerate() {
            let cells: Vec<String> = r
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (s, w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
                .collect();
            writeln!(out, "{}", cells.join("  ").trim_end()).unwrap();
            if i == 0 {
                writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1))).unwrap();
            }
        }
        if self.baseline.is_some() {
            out.push_str("* baseline accuracy is pairwise over labelled column sets\n");
        }
        if let Some(w) = &self.weight_analysis {
            out.push_str("\nAverage normalized metric weight by data type\n");
            for (dt, g) in &w.gaps {
                let fmt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.3}"));
                writeln!(
                    out,
                    "{:<8} schema {:.3}  instance {}  gap {}",
                    dt.as_str(),
                    g.schema_avg,
                    fmt(g.instance_avg),
                    fmt(g.gap)
                )
                .unwrap();
            }
            if let Some(t) = &w.wilcoxon {
                writeln!(out, "Wilcoxon W = {:.1}, p = {:.5}, n = {}", t.statistic, t.p_value, t.n_effective).unwrap();
            }
        }
        out
    }
}

fn to<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("plain data serializes")
}

/// Write `report.json` and `report.txt` into `dir`.
pub fn emit_report(report: &ComparisonReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = dir.join("report.json");
    let mut body = serde_json::to_string_pretty(&report.to_json())?;
    body.push('\n');
    std::fs::write(&json, body).map_err(|e| Error::io(&json, e))?;
    let text = dir.join("report.txt");
    std::fs::write(&text, report.summary_table()).map_err(|e| Error::io(&text, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::MetricWeights;
    use crate::schema::bundled_schema;

    #[test]
    fn prf_arithmetic() {
        let p = Prf::from_counts(3, 1, 1);
        assert_eq!((p.precision, p.recall, p.f1), (0.75, 0.75, 0.75));
        assert_eq!(Prf::from_counts(0, 0, 4).f1, 0.0);
        assert_eq!(Prf::from_counts(4, 0, 0).f1, 1.0);
    }

    #[test]
    fn usability_counts() {
        let mut t = DataTable::new(vec!["a".into(), "b".into(), "c".into()]);
        t.rows.push(vec![Some("1".into()), None, Some("x".into())]);
        t.rows.push(vec![None, Some("2".into()), Some("y".into())]);
        let u = usability(&t);
        assert_eq!(u.column_count, 3);
        assert!((u.null_fraction - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(u.per_column_null_fraction["c"], 0.0);

        let mut one = DataTable::new(vec!["a".into()]);
        one.rows.push(vec![None]);
        assert_eq!(usability(&one).null_fraction, 1.0);
        let empty = usability(&DataTable::new(vec!["a".into()]));
        assert!(empty.empty);
        assert_eq!(empty.null_fraction, 0.0);
    }

    #[test]
    fn wilcoxon_worked_example() {
        let d = [1.0, -2.0, 3.0, -4.0, 5.0];
        let r = wilcoxon_signed_rank(&d, &[0.0; 5]).unwrap();
        assert_eq!((r.w_plus, r.w_minus, r.statistic), (9.0, 6.0, 6.0));
        assert!(r.exact);
        // 2^5 sign vectors; min(s, 15 − s) ≤ 6 holds for s ≤ 6 or s ≥ 9
        assert!((r.p_value - 26.0 / 32.0).abs() < 1e-15);
        assert!(matches!(
            wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::NoNonzeroPairs)
        ));
        assert!(wilcoxon_signed_rank(&[1.0], &[]).is_err());
    }

    #[test]
    fn wilcoxon_large_sample_uses_normal() {
        let a: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let r = wilcoxon_signed_rank(&a, &[0.0; 30]).unwrap();
        assert!(!r.exact);
        assert_eq!(r.statistic, 0.0);
        assert!(r.p_value < 1e-5);
    }

    #[test]
    fn uniform_weights_have_no_gap() {
        let schema = bundled_schema();
        let c = WeightConfig::per_attribute_uniform(&schema, 0.5, 0.5);
        let g = weight_gap_analysis(&c, &schema).unwrap();
        assert!(g[&DataType::Decimal].gap.unwrap().abs() < 1e-15);
        assert!(g[&DataType::Date].gap.unwrap().abs() < 1e-15);
        assert_eq!(g[&DataType::String].gap, None);
        assert!(matches!(weight_wilcoxon(&c, &schema), Err(Error::NoNonzeroPairs)));
    }

    #[test]
    fn concentrated_weight() {
        let mut schema = bundled_schema();
        schema.attributes.retain(|a| a.name == "office_area");
        let mut w = MetricWeights([0.0; 7]);
        w.set(MetricId::Ks, 1.0);
        let mut c = WeightConfig::per_attribute_uniform(&schema, 0.5, 0.5);
        c.weights.insert("office_area".into(), w);
        let g = weight_gap_analysis(&c, &schema).unwrap()[&DataType::Decimal];
        assert_eq!(g.schema_avg, 0.0);
        assert!((g.instance_avg.unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn report_json_and_table() {
        let mut t = DataTable::new(vec!["a".into()]);
        t.rows.push(vec![None]);
        let report = ComparisonReport {
            hybrid: vec![HybridResult {
                method: "hybrid-default".into(),
                alpha: 0.5,
                theta: 0.5,
                score: Prf::from_counts(3, 1, 1),
                usability: usability(&t),
            }],
            baseline: None,
            weight_analysis: None,
        };
        let j = report.to_json();
        assert_eq!(j["baseline"], "skipped");
        assert_eq!(j["hybrid"][0]["score"]["f1"], 0.75);
        let table = report.summary_table();
        assert!(table.starts_with("Method"));
        assert!(table.contains("100.0%"));
        let dir = tempfile::tempdir().unwrap();
        emit_report(&report, dir.path()).unwrap();
        let first = std::fs::read(dir.path().join("report.json")).unwrap();
        emit_report(&report, dir.path()).unwrap();
        assert_eq!(first, std::fs::read(dir.path().join("report.json")).unwrap());
    }
}
