//! Column-to-attribute similarity metrics. Every metric returns a score in
//! `[0, 1]`.
//!
//! Schema metrics compare the cleaned column header against the attribute name
//! and each synonym and keep the best match. Instance metrics look at the
//! column's cell values and are only defined for some attribute types; see
//! [`MetricId::applies_to`].

pub mod text;

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::ingest::{clean_tokens, parse_date, ColumnProfile};
use crate::schema::{AttributeSpec, DataType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    Levenshtein,
    Jaccard,
    Synonym,
    NumericType,
    DateType,
    Range,
    Ks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricGroup {
    Schema,
    Instance,
}

impl MetricId {
    pub const COUNT: usize = 7;

    pub const ALL: [MetricId; Self::COUNT] = [
        MetricId::Levenshtein,
        MetricId::Jaccard,
        MetricId::Synonym,
        MetricId::NumericType,
        MetricId::DateType,
        MetricId::Range,
        MetricId::Ks,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn group(self) -> MetricGroup {
        match self {
            MetricId::Levenshtein | MetricId::Jaccard | MetricId::Synonym => MetricGroup::Schema,
            _ => MetricGroup::Instance,
        }
    }

    /// Whether the metric is defined for attributes of `data_type`. Schema
    /// metrics always are; numeric metrics need DECIMAL, the date metric DATE.
    pub fn applies_to(self, data_type: DataType) -> bool {
        match self {
            MetricId::Levenshtein | MetricId::Jaccard | MetricId::Synonym => true,
            MetricId::NumericType | MetricId::Range | MetricId::Ks => data_type == DataType::Decimal,
            MetricId::DateType => data_type == DataType::Date,
        }
    }

    pub fn applicable(data_type: DataType) -> Vec<MetricId> {
        Self::ALL.into_iter().filter(|m| m.applies_to(data_type)).collect()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Levenshtein => "levenshtein",
            MetricId::Jaccard => "jaccard",
            MetricId::Synonym => "synonym",
            MetricId::NumericType => "numeric_type",
            MetricId::DateType => "date_type",
            MetricId::Range => "range",
            MetricId::Ks => "ks",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

/// One value per metric, indexed by [`MetricId`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricValues(pub [f64; MetricId::COUNT]);

impl Index<MetricId> for MetricValues {
    type Output = f64;

    fn index(&self, m: MetricId) -> &f64 {
        &self.0[m.index()]
    }
}

impl IndexMut<MetricId> for MetricValues {
    fn index_mut(&mut self, m: MetricId) -> &mut f64 {
        &mut self.0[m.index()]
    }
}

impl MetricValues {
    pub fn iter(&self) -> impl Iterator<Item = (MetricId, f64)> + '_ {
        MetricId::ALL.into_iter().map(move |m| (m, self[m]))
    }
}

fn best_candidate(attr: &AttributeSpec, score: impl Fn(&[String]) -> f64) -> f64 {
    attr.candidates()
        .map(|c| score(&clean_tokens(c)))
        .fold(0.0, f64::max)
}

pub fn sim_levenshtein(column: &ColumnProfile, attr: &AttributeSpec) -> f64 {
    best_candidate(attr, |cand| {
        text::normalized_levenshtein(&column.header_clean, &cand.join(" "))
    })
}

pub fn sim_jaccard(column: &ColumnProfile, attr: &AttributeSpec) -> f64 {
    best_candidate(attr, |cand| text::jaccard(&column.header_tokens, cand))
}

pub fn sim_synonym(column: &ColumnProfile, attr: &AttributeSpec) -> f64 {
    best_candidate(attr, |cand| {
        text::token_set_ratio(&column.header_tokens, cand) / 100.0
    })
}

/// `0.7 · HasDigit + 0.3 · StartsWithDigit` over non-missing cells.
pub fn sim_numeric_type(column: &ColumnProfile, attr: &AttributeSpec) -> f64 {
    if !MetricId::NumericType.applies_to(attr.data_type) {
        return 0.0;
    }
    numeric_likelihood(&column.values_nonmissing)
}

pub fn numeric_likelihood<S: AsRef<str>>(cells: &[S]) -> f64 {
    if cells.is_empty() {
        return 0.0;
    }
    let n = cells.len() as f64;
    let has_digit = cells
        .iter()
        .filter(|c| c.as_ref().chars().any(|ch| ch.is_ascii_digit()))
        .count() as f64;
    let starts_digit = cells
        .iter()
        .filter(|c| {
            c.as_ref()
                .trim_start()
                .chars()
                .next()
                .is_some_and(|ch| ch.is_ascii_digit())
        })
        .count() as f64;
    0.7 * (has_digit / n) + 0.3 * (starts_digit / n)
}

/// Fraction of non-missing cells that parse as dates.
pub fn sim_date_type(column: &ColumnProfile, attr: &AttributeSpec) -> f64 {
    if !MetricId::DateType.applies_to(attr.data_type) || column.values_nonmissing.is_empty() {
        return 0.0;
    }
    let dates = column
        .values_nonmissing
        .iter()
        .filter(|v| parse_date(v).is_some())
        .count();
    dates as f64 / column.values_nonmissing.len() as f64
}

/// Half mean proximity (in IQR units), half share of values inside `[q1, q3]`.
pub fn sim_range(column: &ColumnProfile, attr: &AttributeSpec) -> f64 {
    let (Some(profile), Some(mean)) = (decimal_profile(attr), column.mean) else {
        return 0.0;
    };
    let iqr = profile.iqr();
    let proximity = (1.0 - (mean - profile.mean).abs() / iqr).max(0.0);
    let inside = column
        .numeric_values
        .iter()
        .filter(|x| (profile.q1..=profile.q3).contains(*x))
        .count() as f64
        / column.numeric_values.len() as f64;
    (0.5 * proximity + 0.5 * inside).clamp(0.0, 1.0)
}

/// `1 − D` where `D` is the one-sample Kolmogorov–Smirnov statistic against
/// `Normal(mean, IQR / 1.349)`.
pub fn sim_ks(column: &ColumnProfile, attr: &AttributeSpec) -> f64 {
    let Some(profile) = decimal_profile(attr) else {
        return 0.0;
    };
    if column.numeric_values.is_empty() {
        return 0.0;
    }
    let target = Normal::new(profile.mean, profile.sigma()).expect("sigma is positive");
    1.0 - ks_statistic(&column.numeric_values, |x| target.cdf(x))
}

/// `sup_x |F_n(x) − F(x)|` for a continuous target CDF, evaluated on both
/// sides of every sample step.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).abs().max((i as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn decimal_profile(attr: &AttributeSpec) -> Option<crate::schema::NumericProfile> {
    match attr.data_type {
        DataType::Decimal => attr.numeric_profile,
        _ => None,
    }
}

/// All seven metrics for one (column, attribute) pair. Inapplicable metrics
/// are reported as 0.
pub fn compute_all(column: &ColumnProfile, attr: &AttributeSpec) -> MetricValues {
    let mut v = MetricValues::default();
    v[MetricId::Levenshtein] = sim_levenshtein(column, attr);
    v[MetricId::Jaccard] = sim_jaccard(column, attr);
    v[MetricId::Synonym] = sim_synonym(column, attr);
    v[MetricId::NumericType] = sim_numeric_type(column, attr);
    v[MetricId::DateType] = sim_date_type(column, attr);
    v[MetricId::Range] = sim_range(column, attr);
    v[MetricId::Ks] = sim_ks(column, attr);
    v
}
