//! Hybrid scoring, thresholding, one-to-one assignment and projection into
//! the target layout.

pub mod hungarian;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{is_missing, parse_date, parse_numeric, profile_table, ColumnProfile, SourceTable};
use crate::metrics::{compute_all, MetricGroup, MetricId, MetricValues};
use crate::schema::{AttributeSpec, DataType, TargetSchema};
use crate::table::DataTable;

/// Raw (unnormalized) weight per metric. Serialized as a metric-name map;
/// metrics absent from the map weigh 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "BTreeMap<MetricId, f64>", into = "BTreeMap<MetricId, f64>")]
pub struct MetricWeights(pub [f64; MetricId::COUNT]);

impl MetricWeights {
    pub fn uniform() -> Self {
        MetricWeights([1.0; MetricId::COUNT])
    }

    pub fn get(&self, m: MetricId) -> f64 {
        self.0[m.index()]
    }

    pub fn set(&mut self, m: MetricId, w: f64) {
        self.0[m.index()] = w;
    }
}

impl Default for MetricWeights {
    fn default() -> Self {
        Self::uniform()
    }
}

impl From<BTreeMap<MetricId, f64>> for MetricWeights {
    fn from(map: BTreeMap<MetricId, f64>) -> Self {
        let mut w = [0.0; MetricId::COUNT];
        for (m, v) in map {
            w[m.index()] = v;
        }
        MetricWeights(w)
    }
}

impl From<MetricWeights> for BTreeMap<MetricId, f64> {
    fn from(w: MetricWeights) -> Self {
        MetricId::ALL.into_iter().map(|m| (m, w.get(m))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Global,
    PerAttribute,
}

/// Blend factor, threshold and metric weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub mode: WeightMode,
    pub alpha: f64,
    pub theta: f64,
    /// Weight vector shared by all attributes in [`WeightMode::Global`].
    #[serde(default)]
    pub global: MetricWeights,
    /// Per-attribute vectors, used in [`WeightMode::PerAttribute`].
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub weights: BTreeMap<String, MetricWeights>,
}

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_THETA: f64 = 0.5;

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig::global(DEFAULT_ALPHA, DEFAULT_THETA)
    }
}

impl WeightConfig {
    /// Uniform weights shared by every attribute.
    pub fn global(alpha: f64, theta: f64) -> Self {
        WeightConfig {
            mode: WeightMode::Global,
            alpha,
            theta,
            global: MetricWeights::uniform(),
            weights: BTreeMap::new(),
        }
    }

    /// Per-attribute mode with every attribute at the uniform vector.
    pub fn per_attribute_uniform(schema: &TargetSchema, alpha: f64, theta: f64) -> Self {
        WeightConfig {
            mode: WeightMode::PerAttribute,
            alpha,
            theta,
            global: MetricWeights::uniform(),
            weights: schema
                .names()
                .map(|n| (n.to_string(), MetricWeights::uniform()))
                .collect(),
        }
    }

    pub fn weights_for(&self, attribute: &str) -> Result<&MetricWeights> {
        match self.mode {
            WeightMode::Global => Ok(&self.global),
            WeightMode::PerAttribute => self
                .weights
                .get(attribute)
                .ok_or_else(|| Error::MissingWeights(attribute.to_string())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.alpha) {
            return Err(Error::validation("alpha", format!("{} is outside [0, 1]", self.alpha)));
        }
        if !unit(self.theta) {
            return Err(Error::validation("theta", format!("{} is outside [0, 1]", self.theta)));
        }
        let vectors = std::iter::once(("global", &self.global))
            .chain(self.weights.iter().map(|(k, v)| (k.as_str(), v)));
        for (name, w) in vectors {
            if w.0.iter().any(|&x| !unit(x)) {
                return Err(Error::validation(name, "metric weights must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn from_yaml(text: &str) -> Result<Self> {
        let config: WeightConfig = serde_yaml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_yaml(&self) -> Result<String> {
        Ok(serde_yaml::to_string(self)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScore {
    pub hybrid: f64,
    pub schema_part: f64,
    pub instance_part: f64,
    pub breakdown: MetricValues,
}

fn group_score(
    values: &MetricValues,
    weights: &MetricWeights,
    data_type: DataType,
    group: MetricGroup,
) -> f64 {
    let (num, den) = MetricId::ALL
        .into_iter()
        .filter(|m| m.group() == group && m.applies_to(data_type))
        .fold((0.0, 0.0), |(num, den), m| {
            let w = weights.get(m);
            (num + w * values[m], den + w)
        });
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Blend precomputed metric values into a hybrid score.
///
/// Each group is the weighted mean of its applicable metrics. An attribute
/// type with no applicable instance metric (STRING) is scored on the schema
/// group alone.
pub fn combine(
    values: &MetricValues,
    weights: &MetricWeights,
    data_type: DataType,
    alpha: f64,
) -> PairScore {
    let schema_part = group_score(values, weights, data_type, MetricGroup::Schema);
    let instance_part = group_score(values, weights, data_type, MetricGroup::Instance);
    let has_instance = MetricId::ALL
        .into_iter()
        .any(|m| m.group() == MetricGroup::Instance && m.applies_to(data_type));
    let hybrid = if has_instance {
        alpha * schema_part + (1.0 - alpha) * instance_part
    } else {
        schema_part
    };
    PairScore {
        hybrid: hybrid.clamp(0.0, 1.0),
        schema_part,
        instance_part,
        breakdown: *values,
    }
}

pub fn score_pair(
    column: &ColumnProfile,
    attr: &AttributeSpec,
    config: &WeightConfig,
) -> Result<PairScore> {
    let weights = config.weights_for(&attr.name)?;
    Ok(combine(&compute_all(column, attr), weights, attr.data_type, config.alpha))
}

/// Column × attribute hybrid scores with the below-threshold mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub columns: Vec<String>,
    pub attributes: Vec<String>,
    /// Row-major, `columns.len() × attributes.len()`.
    pub scores: Vec<f64>,
    /// `true` where the score is below `theta`; such cells are never assigned.
    pub mask: Vec<bool>,
    /// Raw metric values per cell; may be empty when built from bare scores.
    pub breakdown: Vec<MetricValues>,
    pub theta: f64,
}

impl ScoreMatrix {
    /// Build from bare scores, masking cells below `theta`.
    pub fn from_scores(
        columns: Vec<String>,
        attributes: Vec<String>,
        scores: Vec<f64>,
        theta: f64,
    ) -> Self {
        assert_eq!(scores.len(), columns.len() * attributes.len());
        let mask = scores.iter().map(|&s| s < theta).collect();
        ScoreMatrix {
            columns,
            attributes,
            scores,
            mask,
            breakdown: Vec::new(),
            theta,
        }
    }

    pub fn rows(&self) -> usize {
        self.columns.len()
    }

    pub fn cols(&self) -> usize {
        self.attributes.len()
    }

    pub fn score(&self, column: usize, attribute: usize) -> f64 {
        self.scores[column * self.cols() + attribute]
    }

    pub fn is_masked(&self, column: usize, attribute: usize) -> bool {
        self.mask[column * self.cols() + attribute]
    }

    fn breakdown_at(&self, column: usize, attribute: usize) -> MetricValues {
        self.breakdown
            .get(column * self.cols() + attribute)
            .copied()
            .unwrap_or_default()
    }
}

pub fn build_matrix(
    table: &SourceTable,
    schema: &TargetSchema,
    config: &WeightConfig,
) -> Result<ScoreMatrix> {
    build_matrix_from_profiles(&profile_table(table), schema, config)
}

pub fn build_matrix_from_profiles(
    profiles: &[ColumnProfile],
    schema: &TargetSchema,
    config: &WeightConfig,
) -> Result<ScoreMatrix> {
    let cols = schema.len();
    let mut scores = Vec::with_capacity(profiles.len() * cols);
    let mut breakdown = Vec::with_capacity(profiles.len() * cols);
    for profile in profiles {
        for attr in &schema.attributes {
            let s = score_pair(profile, attr, config)?;
            scores.push(s.hybrid);
            breakdown.push(s.breakdown);
        }
    }
    let mut matrix = ScoreMatrix::from_scores(
        profiles.iter().map(|p| p.header_raw.clone()).collect(),
        schema.names().map(str::to_string).collect(),
        scores,
        config.theta,
    );
    matrix.breakdown = breakdown;
    Ok(matrix)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappedPair {
    pub column: usize,
    pub source_column: String,
    pub attribute: usize,
    pub target_attribute: String,
    pub score: f64,
    pub breakdown: MetricValues,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MappingResult {
    /// Ordered by column index.
    pub pairs: Vec<MappedPair>,
    pub omitted_columns: Vec<usize>,
    pub unfilled_attributes: Vec<String>,
}

impl MappingResult {
    pub fn total_score(&self) -> f64 {
        self.pairs.iter().map(|p| p.score).sum()
    }

    pub fn attribute_of(&self, column: usize) -> Option<&str> {
        self.pairs
            .iter()
            .find(|p| p.column == column)
            .map(|p| p.target_attribute.as_str())
    }

    fn from_assignment(matrix: &ScoreMatrix, chosen: &[Option<usize>]) -> Self {
        let mut pairs = Vec::new();
        let mut omitted_columns = Vec::new();
        let mut filled = vec![false; matrix.cols()];
        for (column, choice) in chosen.iter().enumerate() {
            match choice {
                Some(attribute) => {
                    filled[*attribute] = true;
                    pairs.push(MappedPair {
                        column,
                        source_column: matrix.columns[column].clone(),
                        attribute: *attribute,
                        target_attribute: matrix.attributes[*attribute].clone(),
                        score: matrix.score(column, *attribute),
                        breakdown: matrix.breakdown_at(column, *attribute),
                    });
                }
                None => omitted_columns.push(column),
            }
        }
        let unfilled_attributes = matrix
            .attributes
            .iter()
            .zip(&filled)
            .filter(|(_, f)| !**f)
            .map(|(a, _)| a.clone())
            .collect();
        MappingResult {
            pairs,
            omitted_columns,
            unfilled_attributes,
        }
    }
}

/// Maximum-total-score one-to-one assignment over unmasked cells.
///
/// The matrix is padded to square; cost is `1 − score` on unmasked cells and
/// `1` (a zero score) on masked and padded cells, which are dropped from the
/// result. Among equal-total assignments the one whose per-column attribute
/// indices are lexicographically smallest (unassigned counting as +∞) is
/// preferred, via pairwise exchange after the solve.
pub fn assign(matrix: &ScoreMatrix) -> MappingResult {
    let chosen = assign_indices(matrix);
    MappingResult::from_assignment(matrix, &chosen)
}

/// Like [`assign`] but returns only the attribute index chosen per column.
pub fn assign_indices(matrix: &ScoreMatrix) -> Vec<Option<usize>> {
    let (rows, cols) = (matrix.rows(), matrix.cols());
    let n = rows.max(cols);
    if rows == 0 {
        return Vec::new();
    }
    let value = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols && !matrix.is_masked(i, j) {
            matrix.score(i, j)
        } else {
            0.0
        }
    };
    let real = |i: usize, j: usize| i < rows && j < cols && !matrix.is_masked(i, j);

    let mut cost = vec![1.0; n * n];
    for i in 0..rows {
        for j in 0..cols {
            cost[i * n + j] = 1.0 - value(i, j);
        }
    }
    let mut assignment = hungarian::solve(&cost, n);

    let key = |i: usize, j: usize| if real(i, j) { j } else { usize::MAX };
    loop {
        let mut swapped = false;
        for i in 0..rows {
            for k in (i + 1)..n {
                let (ai, ak) = (assignment[i], assignment[k]);
                let before = value(i, ai) + value(k, ak);
                let after = value(i, ak) + value(k, ai);
                if (after - before).abs() > 1e-12 {
                    continue;
                }
                if (key(i, ak), key(k, ai)) < (key(i, ai), key(k, ak)) {
                    assignment.swap(i, k);
                    swapped = true;
                }
            }
        }
        if !swapped {
            break;
        }
    }

    (0..rows)
        .map(|i| real(i, assignment[i]).then_some(assignment[i]))
        .collect()
}

/// Column-by-column greedy comparator: each column, in order, takes its
/// highest-scoring unmasked attribute not already taken.
pub fn greedy_assign(matrix: &ScoreMatrix) -> MappingResult {
    let mut taken = vec![false; matrix.cols()];
    let chosen: Vec<Option<usize>> = (0..matrix.rows())
        .map(|i| {
            let best = (0..matrix.cols())
                .filter(|&j| !taken[j] && !matrix.is_masked(i, j))
                .fold(None, |best: Option<usize>, j| match best {
                    Some(b) if matrix.score(i, b) >= matrix.score(i, j) => Some(b),
                    _ => Some(j),
                });
            if let Some(j) = best {
                taken[j] = true;
            }
            best
        })
        .collect();
    MappingResult::from_assignment(matrix, &chosen)
}

/// A value that could not be normalized into its target type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellWarning {
    pub row: usize,
    pub source_column: String,
    pub target_attribute: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub table: DataTable,
    pub warnings: Vec<CellWarning>,
}

/// Rewrite a source table into the schema's column layout. Mapped values are
/// normalized (plain decimals, ISO dates, trimmed strings); everything else
/// is null.
pub fn project_table(
    table: &SourceTable,
    schema: &TargetSchema,
    mapping: &MappingResult,
) -> Projection {
    let source_of: Vec<Option<usize>> = schema
        .attributes
        .iter()
        .map(|a| {
            mapping
                .pairs
                .iter()
                .find(|p| p.target_attribute == a.name)
                .map(|p| p.column)
        })
        .collect();

    let mut out = DataTable::new(schema.names().map(str::to_string).collect());
    let mut warnings = Vec::new();
    for (r, row) in table.cells.iter().enumerate() {
        let projected = schema
            .attributes
            .iter()
            .zip(&source_of)
            .map(|(attr, src)| {
                let c = (*src)?;
                let raw = row[c].trim();
                if is_missing(raw) {
                    return None;
                }
                let normalized = normalize_cell(raw, attr.data_type);
                if normalized.is_none() {
                    warnings.push(CellWarning {
                        row: r,
                        source_column: table.headers[c].clone(),
                        target_attribute: attr.name.clone(),
                        value: raw.to_string(),
                    });
                }
                normalized
            })
            .collect();
        out.rows.push(projected);
    }
    Projection {
        table: out,
        warnings,
    }
}

fn normalize_cell(raw: &str, data_type: DataType) -> Option<String> {
    match data_type {
        DataType::String => Some(raw.to_string()),
        DataType::Decimal => parse_numeric(raw).map(|v| format!("{v}")),
        DataType::Date => parse_date(raw).map(|d| d.format("%Y-%m-%d").to_string()),
    }
}

/// Mapping file body: sorted keys, metric breakdown per pair.
pub fn mapping_json(document: &str, format_id: &str, mapping: &MappingResult, columns: &[String]) -> serde_json::Value {
    let pairs: Vec<serde_json::Value> = mapping
        .pairs
        .iter()
        .map(|p| {
            let breakdown: serde_json::Map<String, serde_json::Value> = p
                .breakdown
                .iter()
                .map(|(m, v)| (m.as_str().to_string(), serde_json::json!(v)))
                .collect();
            serde_json::json!({
                "source_column": p.source_column,
                "target_attribute": p.target_attribute,
                "score": p.score,
                "breakdown": breakdown,
            })
        })
        .collect();
    let omitted: Vec<&str> = mapping
        .omitted_columns
        .iter()
        .map(|&c| columns[c].as_str())
        .collect();
    serde_json::json!({
        "document": document,
        "format_id": format_id,
        "pairs": pairs,
        "omitted_columns": omitted,
        "unfilled_attributes": mapping.unfilled_attributes,
    })
}
