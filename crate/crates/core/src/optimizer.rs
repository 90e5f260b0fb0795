//! Grid search over α, θ and per-attribute metric weights, driven by a
//! precomputed metric tensor.

use std::collections::{BTreeMap, BTreeSet};

// Scale-equivalent weight vectors differ only by rounding in their margins.
const MARGIN_EPS: f64 = 1e-9;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::Prf;
use crate::ingest::{profile_table, Document};
use crate::matcher::{
    assign_indices, build_matrix_from_profiles, combine, MetricWeights, ScoreMatrix, WeightConfig,
    WeightMode, DEFAULT_ALPHA, DEFAULT_THETA,
};
use crate::metrics::{compute_all, MetricId, MetricValues};
use crate::schema::{DataType, TargetSchema};

/// Raw metric values for one document, `columns × attributes`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorDocument {
    pub id: String,
    pub format_id: String,
    pub columns: Vec<String>,
    values: Vec<MetricValues>,
}

impl TensorDocument {
    pub fn get(&self, column: usize, attribute: usize, n_attributes: usize) -> &MetricValues {
        &self.values[column * n_attributes + attribute]
    }
}

/// `[document, column, attribute, metric]` lookup of raw metric values.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTensor {
    pub documents: Vec<TensorDocument>,
    pub attributes: Vec<String>,
    pub data_types: Vec<DataType>,
}

impl MetricTensor {
    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn value(&self, doc: usize, column: usize, attribute: usize, metric: MetricId) -> f64 {
        self.documents[doc].get(column, attribute, self.n_attributes())[metric]
    }

    /// Number of stored metric values.
    pub fn len(&self) -> usize {
        self.documents
            .iter()
            .map(|d| d.values.len() * MetricId::COUNT)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Hybrid scores of one attribute for every column of a document.
    fn attribute_scores(&self, doc: usize, attribute: usize, weights: &MetricWeights, alpha: f64) -> Vec<f64> {
        let d = &self.documents[doc];
        (0..d.columns.len())
            .map(|c| {
                combine(
                    d.get(c, attribute, self.n_attributes()),
                    weights,
                    self.data_types[attribute],
                    alpha,
                )
                .hybrid
            })
            .collect()
    }

    /// Full row-major score grid of a document under `config`.
    fn document_scores(&self, doc: usize, config: &WeightConfig) -> Result<Vec<f64>> {
        let n_attr = self.n_attributes();
        let n_cols = self.documents[doc].columns.len();
        let mut scores = vec![0.0; n_cols * n_attr];
        for (a, name) in self.attributes.iter().enumerate() {
            let column = self.attribute_scores(doc, a, config.weights_for(name)?, config.alpha);
            for (c, s) in column.into_iter().enumerate() {
                scores[c * n_attr + a] = s;
            }
        }
        Ok(scores)
    }
}

pub fn precompute_tensor(documents: &[Document], schema: &TargetSchema) -> MetricTensor {
    let documents = documents
        .par_iter()
        .map(|doc| {
            let profiles = profile_table(&doc.table);
            let values = profiles
                .par_iter()
                .flat_map_iter(|p| schema.attributes.iter().map(move |a| compute_all(p, a)))
                .collect();
            TensorDocument {
                id: doc.id.clone(),
                format_id: doc.format_id().to_string(),
                columns: doc.table.headers.clone(),
                values,
            }
        })
        .collect();
    MetricTensor {
        documents,
        attributes: schema.names().map(str::to_string).collect(),
        data_types: schema.attributes.iter().map(|a| a.data_type).collect(),
    }
}

/// Correct column → attribute pairs per layout. Columns without an entry
/// should be omitted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroundTruth {
    /// `(format_id, source_column) → target_attribute`
    pub entries: BTreeMap<(String, String), String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TruthRow {
    format: String,
    source_column: String,
    target_attribute: String,
}

impl GroundTruth {
    pub fn insert(&mut self, format_id: &str, column: &str, attribute: &str) -> Result<()> {
        let key = (format_id.to_string(), column.to_string());
        if let Some(existing) = self.entries.get(&key) {
            if existing != attribute {
                return Err(Error::validation(
                    format!("{format_id}/{column}"),
                    format!("mapped to both `{existing}` and `{attribute}`"),
                ));
            }
        }
        self.entries.insert(key, attribute.to_string());
        Ok(())
    }

    /// Parse `format,source_column,target_attribute` CSV, checking targets
    /// against the schema.
    pub fn from_csv(text: &str, schema: &TargetSchema) -> Result<Self> {
        let mut truth = GroundTruth::default();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        for row in reader.deserialize() {
            let row: TruthRow = row?;
            if schema.attribute(&row.target_attribute).is_none() {
                return Err(Error::UnknownReference {
                    kind: "attribute",
                    name: row.target_attribute,
                });
            }
            truth.insert(&row.format, &row.source_column, &row.target_attribute)?;
        }
        Ok(truth)
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for ((format, column), attribute) in &self.entries {
            writer
                .serialize(TruthRow {
                    format: format.clone(),
                    source_column: column.clone(),
                    target_attribute: attribute.clone(),
                })
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory write")).expect("utf-8")
    }

    pub fn formats(&self) -> BTreeSet<&str> {
        self.entries.keys().map(|(f, _)| f.as_str()).collect()
    }

    /// Every truth format and column must occur in at least one document.
    pub fn check_coverage<'a>(&self, documents: impl IntoIterator<Item = (&'a str, &'a [String])>) -> Result<()> {
        let mut seen: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for (format, columns) in documents {
            seen.entry(format)
                .or_default()
                .extend(columns.iter().map(String::as_str));
        }
        for (format, column) in self.entries.keys() {
            let columns = seen.get(format.as_str()).ok_or_else(|| Error::UnknownReference {
                kind: "format",
                name: format.clone(),
            })?;
            if !columns.contains(column.as_str()) {
                return Err(Error::UnknownReference {
                    kind: "column",
                    name: format!("{format}/{column}"),
                });
            }
        }
        Ok(())
    }
}

/// Truth resolved against one document's columns.
#[derive(Debug, Clone)]
struct DocTruth {
    /// Correct attribute index per column.
    expected: Vec<Option<usize>>,
    /// Truth pairs for this format whose column is absent from the document.
    missing: usize,
}

fn resolve_truth(tensor: &MetricTensor, truth: &GroundTruth) -> Result<Vec<DocTruth>> {
    truth.check_coverage(
        tensor
            .documents
            .iter()
            .map(|d| (d.format_id.as_str(), d.columns.as_slice())),
    )?;
    let attr_index: BTreeMap<&str, usize> = tensor
        .attributes
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_str(), i))
        .collect();
    tensor
        .documents
        .iter()
        .map(|d| {
            let mut expected = vec![None; d.columns.len()];
            let mut missing = 0;
            for ((format, column), attribute) in &truth.entries {
                if *format != d.format_id {
                    continue;
                }
                let a = *attr_index.get(attribute.as_str()).ok_or_else(|| Error::UnknownReference {
                    kind: "attribute",
                    name: attribute.clone(),
                })?;
                match d.columns.iter().position(|c| c == column) {
                    Some(c) => expected[c] = Some(a),
                    None => missing += 1,
                }
            }
            Ok(DocTruth { expected, missing })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

fn count_document(predicted: &[Option<usize>], truth: &DocTruth) -> Counts {
    let mut counts = Counts {
        fn_: truth.missing,
        ..Counts::default()
    };
    for (p, t) in predicted.iter().zip(&truth.expected) {
        match (p, t) {
            (Some(p), Some(t)) if p == t => counts.tp += 1,
            (Some(_), Some(_)) => {
                counts.fp += 1;
                counts.fn_ += 1;
            }
            (Some(_), None) => counts.fp += 1,
            (None, Some(_)) => counts.fn_ += 1,
            (None, None) => {}
        }
    }
    counts
}

fn score_documents(tensor: &MetricTensor, truth: &[DocTruth], scores: &[Vec<f64>], theta: f64) -> Counts {
    let mut total = Counts::default();
    for (d, doc) in tensor.documents.iter().enumerate() {
        let matrix = ScoreMatrix::from_scores(
            doc.columns.clone(),
            tensor.attributes.clone(),
            scores[d].clone(),
            theta,
        );
        total += count_document(&assign_indices(&matrix), &truth[d]);
    }
    total
}

/// Precision, recall and F1 of `config` over every document in the tensor.
pub fn evaluate_config(tensor: &MetricTensor, truth: &GroundTruth, config: &WeightConfig) -> Result<Prf> {
    let resolved = resolve_truth(tensor, truth)?;
    let scores = (0..tensor.documents.len())
        .map(|d| tensor.document_scores(d, config))
        .collect::<Result<Vec<_>>>()?;
    let c = score_documents(tensor, &resolved, &scores, config.theta);
    Ok(Prf::from_counts(c.tp, c.fp, c.fn_))
}

/// Same as [`evaluate_config`] but recomputing every metric from the raw
/// documents instead of reading the tensor.
pub fn evaluate_direct(
    documents: &[Document],
    schema: &TargetSchema,
    truth: &GroundTruth,
    config: &WeightConfig,
) -> Result<Prf> {
    truth.check_coverage(
        documents
            .iter()
            .map(|d| (d.format_id(), d.table.headers.as_slice())),
    )?;
    let mut total = Counts::default();
    for doc in documents {
        let matrix = build_matrix_from_profiles(&profile_table(&doc.table), schema, config)?;
        let predicted = assign_indices(&matrix);
        let mut expected = vec![None; doc.table.col_count()];
        let mut missing = 0;
        for ((format, column), attribute) in &truth.entries {
            if format != doc.format_id() {
                continue;
            }
            let a = schema.index_of(attribute).ok_or_else(|| Error::UnknownReference {
                kind: "attribute",
                name: attribute.clone(),
            })?;
            match doc.table.headers.iter().position(|h| h == column) {
                Some(c) => expected[c] = Some(a),
                None => missing += 1,
            }
        }
        total += count_document(&predicted, &DocTruth { expected, missing });
    }
    Ok(Prf::from_counts(total.tp, total.fp, total.fn_))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    ParamsOnly,
    WeightsOnly,
    ParamsAndWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub grid_size: usize,
    pub alpha_range: (f64, f64),
    pub theta_range: (f64, f64),
    pub mode: SearchMode,
}

impl GridSpec {
    pub fn new(grid_size: usize, mode: SearchMode) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::InvalidArgument(format!("grid size must be at least 2, got {grid_size}")));
        }
        Ok(GridSpec {
            grid_size,
            alpha_range: (0.0, 1.0),
            theta_range: (0.0, 1.0),
            mode,
        })
    }

    /// Weight levels `{0, 1/(g−1), …, 1}`.
    pub fn weight_levels(&self) -> Vec<f64> {
        linspace(0.0, 1.0, self.grid_size)
    }

    pub fn alpha_values(&self) -> Vec<f64> {
        axis(self.alpha_range, self.grid_size, DEFAULT_ALPHA)
    }

    pub fn theta_values(&self) -> Vec<f64> {
        axis(self.theta_range, self.grid_size, DEFAULT_THETA)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Evenly spaced values over `range`, plus the default if it lies inside.
fn axis(range: (f64, f64), n: usize, default: f64) -> Vec<f64> {
    let mut values = linspace(range.0, range.1, n);
    if (range.0..=range.1).contains(&default) && !values.iter().any(|v| (v - default).abs() < 1e-12) {
        values.push(default);
    }
    values.sort_by(f64::total_cmp);
    values
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSearch {
    pub alpha: f64,
    pub theta: f64,
    pub score: Prf,
    pub configs_evaluated: usize,
}

/// Exhaustive (α, θ) scan with uniform global weights. Ties go to the
/// smaller θ, then the smaller α.
pub fn grid_search_params(tensor: &MetricTensor, truth: &GroundTruth, grid: &GridSpec) -> Result<ParamSearch> {
    let resolved = resolve_truth(tensor, truth)?;
    let points: Vec<(f64, f64)> = grid
        .theta_values()
        .into_iter()
        .flat_map(|t| grid.alpha_values().into_iter().map(move |a| (t, a)))
        .collect();
    let results: Vec<Prf> = points
        .par_iter()
        .map(|&(theta, alpha)| {
            let config = WeightConfig::global(alpha, theta);
            let scores: Vec<Vec<f64>> = (0..tensor.documents.len())
                .map(|d| tensor.document_scores(d, &config).expect("global weights"))
                .collect();
            let c = score_documents(tensor, &resolved, &scores, theta);
            Prf::from_counts(c.tp, c.fp, c.fn_)
        })
        .collect();
    let mut best: Option<ParamSearch> = None;
    for (&(theta, alpha), score) in points.iter().zip(results) {
        if best.as_ref().is_none_or(|b| score.f1 > b.score.f1) {
            best = Some(ParamSearch {
                alpha,
                theta,
                score,
                configs_evaluated: points.len(),
            });
        }
    }
    Ok(best.expect("grid has at least one point"))
}

/// Nonzero weight vectors over `k` metrics drawn from `levels`, in
/// descending lexicographic order with the first metric most significant.
/// The all-maximum vector comes first, so among vectors that only differ by
/// a scale factor the largest is met first.
pub fn weight_candidates(levels: &[f64], k: usize) -> Vec<Vec<f64>> {
    let g = levels.len();
    let total = g.pow(k as u32);
    (0..total - 1)
        .map(|mut n| {
            let mut v = vec![0.0; k];
            for slot in v.iter_mut().rev() {
                *slot = levels[g - 1 - n % g];
                n /= g;
            }
            v
        })
        .collect()
}

/// Score of the column that truly maps to `attribute` minus the best score
/// of any other column in the document; `None` if no column maps to it.
fn separation(column_scores: &[f64], truth: &DocTruth, attribute: usize) -> Option<f64> {
    let target = truth.expected.iter().position(|e| *e == Some(attribute))?;
    let rival = column_scores
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != target)
        .map(|(_, s)| *s)
        .fold(0.0, f64::max);
    Some(column_scores[target] - rival)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSearch {
    pub attribute: String,
    pub candidates: usize,
    pub improved: bool,
    pub score: Prf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSearch {
    pub config: WeightConfig,
    pub score: Prf,
    pub start_score: Prf,
    pub configs_evaluated: usize,
    pub attributes: Vec<AttributeSearch>,
}

/// One coordinate pass over the attributes in schema order. Each attribute
/// scans every nonzero weight vector over its applicable metrics while the
/// others stay at their best-so-far vectors, and takes the vector with the
/// highest F1. Equal F1 goes to the larger mean separation of the attribute's
/// true column (see [`separation`]), then to the earlier vector in
/// [`weight_candidates`] order. The uniform vector is always a candidate, so
/// F1 never drops below the uniform start.
pub fn grid_search_weights(
    tensor: &MetricTensor,
    truth: &GroundTruth,
    grid: &GridSpec,
    alpha: f64,
    theta: f64,
) -> Result<WeightSearch> {
    let resolved = resolve_truth(tensor, truth)?;
    let levels = grid.weight_levels();
    let n_attr = tensor.n_attributes();
    let mut config = WeightConfig {
        mode: WeightMode::PerAttribute,
        alpha,
        theta,
        global: MetricWeights::uniform(),
        weights: tensor
            .attributes
            .iter()
            .map(|a| (a.clone(), MetricWeights::uniform()))
            .collect(),
    };
    let mut scores: Vec<Vec<f64>> = (0..tensor.documents.len())
        .map(|d| tensor.document_scores(d, &config))
        .collect::<Result<_>>()?;
    let start = score_documents(tensor, &resolved, &scores, theta);
    let start_score = Prf::from_counts(start.tp, start.fp, start.fn_);
    let mut current = start_score;
    let mut configs_evaluated = 0;
    let mut attributes = Vec::with_capacity(n_attr);

    for (a, name) in tensor.attributes.iter().enumerate() {
        let applicable = MetricId::applicable(tensor.data_types[a]);
        let base = config.weights[name];
        let candidates: Vec<MetricWeights> = weight_candidates(&levels, applicable.len())
            .into_iter()
            .map(|v| {
                let mut w = base;
                for (m, x) in applicable.iter().zip(v) {
                    w.set(*m, x);
                }
                w
            })
            .collect();
        configs_evaluated += candidates.len();

        let results: Vec<(Prf, f64)> = candidates
            .par_iter()
            .map(|w| {
                let mut margins = Vec::new();
                let patched: Vec<Vec<f64>> = scores
                    .iter()
                    .enumerate()
                    .map(|(d, s)| {
                        let mut s = s.clone();
                        let column = tensor.attribute_scores(d, a, w, alpha);
                        if let Some(m) = separation(&column, &resolved[d], a) {
                            margins.push(m);
                        }
                        for (c, v) in column.into_iter().enumerate() {
                            s[c * n_attr + a] = v;
                        }
                        s
                    })
                    .collect();
                let c = score_documents(tensor, &resolved, &patched, theta);
                let margin = if margins.is_empty() {
                    0.0
                } else {
                    margins.iter().sum::<f64>() / margins.len() as f64
                };
                (Prf::from_counts(c.tp, c.fp, c.fn_), margin)
            })
            .collect();

        let mut winner = 0;
        for (i, (score, margin)) in results.iter().enumerate() {
            let (best, best_margin) = results[winner];
            if score.f1 > best.f1 || (score.f1 == best.f1 && *margin > best_margin + MARGIN_EPS) {
                winner = i;
            }
        }
        let results: Vec<Prf> = results.into_iter().map(|(p, _)| p).collect();
        let improved = results[winner].f1 > current.f1;
        let chosen = candidates[winner];
        config.weights.insert(name.clone(), chosen);
        current = results[winner];
        for (d, s) in scores.iter_mut().enumerate() {
            for (c, v) in tensor.attribute_scores(d, a, &chosen, alpha).into_iter().enumerate() {
                s[c * n_attr + a] = v;
            }
        }
        log::debug!("{name}: {} candidates, f1 {:.4}", candidates.len(), current.f1);
        attributes.push(AttributeSearch {
            attribute: name.clone(),
            candidates: candidates.len(),
            improved,
            score: current,
        });
    }

    Ok(WeightSearch {
        config,
        score: current,
        start_score,
        configs_evaluated,
        attributes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    pub config: WeightConfig,
    pub score: Prf,
    pub default_score: Prf,
    pub configs_evaluated: usize,
}

/// Run the search selected by `grid.mode`. Weight searches start from the
/// default α and θ unless parameters were tuned first.
pub fn optimize(tensor: &MetricTensor, truth: &GroundTruth, grid: &GridSpec) -> Result<OptimizeOutcome> {
    let default_score = evaluate_config(tensor, truth, &WeightConfig::default())?;
    match grid.mode {
        SearchMode::ParamsOnly => {
            let p = grid_search_params(tensor, truth, grid)?;
            Ok(OptimizeOutcome {
                config: WeightConfig::global(p.alpha, p.theta),
                score: p.score,
                default_score,
                configs_evaluated: p.configs_evaluated,
            })
        }
        SearchMode::WeightsOnly => {
            let w = grid_search_weights(tensor, truth, grid, DEFAULT_ALPHA, DEFAULT_THETA)?;
            Ok(OptimizeOutcome {
                config: w.config,
                score: w.score,
                default_score,
                configs_evaluated: w.configs_evaluated,
            })
        }
        SearchMode::ParamsAndWeights => {
            let p = grid_search_params(tensor, truth, grid)?;
            let w = grid_search_weights(tensor, truth, grid, p.alpha, p.theta)?;
            Ok(OptimizeOutcome {
                config: w.config,
                score: w.score,
                default_score,
                configs_evaluated: p.configs_evaluated + w.configs_evaluated,
            })
        }
    }
}

/// Size and duration of a completed search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuntimeReport {
    pub configs_evaluated: usize,
    pub wall_time: std::time::Duration,
}

pub fn runtime_report(outcome: &OptimizeOutcome, wall_time: std::time::Duration) -> RuntimeReport {
    RuntimeReport {
        configs_evaluated: outcome.configs_evaluated,
        wall_time,
    }
}

/// Number of weight vectors a coordinate pass scans: Σ (gᵏ − 1) over
/// attributes with k applicable metrics.
pub fn weight_search_size(schema: &TargetSchema, grid_size: usize) -> usize {
    schema
        .attributes
        .iter()
        .map(|a| grid_size.pow(MetricId::applicable(a.data_type).len() as u32) - 1)
        .sum()
}
