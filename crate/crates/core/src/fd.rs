//! Full-disjunction style baseline: cluster equivalent columns across
//! documents and outer-union every row into one wide table.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::Prf;
use crate::ingest::{clean_text, is_missing, profile_table, ColumnProfile, Document};
use crate::metrics::text::jaccard;
use crate::table::DataTable;

pub const DEFAULT_TAU: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColumnRef {
    pub format_id: String,
    pub document_id: String,
    pub header_raw: String,
}

/// Pairwise column similarity in `[0, 1]`.
pub trait SimilarityProvider: Sync {
    fn similarity(&self, a: &ColumnProfile, b: &ColumnProfile) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DominantType {
    Empty,
    Numeric,
    Date,
    Text,
}

/// Most frequent parsed type among non-missing cells. A cell counts as a
/// date first, then as a number, else as text; ties favour the earlier kind.
pub fn dominant_type(column: &ColumnProfile) -> DominantType {
    let n = column.values_nonmissing.len();
    if n == 0 {
        return DominantType::Empty;
    }
    let dates = column.date_values.len();
    let numbers = column
        .values_nonmissing
        .iter()
        .filter(|v| crate::ingest::parse_date(v).is_none() && crate::ingest::parse_numeric(v).is_some())
        .count();
    let text = n - dates - numbers;
    if dates >= numbers && dates >= text {
        DominantType::Date
    } else if numbers >= text {
        DominantType::Numeric
    } else {
        DominantType::Text
    }
}

/// `0.6 · Jaccard(header tokens) + 0.4 · [same dominant type]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenTypeProvider;

impl SimilarityProvider for TokenTypeProvider {
    fn similarity(&self, a: &ColumnProfile, b: &ColumnProfile) -> f64 {
        let agree = if dominant_type(a) == dominant_type(b) { 1.0 } else { 0.0 };
        0.6 * jaccard(&a.header_tokens, &b.header_tokens) + 0.4 * agree
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub name: String,
    /// Indices into [`ColumnClustering::columns`], ascending.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnClustering {
    /// Every column of every document, in document then column order.
    pub columns: Vec<ColumnRef>,
    pub cluster_of: Vec<usize>,
    /// Ordered by first member.
    pub clusters: Vec<Cluster>,
}

struct Components {
    parent: Vec<usize>,
    docs: Vec<BTreeSet<usize>>,
}

impl Components {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merge unless the two components already hold a column of a common
    /// document.
    fn try_union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb || !self.docs[ra].is_disjoint(&self.docs[rb]) {
            return false;
        }
        let (keep, drop) = (ra.min(rb), ra.max(rb));
        let moved = std::mem::take(&mut self.docs[drop]);
        self.docs[keep].extend(moved);
        self.parent[drop] = keep;
        true
    }
}

/// Link cross-document column pairs whose similarity reaches `tau`, strongest
/// first, never joining two components that share a document.
pub fn cluster_columns(
    documents: &[Document],
    tau: f64,
    provider: &dyn SimilarityProvider,
) -> ColumnClustering {
    let mut columns = Vec::new();
    let mut profiles = Vec::new();
    let mut doc_of = Vec::new();
    for (d, doc) in documents.iter().enumerate() {
        for (h, p) in doc.table.headers.iter().zip(profile_table(&doc.table)) {
            columns.push(ColumnRef {
                format_id: doc.format_id().to_string(),
                document_id: doc.id.clone(),
                header_raw: h.clone(),
            });
            profiles.push(p);
            doc_of.push(d);
        }
    }
    let n = columns.len();

    let mut edges: Vec<(f64, usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (profiles, doc_of) = (&profiles, &doc_of);
            ((i + 1)..n)
                .filter(move |&j| doc_of[i] != doc_of[j])
                .map(move |j| (provider.similarity(&profiles[i], &profiles[j]), i, j))
                .filter(|(s, _, _)| *s >= tau - 1e-12)
        })
        .collect();
    edges.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut comps = Components {
        parent: (0..n).collect(),
        docs: doc_of.iter().map(|&d| BTreeSet::from([d])).collect(),
    };
    for &(_, i, j) in &edges {
        comps.try_union(i, j);
    }

    let mut cluster_of = vec![usize::MAX; n];
    let mut root_to_cluster = BTreeMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, slot) in cluster_of.iter_mut().enumerate() {
        let root = comps.find(i);
        let c = *root_to_cluster.entry(root).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        *slot = c;
        members[c].push(i);
    }

    let mut used = BTreeMap::<String, usize>::new();
    let clusters = members
        .into_iter()
        .map(|m| {
            let base = m
                .iter()
                .map(|&i| {
                    let clean = clean_text(&columns[i].header_raw);
                    if clean.is_empty() {
                        columns[i].header_raw.trim().to_string()
                    } else {
                        clean
                    }
                })
                .min()
                .unwrap_or_default();
            let seen = used.entry(base.clone()).or_insert(0);
            let name = if *seen == 0 { base.clone() } else { format!("{base}.{seen}") };
            *seen += 1;
            Cluster { name, members: m }
        })
        .collect();

    ColumnClustering {
        columns,
        cluster_of,
        clusters,
    }
}

/// Aligned outer union of all documents with the row's format as provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Integrated {
    pub table: DataTable,
    pub provenance: Vec<String>,
}

impl Integrated {
    pub const PROVENANCE_COLUMN: &'static str = "format_id";

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.table
            .write_csv_with_prefix(&mut buf, Some((Self::PROVENANCE_COLUMN, &self.provenance)))
            .expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 input")
    }
}

/// One output column per cluster; each row fills the clusters its document
/// has columns for and leaves the rest null. Missing markers become null.
pub fn integrate_fd(documents: &[Document], clustering: &ColumnClustering) -> Integrated {
    let mut table = DataTable::new(clustering.clusters.iter().map(|c| c.name.clone()).collect());
    let mut provenance = Vec::new();
    let mut offset = 0;
    for doc in documents {
        let targets: Vec<usize> = (0..doc.table.col_count())
            .map(|c| clustering.cluster_of[offset + c])
            .collect();
        offset += doc.table.col_count();
        for row in &doc.table.cells {
            let mut out = vec![None; table.col_count()];
            for (cell, &t) in row.iter().zip(&targets) {
                if !is_missing(cell) {
                    out[t] = Some(cell.trim().to_string());
                }
            }
            table.rows.push(out);
            provenance.push(doc.format_id().to_string());
        }
    }
    Integrated { table, provenance }
}

/// Labelled sets of equivalent columns, one header per format at most.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterTruth {
    pub sets: Vec<(String, Vec<(String, String)>)>,
}

impl ClusterTruth {
    /// CSV with a `set_name` column followed by one column per format holding
    /// that format's header, or a missing marker.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let formats: Vec<String> = reader.headers()?.iter().skip(1).map(str::to_string).collect();
        let mut sets = Vec::new();
        for record in reader.records() {
            let record = record?;
            let name = record.get(0).unwrap_or_default().to_string();
            let members = formats
                .iter()
                .zip(record.iter().skip(1))
                .filter(|(_, h)| !is_missing(h))
                .map(|(f, h)| (f.clone(), h.to_string()))
                .collect();
            sets.push((name, members));
        }
        Ok(ClusterTruth { sets })
    }

    pub fn to_csv(&self, formats: &[String]) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["set_name".to_string()];
        header.extend(formats.iter().cloned());
        writer.write_record(&header).expect("in-memory write");
        for (name, members) in &self.sets {
            let mut row = vec![name.clone()];
            for f in formats {
                row.push(
                    members
                        .iter()
                        .find(|(mf, _)| mf == f)
                        .map_or("NA".to_string(), |(_, h)| h.clone()),
                );
            }
            writer.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory write")).expect("utf-8")
    }
}

/// Pairwise precision/recall over the columns named by the truth sets. A
/// `(format, header)` entry covers that header in every document of the
/// format.
pub fn evaluate_clusters(clustering: &ColumnClustering, truth: &ClusterTruth) -> Result<Prf> {
    let mut set_of: BTreeMap<usize, usize> = BTreeMap::new();
    for (s, (_, members)) in truth.sets.iter().enumerate() {
        for (format, header) in members {
            let hits: Vec<usize> = clustering
                .columns
                .iter()
                .enumerate()
                .filter(|(_, c)| &c.format_id == format && &c.header_raw == header)
                .map(|(i, _)| i)
                .collect();
            if hits.is_empty() {
                return Err(Error::UnknownReference {
                    kind: "column",
                    name: format!("{format}/{header}"),
                });
            }
            for i in hits {
                if let Some(prev) = set_of.insert(i, s) {
                    if prev != s {
                        return Err(Error::validation(
                            format!("{format}/{header}"),
                            "column belongs to two truth sets",
                        ));
                    }
                }
            }
        }
    }
    let labelled: Vec<(usize, usize)> = set_of.into_iter().collect();
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (x, &(i, si)) in labelled.iter().enumerate() {
        for &(j, sj) in &labelled[x + 1..] {
            let together = clustering.cluster_of[i] == clustering.cluster_of[j];
            match (together, si == sj) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(Prf::from_counts(tp, fp, fn_))
}
