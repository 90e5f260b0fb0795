//! CSV ingestion, locale-aware value parsing and per-column profiling.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A raw table as read from a CSV file. Rows are rectangular.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceTable {
    pub format_id: String,
    pub headers: Vec<String>,
    pub cells: Vec<Vec<String>>,
}

impl SourceTable {
    pub fn row_count(&self) -> usize {
        self.cells.len()
    }

    pub fn col_count(&self) -> usize {
        self.headers.len()
    }

    pub fn column(&self, index: usize) -> impl Iterator<Item = &str> {
        self.cells.iter().map(move |row| row[index].as_str())
    }

    pub fn header_index(&self, header: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == header)
    }
}

/// Read comma-separated text with a header row. Short rows are padded with
/// empty cells; duplicate headers get positional suffixes (`.1`, `.2`, ...).
pub fn load_table(csv_text: &str, format_id: &str) -> Result<SourceTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(csv_text.as_bytes());
    let mut records = reader.records();
    let header_record = match records.next() {
        Some(r) => r?,
        None => return Err(Error::Table("empty input".into())),
    };
    let headers = disambiguate_headers(header_record.iter().map(str::to_string).collect());
    let width = headers.len();

    let mut cells = Vec::new();
    for (i, record) in records.enumerate() {
        let record = record?;
        if record.len() > width {
            return Err(Error::Table(format!(
                "row {} has {} cells but the header has {width}",
                i + 1,
                record.len()
            )));
        }
        let mut row: Vec<String> = record.iter().map(str::to_string).collect();
        row.resize(width, String::new());
        cells.push(row);
    }

    Ok(SourceTable {
        format_id: format_id.to_string(),
        headers,
        cells,
    })
}

fn disambiguate_headers(raw: Vec<String>) -> Vec<String> {
    let mut taken: HashSet<String> = HashSet::new();
    let mut out = Vec::with_capacity(raw.len());
    for header in raw {
        let name = if taken.contains(&header) {
            (1..)
                .map(|k| format!("{header}.{k}"))
                .find(|c| !taken.contains(c) && !out.contains(c))
                .expect("unbounded suffix search")
        } else {
            header
        };
        taken.insert(name.clone());
        out.push(name);
    }
    out
}

const MISSING_MARKERS: [&str; 7] = ["", "-", "–", "n.a.", "na", "n/a", "null"];

pub fn is_missing(cell: &str) -> bool {
    let folded = cell.trim().to_lowercase();
    MISSING_MARKERS.contains(&folded.as_str())
}

const UNIT_SUFFIXES: [&str; 5] = ["sq m", "sqm", "m²", "m2", "pp"];

/// Parse a locale-formatted number such as `€ 1,177,924`, `156178,19` or `1.409`.
///
/// With both `.` and `,` present the rightmost one is the decimal separator.
/// With a single separator kind occurring once it is decimal when followed by
/// one or two digits and grouping when followed by exactly three; repeated
/// occurrences are grouping and must delimit three-digit groups.
pub fn parse_numeric(cell: &str) -> Option<f64> {
    let mut s: String = cell
        .trim()
        .to_lowercase()
        .chars()
        .filter(|c| !matches!(c, '€' | '$'))
        .collect();
    loop {
        let trimmed = s.trim_end();
        match UNIT_SUFFIXES.iter().find(|u| trimmed.ends_with(*u)) {
            Some(unit) => s = trimmed[..trimmed.len() - unit.len()].to_string(),
            None => break,
        }
    }
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let (negative, body) = match compact.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, compact.strip_prefix('+').unwrap_or(&compact)),
    };
    if body.is_empty()
        || !body.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',')
        || !body.chars().any(|c| c.is_ascii_digit())
    {
        return None;
    }

    let dots = body.matches('.').count();
    let commas = body.matches(',').count();
    let canonical = match (dots, commas) {
        (0, 0) => body.to_string(),
        (_, 0) => single_separator(body, '.')?,
        (0, _) => single_separator(body, ',')?,
        _ => {
            let last = body.rfind(['.', ',']).expect("separator present");
            let decimal = body[last..].chars().next().expect("non-empty");
            if body.matches(decimal).count() > 1 {
                return None;
            }
            let grouping = if decimal == '.' { ',' } else { '.' };
            let (int_part, frac) = body.split_at(last);
            if !valid_grouping(int_part, grouping) {
                return None;
            }
            format!("{}.{}", int_part.replace(grouping, ""), &frac[1..])
        }
    };
    let value: f64 = canonical.parse().ok()?;
    Some(if negative { -value } else { value })
}

fn single_separator(body: &str, sep: char) -> Option<String> {
    let count = body.matches(sep).count();
    if count > 1 {
        return valid_grouping(body, sep).then(|| body.replace(sep, ""));
    }
    let pos = body.find(sep).expect("one separator");
    let trailing = body.len() - pos - 1;
    if trailing == 3 && pos > 0 {
        Some(body.replace(sep, ""))
    } else {
        Some(body.replacen(sep, ".", 1))
    }
}

fn valid_grouping(int_part: &str, sep: char) -> bool {
    let mut groups = int_part.split(sep);
    let first = groups.next().unwrap_or("");
    (1..=3).contains(&first.len()) && groups.all(|g| g.len() == 3)
}

/// Parse a date written as ISO `yyyy-mm-dd`, day-first numeric `d-m-y` /
/// `d-m-yy`, or day-monthname-year (English or Dutch abbreviations).
/// Two-digit years below 50 are read as 20xx, the rest as 19xx.
pub fn parse_date(cell: &str) -> Option<NaiveDate> {
    let s = cell.trim().to_lowercase();
    parse_iso(&s)
        .or_else(|| parse_numeric_dmy(&s))
        .or_else(|| parse_named_month(&s))
}

fn parse_iso(s: &str) -> Option<NaiveDate> {
    let parts: Vec<&str> = s.split('-').collect();
    match parts.as_slice() {
        [y, m, d] if y.len() == 4 && is_digits(y, 4) && is_digits(m, 2) && is_digits(d, 2) => {
            NaiveDate::from_ymd_opt(y.parse().ok()?, m.parse().ok()?, d.parse().ok()?)
        }
        _ => None,
    }
}

fn parse_numeric_dmy(s: &str) -> Option<NaiveDate> {
    let sep = ['-', '/', '.'].into_iter().find(|c| s.contains(*c))?;
    let parts: Vec<&str> = s.split(sep).collect();
    match parts.as_slice() {
        [d, m, y] if is_digits(d, 2) && is_digits(m, 2) => {
            NaiveDate::from_ymd_opt(year(y)?, m.parse().ok()?, d.parse().ok()?)
        }
        _ => None,
    }
}

fn parse_named_month(s: &str) -> Option<NaiveDate> {
    let parts: Vec<&str> = s
        .split(|c: char| c == '-' || c == '/' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .collect();
    match parts.as_slice() {
        [d, m, y] if is_digits(d, 2) => {
            NaiveDate::from_ymd_opt(year(y)?, month_number(m)?, d.parse().ok()?)
        }
        _ => None,
    }
}

fn is_digits(s: &str, max_len: usize) -> bool {
    !s.is_empty() && s.len() <= max_len && s.bytes().all(|b| b.is_ascii_digit())
}

fn year(s: &str) -> Option<i32> {
    if !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    match s.len() {
        4 => s.parse().ok(),
        2 => {
            let yy: i32 = s.parse().ok()?;
            Some(if yy < 50 { 2000 + yy } else { 1900 + yy })
        }
        _ => None,
    }
}

const MONTHS: [(&str, u32); 16] = [
    ("jan", 1),
    ("feb", 2),
    ("mar", 3),
    ("mrt", 3),
    ("apr", 4),
    ("may", 5),
    ("mei", 5),
    ("jun", 6),
    ("jul", 7),
    ("aug", 8),
    ("sep", 9),
    ("oct", 10),
    ("okt", 10),
    ("nov", 11),
    ("dec", 12),
    ("maa", 3),
];

fn month_number(token: &str) -> Option<u32> {
    if token.len() < 3 || !token.chars().all(|c| c.is_alphabetic()) {
        return None;
    }
    let prefix: String = token.chars().take(3).collect();
    MONTHS.iter().find(|(m, _)| *m == prefix).map(|(_, n)| *n)
}

/// Normalized header / candidate tokens: lowercase, bracketed annotations and
/// positional suffixes removed, punctuation split, area units dropped.
pub fn clean_tokens(raw: &str) -> Vec<String> {
    let lower = raw.trim().to_lowercase();
    let without_suffix = strip_positional_suffix(&lower);

    let mut unbracketed = String::with_capacity(without_suffix.len());
    let mut depth = 0usize;
    for ch in without_suffix.chars() {
        match ch {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth = depth.saturating_sub(1),
            _ if depth == 0 => unbracketed.push(if ch.is_alphanumeric() { ch } else { ' ' }),
            _ => {}
        }
    }

    let raw_tokens: Vec<&str> = unbracketed.split_whitespace().collect();
    let mut tokens = Vec::with_capacity(raw_tokens.len());
    let mut i = 0;
    while i < raw_tokens.len() {
        let t = raw_tokens[i];
        if t == "sq" && raw_tokens.get(i + 1) == Some(&"m") {
            i += 2;
            continue;
        }
        if !matches!(t, "sqm" | "m²" | "m2") {
            tokens.push(t.to_string());
        }
        i += 1;
    }
    tokens
}

/// Cleaned header as a single space-joined string.
pub fn clean_text(raw: &str) -> String {
    clean_tokens(raw).join(" ")
}

fn strip_positional_suffix(s: &str) -> &str {
    if let Some(dot) = s.rfind('.') {
        let tail = &s[dot + 1..];
        if dot > 0 && !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) {
            return &s[..dot];
        }
    }
    s
}

/// Per-column statistics consumed by the instance metrics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ColumnProfile {
    pub header_raw: String,
    pub header_clean: String,
    pub header_tokens: Vec<String>,
    pub values_raw: Vec<String>,
    pub values_nonmissing: Vec<String>,
    pub numeric_values: Vec<f64>,
    pub date_values: Vec<NaiveDate>,
    /// Mean of `numeric_values`; `None` when there are none.
    pub mean: Option<f64>,
}

impl ColumnProfile {
    pub fn from_values<S: AsRef<str>>(header: &str, values: &[S]) -> Self {
        let values_raw: Vec<String> = values.iter().map(|v| v.as_ref().to_string()).collect();
        let values_nonmissing: Vec<String> = values_raw
            .iter()
            .filter(|v| !is_missing(v))
            .map(|v| v.trim().to_string())
            .collect();
        let numeric_values: Vec<f64> = values_nonmissing
            .iter()
            .filter_map(|v| parse_numeric(v))
            .filter(|v| v.is_finite())
            .collect();
        let date_values = values_nonmissing
            .iter()
            .filter_map(|v| parse_date(v))
            .collect();
        let mean = (!numeric_values.is_empty())
            .then(|| numeric_values.iter().sum::<f64>() / numeric_values.len() as f64);
        let header_tokens = clean_tokens(header);
        ColumnProfile {
            header_raw: header.to_string(),
            header_clean: header_tokens.join(" "),
            header_tokens,
            values_raw,
            values_nonmissing,
            numeric_values,
            date_values,
            mean,
        }
    }
}

pub fn profile_column(table: &SourceTable, index: usize) -> Result<ColumnProfile> {
    if index >= table.col_count() {
        return Err(Error::InvalidArgument(format!(
            "column index {index} out of range for {} columns",
            table.col_count()
        )));
    }
    let values: Vec<&str> = table.column(index).collect();
    Ok(ColumnProfile::from_values(&table.headers[index], &values))
}

pub fn profile_table(table: &SourceTable) -> Vec<ColumnProfile> {
    (0..table.col_count())
        .map(|i| profile_column(table, i).expect("index within bounds"))
        .collect()
}

/// An ingested document: a table plus its identity within a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub table: SourceTable,
}

impl Document {
    pub fn format_id(&self) -> &str {
        &self.table.format_id
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub format_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub documents: Vec<ManifestEntry>,
}

/// Load every document listed in a manifest. Relative paths resolve against
/// the manifest's directory; document ids default to the file stem.
pub fn load_manifest(path: &Path) -> Result<Vec<Document>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = serde_yaml::from_str(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    manifest
        .documents
        .iter()
        .map(|entry| {
            let file = base.join(&entry.path);
            let csv_text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
            let table = load_table(&csv_text, &entry.format_id)?;
            let id = entry.id.clone().unwrap_or_else(|| {
                entry
                    .path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
            Ok(Document { id, table })
        })
        .collect()
}
