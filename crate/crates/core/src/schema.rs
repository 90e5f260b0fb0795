//! Target schema (the template every source layout is aligned to).
//!
//! The schema file is YAML with a top-level `attributes:` list. Each attribute
//! carries a type, synonyms and, depending on the type, a numeric `range` or a
//! `date_range`. Missing numeric statistics are completed by [`derive_stats`].

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ratio between the interquartile range and the standard deviation of a normal
/// distribution (Φ⁻¹(0.75) − Φ⁻¹(0.25)).
pub const IQR_TO_SIGMA: f64 = 1.349;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DataType {
    String,
    Decimal,
    Date,
}

impl DataType {
    pub const ALL: [DataType; 3] = [DataType::String, DataType::Decimal, DataType::Date];

    pub fn as_str(self) -> &'static str {
        match self {
            DataType::String => "STRING",
            DataType::Decimal => "DECIMAL",
            DataType::Date => "DATE",
        }
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Numeric range as written in a schema file; statistics other than the bounds
/// are optional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericRange {
    pub min: f64,
    pub max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q3: Option<f64>,
}

/// Fully populated statistical profile of a DECIMAL attribute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericProfile {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub q1: f64,
    pub q3: f64,
}

impl NumericProfile {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    /// Normal-scale spread used as the KS target distribution's σ.
    pub fn sigma(&self) -> f64 {
        self.iqr() / IQR_TO_SIGMA
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateProfile {
    #[serde(rename = "min")]
    pub min_date: NaiveDate,
    #[serde(rename = "max")]
    pub max_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSpec {
    pub name: String,
    pub data_type: DataType,
    pub synonyms: Vec<String>,
    pub numeric_profile: Option<NumericProfile>,
    pub date_profile: Option<DateProfile>,
}

impl AttributeSpec {
    /// The attribute name followed by its synonyms: every string the
    /// name-based metrics compare a header against.
    pub fn candidates(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.name.as_str()).chain(self.synonyms.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSchema {
    pub version: String,
    pub attributes: Vec<AttributeSpec>,
}

impl TargetSchema {
    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeSpec> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attributes.iter().map(|a| a.name.as_str())
    }
}

// File representation.

#[derive(Debug, Serialize, Deserialize)]
struct SchemaFile {
    #[serde(default)]
    version: Option<String>,
    #[serde(default)]
    attributes: Vec<AttributeFile>,
    #[serde(flatten)]
    extra: BTreeMap<String, serde_yaml::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AttributeFile {
    name: String,
    #[serde(rename = "type")]
    data_type: DataType,
    #[serde(default)]
    synonyms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    range: Option<NumericRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    date_range: Option<DateProfile>,
    #[serde(flatten)]
    extra: BTreeMap<String, serde_yaml::Value>,
}

/// Parse and validate a schema document. Unknown keys are logged as warnings.
pub fn load_schema(document: &str) -> Result<TargetSchema> {
    let (schema, warnings) = load_schema_with_warnings(document)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(schema)
}

/// Like [`load_schema`], returning the unknown-key warnings instead of logging them.
pub fn load_schema_with_warnings(document: &str) -> Result<(TargetSchema, Vec<String>)> {
    let file: SchemaFile = serde_yaml::from_str(document)?;
    let mut warnings: Vec<String> = file
        .extra
        .keys()
        .map(|k| format!("schema: ignoring unknown key `{k}`"))
        .collect();

    if file.attributes.is_empty() {
        return Err(Error::validation("", "schema has no attributes"));
    }

    let mut seen = HashSet::new();
    let mut attributes = Vec::with_capacity(file.attributes.len());
    for raw in file.attributes {
        let name = normalize_name(&raw.name);
        if name.is_empty() {
            return Err(Error::validation(&raw.name, "attribute name is empty"));
        }
        if !seen.insert(name.clone()) {
            return Err(Error::validation(&name, "duplicate attribute name"));
        }
        warnings.extend(
            raw.extra
                .keys()
                .map(|k| format!("attribute `{name}`: ignoring unknown key `{k}`")),
        );

        let numeric_profile = match (raw.data_type, raw.range) {
            (_, Some(range)) => Some(
                derive_stats(&range).map_err(|e| relabel(e, &name))?,
            ),
            (DataType::Decimal, None) => {
                return Err(Error::validation(&name, "DECIMAL attribute requires a `range`"))
            }
            (_, None) => None,
        };
        let date_profile = match (raw.data_type, raw.date_range) {
            (_, Some(d)) if d.min_date > d.max_date => {
                return Err(Error::validation(&name, "date_range min is after max"))
            }
            (_, Some(d)) => Some(d),
            (DataType::Date, None) => {
                return Err(Error::validation(&name, "DATE attribute requires a `date_range`"))
            }
            (_, None) => None,
        };

        attributes.push(AttributeSpec {
            name,
            data_type: raw.data_type,
            synonyms: raw.synonyms,
            numeric_profile,
            date_profile,
        });
    }

    Ok((
        TargetSchema {
            version: file.version.unwrap_or_default(),
            attributes,
        },
        warnings,
    ))
}

fn relabel(err: Error, name: &str) -> Error {
    match err {
        Error::Validation { message, .. } => Error::validation(name, message),
        other => other,
    }
}

/// Complete a numeric range: mean and quartiles default to linear
/// interpolation between `min` and `max`. Explicit values are kept.
pub fn derive_stats(range: &NumericRange) -> Result<NumericProfile> {
    let NumericRange { min, max, .. } = *range;
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::validation("", "range bounds must be finite"));
    }
    if min > max {
        return Err(Error::validation("", format!("range min {min} exceeds max {max}")));
    }
    let span = max - min;
    let profile = NumericProfile {
        min,
        max,
        mean: range.mean.unwrap_or(min + 0.5 * span),
        q1: range.q1.unwrap_or(min + 0.25 * span),
        q3: range.q3.unwrap_or(min + 0.75 * span),
    };
    let ordered = profile.min <= profile.q1
        && profile.q1 <= profile.mean
        && profile.mean <= profile.q3
        && profile.q3 <= profile.max;
    if !ordered {
        return Err(Error::validation(
            "",
            "range statistics must satisfy min <= q1 <= mean <= q3 <= max",
        ));
    }
    if profile.iqr() <= 0.0 {
        return Err(Error::validation("", "interquartile range must be positive"));
    }
    Ok(profile)
}

/// Serialize a schema back to the file layout (derived statistics included).
pub fn to_yaml(schema: &TargetSchema) -> Result<String> {
    let file = SchemaFile {
        version: Some(schema.version.clone()),
        attributes: schema
            .attributes
            .iter()
            .map(|a| AttributeFile {
                name: a.name.clone(),
                data_type: a.data_type,
                synonyms: a.synonyms.clone(),
                range: a.numeric_profile.map(|p| NumericRange {
                    min: p.min,
                    max: p.max,
                    mean: Some(p.mean),
                    q1: Some(p.q1),
                    q3: Some(p.q3),
                }),
                date_range: a.date_profile,
                extra: BTreeMap::new(),
            })
            .collect(),
        extra: BTreeMap::new(),
    };
    Ok(serde_yaml::to_string(&file)?)
}

/// Lowercase snake_case: runs of non-alphanumeric characters become `_`.
pub fn normalize_name(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for ch in raw.trim().chars() {
        if ch.is_alphanumeric() {
            out.extend(ch.to_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

/// The reconstructed 17-attribute tenancy schedule schema shipped with the crate.
pub const BUNDLED_SCHEMA_YAML: &str = include_str!("../fixtures/schema.yaml");

pub fn bundled_schema() -> TargetSchema {
    load_schema(BUNDLED_SCHEMA_YAML).expect("bundled schema is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decimal(name: &str, range: &str) -> String {
        format!("attributes:\n  - name: {name}\n    type: DECIMAL\n    range: {range}\n")
    }

    #[test]
    fn accepts_rent_range() {
        let s = load_schema(&decimal("passing_rent_pa", "{min: 50000, max: 2000000}")).unwrap();
        let p = s.attributes[0].numeric_profile.unwrap();
        assert_eq!((p.min, p.max), (50000.0, 2000000.0));
    }

    #[test]
    fn rejects_duplicates() {
        let doc = "attributes:\n  - {name: tenant_name, type: STRING}\n  - {name: tenant_name, type: STRING}\n";
        let err = load_schema(doc).unwrap_err();
        assert!(err.to_string().contains("tenant_name"), "{err}");
    }

    #[test]
    fn rejects_empty() {
        let err = load_schema("attributes: []\n").unwrap_err();
        assert!(err.to_string().contains("schema has no attributes"));
    }

    #[test]
    fn rejects_malformed_yaml() {
        assert!(matches!(load_schema("attributes: [\n"), Err(Error::Yaml(_))));
    }

    #[test]
    fn missing_profiles_name_the_attribute() {
        let err = load_schema("attributes:\n  - {name: rent, type: DECIMAL}\n").unwrap_err();
        assert!(err.to_string().contains("`rent`"), "{err}");
        let err = load_schema("attributes:\n  - {name: start, type: DATE}\n").unwrap_err();
        assert!(err.to_string().contains("`start`"), "{err}");
        let err = load_schema(&decimal("area", "{min: 10, max: 5}")).unwrap_err();
        assert!(err.to_string().contains("`area`"), "{err}");
    }

    #[test]
    fn derive_stats_interpolates() {
        let p = derive_stats(&NumericRange { min: 200.0, max: 5000.0, mean: None, q1: None, q3: None })
            .unwrap();
        assert_eq!((p.mean, p.q1, p.q3), (2600.0, 1400.0, 3800.0));
        assert!((p.sigma() - 1779.0956).abs() < 1e-3);
    }

    #[test]
    fn derive_stats_keeps_explicit_values() {
        let p = derive_stats(&NumericRange {
            min: 200.0,
            max: 5000.0,
            mean: Some(3000.0),
            q1: None,
            q3: None,
        })
        .unwrap();
        assert_eq!(p.mean, 3000.0);
        assert_eq!(p.q1, 1400.0);
    }

    #[test]
    fn names_are_snake_cased_and_unknown_keys_warn() {
        let doc = "owner: x\nattributes:\n  - name: Passing Rent PA\n    type: DECIMAL\n    colour: red\n    range: {min: 1, max: 2}\n";
        let (s, warnings) = load_schema_with_warnings(doc).unwrap();
        assert_eq!(s.attributes[0].name, "passing_rent_pa");
        assert_eq!(warnings.len(), 2);
    }

    #[test]
    fn bundled_schema_round_trips() {
        let s = bundled_schema();
        assert_eq!(s.len(), 17);
        let again = load_schema(&to_yaml(&s).unwrap()).unwrap();
        assert_eq!(s, again);
        for a in &s.attributes {
            if let Some(p) = a.numeric_profile {
                assert!(p.q1 < p.q3, "{}", a.name);
            }
        }
    }
}
