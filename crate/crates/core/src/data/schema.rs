use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    #[default]
    Categorical,
    /// Parsed as a number and discretized to an integer level.
    Numeric,
}

/// Per-column rewrite applied before vocabulary lookup.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColumnTransform {
    /// Round down to the integer level (the default for numeric fields).
    Floor,
    /// `YYMMDDHH` timestamps reduced to the hour of day, 0..=23.
    HourOfDay,
    /// Integer value reduced modulo `modulus`, result in `0..modulus`.
    Modulo { modulus: i64 },
}

impl ColumnTransform {
    fn apply(&self, value: f64) -> Result<i64> {
        if !value.is_finite() {
            return Err(Error::Data(format!("non-finite value {value}")));
        }
        let level = value.floor() as i64;
        match self {
            ColumnTransform::Floor => Ok(level),
            ColumnTransform::HourOfDay => {
                let hour = level.rem_euclid(100);
                if hour > 23 {
                    return Err(Error::Data(format!(
                        "{level} is not a YYMMDDHH timestamp (hour {hour})"
                    )));
                }
                Ok(hour)
            }
            ColumnTransform::Modulo { modulus } => {
                if *modulus <= 0 {
                    return Err(Error::Schema(format!("modulus must be positive, got {modulus}")));
                }
                Ok(level.rem_euclid(*modulus))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSchema {
    pub name: String,
    #[serde(default)]
    pub kind: FieldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<ColumnTransform>,
    #[serde(default)]
    pub dropped: bool,
    /// Numeric values that fail to parse (including empty cells) map to the
    /// field's unknown feature instead of raising an error.
    #[serde(default)]
    pub missing_as_unknown: bool,
}

/// Normalized value of one cell, ready for vocabulary lookup.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum CellKey {
    Text(String),
    Level(i64),
    Missing,
}

impl FieldSchema {
    pub fn categorical(name: impl Into<String>) -> Self {
        FieldSchema {
            name: name.into(),
            kind: FieldKind::Categorical,
            transform: None,
            dropped: false,
            missing_as_unknown: false,
        }
    }

    pub fn numeric(name: impl Into<String>) -> Self {
        FieldSchema {
            kind: FieldKind::Numeric,
            ..FieldSchema::categorical(name)
        }
    }

    pub fn dropped(name: impl Into<String>) -> Self {
        FieldSchema {
            dropped: true,
            ..FieldSchema::categorical(name)
        }
    }

    pub fn with_transform(mut self, transform: ColumnTransform) -> Self {
        self.transform = Some(transform);
        self
    }

    pub fn with_missing_as_unknown(mut self) -> Self {
        self.missing_as_unknown = true;
        self
    }

    /// Whether lookups in this field use integer levels.
    pub(crate) fn uses_levels(&self) -> bool {
        self.kind == FieldKind::Numeric
    }

    pub(crate) fn normalize(&self, raw: &str) -> Result<CellKey> {
        let raw = raw.trim();
        match (self.kind, &self.transform) {
            (FieldKind::Categorical, None) => Ok(CellKey::Text(raw.to_string())),
            (FieldKind::Categorical, Some(t)) => {
                let value = parse_number(raw)
                    .ok_or_else(|| Error::Data(format!("field {}: cannot parse {raw:?} as a number", self.name)))?;
                Ok(CellKey::Text(t.apply(value)?.to_string()))
            }
            (FieldKind::Numeric, t) => match parse_number(raw) {
                Some(value) => {
                    let t = t.as_ref().unwrap_or(&ColumnTransform::Floor);
                    Ok(CellKey::Level(t.apply(value)?))
                }
                None if self.missing_as_unknown => Ok(CellKey::Missing),
                None => Err(Error::Data(format!(
                    "field {}: cannot parse {raw:?} as a number and no fallback is configured",
                    self.name
                ))),
            },
        }
    }
}

fn parse_number(raw: &str) -> Option<f64> {
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn default_delimiter() -> char {
    ','
}

/// Layout of a delimited input file: the label column plus every other column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSchema {
    pub label: String,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// Column names for files without a header row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<String>>,
    pub fields: Vec<FieldSchema>,
}

impl TableSchema {
    pub fn new(label: impl Into<String>, fields: Vec<FieldSchema>) -> Self {
        TableSchema {
            label: label.into(),
            delimiter: ',',
            columns: None,
            fields,
        }
    }

    pub fn raw_format(&self) -> super::raw::RawFormat {
        super::raw::RawFormat {
            delimiter: self.delimiter,
            has_header: self.columns.is_none(),
        }
    }

    /// Column names: the declared `columns`, else the file's header row.
    pub fn header(&self, path: &Path) -> Result<Vec<String>> {
        match &self.columns {
            Some(cols) => Ok(cols.clone()),
            None => super::raw::read_header(path, self.delimiter),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: TableSchema =
            toml::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for field in &self.fields {
            if field.name.is_empty() {
                return Err(Error::Schema("empty field name".into()));
            }
            if field.name == self.label {
                return Err(Error::Schema(format!(
                    "field {:?} is also the label column",
                    field.name
                )));
            }
            if !seen.insert(field.name.as_str()) {
                return Err(Error::Schema(format!("duplicate field name {:?}", field.name)));
            }
            if let Some(ColumnTransform::Modulo { modulus }) = field.transform {
                if modulus <= 0 {
                    return Err(Error::Schema(format!(
                        "field {:?}: modulus must be positive",
                        field.name
                    )));
                }
            }
        }
        if self.active_fields().next().is_none() {
            return Err(Error::Schema("schema has no non-dropped fields".into()));
        }
        if !self.delimiter.is_ascii() {
            return Err(Error::Schema("delimiter must be a single ASCII character".into()));
        }
        Ok(())
    }

    /// Fields that contribute features, in schema order.
    pub fn active_fields(&self) -> impl Iterator<Item = &FieldSchema> {
        self.fields.iter().filter(|f| !f.dropped)
    }

    /// Maps header columns onto the schema.
    pub(crate) fn resolve(&self, header: &[String]) -> Result<ColumnLayout> {
        self.validate()?;
        let mut label = None;
        let mut by_name = std::collections::HashMap::new();
        for (col, name) in header.iter().enumerate() {
            if *name == self.label {
                label = Some(col);
            } else if !self.fields.iter().any(|f| f.name == *name) {
                return Err(Error::Schema(format!("column {name:?} is not declared in the schema")));
            }
            if by_name.insert(name.as_str(), col).is_some() {
                return Err(Error::Schema(format!("duplicate column {name:?} in header")));
            }
        }
        let label = label.ok_or_else(|| Error::Schema(format!("label column {:?} missing from header", self.label)))?;
        let mut fields = Vec::new();
        for field in self.active_fields() {
            let col = by_name
                .get(field.name.as_str())
                .ok_or_else(|| Error::Schema(format!("field {:?} missing from header", field.name)))?;
            fields.push(*col);
        }
        Ok(ColumnLayout {
            width: header.len(),
            label,
            fields,
        })
    }
}

/// Column positions of the label and each active field.
#[derive(Clone, Debug)]
pub(crate) struct ColumnLayout {
    pub width: usize,
    pub label: usize,
    pub fields: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hour_of_day_maps_timestamps_into_range() {
        let field = FieldSchema::categorical("hour").with_transform(ColumnTransform::HourOfDay);
        assert_eq!(field.normalize("14102100").unwrap(), CellKey::Text("0".into()));
        assert_eq!(field.normalize("14102123").unwrap(), CellKey::Text("23".into()));
        assert!(field.normalize("14102199").is_err());
    }

    #[test]
    fn numeric_fields_floor_to_integer_levels() {
        let field = FieldSchema::numeric("I1");
        assert_eq!(field.normalize("3.7").unwrap(), CellKey::Level(3));
        assert_eq!(field.normalize("-0.5").unwrap(), CellKey::Level(-1));
        assert!(field.normalize("").is_err());
        let lenient = FieldSchema::numeric("I1").with_missing_as_unknown();
        assert_eq!(lenient.normalize("").unwrap(), CellKey::Missing);
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let schema = TableSchema::new("y", vec![FieldSchema::categorical("a"), FieldSchema::categorical("a")]);
        assert!(matches!(schema.validate(), Err(Error::Schema(_))));
    }

    #[test]
    fn schema_parses_from_toml() {
        let schema: TableSchema = toml::from_str(
            r#"
            label = "click"
            delimiter = "\t"
            [[fields]]
            name = "id"
            dropped = true
            [[fields]]
            name = "hour"
            transform = { type = "hour_of_day" }
            [[fields]]
            name = "I1"
            kind = "numeric"
            missing_as_unknown = true
            "#,
        )
        .unwrap();
        assert_eq!(schema.delimiter, '\t');
        assert_eq!(schema.active_fields().count(), 2);
        assert_eq!(schema.fields[1].transform, Some(ColumnTransform::HourOfDay));
    }

    #[test]
    fn resolve_rejects_undeclared_columns() {
        let schema = TableSchema::new("y", vec![FieldSchema::categorical("a")]);
        let header = vec!["y".to_string(), "a".to_string(), "b".to_string()];
        assert!(schema.resolve(&header).is_err());
        let header = vec!["a".to_string(), "y".to_string()];
        let layout = schema.resolve(&header).unwrap();
        assert_eq!(layout.label, 1);
        assert_eq!(layout.fields, vec![0]);
    }
}
