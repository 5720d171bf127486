use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{Instance, Label};
use super::schema::{CellKey, ColumnLayout, FieldSchema, TableSchema};
use crate::error::{Error, Result};

pub const DEFAULT_MIN_FREQUENCY: u64 = 20;

const FORMAT_TAG: &str = "fefm-vocabulary";
const FORMAT_VERSION: u32 = 1;

/// Feature ids of one field: retained values first, the unknown id last.
#[derive(Clone, Debug)]
struct FieldVocab {
    schema: FieldSchema,
    offset: u32,
    values: Vec<String>,
    /// Training occurrence counts; the trailing entry belongs to the unknown id.
    frequencies: Vec<u64>,
    lookup: HashMap<String, u32>,
    /// Sorted integer levels of a numeric field, parallel to `values`.
    levels: Vec<i64>,
}

impl FieldVocab {
    fn unknown_id(&self) -> u32 {
        self.offset + self.values.len() as u32
    }

    fn len(&self) -> usize {
        self.values.len() + 1
    }

    fn encode(&self, key: CellKey) -> u32 {
        match key {
            CellKey::Missing => self.unknown_id(),
            CellKey::Text(text) => self
                .lookup
                .get(&text)
                .map(|&local| self.offset + local)
                .unwrap_or_else(|| self.unknown_id()),
            CellKey::Level(level) => match nearest_level(&self.levels, level) {
                Some(local) => self.offset + local as u32,
                None => self.unknown_id(),
            },
        }
    }
}

/// Index of the level closest to `target`; ties resolve to the smaller level.
fn nearest_level(levels: &[i64], target: i64) -> Option<usize> {
    if levels.is_empty() {
        return None;
    }
    match levels.binary_search(&target) {
        Ok(i) => Some(i),
        Err(0) => Some(0),
        Err(i) if i == levels.len() => Some(i - 1),
        Err(i) => {
            let below = target.abs_diff(levels[i - 1]);
            let above = levels[i].abs_diff(target);
            Some(if above < below { i } else { i - 1 })
        }
    }
}

/// Field schema plus the frequency-filtered feature → id mapping.
///
/// Field `f` owns the contiguous id range `[offset_f, offset_f + len_f)`;
/// its retained values come first (sorted) and its unknown id is last.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    schema: TableSchema,
    columns: Vec<String>,
    layout: ColumnLayout,
    min_frequency: u64,
    fields: Vec<FieldVocab>,
    m: usize,
}

/// Fits a vocabulary on training rows.
///
/// Rows are aligned with `header`. Values seen fewer than `min_frequency`
/// times are not retained and later encode to their field's unknown id.
pub fn build_vocabulary<I, R, S>(
    header: &[String],
    rows: I,
    schema: &TableSchema,
    min_frequency: u64,
) -> Result<Vocabulary>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[S]>,
    S: AsRef<str>,
{
    if min_frequency == 0 {
        return Err(Error::Config("min_frequency must be at least 1".into()));
    }
    let layout = schema.resolve(header)?;
    let active: Vec<&FieldSchema> = schema.active_fields().collect();
    let mut counts: Vec<HashMap<CellKey, u64>> = vec![HashMap::new(); active.len()];
    let mut n_rows = 0usize;
    for row in rows {
        let row = row.as_ref();
        check_width(row.len(), layout.width, n_rows)?;
        for ((field, &col), count) in active.iter().zip(&layout.fields).zip(&mut counts) {
            let key = field.normalize(row[col].as_ref())?;
            *count.entry(key).or_insert(0) += 1;
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::Data("no training rows to build a vocabulary from".into()));
    }

    let mut fields = Vec::with_capacity(active.len());
    let mut offset = 0u32;
    for (field, count) in active.into_iter().zip(counts) {
        let mut kept: Vec<(CellKey, u64)> = Vec::new();
        let mut unknown_freq = 0u64;
        for (key, c) in count {
            if key != CellKey::Missing && c >= min_frequency {
                kept.push((key, c));
            } else {
                unknown_freq += c;
            }
        }
        kept.sort();
        let mut fv = FieldVocab {
            schema: field.clone(),
            offset,
            values: Vec::with_capacity(kept.len()),
            frequencies: Vec::with_capacity(kept.len() + 1),
            lookup: HashMap::with_capacity(kept.len()),
            levels: Vec::new(),
        };
        for (local, (key, c)) in kept.into_iter().enumerate() {
            let value = match key {
                CellKey::Text(t) => t,
                CellKey::Level(l) => {
                    fv.levels.push(l);
                    l.to_string()
                }
                CellKey::Missing => unreachable!("missing cells are never retained"),
            };
            fv.lookup.insert(value.clone(), local as u32);
            fv.values.push(value);
            fv.frequencies.push(c);
        }
        fv.frequencies.push(unknown_freq);
        offset += fv.len() as u32;
        fields.push(fv);
    }

    Ok(Vocabulary {
        schema: schema.clone(),
        columns: header.to_vec(),
        layout,
        min_frequency,
        m: offset as usize,
        fields,
    })
}

fn check_width(got: usize, expected: usize, row: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Data(format!(
            "row {row} has {got} columns, header declares {expected}"
        )));
    }
    Ok(())
}

impl Vocabulary {
    /// Number of fields `n`.
    pub fn n_fields(&self) -> usize {
        self.fields.len()
    }

    /// Number of features `m`, unknown ids included.
    pub fn n_features(&self) -> usize {
        self.m
    }

    pub fn min_frequency(&self) -> u64 {
        self.min_frequency
    }

    pub fn schema(&self) -> &TableSchema {
        &self.schema
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn field_names(&self) -> Vec<&str> {
        self.fields.iter().map(|f| f.schema.name.as_str()).collect()
    }

    pub fn unknown_id(&self, field: usize) -> u32 {
        self.fields[field].unknown_id()
    }

    /// Id range `[start, end)` owned by `field`.
    pub fn field_range(&self, field: usize) -> std::ops::Range<u32> {
        let f = &self.fields[field];
        f.offset..f.offset + f.len() as u32
    }

    /// Owning field `F(i)` of a feature id.
    pub fn field_of(&self, id: u32) -> Option<usize> {
        if id as usize >= self.m {
            return None;
        }
        Some(self.fields.partition_point(|f| f.offset <= id) - 1)
    }

    /// Training frequency of a feature id.
    pub fn frequency(&self, id: u32) -> Option<u64> {
        let field = &self.fields[self.field_of(id)?];
        Some(field.frequencies[(id - field.offset) as usize])
    }

    /// Raw value of a retained feature; `None` for unknown ids.
    pub fn value_of(&self, id: u32) -> Option<&str> {
        let field = &self.fields[self.field_of(id)?];
        field.values.get((id - field.offset) as usize).map(String::as_str)
    }

    /// Feature id of a raw cell value in `field`.
    pub fn lookup(&self, field: usize, raw: &str) -> Result<u32> {
        let fv = self
            .fields
            .get(field)
            .ok_or_else(|| Error::Data(format!("field index {field} out of range")))?;
        Ok(fv.encode(fv.schema.normalize(raw)?))
    }

    /// Encodes one raw row (aligned with [`Vocabulary::columns`]).
    ///
    /// Values not in the vocabulary map to the field's unknown id; numeric
    /// fields fall back to the nearest retained integer level.
    pub fn encode_instance<S: AsRef<str>>(&self, row: &[S]) -> Result<Instance> {
        check_width(row.len(), self.layout.width, 0)?;
        let raw_label = row[self.layout.label].as_ref();
        if raw_label.trim().is_empty() {
            return Err(Error::Data("missing label".into()));
        }
        let label = Label::parse(raw_label)?;
        let mut active = Vec::with_capacity(self.fields.len());
        for (fv, &col) in self.fields.iter().zip(&self.layout.fields) {
            let key = fv.schema.normalize(row[col].as_ref())?;
            active.push(fv.encode(key));
        }
        Ok(Instance { label, active })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file())
            .map_err(|e| Error::Data(format!("cannot serialize vocabulary: {e}")))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: VocabularyFile =
            serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        Vocabulary::from_file(file)
    }

    fn to_file(&self) -> VocabularyFile {
        let mut features = Vec::with_capacity(self.m);
        for fv in &self.fields {
            for (local, freq) in fv.frequencies.iter().enumerate() {
                features.push(FeatureEntry {
                    id: fv.offset + local as u32,
                    field: fv.schema.name.clone(),
                    value: fv.values.get(local).cloned(),
                    frequency: *freq,
                });
            }
        }
        VocabularyFile {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            n: self.fields.len(),
            m: self.m,
            min_frequency: self.min_frequency,
            label: self.schema.label.clone(),
            delimiter: self.schema.delimiter,
            columns: self.columns.clone(),
            schema: self.schema.fields.clone(),
            features,
        }
    }

    fn from_file(file: VocabularyFile) -> Result<Self> {
        if file.format != FORMAT_TAG {
            return Err(Error::Data(format!("not a vocabulary file (format {:?})", file.format)));
        }
        if file.version != FORMAT_VERSION {
            return Err(Error::Data(format!("unsupported vocabulary version {}", file.version)));
        }
        let schema = TableSchema {
            label: file.label,
            delimiter: file.delimiter,
            columns: None,
            fields: file.schema,
        };
        let layout = schema.resolve(&file.columns)?;
        let mut fields: Vec<FieldVocab> = schema
            .active_fields()
            .map(|f| FieldVocab {
                schema: f.clone(),
                offset: 0,
                values: Vec::new(),
                frequencies: Vec::new(),
                lookup: HashMap::new(),
                levels: Vec::new(),
            })
            .collect();
        if fields.len() != file.n {
            return Err(Error::Data(format!(
                "vocabulary declares n = {} but its schema has {} active fields",
                file.n,
                fields.len()
            )));
        }
        let mut current = 0usize;
        let mut closed = vec![false; fields.len()];
        for (expected_id, entry) in file.features.into_iter().enumerate() {
            if entry.id as usize != expected_id {
                return Err(Error::Data(format!(
                    "feature ids must be contiguous; found {} at position {expected_id}",
                    entry.id
                )));
            }
            let pos = fields
                .iter()
                .position(|f| f.schema.name == entry.field)
                .ok_or_else(|| Error::Data(format!("unknown field {:?}", entry.field)))?;
            if pos < current || closed[pos] {
                return Err(Error::Data(format!(
                    "feature {} of field {:?} is out of field order",
                    entry.id, entry.field
                )));
            }
            if pos > current && !closed[current] {
                return Err(Error::Data(format!(
                    "field {:?} has no unknown id",
                    fields[current].schema.name
                )));
            }
            current = pos;
            let fv = &mut fields[pos];
            if fv.frequencies.is_empty() {
                fv.offset = entry.id;
            }
            match entry.value {
                Some(value) => {
                    if fv.schema.uses_levels() {
                        let level: i64 = value
                            .parse()
                            .map_err(|_| Error::Data(format!("numeric level {value:?} is not an integer")))?;
                        if fv.levels.last().is_some_and(|&prev| prev >= level) {
                            return Err(Error::Data("numeric levels must be increasing".into()));
                        }
                        fv.levels.push(level);
                    }
                    fv.lookup.insert(value.clone(), fv.values.len() as u32);
                    fv.values.push(value);
                    fv.frequencies.push(entry.frequency);
                }
                None => {
                    fv.frequencies.push(entry.frequency);
                    closed[pos] = true;
                }
            }
        }
        if let Some(f) = fields.iter().zip(&closed).find(|(_, c)| !**c) {
            return Err(Error::Data(format!("field {:?} has no unknown id", f.0.schema.name)));
        }
        let m: usize = fields.iter().map(FieldVocab::len).sum();
        if m != file.m {
            return Err(Error::Data(format!(
                "vocabulary declares m = {} but lists {m} features",
                file.m
            )));
        }
        Ok(Vocabulary {
            schema,
            columns: file.columns,
            layout,
            min_frequency: file.min_frequency,
            fields,
            m,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabularyFile {
    format: String,
    version: u32,
    n: usize,
    m: usize,
    min_frequency: u64,
    label: String,
    delimiter: char,
    columns: Vec<String>,
    schema: Vec<FieldSchema>,
    features: Vec<FeatureEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureEntry {
    id: u32,
    field: String,
    /// `null` marks the field's unknown feature.
    value: Option<String>,
    frequency: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::ColumnTransform;

    fn header(cols: &[&str]) -> Vec<String> {
        cols.iter().map(|s| s.to_string()).collect()
    }

    fn toy() -> (Vec<String>, Vec<Vec<&'static str>>, TableSchema) {
        let header = header(&["y", "f1", "f2"]);
        let rows = vec![
            vec!["1", "a", "x"],
            vec!["0", "a", "x"],
            vec!["0", "b", "y"],
            vec!["1", "a", "x"],
        ];
        let schema = TableSchema::new(
            "y",
            vec![FieldSchema::categorical("f1"), FieldSchema::categorical("f2")],
        );
        (header, rows, schema)
    }

    #[test]
    fn rare_values_fall_back_to_unknown() {
        let (header, rows, schema) = toy();
        let vocab = build_vocabulary(&header, &rows, &schema, 2).unwrap();
        // f1: "a" (3x) retained, "b" (1x) dropped; f2: "x" (3x) retained.
        assert_eq!(vocab.n_fields(), 2);
        assert_eq!(vocab.n_features(), 4);
        assert_eq!(vocab.lookup(0, "a").unwrap(), 0);
        assert_eq!(vocab.unknown_id(0), 1);
        let inst = vocab.encode_instance(&["0", "b", "y"]).unwrap();
        assert_eq!(inst.active, vec![vocab.unknown_id(0), vocab.unknown_id(1)]);
        assert_eq!(inst.label, Label::Negative);
        assert_eq!(vocab.frequency(0), Some(3));
        assert_eq!(vocab.frequency(1), Some(1));
    }

    #[test]
    fn threshold_one_keeps_everything() {
        let (header, rows, schema) = toy();
        let vocab = build_vocabulary(&header, &rows, &schema, 1).unwrap();
        // {a, b} + unknown, {x, y} + unknown
        assert_eq!(vocab.n_features(), 6);
        assert_eq!(vocab.value_of(1), Some("b"));
        assert_eq!(vocab.value_of(2), None);
    }

    #[test]
    fn dropped_fields_contribute_nothing() {
        let header = header(&["id", "y", "f1"]);
        let rows = vec![vec!["r1", "1", "a"], vec!["r2", "0", "a"]];
        let schema = TableSchema::new("y", vec![FieldSchema::dropped("id"), FieldSchema::categorical("f1")]);
        let vocab = build_vocabulary(&header, &rows, &schema, 1).unwrap();
        assert_eq!(vocab.n_fields(), 1);
        assert_eq!(vocab.n_features(), 2);
        assert_eq!(vocab.field_names(), vec!["f1"]);
    }

    #[test]
    fn errors_on_empty_input_and_bad_rows() {
        let (header, _, schema) = toy();
        let empty: Vec<Vec<&str>> = vec![];
        assert!(build_vocabulary(&header, &empty, &schema, 1).is_err());
        let ragged = vec![vec!["1", "a", "x", "extra"]];
        assert!(build_vocabulary(&header, &ragged, &schema, 1).is_err());
        let bad_header = super::tests::header(&["y", "f1", "f2", "f3"]);
        assert!(build_vocabulary(&bad_header, &ragged, &schema, 1).is_err());
    }

    #[test]
    fn numeric_values_snap_to_nearest_training_level() {
        let header = header(&["y", "n"]);
        let rows = vec![vec!["1", "1.5"], vec!["0", "4"], vec!["0", "10"]];
        let schema = TableSchema::new("y", vec![FieldSchema::numeric("n")]);
        let vocab = build_vocabulary(&header, &rows, &schema, 1).unwrap();
        let id = |raw: &str| vocab.encode_instance(&["1", raw]).unwrap().active[0];
        assert_eq!(vocab.value_of(id("1.9")), Some("1"));
        // 7 is equidistant from 4 and 10: the smaller level wins.
        assert_eq!(vocab.value_of(id("7")), Some("4"));
        assert_eq!(vocab.value_of(id("8")), Some("10"));
        assert_eq!(vocab.value_of(id("-50")), Some("1"));
        assert!(vocab.encode_instance(&["1", "abc"]).is_err());
        assert!(vocab.encode_instance(&["", "1"]).is_err());
    }

    #[test]
    fn hour_transform_applies_at_fit_and_encode() {
        let header = header(&["click", "hour"]);
        let rows = vec![vec!["0", "14102100"], vec!["1", "14102213"]];
        let schema = TableSchema::new(
            "click",
            vec![FieldSchema::categorical("hour").with_transform(ColumnTransform::HourOfDay)],
        );
        let vocab = build_vocabulary(&header, &rows, &schema, 1).unwrap();
        let inst = vocab.encode_instance(&["1", "14103013"]).unwrap();
        assert_eq!(vocab.value_of(inst.active[0]), Some("13"));
    }

    #[test]
    fn file_round_trip_preserves_mapping() {
        let (header, rows, schema) = toy();
        let vocab = build_vocabulary(&header, &rows, &schema, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.json");
        vocab.save(&path).unwrap();
        let loaded = Vocabulary::load(&path).unwrap();
        assert_eq!(loaded.n_features(), vocab.n_features());
        for row in &rows {
            assert_eq!(
                loaded.encode_instance(row).unwrap(),
                vocab.encode_instance(row).unwrap()
            );
        }
        for id in 0..vocab.n_features() as u32 {
            assert_eq!(loaded.frequency(id), vocab.frequency(id));
            assert_eq!(loaded.field_of(id), vocab.field_of(id));
        }
    }

    #[test]
    fn field_of_respects_ranges() {
        let (header, rows, schema) = toy();
        let vocab = build_vocabulary(&header, &rows, &schema, 1).unwrap();
        for f in 0..vocab.n_fields() {
            for id in vocab.field_range(f) {
                assert_eq!(vocab.field_of(id), Some(f));
            }
        }
        assert_eq!(vocab.field_of(vocab.n_features() as u32), None);
    }
}
