//! Tabular data: schema-validated ingestion, quantile binning, predicates and
//! subset selection.

mod discretize;
mod predicate;
mod schema;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use discretize::{apply_discretization, discretize, Discretized, DEFAULT_BINS};
pub use predicate::{evaluate_predicate, Literal, Op, Predicate, SubsetSelection};
pub use schema::{AttributeKind, AttributeSpec, Schema};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse schema `{path}`: {message}")]
    SchemaParse { path: String, message: String },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("attribute `{0}` appears twice in the schema")]
    DuplicateAttribute(String),
    #[error("sensitive attribute `{0}` is missing")]
    SensitiveAttributeMissing(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` is declared in the schema but absent from the data")]
    MissingColumn(String),
    #[error("label column `{column}` is not binary-mappable: found {found} distinct values")]
    LabelNotBinary { column: String, found: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("value `{value}` is outside the domain of `{attribute}`")]
    OutOfDomain { attribute: String, value: String },
    #[error("operator `{op}` needs an ordered attribute, `{attribute}` is nominal")]
    UnorderedOperator { attribute: String, op: String },
    #[error("contradictory literals on `{0}`")]
    Contradiction(String),
    #[error("at least two bins are required, got {0}")]
    TooFewBins(usize),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("inconsistent dataset: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Train,
    Test,
}

/// Column storage: category codes index into the attribute's domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Column {
    Categorical(Vec<u32>),
    Continuous(Vec<f64>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Categorical(v) => v.len(),
            Column::Continuous(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Categorical(v) => Column::Categorical(rows.iter().map(|&r| v[r]).collect()),
            Column::Continuous(v) => Column::Continuous(rows.iter().map(|&r| v[r]).collect()),
        }
    }

    /// Numeric view of a cell: the value itself, or the category code.
    pub fn numeric(&self, row: usize) -> f64 {
        match self {
            Column::Categorical(v) => v[row] as f64,
            Column::Continuous(v) => v[row],
        }
    }
}

/// Immutable training or test data.
///
/// `row_ids` carries the identity of each row. Freshly loaded or split data
/// is numbered `0..n`; [`Dataset::without_rows`] keeps the surviving ids so
/// that a reduced training set can still be matched against a forest's
/// registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: Schema,
    columns: Vec<Column>,
    labels: Vec<u8>,
    sensitive: Vec<u8>,
    row_ids: Vec<u32>,
    role: Role,
    dropped_rows: usize,
}

const MISSING_MARKERS: [&str; 3] = ["", "?", "NA"];

impl Dataset {
    /// Builds a dataset from already-encoded columns.
    pub fn new(schema: Schema, columns: Vec<Column>, labels: Vec<u8>, role: Role) -> Result<Self, DatasetError> {
        schema.validate()?;
        let n = labels.len();
        if n == 0 {
            return Err(DatasetError::EmptyDataset);
        }
        if columns.len() != schema.attributes.len() {
            return Err(DatasetError::Inconsistent(format!(
                "{} columns for {} attributes",
                columns.len(),
                schema.attributes.len()
            )));
        }
        for (attr, col) in schema.attributes.iter().zip(&columns) {
            if col.len() != n {
                return Err(DatasetError::Inconsistent(format!(
                    "column `{}` has {} rows, expected {n}",
                    attr.name,
                    col.len()
                )));
            }
            match (attr.kind, col) {
                (AttributeKind::Categorical, Column::Categorical(codes)) => {
                    let k = attr.categories().len() as u32;
                    if let Some(&bad) = codes.iter().find(|&&c| c >= k) {
                        return Err(DatasetError::OutOfDomain {
                            attribute: attr.name.clone(),
                            value: format!("code {bad}"),
                        });
                    }
                }
                (AttributeKind::Continuous, Column::Continuous(values)) => {
                    if values.iter().any(|v| !v.is_finite()) {
                        return Err(DatasetError::Inconsistent(format!(
                            "column `{}` holds a non-finite value",
                            attr.name
                        )));
                    }
                }
                _ => {
                    return Err(DatasetError::Inconsistent(format!(
                        "column `{}` storage does not match its kind",
                        attr.name
                    )))
                }
            }
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(DatasetError::Inconsistent("labels must be 0 or 1".into()));
        }
        let sensitive = sensitive_codes(&schema, &columns);
        Ok(Self {
            schema,
            columns,
            labels,
            sensitive,
            row_ids: (0..n as u32).collect(),
            role,
            dropped_rows: 0,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, attribute: usize) -> &Column {
        &self.columns[attribute]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// S per row: 1 = privileged, 0 = protected.
    pub fn sensitive(&self) -> &[u8] {
        &self.sensitive
    }

    pub fn row_ids(&self) -> &[u32] {
        &self.row_ids
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.columns.len()
    }

    /// Rows discarded at ingestion because of missing or malformed values.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    /// Human-readable cell value.
    pub fn value_label(&self, attribute: usize, row: usize) -> String {
        match &self.columns[attribute] {
            Column::Categorical(codes) => self.schema.attributes[attribute].categories()[codes[row] as usize].clone(),
            Column::Continuous(values) => format!("{}", values[row]),
        }
    }

    /// Keeps rows at the given positions, in the given order, preserving their ids.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset, DatasetError> {
        if rows.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        Ok(Dataset {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            sensitive: rows.iter().map(|&r| self.sensitive[r]).collect(),
            row_ids: rows.iter().map(|&r| self.row_ids[r]).collect(),
            role: self.role,
            dropped_rows: 0,
        })
    }

    /// The dataset minus the rows whose ids are listed (D \ T).
    pub fn without_rows(&self, ids: &[u32]) -> Result<Dataset, DatasetError> {
        let remove: BTreeSet<u32> = ids.iter().copied().collect();
        let keep: Vec<usize> = (0..self.n_rows())
            .filter(|&r| !remove.contains(&self.row_ids[r]))
            .collect();
        self.select_rows(&keep)
    }

    /// Renumbers rows `0..n`.
    pub fn reindexed(mut self) -> Dataset {
        self.row_ids = (0..self.n_rows() as u32).collect();
        self
    }

    pub fn with_role(mut self, role: Role) -> Dataset {
        self.role = role;
        self
    }

    pub(crate) fn replace_schema_and_columns(&self, schema: Schema, columns: Vec<Column>) -> Dataset {
        let sensitive = sensitive_codes(&schema, &columns);
        Dataset {
            schema,
            columns,
            labels: self.labels.clone(),
            sensitive,
            row_ids: self.row_ids.clone(),
            role: self.role,
            dropped_rows: self.dropped_rows,
        }
    }

    /// Writes the dataset back to CSV with the label column last.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), DatasetError> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.schema.attributes.iter().map(|a| a.name.as_str()).collect();
        header.push(&self.schema.label_column);
        writer.write_record(&header)?;
        let negative = self.negative_label_text();
        for row in 0..self.n_rows() {
            let mut record: Vec<String> = (0..self.n_attributes()).map(|j| self.value_label(j, row)).collect();
            record.push(if self.labels[row] == 1 {
                self.schema.positive_label.clone()
            } else {
                negative.clone()
            });
            writer.write_record(&record)?;
        }
        writer.flush().map_err(|e| DatasetError::Io {
            path: "<csv output>".into(),
            source: e,
        })?;
        Ok(())
    }

    fn negative_label_text(&self) -> String {
        self.schema
            .negative_label
            .clone()
            .unwrap_or_else(|| format!("not_{}", self.schema.positive_label))
    }
}

fn sensitive_codes(schema: &Schema, columns: &[Column]) -> Vec<u8> {
    let idx = schema.sensitive_index();
    let attr = &schema.attributes[idx];
    let privileged = attr.category_index(&schema.privileged_value);
    match &columns[idx] {
        Column::Categorical(codes) => codes.iter().map(|&c| u8::from(Some(c) == privileged)).collect(),
        Column::Continuous(_) => unreachable!("validated schema keeps the sensitive attribute categorical"),
    }
}

/// Loads a CSV file against a schema sidecar.
pub fn load_dataset(data_path: &Path, schema_path: &Path, role: Role) -> Result<Dataset, DatasetError> {
    let schema = Schema::from_path(schema_path)?;
    load_dataset_with_schema(data_path, &schema, role)
}

/// Loads a CSV file against an in-memory schema. Categorical domains missing
/// from the schema are inferred from the data (sorted labels).
pub fn load_dataset_with_schema(data_path: &Path, schema: &Schema, role: Role) -> Result<Dataset, DatasetError> {
    let file = std::fs::File::open(data_path).map_err(|e| DatasetError::Io {
        path: data_path.display().to_string(),
        source: e,
    })?;
    read_dataset(file, schema, role)
}

/// Parses CSV text from any reader; see [`load_dataset_with_schema`].
pub fn read_dataset<R: std::io::Read>(reader: R, schema: &Schema, role: Role) -> Result<Dataset, DatasetError> {
    schema.validate()?;
    let mut csv_reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = csv_reader.headers()?.clone();

    for name in header.iter() {
        if name != schema.label_column && schema.attribute(name).is_none() {
            return Err(DatasetError::UnknownColumn(name.to_string()));
        }
    }
    let position = |name: &str| header.iter().position(|h| h == name);
    let mut attr_pos = Vec::with_capacity(schema.attributes.len());
    for attr in &schema.attributes {
        match position(&attr.name) {
            Some(p) => attr_pos.push(p),
            None if attr.name == schema.sensitive_attribute => {
                return Err(DatasetError::SensitiveAttributeMissing(attr.name.clone()))
            }
            None => return Err(DatasetError::MissingColumn(attr.name.clone())),
        }
    }
    let label_pos = position(&schema.label_column).ok_or_else(|| DatasetError::MissingColumn(schema.label_column.clone()))?;

    // First pass: keep well-formed rows as raw strings.
    let mut raw_rows: Vec<Vec<String>> = Vec::new();
    let mut dropped = 0usize;
    for record in csv_reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(_) => {
                dropped += 1;
                continue;
            }
        };
        if record.len() != header.len() || record.iter().any(|f| MISSING_MARKERS.contains(&f)) {
            dropped += 1;
            continue;
        }
        let numeric_ok = schema
            .attributes
            .iter()
            .zip(&attr_pos)
            .all(|(a, &p)| a.is_categorical() || record[p].parse::<f64>().map(|v| v.is_finite()).unwrap_or(false));
        let domain_ok = schema.attributes.iter().zip(&attr_pos).all(|(a, &p)| match &a.domain {
            Some(d) if a.is_categorical() => d.iter().any(|c| c == &record[p]),
            _ => true,
        });
        if !numeric_ok || !domain_ok {
            dropped += 1;
            continue;
        }
        let mut row: Vec<String> = attr_pos.iter().map(|&p| record[p].to_string()).collect();
        row.push(record[label_pos].to_string());
        raw_rows.push(row);
    }
    if raw_rows.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }

    let label_idx = schema.attributes.len();
    let distinct_labels: BTreeSet<&str> = raw_rows.iter().map(|r| r[label_idx].as_str()).collect();
    if distinct_labels.len() > 2 {
        return Err(DatasetError::LabelNotBinary {
            column: schema.label_column.clone(),
            found: distinct_labels.len(),
        });
    }

    let mut resolved = schema.clone();
    if resolved.negative_label.is_none() {
        resolved.negative_label = distinct_labels
            .iter()
            .find(|&&l| l != schema.positive_label)
            .map(|l| l.to_string());
    }
    let mut columns = Vec::with_capacity(schema.attributes.len());
    for (j, attr) in resolved.attributes.iter_mut().enumerate() {
        match attr.kind {
            AttributeKind::Categorical => {
                if attr.domain.is_none() {
                    let labels: BTreeSet<&str> = raw_rows.iter().map(|r| r[j].as_str()).collect();
                    attr.domain = Some(labels.into_iter().map(str::to_string).collect());
                }
                let index: BTreeMap<&str, u32> = attr
                    .categories()
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (c.as_str(), i as u32))
                    .collect();
                columns.push(Column::Categorical(raw_rows.iter().map(|r| index[r[j].as_str()]).collect()));
            }
            AttributeKind::Continuous => {
                columns.push(Column::Continuous(
                    raw_rows.iter().map(|r| r[j].parse::<f64>().expect("checked above")).collect(),
                ));
            }
        }
    }
    resolved.validate()?;
    let labels = raw_rows
        .iter()
        .map(|r| u8::from(r[label_idx] == schema.positive_label))
        .collect();
    let mut dataset = Dataset::new(resolved, columns, labels, role)?;
    dataset.dropped_rows = dropped;
    if dropped > 0 {
        log::warn!("dropped {dropped} rows with missing or malformed values");
    }
    Ok(dataset)
}

/// Partition of row ids by sensitive group: (protected S=0, privileged S=1).
pub fn sensitive_masks(d: &Dataset) -> (Vec<u32>, Vec<u32>) {
    let mut protected = Vec::new();
    let mut privileged = Vec::new();
    for (row, &s) in d.sensitive().iter().enumerate() {
        if s == 1 {
            privileged.push(d.row_ids[row]);
        } else {
            protected.push(d.row_ids[row]);
        }
    }
    (protected, privileged)
}

/// Splits into (train, test), stratified by label and sensitive group.
/// Each stratum contributes `round(test_fraction * size)` rows to the test
/// split. Both outputs are renumbered `0..n`.
pub fn stratified_split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DatasetError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::InvalidSplit(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut strata: BTreeMap<(u8, u8), Vec<usize>> = BTreeMap::new();
    for row in 0..d.n_rows() {
        strata.entry((d.labels[row], d.sensitive[row])).or_default().push(row);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for rows in strata.values_mut() {
        rows.shuffle(&mut rng);
        let n_test = (test_fraction * rows.len() as f64).round() as usize;
        test_rows.extend_from_slice(&rows[..n_test]);
        train_rows.extend_from_slice(&rows[n_test..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    if train_rows.is_empty() || test_rows.is_empty() {
        return Err(DatasetError::InvalidSplit("one side of the split is empty".into()));
    }
    let train = d.select_rows(&train_rows)?.reindexed().with_role(Role::Train);
    let test = d.select_rows(&test_rows)?.reindexed().with_role(Role::Test);
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy_schema() -> Schema {
        Schema {
            attributes: vec![
                AttributeSpec::categorical("gender", vec!["Male".into(), "Female".into()]),
                AttributeSpec::continuous("income"),
            ],
            sensitive_attribute: "gender".into(),
            privileged_value: "Male".into(),
            positive_label: "yes".into(),
            label_column: "approved".into(),
            negative_label: None,
        }
    }

    #[test]
    fn drops_malformed_rows() {
        let csv = "gender,income,approved\n\
                   Male,10,yes\nFemale,11,no\nMale,12,yes\nFemale,abc,no\nMale,14,no\n\
                   Female,15,yes\nMale,16,yes\nFemale,17,no\nMale,18,no\nFemale,19,yes\n";
        let d = read_dataset(csv.as_bytes(), &toy_schema(), Role::Train).unwrap();
        assert_eq!(d.n_rows(), 9);
        assert_eq!(d.dropped_rows(), 1);
    }

    #[test]
    fn drops_short_and_missing_rows() {
        let csv = "gender,income,approved\nMale,10,yes\nFemale,,no\nMale,12\nOther,3,no\n";
        let d = read_dataset(csv.as_bytes(), &toy_schema(), Role::Train).unwrap();
        assert_eq!(d.n_rows(), 1);
        assert_eq!(d.dropped_rows(), 3);
    }

    #[test]
    fn empty_file_is_an_error() {
        let csv = "gender,income,approved\n";
        let err = read_dataset(csv.as_bytes(), &toy_schema(), Role::Train).unwrap_err();
        assert!(matches!(err, DatasetError::EmptyDataset));
        assert_eq!(err.to_string(), "empty dataset");
    }

    #[test]
    fn unknown_column_is_an_error() {
        let csv = "gender,income,zip,approved\nMale,1,2,yes\n";
        let err = read_dataset(csv.as_bytes(), &toy_schema(), Role::Train).unwrap_err();
        assert!(matches!(err, DatasetError::UnknownColumn(c) if c == "zip"));
    }

    #[test]
    fn missing_sensitive_column_is_an_error() {
        let csv = "income,approved\n1,yes\n";
        let err = read_dataset(csv.as_bytes(), &toy_schema(), Role::Train).unwrap_err();
        assert!(matches!(err, DatasetError::SensitiveAttributeMissing(_)));
    }

    #[test]
    fn three_labels_are_not_binary() {
        let csv = "gender,income,approved\nMale,1,yes\nMale,2,no\nFemale,3,maybe\n";
        let err = read_dataset(csv.as_bytes(), &toy_schema(), Role::Train).unwrap_err();
        assert!(matches!(err, DatasetError::LabelNotBinary { found: 3, .. }));
    }

    #[test]
    fn schema_without_sensitive_attribute_is_rejected() {
        let mut schema = toy_schema();
        schema.sensitive_attribute = "race".into();
        assert!(matches!(schema.validate(), Err(DatasetError::SensitiveAttributeMissing(_))));
    }

    #[test]
    fn infers_sorted_domain() {
        let mut schema = toy_schema();
        schema.attributes[0].domain = None;
        let csv = "gender,income,approved\nMale,1,yes\nFemale,2,no\n";
        let d = read_dataset(csv.as_bytes(), &schema, Role::Train).unwrap();
        assert_eq!(d.schema().attributes[0].categories(), ["Female", "Male"]);
        assert_eq!(d.sensitive(), [1, 0]);
    }

    #[test]
    fn sensitive_masks_partition_rows() {
        let schema = toy_schema();
        let d = Dataset::new(
            schema,
            vec![Column::Categorical(vec![1, 0, 1, 0]), Column::Continuous(vec![1.0, 2.0, 3.0, 4.0])],
            vec![0, 1, 0, 1],
            Role::Train,
        )
        .unwrap();
        assert_eq!(sensitive_masks(&d), (vec![0, 2], vec![1, 3]));

        let all_priv = Dataset::new(
            toy_schema(),
            vec![Column::Categorical(vec![0, 0]), Column::Continuous(vec![1.0, 2.0])],
            vec![0, 1],
            Role::Train,
        )
        .unwrap();
        assert_eq!(sensitive_masks(&all_priv), (vec![], vec![0, 1]));
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let n = 200;
        let gender: Vec<u32> = (0..n).map(|i| (i % 2) as u32).collect();
        let income: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 4 < 2)).collect();
        let d = Dataset::new(toy_schema(), vec![Column::Categorical(gender), Column::Continuous(income)], labels, Role::Train).unwrap();
        let (train, test) = stratified_split(&d, 0.2, 7).unwrap();
        assert_eq!(train.n_rows() + test.n_rows(), n);
        assert_eq!(test.n_rows(), 40);
        let positives = test.labels().iter().filter(|&&y| y == 1).count();
        assert_eq!(positives, 20);
        assert_eq!(test.role(), Role::Test);
        assert_eq!(train.row_ids()[0], 0);
    }

    #[test]
    fn without_rows_keeps_original_ids() {
        let d = Dataset::new(
            toy_schema(),
            vec![Column::Categorical(vec![1, 0, 1, 0]), Column::Continuous(vec![1.0, 2.0, 3.0, 4.0])],
            vec![0, 1, 0, 1],
            Role::Train,
        )
        .unwrap();
        let reduced = d.without_rows(&[1, 2]).unwrap();
        assert_eq!(reduced.row_ids(), [0, 3]);
        assert_eq!(reduced.labels(), [0, 1]);
    }
}
