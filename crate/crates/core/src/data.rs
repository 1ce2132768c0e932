//! Tabular datasets: schema, CSV ingestion, nominal encoding and
//! reproducible train/validation/test splits.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Xoshiro256StarStar;

/// Class index of the positive (diabetic) class.
pub const POSITIVE: usize = 1;
/// Class index of the negative class.
pub const NEGATIVE: usize = 0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum FeatureKind {
    Numeric,
    /// Values are stored as indices into `levels`, interned in order of first
    /// appearance at load time.
    Nominal {
        levels: Vec<String>,
    },
}

impl FeatureKind {
    pub fn is_nominal(&self) -> bool {
        matches!(self, FeatureKind::Nominal { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl FeatureDescriptor {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Numeric,
        }
    }

    pub fn nominal(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Nominal { levels: Vec::new() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    features: Vec<FeatureDescriptor>,
    class_labels: Vec<String>,
}

impl Schema {
    pub fn new(features: Vec<FeatureDescriptor>, class_labels: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &features {
            if f.name.trim().is_empty() {
                return Err(Error::Schema("feature names must be non-empty".into()));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate feature name {:?}",
                    f.name
                )));
            }
        }
        if class_labels.len() != 2 {
            return Err(Error::Schema(format!(
                "exactly two class labels required, got {}",
                class_labels.len()
            )));
        }
        if class_labels[0] == class_labels[1] {
            return Err(Error::Schema("class labels must be distinct".into()));
        }
        Ok(Self {
            features,
            class_labels,
        })
    }

    /// All-numeric schema with the given feature names.
    pub fn numeric<S: AsRef<str>>(names: &[S], class_labels: [&str; 2]) -> Result<Self> {
        Self::new(
            names
                .iter()
                .map(|n| FeatureDescriptor::numeric(n.as_ref()))
                .collect(),
            class_labels.iter().map(|s| s.to_string()).collect(),
        )
    }

    /// The Pima Indians Diabetes schema: eight numeric attributes, labels
    /// `0` (non-diabetic) and `1` (diabetic).
    pub fn pidd() -> Self {
        Self::numeric(&PIDD_FEATURES, ["0", "1"]).expect("static schema is valid")
    }

    pub fn features(&self) -> &[FeatureDescriptor] {
        &self.features
    }

    pub fn arity(&self) -> usize {
        self.features.len()
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.class_labels.iter().position(|l| l == label)
    }

    /// Per-feature nominal flags, in feature order.
    pub fn nominal_mask(&self) -> Vec<bool> {
        self.features.iter().map(|f| f.kind.is_nominal()).collect()
    }

    pub fn is_all_numeric(&self) -> bool {
        self.features.iter().all(|f| !f.kind.is_nominal())
    }
}

pub const PIDD_FEATURES: [&str; 8] = [
    "pregnancies",
    "glucose",
    "blood_pressure",
    "skin_thickness",
    "insulin",
    "bmi",
    "diabetes_pedigree",
    "age",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    /// Stable ordinal: the row index in the source file.
    pub id: usize,
    pub features: Vec<f64>,
    pub label: usize,
}

/// An immutable, schema-validated collection of instances.
#[derive(Debug, Clone)]
pub struct Dataset {
    schema: Arc<Schema>,
    instances: Vec<Instance>,
    positions: HashMap<usize, usize>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.instances == other.instances
    }
}

impl Dataset {
    pub fn new(schema: impl Into<Arc<Schema>>, instances: Vec<Instance>) -> Result<Self> {
        let schema = schema.into();
        let mut positions = HashMap::with_capacity(instances.len());
        for (pos, inst) in instances.iter().enumerate() {
            if inst.features.len() != schema.arity() {
                return Err(Error::DimensionMismatch {
                    expected: schema.arity(),
                    actual: inst.features.len(),
                });
            }
            if let Some(col) = inst.features.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    row: inst.id,
                    column: col,
                    message: "non-finite value".into(),
                });
            }
            if inst.label > 1 {
                return Err(Error::Parse {
                    row: inst.id,
                    column: schema.arity(),
                    message: format!("class index {} out of range", inst.label),
                });
            }
            if positions.insert(inst.id, pos).is_some() {
                return Err(Error::Schema(format!("duplicate instance id {}", inst.id)));
            }
        }
        Ok(Self {
            schema,
            instances,
            positions,
        })
    }

    /// Builds a numeric dataset from rows, assigning ids `0..n`.
    pub fn from_rows(schema: impl Into<Arc<Schema>>, rows: Vec<(Vec<f64>, usize)>) -> Result<Self> {
        let instances = rows
            .into_iter()
            .enumerate()
            .map(|(id, (features, label))| Instance {
                id,
                features,
                label,
            })
            .collect();
        Self::new(schema, instances)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn shared_schema(&self) -> Arc<Schema> {
        Arc::clone(&self.schema)
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.schema.arity()
    }

    pub fn get(&self, id: usize) -> Option<&Instance> {
        self.positions.get(&id).map(|&p| &self.instances[p])
    }

    pub fn position(&self, id: usize) -> Option<usize> {
        self.positions.get(&id).copied()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.positions.contains_key(&id)
    }

    pub fn ids(&self) -> Vec<usize> {
        self.instances.iter().map(|i| i.id).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.instances.iter().map(|i| i.label).collect()
    }

    /// Instance counts for class 0 and class 1.
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for inst in &self.instances {
            counts[inst.label] += 1;
        }
        counts
    }

    /// Same schema, new instances.
    pub fn with_instances(&self, instances: Vec<Instance>) -> Result<Self> {
        Self::new(self.shared_schema(), instances)
    }

    /// Instances whose ids are in `ids`, in this dataset's order.
    pub fn subset(&self, ids: &HashSet<usize>) -> Self {
        let instances = self
            .instances
            .iter()
            .filter(|i| ids.contains(&i.id))
            .cloned()
            .collect();
        Self::new(self.shared_schema(), instances).expect("subset of a valid dataset is valid")
    }

    /// Removes the named feature columns.
    pub fn drop_features<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        let mut drop = HashSet::new();
        for name in names {
            let name = name.as_ref();
            let idx = self
                .schema
                .features
                .iter()
                .position(|f| f.name == name)
                .ok_or_else(|| Error::Schema(format!("no feature named {name:?}")))?;
            drop.insert(idx);
        }
        let features = self
            .schema
            .features
            .iter()
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, f)| f.clone())
            .collect();
        let schema = Schema::new(features, self.schema.class_labels.clone())?;
        let instances = self
            .instances
            .iter()
            .map(|inst| Instance {
                id: inst.id,
                label: inst.label,
                features: inst
                    .features
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !drop.contains(i))
                    .map(|(_, &v)| v)
                    .collect(),
            })
            .collect();
        Self::new(schema, instances)
    }
}

/// Loads a CSV file: features in schema order, then the class label.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, schema)
}

/// Parses CSV text; see [`load_csv`].
///
/// A single header line is accepted and detected by the first row failing to
/// parse in any numeric column. Row numbers in errors are 1-based file lines.
pub fn parse_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut schema = schema.clone();
    let arity = schema.arity();
    let mut instances = Vec::new();
    let mut first = true;

    for (line, record) in rdr.records().enumerate() {
        let row = line + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if first {
            first = false;
            if is_header(&record, &schema) {
                continue;
            }
        }
        if record.len() != arity + 1 {
            return Err(Error::Parse {
                row,
                column: record.len().min(arity + 1),
                message: format!("expected {} columns, found {}", arity + 1, record.len()),
            });
        }
        let mut features = Vec::with_capacity(arity);
        for (col, desc) in schema.features.iter_mut().enumerate() {
            let cell = &record[col];
            if cell.is_empty() {
                return Err(Error::Parse {
                    row,
                    column: col,
                    message: "missing value".into(),
                });
            }
            let value = match &mut desc.kind {
                FeatureKind::Numeric => match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => v,
                    _ => {
                        return Err(Error::Parse {
                            row,
                            column: col,
                            message: format!("cannot parse {cell:?} as a number"),
                        })
                    }
                },
                FeatureKind::Nominal { levels } => {
                    let idx = match levels.iter().position(|l| l == cell) {
                        Some(i) => i,
                        None => {
                            levels.push(cell.to_string());
                            levels.len() - 1
                        }
                    };
                    idx as f64
                }
            };
            features.push(value);
        }
        let label_cell = &record[arity];
        let label = schema.label_index(label_cell).ok_or_else(|| Error::Parse {
            row,
            column: arity,
            message: format!("unknown class label {label_cell:?}"),
        })?;
        instances.push(Instance {
            id: instances.len(),
            features,
            label,
        });
    }

    if instances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(schema, instances)
}

fn is_header(record: &csv::StringRecord, schema: &Schema) -> bool {
    let numeric_cols: Vec<usize> = schema
        .features
        .iter()
        .enumerate()
        .filter(|(_, f)| !f.kind.is_nominal())
        .map(|(i, _)| i)
        .collect();
    if numeric_cols.is_empty() {
        return record
            .get(schema.arity())
            .is_some_and(|l| schema.label_index(l).is_none());
    }
    numeric_cols
        .iter()
        .any(|&c| record.get(c).is_some_and(|v| v.parse::<f64>().is_err()))
}

/// Maps nominal level indices to ordinals by order of first appearance.
///
/// Fitted on one dataset (normally the training split) and applied to others;
/// levels unseen at fit time receive fresh ordinals in order of appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct NominalEncoder {
    /// For each feature: `None` when numeric, else level index -> ordinal.
    maps: Vec<Option<HashMap<u64, usize>>>,
}

impl NominalEncoder {
    pub fn fit(dataset: &Dataset) -> Self {
        let mut maps: Vec<Option<HashMap<u64, usize>>> = dataset
            .schema()
            .features
            .iter()
            .map(|f| f.kind.is_nominal().then(HashMap::new))
            .collect();
        for inst in dataset.instances() {
            for (map, &v) in maps.iter_mut().zip(&inst.features) {
                if let Some(map) = map {
                    let next = map.len();
                    map.entry(v as u64).or_insert(next);
                }
            }
        }
        Self { maps }
    }

    pub fn is_identity(&self) -> bool {
        self.maps.iter().all(Option::is_none)
    }

    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        if dataset.dim() != self.maps.len() {
            return Err(Error::DimensionMismatch {
                expected: self.maps.len(),
                actual: dataset.dim(),
            });
        }
        if self.is_identity() && dataset.schema().is_all_numeric() {
            return Ok(dataset.clone());
        }
        let mut maps = self.maps.clone();
        let instances = dataset
            .instances()
            .iter()
            .map(|inst| {
                let features = inst
                    .features
                    .iter()
                    .zip(maps.iter_mut())
                    .map(|(&v, map)| match map {
                        None => v,
                        Some(map) => {
                            let next = map.len();
                            *map.entry(v as u64).or_insert(next) as f64
                        }
                    })
                    .collect();
                Instance {
                    id: inst.id,
                    features,
                    label: inst.label,
                }
            })
            .collect();
        let features = dataset
            .schema()
            .features
            .iter()
            .map(|f| FeatureDescriptor::numeric(f.name.clone()))
            .collect();
        let schema = Schema::new(features, dataset.schema().class_labels.clone())?;
        Dataset::new(schema, instances)
    }
}

/// Replaces every nominal feature by its 0-based ordinal of first appearance.
pub fn transform_nominal(dataset: &Dataset) -> Dataset {
    NominalEncoder::fit(dataset)
        .apply(dataset)
        .expect("encoder fitted on the same dataset")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.70,
            validation_fraction: 0.15,
            test_fraction: 0.15,
            seed: 0,
            stratified: false,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fractions = [
            self.train_fraction,
            self.validation_fraction,
            self.test_fraction,
        ];
        if fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(Error::Split(format!(
                "fractions must lie in (0, 1), got {fractions:?}"
            )));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Split(format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSplit {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

impl DataSplit {
    pub fn sizes(&self) -> [usize; 3] {
        [self.train.len(), self.validation.len(), self.test.len()]
    }
}

/// Splits into train/validation/test.
///
/// Validation and test receive `round(fraction * n)` instances and training
/// absorbs the remainder. The dataset's instance order is shuffled with
/// xoshiro256** seeded by `spec.seed` and the three subsets are taken as
/// consecutive runs (train, validation, test) of the shuffled order. When
/// stratified, each class is shuffled in turn (class 0 first, same generator)
/// and per-class quotas are allocated by largest remainder.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<DataSplit> {
    spec.validate()?;
    let n = dataset.len();
    if n < 3 {
        return Err(Error::Split(format!("need at least 3 instances, got {n}")));
    }
    let n_val = (spec.validation_fraction * n as f64).round() as usize;
    let n_test = (spec.test_fraction * n as f64).round() as usize;
    if n_val + n_test >= n {
        return Err(Error::Split("training set would be empty".into()));
    }

    let mut rng = Xoshiro256StarStar::seed_from_u64(spec.seed);
    let mut assignment: HashMap<usize, usize> = HashMap::with_capacity(n);

    if spec.stratified {
        let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for inst in dataset.instances() {
            by_class[inst.label].push(inst.id);
        }
        let counts = [by_class[0].len(), by_class[1].len()];
        let val_quota = largest_remainder(spec.validation_fraction, n_val, counts);
        let test_quota = largest_remainder(spec.test_fraction, n_test, counts);
        for (class, ids) in by_class.iter_mut().enumerate() {
            rng.shuffle(ids);
            let n_c = ids.len();
            let v = val_quota[class].min(n_c);
            let t = test_quota[class].min(n_c - v);
            let train_end = n_c - v - t;
            assign_runs(ids, train_end, train_end + v, &mut assignment);
        }
    } else {
        let mut ids = dataset.ids();
        rng.shuffle(&mut ids);
        let train_end = n - n_val - n_test;
        assign_runs(&ids, train_end, train_end + n_val, &mut assignment);
    }

    let mut parts: [Vec<Instance>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for inst in dataset.instances() {
        parts[assignment[&inst.id]].push(inst.clone());
    }
    let [train, validation, test] = parts;
    Ok(DataSplit {
        train: dataset.with_instances(train)?,
        validation: dataset.with_instances(validation)?,
        test: dataset.with_instances(test)?,
    })
}

fn assign_runs(ids: &[usize], train_end: usize, val_end: usize, out: &mut HashMap<usize, usize>) {
    for (pos, &id) in ids.iter().enumerate() {
        let part = if pos < train_end {
            0
        } else if pos < val_end {
            1
        } else {
            2
        };
        out.insert(id, part);
    }
}

/// Distributes `total` over classes proportionally to `fraction * count`.
fn largest_remainder(fraction: f64, total: usize, counts: [usize; 2]) -> [usize; 2] {
    let exact = counts.map(|c| fraction * c as f64);
    let mut quota = exact.map(|e| e.floor() as usize);
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = total.saturating_sub(quota[0] + quota[1]);
    for &c in order.iter().cycle().take(4) {
        if remaining == 0 {
            break;
        }
        if quota[c] < counts[c] {
            quota[c] += 1;
            remaining -= 1;
        }
    }
    quota
}
