//! Supervisory classifiers (kNN, CART tree, Gaussian naive Bayes), SMOTE
//! balancing, probability-averaging ensembles and evaluation metrics.

mod eval;
mod knn;
mod nb;
mod smote;
mod staged;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use eval::{evaluate, stratified_split, wald_interval, EvalReport, Z_95};
pub use smote::smote;
pub use staged::{CaseInput, DecisionRecord, DetectionMode, StagedModels, REGION_INTERNAL};

use crate::error::{Error, Result};
use crate::waveform::FaultType;

/// Minimum rows per present class for training.
pub const MIN_ROWS_PER_CLASS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Detection,
    Region,
    Location,
    Phase,
    FaultType,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Detection, Task::Region, Task::Location, Task::Phase, Task::FaultType];

    pub fn classes(self) -> usize {
        match self {
            Task::Detection => 2,
            Task::Region => 3,
            Task::Location => 8,
            Task::Phase => 7,
            Task::FaultType => 10,
        }
    }

    pub fn labels(self) -> Vec<String> {
        match self {
            Task::Detection => vec!["no_fault".into(), "fault".into()],
            Task::Region => vec!["internal".into(), "forward".into(), "reverse".into()],
            Task::Location => (1..=8).map(|i| format!("loc{i}")).collect(),
            Task::Phase => FaultType::PHASE_SETS.iter().map(|s| s.to_string()).collect(),
            Task::FaultType => FaultType::ALL.iter().map(|f| f.to_string()).collect(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Detection => "detection",
            Task::Region => "region",
            Task::Location => "location",
            Task::Phase => "phase",
            Task::FaultType => "fault_type",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s || (s == "faulttype" && *t == Task::FaultType))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown task '{s}'")))
    }
}

/// Hash identifying an ordered feature schema.
pub fn schema_hash(names: &[String]) -> String {
    let mut h = Sha256::new();
    for n in names {
        h.update(n.as_bytes());
        h.update([0u8]);
    }
    h.finalize().iter().take(16).map(|b| format!("{b:02x}")).collect()
}

/// Feature rows with named columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidParameter("feature table needs at least one column".into()));
        }
        if let Some(r) = rows.iter().position(|r| r.len() != names.len()) {
            return Err(Error::SchemaMismatch { expected: format!("{} columns", names.len()), got: format!("{} in row {r}", rows[r].len()) });
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature table".into()));
        }
        Ok(Self { names, rows })
    }

    pub fn schema_hash(&self) -> String {
        schema_hash(&self.names)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self { names: self.names.clone(), rows: idx.iter().map(|&i| self.rows[i].clone()).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub task: Task,
    pub table: FeatureTable,
    pub y: Vec<usize>,
}

impl Dataset {
    pub fn new(task: Task, table: FeatureTable, y: Vec<usize>) -> Result<Self> {
        if y.len() != table.len() {
            return Err(Error::InvalidParameter(format!("{} labels for {} rows", y.len(), table.len())));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= task.classes()) {
            return Err(Error::LabelMismatch(format!("label {bad} outside the {} classes of {task}", task.classes())));
        }
        Ok(Self { task, table, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.task.classes()];
        for &y in &self.y {
            c[y] += 1;
        }
        c
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self { task: self.task, table: self.table.select(idx), y: idx.iter().map(|&i| self.y[i]).collect() }
    }

    pub fn check_trainable(&self) -> Result<()> {
        let counts = self.class_counts();
        let present: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
        if present.len() < 2 {
            return Err(Error::Degenerate(format!("{} training needs at least two classes", self.task)));
        }
        if present.iter().any(|&c| c < MIN_ROWS_PER_CLASS) {
            return Err(Error::Degenerate(format!(
                "{} training needs at least {MIN_ROWS_PER_CLASS} rows per present class, got {counts:?}",
                self.task
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Knn,
    DecisionTree,
    GaussianNb,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knn" => Ok(ModelKind::Knn),
            "decision_tree" | "tree" | "dt" => Ok(ModelKind::DecisionTree),
            "gaussian_nb" | "nb" => Ok(ModelKind::GaussianNb),
            _ => Err(Error::InvalidParameter(format!("unknown classifier '{s}'"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Knn => "knn",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::GaussianNb => "gaussian_nb",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyper {
    pub k: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Self { k: 5, max_depth: 12, min_leaf: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Knn(knn::Knn),
    DecisionTree(tree::Tree),
    GaussianNb(nb::GaussianNb),
}

/// Common interface of single models and ensembles.
pub trait Classifier {
    fn task(&self) -> Task;
    fn schema(&self) -> &str;
    fn predict_proba(&self, x: &FeatureTable) -> Result<Vec<Vec<f64>>>;

    fn predict(&self, x: &FeatureTable) -> Result<Vec<usize>> {
        Ok(self.predict_proba(x)?.iter().map(|p| argmax(p)).collect())
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    (0..p.len()).fold(0, |b, i| if p[i] > p[b] { i } else { b })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub task: Task,
    pub features: Vec<String>,
    pub schema_hash: String,
    pub params: ModelParams,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self.params {
            ModelParams::Knn(_) => ModelKind::Knn,
            ModelParams::DecisionTree(_) => ModelKind::DecisionTree,
            ModelParams::GaussianNb(_) => ModelKind::GaussianNb,
        }
    }
}

fn check_schema(expected: &str, x: &FeatureTable) -> Result<()> {
    let got = x.schema_hash();
    if got != expected {
        return Err(Error::SchemaMismatch { expected: expected.to_string(), got });
    }
    Ok(())
}

impl Classifier for TrainedModel {
    fn task(&self) -> Task {
        self.task
    }

    fn schema(&self) -> &str {
        &self.schema_hash
    }

    fn predict_proba(&self, x: &FeatureTable) -> Result<Vec<Vec<f64>>> {
        check_schema(&self.schema_hash, x)?;
        let c = self.task.classes();
        Ok(match &self.params {
            ModelParams::Knn(m) => x.rows.iter().map(|r| m.proba(r, c)).collect(),
            ModelParams::DecisionTree(m) => x.rows.iter().map(|r| m.proba(r)).collect(),
            ModelParams::GaussianNb(m) => x.rows.iter().map(|r| m.proba(r)).collect(),
        })
    }
}

pub fn train(kind: ModelKind, d: &Dataset, hyper: &Hyper) -> Result<TrainedModel> {
    d.check_trainable()?;
    let c = d.task.classes();
    let params = match kind {
        ModelKind::Knn => ModelParams::Knn(knn::Knn::fit(&d.table.rows, &d.y, hyper.k)?),
        ModelKind::DecisionTree => ModelParams::DecisionTree(tree::Tree::fit(&d.table.rows, &d.y, c, hyper.max_depth, hyper.min_leaf)?),
        ModelKind::GaussianNb => ModelParams::GaussianNb(nb::GaussianNb::fit(&d.table.rows, &d.y, c)),
    };
    Ok(TrainedModel { task: d.task, features: d.table.names.clone(), schema_hash: d.table.schema_hash(), params })
}

/// Models whose class probabilities are averaged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub models: Vec<TrainedModel>,
}

impl Ensemble {
    pub fn new(models: Vec<TrainedModel>) -> Result<Self> {
        let first = models.first().ok_or_else(|| Error::InvalidParameter("ensemble needs at least one model".into()))?;
        if models.iter().any(|m| m.task != first.task) {
            return Err(Error::LabelMismatch("ensemble members belong to different tasks".into()));
        }
        if models.iter().any(|m| m.schema_hash != first.schema_hash) {
            return Err(Error::SchemaMismatch { expected: first.schema_hash.clone(), got: "members with other schemas".into() });
        }
        Ok(Self { models })
    }

    /// One model per kind on the full data, then `variants - 1` further
    /// bootstrap-resampled copies of each kind, seeded from `seed`.
    pub fn train(kinds: &[ModelKind], variants: usize, d: &Dataset, hyper: &Hyper, seed: u64) -> Result<Self> {
        use rand::{Rng, SeedableRng};
        use rayon::prelude::*;
        if kinds.is_empty() || variants == 0 {
            return Err(Error::InvalidParameter("ensemble needs at least one kind and one variant".into()));
        }
        let jobs: Vec<(ModelKind, usize)> = (0..variants).flat_map(|v| kinds.iter().map(move |&k| (k, v))).collect();
        let models = jobs
            .par_iter()
            .map(|&(kind, v)| {
                if v == 0 {
                    return train(kind, d, hyper);
                }
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (v as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let idx: Vec<usize> = (0..d.len()).map(|_| rng.random_range(0..d.len())).collect();
                let sample = d.select(&idx);
                // A bootstrap can lose a small class; fall back to the full data.
                train(kind, &sample, hyper).or_else(|_| train(kind, d, hyper))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(models)
    }
}

impl Classifier for Ensemble {
    fn task(&self) -> Task {
        self.models[0].task
    }

    fn schema(&self) -> &str {
        &self.models[0].schema_hash
    }

    fn predict_proba(&self, x: &FeatureTable) -> Result<Vec<Vec<f64>>> {
        ensemble_proba(&self.models, x)
    }
}

/// Row-wise mean of the members' probability vectors.
pub fn ensemble_proba(models: &[TrainedModel], x: &FeatureTable) -> Result<Vec<Vec<f64>>> {
    let first = models.first().ok_or_else(|| Error::InvalidParameter("empty model list".into()))?;
    if models.iter().any(|m| m.task != first.task) {
        return Err(Error::LabelMismatch("ensemble members belong to different tasks".into()));
    }
    let n = models.len() as f64;
    let mut acc = vec![vec![0.0; first.task.classes()]; x.len()];
    for m in models {
        for (a, p) in acc.iter_mut().zip(m.predict_proba(x)?) {
            for (ai, pi) in a.iter_mut().zip(p) {
                *ai += pi;
            }
        }
    }
    for a in &mut acc {
        a.iter_mut().for_each(|v| *v /= n);
    }
    Ok(acc)
}

pub const MODEL_FORMAT: &str = "arfault-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile<M> {
    format: String,
    version: u32,
    model: M,
}

/// Versioned JSON container for models and ensembles.
pub fn save_model<M: Serialize>(model: &M) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelFile { format: MODEL_FORMAT.into(), version: MODEL_VERSION, model })?)
}

pub fn load_model<M: serde::de::DeserializeOwned>(text: &str) -> Result<M> {
    let f: ModelFile<M> = serde_json::from_str(text)?;
    if f.format != MODEL_FORMAT || f.version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported model container {} v{}", f.format, f.version)));
    }
    Ok(f.model)
}
