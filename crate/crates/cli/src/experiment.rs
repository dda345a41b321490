//! Training and evaluation of the staged pipeline over processed cases.

use std::collections::BTreeMap;

use arfault::classify::{
    smote, stratified_split, CaseInput, Dataset, DecisionRecord, Ensemble, EvalReport, FeatureTable,
    StagedModels, Task, REGION_INTERNAL,
};
use arfault::fuzzy::{ga_tune, GaConfig, LabeledInputs};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{EndMode, PipelineConfig};
use crate::corpus::{column_names, CaseFeatures};
use crate::error::{CliError, CliResult};
use crate::grid::derive_seed;
use crate::manifest::ManifestRow;

// Stream ids for seeds derived from the master seed.
const SEED_SPLIT: u64 = 0x5_0001;
const SEED_FUZZY: u64 = 0x5_0002;
const SEED_SMOTE: u64 = 0x5_0003;
const SEED_ENSEMBLE: u64 = 0x5_0004;

/// Stratified train/test split over case indices. Non-fault cases are
/// stratified by event kind, faults by type and location.
pub fn split_cases(rows: &[ManifestRow], test_fraction: f64, master: u64) -> CliResult<(Vec<usize>, Vec<usize>)> {
    let mut keys = BTreeMap::new();
    let strata: Vec<usize> = rows
        .iter()
        .map(|r| {
            let n = keys.len();
            *keys.entry(r.strata_key()).or_insert(n)
        })
        .collect();
    Ok(stratified_split(&strata, test_fraction, derive_seed(master, SEED_SPLIT))?)
}

/// Trained stage models with what is needed to apply them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub config_hash: String,
    pub beta: f64,
    pub end_mode: EndMode,
    pub feature_names: Vec<String>,
    pub fuzzy_fitness: Option<f64>,
    pub models: StagedModels,
}

fn table(names: &[String], cases: &[CaseFeatures], idx: &[usize], mode: EndMode) -> CliResult<FeatureTable> {
    let rows = idx.iter().map(|&i| cases[i].row(mode)).collect::<CliResult<Vec<_>>>()?;
    Ok(FeatureTable::new(names.to_vec(), rows)?)
}

fn stage_dataset(task: Task, rows: &[ManifestRow], cases: &[CaseFeatures], idx: &[usize], names: &[String], mode: EndMode) -> CliResult<Dataset> {
    let idx: Vec<usize> = idx.iter().copied().filter(|&i| rows[i].label(task).is_some()).collect();
    let y = idx.iter().map(|&i| rows[i].label(task).expect("filtered")).collect();
    Ok(Dataset::new(task, table(names, cases, &idx, mode)?, y)?)
}

fn train_stage(task: Task, d: Dataset, cfg: &PipelineConfig) -> CliResult<Ensemble> {
    d.check_trainable()?;
    let c = &cfg.classify;
    let d = if c.smote {
        let smallest = d.class_counts().into_iter().filter(|&n| n > 0).min().unwrap_or(0);
        let k = c.smote_k.min(smallest.saturating_sub(1));
        if k == 0 {
            warn!("{task}: a class has a single row; SMOTE skipped");
            d
        } else {
            smote(&d, k, derive_seed(cfg.seed, SEED_SMOTE ^ task.classes() as u64))?
        }
    } else {
        d
    };
    info!("{task}: training on {} rows, class counts {:?}", d.len(), d.class_counts());
    Ok(Ensemble::train(&c.kinds, c.variants, &d, &c.hyper, derive_seed(cfg.seed, SEED_ENSEMBLE ^ task.classes() as u64))?)
}

/// Fuzzy training rows: every training case, labelled fault / no fault.
pub fn fuzzy_training_set(rows: &[ManifestRow], cases: &[CaseFeatures], idx: &[usize]) -> LabeledInputs<f64> {
    let mut data = LabeledInputs::default();
    for &i in idx {
        data.push(cases[i].fuzzy.clone(), rows[i].y_detection == 1);
    }
    data
}

pub fn ga_config(cfg: &PipelineConfig) -> GaConfig {
    GaConfig { seed: derive_seed(cfg.seed, SEED_FUZZY ^ cfg.fuzzy.ga.seed), ..cfg.fuzzy.ga.clone() }
}

/// Trains every stage on the training cases. The detection stage sees all
/// of them; the later stages see the faults.
pub fn train_pipeline(
    rows: &[ManifestRow],
    cases: &[CaseFeatures],
    train_idx: &[usize],
    beta: f64,
    cfg: &PipelineConfig,
    fuzzy: Option<arfault::fuzzy::FuzzySystem<f64>>,
) -> CliResult<TrainedPipeline> {
    let mode = cfg.features.end_mode;
    let names = column_names(&cfg.feature_ids()?, mode);
    let (fuzzy, fuzzy_fitness) = match (fuzzy, cfg.fuzzy.mode) {
        (Some(sys), _) => (Some(sys), None),
        (None, arfault::classify::DetectionMode::Ensemble) => (None, None),
        (None, _) => {
            let tuned = ga_tune(&fuzzy_training_set(rows, cases, train_idx), &cfg.fuzzy.template, &ga_config(cfg))?;
            info!("fuzzy: balanced training accuracy {:.4}", tuned.fitness);
            (Some(tuned.system), Some(tuned.fitness))
        }
    };
    let mut models = StagedModels { mode: cfg.fuzzy.mode, fuzzy, ..Default::default() };
    for task in Task::ALL {
        let d = stage_dataset(task, rows, cases, train_idx, &names, mode)?;
        let e = train_stage(task, d, cfg)?;
        match task {
            Task::Detection => models.detection = Some(e),
            Task::Region => models.region = Some(e),
            Task::Location => models.location = Some(e),
            Task::Phase => models.phase = Some(e),
            Task::FaultType => models.fault_type = Some(e),
        }
    }
    Ok(TrainedPipeline { config_hash: cfg.hash(), beta, end_mode: mode, feature_names: names, fuzzy_fitness, models })
}

/// Held-out results: one report per stage and the staged decisions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config_hash: String,
    pub n_test: usize,
    /// Detection through the full cascade (no trigger counts as no fault).
    pub detection: EvalReport,
    /// Later stages on test cases whose true label reaches them.
    pub region: EvalReport,
    pub location: EvalReport,
    pub phase: EvalReport,
    pub fault_type: EvalReport,
    /// Share of test cases whose whole decision record matches the truth.
    pub end_to_end: f64,
    #[serde(skip)]
    pub decisions: Vec<(String, DecisionRecord)>,
}

impl PipelineReport {
    pub fn stage(&self, task: Task) -> &EvalReport {
        match task {
            Task::Detection => &self.detection,
            Task::Region => &self.region,
            Task::Location => &self.location,
            Task::Phase => &self.phase,
            Task::FaultType => &self.fault_type,
        }
    }

    pub fn to_json(&self) -> CliResult<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn matches_truth(r: &ManifestRow, d: &DecisionRecord) -> bool {
    if r.y_detection == 0 {
        return !d.fault;
    }
    d.fault
        && d.region == r.y_region
        && d.phase == r.y_phase
        && d.fault_type == r.y_fault_type
        && (r.y_region != Some(REGION_INTERNAL) || d.location == r.y_location)
}

pub fn evaluate_pipeline(p: &TrainedPipeline, rows: &[ManifestRow], cases: &[CaseFeatures], test_idx: &[usize]) -> CliResult<PipelineReport> {
    if test_idx.is_empty() {
        return Err(CliError::Usage("empty test split".into()));
    }
    let decisions = test_idx
        .iter()
        .map(|&i| {
            let c = &cases[i];
            let features = c.row(p.end_mode)?;
            let input = CaseInput { triggered: c.triggered(), feature_names: &p.feature_names, features: &features, fuzzy: &c.fuzzy };
            Ok((c.case_id.clone(), p.models.decide(&input)?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let truth: Vec<usize> = test_idx.iter().map(|&i| rows[i].y_detection).collect();
    let pred: Vec<usize> = decisions.iter().map(|(_, d)| d.fault as usize).collect();
    let detection = EvalReport::from_predictions(Task::Detection, &truth, &pred)?;

    let stage_report = |task: Task, keep: &dyn Fn(&ManifestRow) -> bool| -> CliResult<EvalReport> {
        let idx: Vec<usize> = test_idx.iter().copied().filter(|&i| keep(&rows[i]) && rows[i].label(task).is_some()).collect();
        let d = stage_dataset(task, rows, cases, &idx, &p.feature_names, p.end_mode)?;
        if d.is_empty() {
            return Err(CliError::Usage(format!("no test cases reach the {task} stage")));
        }
        Ok(arfault::classify::evaluate(p.models.stage(task)?, &d)?)
    };
    let all = |_: &ManifestRow| true;
    let region = stage_report(Task::Region, &all)?;
    let location = stage_report(Task::Location, &|r| r.y_region == Some(REGION_INTERNAL))?;
    let phase = stage_report(Task::Phase, &all)?;
    let fault_type = stage_report(Task::FaultType, &all)?;
    let hits = test_idx.iter().zip(&decisions).filter(|(&i, (_, d))| matches_truth(&rows[i], d)).count();
    Ok(PipelineReport {
        config_hash: p.config_hash.clone(),
        n_test: test_idx.len(),
        detection,
        region,
        location,
        phase,
        fault_type,
        end_to_end: hits as f64 / test_idx.len() as f64,
        decisions,
    })
}

/// Processes, splits, trains and evaluates in one go.
pub fn run_experiment(rows: &[ManifestRow], cases: &[CaseFeatures], beta: f64, cfg: &PipelineConfig) -> CliResult<(TrainedPipeline, PipelineReport)> {
    let (train, test) = split_cases(rows, cfg.classify.test_fraction, cfg.seed)?;
    let p = train_pipeline(rows, cases, &train, beta, cfg, None)?;
    let r = evaluate_pipeline(&p, rows, cases, &test)?;
    Ok((p, r))
}
