//! Staged decisions: detection, then region, then (internal faults only)
//! trip and location, then faulted phases and fault type.

use serde::{Deserialize, Serialize};

use super::{argmax, Classifier, Ensemble, FeatureTable, Task};
use crate::error::{Error, Result};
use crate::fuzzy::FuzzySystem;

/// Index of the internal region in [`Task::Region`] labels.
pub const REGION_INTERNAL: usize = 0;

/// How the fuzzy score and the detection ensemble are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMode {
    Fuzzy,
    Ensemble,
    /// Mean of the fuzzy score and the ensemble fault probability.
    #[default]
    Average,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StagedModels {
    pub mode: DetectionMode,
    pub fuzzy: Option<FuzzySystem<f64>>,
    pub detection: Option<Ensemble>,
    pub region: Option<Ensemble>,
    pub location: Option<Ensemble>,
    pub phase: Option<Ensemble>,
    pub fault_type: Option<Ensemble>,
}

/// Inputs of one case after triggering and feature extraction.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseInput<'a> {
    pub triggered: bool,
    pub feature_names: &'a [String],
    pub features: &'a [f64],
    /// Fuzzy inputs in template order.
    pub fuzzy: &'a [f64],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub triggered: bool,
    pub fault: bool,
    pub fault_score: f64,
    pub fuzzy_no_rule: bool,
    pub region: Option<usize>,
    pub trip: bool,
    pub location: Option<usize>,
    pub phase: Option<usize>,
    pub fault_type: Option<usize>,
}

fn stage<'m>(m: &'m Option<Ensemble>, name: &'static str) -> Result<&'m Ensemble> {
    m.as_ref().ok_or(Error::MissingStage(name))
}

impl StagedModels {
    pub fn stage(&self, task: Task) -> Result<&Ensemble> {
        match task {
            Task::Detection => stage(&self.detection, "detection"),
            Task::Region => stage(&self.region, "region"),
            Task::Location => stage(&self.location, "location"),
            Task::Phase => stage(&self.phase, "phase"),
            Task::FaultType => stage(&self.fault_type, "fault_type"),
        }
    }

    /// Fault score in [0, 1] and the fuzzy no-rule flag.
    pub fn fault_score(&self, case: &CaseInput<'_>, row: &FeatureTable) -> Result<(f64, bool)> {
        let fuzzy = || -> Result<(f64, bool)> {
            let sys = self.fuzzy.as_ref().ok_or(Error::MissingStage("fuzzy"))?;
            let inf = sys.infer(case.fuzzy)?;
            Ok((inf.score, inf.no_rule))
        };
        let ensemble = || -> Result<f64> { Ok(stage(&self.detection, "detection")?.predict_proba(row)?[0][1]) };
        Ok(match self.mode {
            DetectionMode::Fuzzy => fuzzy()?,
            DetectionMode::Ensemble => (ensemble()?, false),
            DetectionMode::Average => {
                let (f, no_rule) = fuzzy()?;
                (0.5 * (f + ensemble()?), no_rule)
            }
        })
    }

    /// Runs the stages in order. A non-fault verdict (or no trigger) leaves
    /// the later stages empty; trip and location are set only for faults
    /// classified as internal.
    pub fn decide(&self, case: &CaseInput<'_>) -> Result<DecisionRecord> {
        let mut rec = DecisionRecord { triggered: case.triggered, ..Default::default() };
        if !case.triggered {
            return Ok(rec);
        }
        let row = FeatureTable::new(case.feature_names.to_vec(), vec![case.features.to_vec()])?;
        let (score, no_rule) = self.fault_score(case, &row)?;
        rec.fault_score = score;
        rec.fuzzy_no_rule = no_rule;
        rec.fault = score >= crate::fuzzy::DECISION_THRESHOLD;
        if !rec.fault {
            return Ok(rec);
        }
        let pick = |task: Task| -> Result<usize> { Ok(argmax(&self.stage(task)?.predict_proba(&row)?[0])) };
        let region = pick(Task::Region)?;
        rec.region = Some(region);
        if region == REGION_INTERNAL {
            rec.trip = true;
            rec.location = Some(pick(Task::Location)?);
        }
        rec.phase = Some(pick(Task::Phase)?);
        rec.fault_type = Some(pick(Task::FaultType)?);
        Ok(rec)
    }
}
