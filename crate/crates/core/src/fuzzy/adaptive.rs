use serde::{Deserialize, Serialize};

use super::{ga_tune, FuzzySystem, FuzzyTemplate, GaConfig, LabeledInputs};
use crate::error::{Error, Result};
use crate::Scalar;

/// Extremes of each tracked coefficient over the previous frame; `None`
/// before the first frame.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveState<T> {
    pub bounds: Option<Vec<(T, T)>>,
}

/// Compare a frame of half-cycle coefficient vectors with the previous
/// frame's extremes. Re-tuning is needed when any coefficient leaves the
/// previous `[min, max]`; the first frame always requests it.
pub fn adaptive_check<T: Scalar>(state: &AdaptiveState<T>, frame: &[Vec<T>]) -> Result<(bool, AdaptiveState<T>)> {
    let width = frame.first().map(Vec::len).unwrap_or(0);
    if width == 0 || frame.iter().any(|r| r.len() != width) {
        return Err(Error::InvalidParameter("adaptive frame needs at least one half-cycle of equal-width rows".into()));
    }
    let bounds: Vec<(T, T)> = (0..width)
        .map(|j| {
            let lo = frame.iter().map(|r| r[j]).fold(T::infinity(), T::min);
            let hi = frame.iter().map(|r| r[j]).fold(T::neg_infinity(), T::max);
            (lo, hi)
        })
        .collect();
    let retune = match &state.bounds {
        None => true,
        Some(prev) if prev.len() != width => true,
        Some(prev) => bounds.iter().zip(prev).any(|(cur, old)| cur.0 < old.0 || cur.1 > old.1),
    };
    Ok((retune, AdaptiveState { bounds: Some(bounds) }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameOutcome<T> {
    pub fault: bool,
    pub score: T,
    pub retuned: bool,
}

/// A fuzzy protector that re-runs the genetic tuner on its accumulated
/// labelled buffer whenever a frame leaves the previous coefficient range.
#[derive(Clone, Debug)]
pub struct AdaptiveProtector<T> {
    pub system: FuzzySystem<T>,
    pub template: FuzzyTemplate,
    pub ga: GaConfig,
    pub state: AdaptiveState<T>,
    pub buffer: LabeledInputs<T>,
    pub retunes: usize,
}

impl<T: Scalar> AdaptiveProtector<T> {
    pub fn new(system: FuzzySystem<T>, template: FuzzyTemplate, ga: GaConfig) -> Self {
        Self { system, template, ga, state: AdaptiveState::default(), buffer: LabeledInputs::default(), retunes: 0 }
    }

    /// Decide on a frame (elementwise maximum over its half-cycles), record
    /// it in the buffer when a label is known, and re-tune if triggered.
    pub fn process_frame(&mut self, frame: &[Vec<T>], label: Option<bool>) -> Result<FrameOutcome<T>> {
        let (trigger, state) = adaptive_check(&self.state, frame)?;
        self.state = state;
        let peak: Vec<T> = (0..frame[0].len())
            .map(|j| frame.iter().map(|r| r[j]).fold(T::neg_infinity(), T::max))
            .collect();
        if let Some(l) = label {
            self.buffer.push(peak.clone(), l);
        }
        let mut retuned = false;
        if trigger && self.buffer.has_both_classes() {
            let cfg = GaConfig { seed: self.ga.seed.wrapping_add(self.retunes as u64), ..self.ga.clone() };
            self.system = ga_tune(&self.buffer, &self.template, &cfg)?.system;
            self.retunes += 1;
            retuned = true;
        }
        let inf = self.system.infer(&peak)?;
        Ok(FrameOutcome { fault: inf.is_fault(), score: inf.score, retuned })
    }
}
