//! Pipeline configuration, read from TOML.

use std::path::Path;

use arfault::classify::{DetectionMode, Hyper, ModelKind};
use arfault::detector::GwoConfig;
use arfault::features::{FeatureId, DEFAULT_AR_LAG};
use arfault::fuzzy::{FuzzyTemplate, GaConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Which line ends feed the classifiers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EndMode {
    /// Wind-farm end only.
    #[default]
    Single,
    /// Wind-farm and grid ends concatenated.
    Double,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalConfig {
    pub fs: f64,
    pub f0: f64,
    pub window_cycles: f64,
    /// Cycles recorded after the event; four are needed before it.
    pub post_cycles: f64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self { fs: 7680.0, f0: 60.0, window_cycles: 0.5, post_cycles: 5.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub beta: f64,
    pub gwo: GwoConfig,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self { beta: 0.05, gwo: GwoConfig { population: 10, max_iter: 30, ..GwoConfig::default() } }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSection {
    pub ar_lag: usize,
    /// Feature names or numeric ids.
    pub ids: Vec<String>,
    pub end_mode: EndMode,
    /// Half-cycle frames scanned for the fuzzy maxima.
    pub fuzzy_frames: usize,
}

impl Default for FeatureSection {
    fn default() -> Self {
        Self {
            ar_lag: DEFAULT_AR_LAG,
            ids: vec!["ar_coeff_2".into(), "ar_coeff_5".into(), "ar_coeff_6".into()],
            end_mode: EndMode::Single,
            fuzzy_frames: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuzzySection {
    pub template: FuzzyTemplate,
    pub mode: DetectionMode,
    pub ga: GaConfig,
}

impl Default for FuzzySection {
    fn default() -> Self {
        Self { template: FuzzyTemplate::per_phase(), mode: DetectionMode::Average, ga: GaConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifySection {
    pub kinds: Vec<ModelKind>,
    /// Models per kind; variants beyond the first train on bootstrap samples.
    pub variants: usize,
    pub smote: bool,
    pub smote_k: usize,
    pub test_fraction: f64,
    pub hyper: Hyper,
}

impl Default for ClassifySection {
    fn default() -> Self {
        Self {
            kinds: vec![ModelKind::Knn, ModelKind::DecisionTree, ModelKind::GaussianNb],
            variants: 1,
            smote: true,
            smote_k: 5,
            test_fraction: 0.3,
            hyper: Hyper::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub signal: SignalConfig,
    pub detector: DetectorSection,
    pub features: FeatureSection,
    pub fuzzy: FuzzySection,
    pub classify: ClassifySection,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim().replace('\n', " ")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::from_toml(&std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        let s = &self.signal;
        if !(s.f0 > 0.0 && s.fs > 2.0 * s.f0) {
            return bad(format!("need fs > 2·f0 > 0, got fs = {}, f0 = {}", s.fs, s.f0));
        }
        if !(s.window_cycles > 0.0) || !(s.post_cycles >= s.window_cycles + 1.0) {
            return bad("window_cycles must be positive and post_cycles must exceed it by at least one cycle".into());
        }
        let w = (s.window_cycles * s.fs / s.f0).round() as usize;
        let p = self.features.ar_lag;
        if p == 0 || p > DEFAULT_AR_LAG {
            return bad(format!("ar_lag must be in 1..={DEFAULT_AR_LAG}, got {p}"));
        }
        if w < 2 * p + 2 {
            return bad(format!("a {}-cycle window is {w} samples; AR lag {p} needs at least {}", s.window_cycles, 2 * p + 2));
        }
        let half = (0.5 * s.fs / s.f0).round() as usize;
        if half < 2 * p + 2 {
            return bad(format!("a half cycle is {half} samples; the fuzzy AR inputs need at least {}", 2 * p + 2));
        }
        if !(self.detector.beta > 0.0 && self.detector.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.detector.beta));
        }
        self.feature_ids()?;
        if self.features.fuzzy_frames == 0 {
            return bad("fuzzy_frames must be at least 1".into());
        }
        self.fuzzy.template.validate()?;
        if self.fuzzy.template.input_names != FuzzyTemplate::per_phase().input_names {
            return bad("fuzzy.template.input_names must be A2_a, A5_a, A2_b, A5_b, A2_c, A5_c".into());
        }
        self.fuzzy.ga.validate()?;
        self.detector.gwo.validate()?;
        let c = &self.classify;
        if c.kinds.is_empty() || c.variants == 0 || c.smote_k == 0 {
            return bad("classify needs at least one kind, one variant and smote_k >= 1".into());
        }
        if !(c.test_fraction > 0.0 && c.test_fraction < 1.0) {
            return bad(format!("test_fraction must lie in (0, 1), got {}", c.test_fraction));
        }
        Ok(())
    }

    pub fn feature_ids(&self) -> CliResult<Vec<FeatureId>> {
        let ids = self.features.ids.iter().map(|s| s.parse::<FeatureId>()).collect::<Result<Vec<_>, _>>()?;
        if ids.is_empty() {
            return Err(CliError::Config("features.ids must not be empty".into()));
        }
        Ok(ids)
    }

    pub fn window_samples(&self) -> usize {
        (self.signal.window_cycles * self.signal.fs / self.signal.f0).round() as usize
    }

    /// Record length that leaves room for the window after any trigger.
    pub fn record_duration(&self, inception_angle: f64) -> f64 {
        (arfault::waveform::PRE_EVENT_CYCLES + inception_angle / 360.0 + self.signal.post_cycles) / self.signal.f0
    }

    /// SHA-256 of the resolved configuration, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
