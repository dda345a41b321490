//! Per-case processing: records, trigger, feature window, fuzzy inputs.

use std::path::Path;

use arfault::detector::{first_trigger, tune_beta, AnnotatedRecord, DetectorConfig, TunedBeta};
use arfault::waveform::EventKind;
use arfault::features::{extract_with_lag, fuzzy_inputs_with_lag, FeatureId};
use arfault::waveform::{synthesize_pair, window_at_index, Phase, Record3Ph};
use arfault::Record;
use rayon::prelude::*;

use crate::config::{EndMode, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{Manifest, ManifestRow};

/// Both line-end records of a case.
#[derive(Clone, Debug)]
pub struct CaseRecords {
    pub wind: Record,
    pub grid: Option<Record>,
}

/// Synthesizes a case from its manifest row.
pub fn synthesize_case(row: &ManifestRow, cfg: &PipelineConfig) -> CliResult<CaseRecords> {
    let spec = arfault::waveform::EventSpec { f0: cfg.signal.f0, ..row.spec() };
    let (wind, grid) = synthesize_pair(&spec, cfg.signal.fs, cfg.record_duration(spec.inception_angle), row.seed)?;
    Ok(CaseRecords { wind, grid: Some(grid) })
}

/// Loads a case's records from the paths in its manifest row.
pub fn load_case(row: &ManifestRow, base: &Path, cfg: &PipelineConfig) -> CliResult<CaseRecords> {
    let load = |p: &str| -> CliResult<Record> {
        let path = base.join(p);
        let rec = Record3Ph::load_csv(&path, cfg.signal.f0).map_err(|e| CliError::Manifest(format!("{}: {e}", path.display())))?;
        if (rec.fs() - cfg.signal.fs).abs() > 1e-6 * cfg.signal.fs {
            return Err(CliError::Manifest(format!("{}: sampled at {} Hz, config expects {} Hz", path.display(), rec.fs(), cfg.signal.fs)));
        }
        Ok(rec)
    };
    Ok(CaseRecords { wind: load(&row.wind_path)?, grid: row.grid_path.as_deref().map(load).transpose()? })
}

/// Everything downstream stages need from one case.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseFeatures {
    pub case_id: String,
    pub trigger: Option<usize>,
    /// First sample of the feature window.
    pub window_start: usize,
    /// Wind-end features, feature-major then phase.
    pub wind: Vec<f64>,
    /// Grid-end features in the same layout; empty without a grid record.
    pub grid: Vec<f64>,
    /// Fuzzy inputs in template order (A2, A5 per phase).
    pub fuzzy: Vec<f64>,
    /// Feature values that were undefined and imputed as zero.
    pub imputed: usize,
}

impl CaseFeatures {
    pub fn triggered(&self) -> bool {
        self.trigger.is_some()
    }

    /// Classifier input row for the given end mode.
    pub fn row(&self, mode: EndMode) -> CliResult<Vec<f64>> {
        match mode {
            EndMode::Single => Ok(self.wind.clone()),
            EndMode::Double if self.grid.is_empty() => {
                Err(CliError::Usage(format!("case '{}' has no grid-end record for double-end mode", self.case_id)))
            }
            EndMode::Double => Ok(self.wind.iter().chain(&self.grid).copied().collect()),
        }
    }
}

const FIXED_COLUMNS: [&str; 4] = ["case_id", "trigger", "window_start", "imputed"];

/// Writes processed cases as CSV: case id, trigger, window start, imputed
/// count, the fuzzy inputs, then the wind-end and (when present) grid-end
/// feature columns.
pub fn write_features<W: std::io::Write>(writer: W, fuzzy_names: &[String], ids: &[FeatureId], cases: &[CaseFeatures]) -> CliResult<()> {
    let double = cases.first().is_some_and(|c| !c.grid.is_empty());
    if cases.iter().any(|c| c.grid.is_empty() == double) {
        return Err(CliError::Usage("cases mix single- and double-end records".into()));
    }
    let names = column_names(ids, if double { EndMode::Double } else { EndMode::Single });
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<&str> = FIXED_COLUMNS.iter().copied().chain(fuzzy_names.iter().map(String::as_str)).chain(names.iter().map(String::as_str)).collect();
    w.write_record(&header)?;
    for c in cases {
        let mut rec = vec![
            c.case_id.clone(),
            c.trigger.map(|t| t.to_string()).unwrap_or_default(),
            c.window_start.to_string(),
            c.imputed.to_string(),
        ];
        rec.extend(c.fuzzy.iter().chain(&c.wind).chain(&c.grid).map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CliError::Core(e.into()))?;
    Ok(())
}

/// Reads a features CSV written by [`write_features`] for the given fuzzy
/// input names and feature ids.
pub fn read_features<R: std::io::Read>(reader: R, fuzzy_names: &[String], ids: &[FeatureId]) -> CliResult<Vec<CaseFeatures>> {
    let mut rd = csv::Reader::from_reader(reader);
    let header: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    let single = column_names(ids, EndMode::Single);
    let double = column_names(ids, EndMode::Double);
    let expect = |cols: &[String]| -> Vec<String> {
        FIXED_COLUMNS.iter().map(|s| s.to_string()).chain(fuzzy_names.iter().cloned()).chain(cols.iter().cloned()).collect()
    };
    let has_grid = if header == expect(&double) {
        true
    } else if header == expect(&single) {
        false
    } else {
        return Err(CliError::Usage("features file columns do not match the configured features; rerun extract".into()));
    };
    let nf = fuzzy_names.len();
    let nw = single.len();
    let mut out = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| CliError::Usage(format!("features row {}: bad {what}", line + 1));
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(&header[i]));
        let trigger = if rec[1].is_empty() { None } else { Some(rec[1].parse().map_err(|_| bad("trigger"))?) };
        let values = (FIXED_COLUMNS.len()..rec.len()).map(num).collect::<CliResult<Vec<f64>>>()?;
        out.push(CaseFeatures {
            case_id: rec[0].to_string(),
            trigger,
            window_start: rec[2].parse().map_err(|_| bad("window_start"))?,
            imputed: rec[3].parse().map_err(|_| bad("imputed"))?,
            fuzzy: values[..nf].to_vec(),
            wind: values[nf..nf + nw].to_vec(),
            grid: if has_grid { values[nf + nw..].to_vec() } else { Vec::new() },
        });
    }
    Ok(out)
}

/// Column names for the given features and end mode, e.g. `ar_coeff_2_a_w`.
pub fn column_names(ids: &[FeatureId], mode: EndMode) -> Vec<String> {
    let ends: &[char] = match mode {
        EndMode::Single => &['w'],
        EndMode::Double => &['w', 'g'],
    };
    let mut names = Vec::new();
    for end in ends {
        for id in ids {
            for p in Phase::ALL {
                names.push(format!("{}_{}_{end}", id.name(), p.letter()));
            }
        }
    }
    names
}

fn features_at(rec: &Record, start: usize, ids: &[FeatureId], cfg: &PipelineConfig) -> CliResult<(Vec<f64>, usize)> {
    let win = window_at_index(rec, start, cfg.signal.window_cycles)?;
    let fv = extract_with_lag(&win, ids, cfg.features.ar_lag)?;
    let mut out = Vec::with_capacity(ids.len() * 3);
    let mut imputed = 0;
    for &id in ids {
        for v in &fv {
            let (x, defined) = v.get_or_zero(id);
            imputed += !defined as usize;
            out.push(x);
        }
    }
    Ok((out, imputed))
}

/// Triggers on the wind end and extracts features at the trigger. Untriggered
/// cases use the window at `fallback_start` (the known onset, for training)
/// so that every case still yields a row.
pub fn process_case(case_id: &str, recs: &CaseRecords, beta: f64, fallback_start: usize, cfg: &PipelineConfig) -> CliResult<CaseFeatures> {
    let ids = cfg.feature_ids()?;
    let dcfg = DetectorConfig::for_record(&recs.wind, beta)?;
    let trigger = first_trigger(&recs.wind, &dcfg)?;
    let w = cfg.window_samples();
    let half = recs.wind.samples_for_cycles(0.5);
    let frames = cfg.features.fuzzy_frames;
    let need = w.max(frames * half);
    let last = recs.wind.len().saturating_sub(need);
    let window_start = trigger.unwrap_or(fallback_start).min(last);

    let (wind, mut imputed) = features_at(&recs.wind, window_start, &ids, cfg)?;
    let grid = match &recs.grid {
        Some(g) => {
            let (v, k) = features_at(g, window_start.min(g.len().saturating_sub(w)), &ids, cfg)?;
            imputed += k;
            v
        }
        None => Vec::new(),
    };
    let windows = (0..frames)
        .map(|k| window_at_index(&recs.wind, window_start + k * half, 0.5))
        .collect::<Result<Vec<_>, _>>()?;
    let fz = fuzzy_inputs_with_lag(&windows, cfg.features.ar_lag)?;
    let fuzzy = fz.iter().flat_map(|&(a2, a5)| [a2, a5]).collect();
    Ok(CaseFeatures { case_id: case_id.to_string(), trigger, window_start, wind, grid, fuzzy, imputed })
}

/// Onset sample index of a case, used when nothing triggers.
pub fn onset_index(row: &ManifestRow, cfg: &PipelineConfig) -> usize {
    let spec = arfault::waveform::EventSpec { f0: cfg.signal.f0, ..row.spec() };
    (spec.onset_time() * cfg.signal.fs).ceil() as usize
}

/// True disturbance onset of a case; steady records have none.
pub fn annotated_onset(row: &ManifestRow, cfg: &PipelineConfig) -> Option<usize> {
    (row.kind != EventKind::Steady).then(|| onset_index(row, cfg))
}

/// Tunes the trigger threshold with GWO on the wind-end records of the given
/// cases.
pub fn tune_beta_on(m: &Manifest, idx: &[usize], source: Source<'_>, cfg: &PipelineConfig) -> CliResult<TunedBeta<f64>> {
    let corpus = idx
        .par_iter()
        .map(|&i| {
            let row = &m.rows[i];
            let recs = match source {
                Source::Synthesize => synthesize_case(row, cfg)?,
                Source::Files(base) => load_case(row, base, cfg)?,
            };
            Ok(AnnotatedRecord { record: recs.wind, onset: annotated_onset(row, cfg) })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let half = (0.5 * cfg.signal.fs / cfg.signal.f0).round() as usize;
    let gwo = arfault::detector::GwoConfig { dim: 1, ..cfg.detector.gwo.clone() };
    Ok(tune_beta(&corpus, half, &gwo)?)
}

/// Where a corpus's records come from.
#[derive(Clone, Copy, Debug)]
pub enum Source<'a> {
    /// Synthesize in memory from the manifest rows.
    Synthesize,
    /// Read the record files relative to this directory.
    Files(&'a Path),
}

/// Processes every case of a manifest in parallel; output order follows the
/// manifest.
pub fn process_manifest(m: &Manifest, source: Source<'_>, beta: f64, cfg: &PipelineConfig) -> CliResult<Vec<CaseFeatures>> {
    m.rows
        .par_iter()
        .map(|row| {
            let recs = match source {
                Source::Synthesize => synthesize_case(row, cfg)?,
                Source::Files(base) => load_case(row, base, cfg)?,
            };
            process_case(&row.case_id, &recs, beta, onset_index(row, cfg), cfg)
        })
        .collect()
}
