//! Manifest: one row per case binding record files to the event
//! description and the per-task labels.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use arfault::classify::Task;
use arfault::waveform::{EventKind, EventSpec, FaultType, ResistanceClass, Transformer};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::grid::Cell;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub case_id: String,
    /// Wind-farm-end record, relative to the manifest directory.
    pub wind_path: String,
    pub grid_path: Option<String>,
    pub seed: u64,
    pub kind: EventKind,
    pub fault_type: FaultType,
    pub resistance: ResistanceClass,
    pub inception_angle: f64,
    pub transformer: Transformer,
    pub wind_speed: f64,
    pub off_nominal_hz: f64,
    pub location: u8,
    pub rating: f64,
    pub snr_db: Option<f64>,
    pub ct_sat_level: Option<f64>,
    pub sync_delay_ms: Option<f64>,
    pub y_detection: usize,
    pub y_region: Option<usize>,
    pub y_location: Option<usize>,
    pub y_phase: Option<usize>,
    pub y_fault_type: Option<usize>,
}

/// Region index of a fault location: 1-3 lie behind the wind-farm end
/// (reverse), 4-5 on the protected line (internal), 6-8 beyond the grid end
/// (forward).
pub fn region_of(location: u8) -> usize {
    match location {
        4 | 5 => 0,
        6..=8 => 1,
        _ => 2,
    }
}

impl ManifestRow {
    pub fn from_cell(cell: &Cell, case_id: String, wind_path: String, grid_path: Option<String>) -> Self {
        let s = &cell.spec;
        let fault = s.kind.is_fault();
        Self {
            case_id,
            wind_path,
            grid_path,
            seed: cell.seed,
            kind: s.kind,
            fault_type: s.fault_type,
            resistance: s.resistance,
            inception_angle: s.inception_angle,
            transformer: s.transformer,
            wind_speed: cell.wind_speed,
            off_nominal_hz: s.off_nominal_hz,
            location: s.location,
            rating: s.rating,
            snr_db: s.snr_db,
            ct_sat_level: s.ct_sat_level,
            sync_delay_ms: s.sync_delay_ms,
            y_detection: fault as usize,
            y_region: fault.then(|| region_of(s.location)),
            y_location: fault.then(|| s.location as usize - 1),
            y_phase: fault.then(|| s.fault_type.phase_set()),
            y_fault_type: fault.then(|| s.fault_type.index()),
        }
    }

    pub fn spec(&self) -> EventSpec {
        EventSpec {
            kind: self.kind,
            fault_type: self.fault_type,
            inception_angle: self.inception_angle,
            resistance: self.resistance,
            off_nominal_hz: self.off_nominal_hz,
            snr_db: self.snr_db,
            ct_sat_level: self.ct_sat_level,
            sync_delay_ms: self.sync_delay_ms,
            location: self.location,
            transformer: self.transformer,
            rating: self.rating,
            ..EventSpec::default()
        }
    }

    pub fn label(&self, task: Task) -> Option<usize> {
        match task {
            Task::Detection => Some(self.y_detection),
            Task::Region => self.y_region,
            Task::Location => self.y_location,
            Task::Phase => self.y_phase,
            Task::FaultType => self.y_fault_type,
        }
    }

    /// Key for stratified splitting: event kind, and for faults the type and
    /// location.
    pub fn strata_key(&self) -> String {
        if self.kind.is_fault() {
            format!("{}/{}/{}", self.kind, self.fault_type, self.location)
        } else {
            self.kind.to_string()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
    /// Directory record paths are relative to.
    pub base: PathBuf,
}

impl Manifest {
    pub fn new(rows: Vec<ManifestRow>, base: PathBuf) -> CliResult<Self> {
        let m = Self { rows, base };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> CliResult<()> {
        let mut ids = BTreeSet::new();
        for r in &self.rows {
            if !ids.insert(&r.case_id) {
                return Err(CliError::Manifest(format!("duplicate case id '{}'", r.case_id)));
            }
            for t in Task::ALL {
                if let Some(y) = r.label(t) {
                    if y >= t.classes() {
                        return Err(CliError::Manifest(format!("case '{}': {t} label {y} outside {} classes", r.case_id, t.classes())));
                    }
                }
            }
            if (r.y_detection == 1) != r.y_region.is_some() {
                return Err(CliError::Manifest(format!("case '{}': fault labels inconsistent with detection label", r.case_id)));
            }
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, writer: W) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| CliError::Core(e.into()))?;
        Ok(())
    }

    pub fn read<R: Read>(reader: R, base: PathBuf) -> CliResult<Self> {
        let mut rd = csv::Reader::from_reader(reader);
        let rows = rd
            .deserialize()
            .enumerate()
            .map(|(i, r)| r.map_err(|e| CliError::Manifest(format!("row {}: {e}", i + 1))))
            .collect::<CliResult<Vec<ManifestRow>>>()?;
        Self::new(rows, base)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        self.write(std::io::BufWriter::new(f))
    }

    /// Reads a manifest and checks that every referenced record exists.
    pub fn load(path: &Path) -> CliResult<Self> {
        let f = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let m = Self::read(std::io::BufReader::new(f), base)?;
        for r in &m.rows {
            for p in std::iter::once(&r.wind_path).chain(r.grid_path.iter()) {
                let full = m.base.join(p);
                if !full.is_file() {
                    return Err(CliError::Manifest(format!("case '{}': record {} not found", r.case_id, full.display())));
                }
            }
        }
        Ok(m)
    }
}
