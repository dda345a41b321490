//! Scenario grids: Cartesian products of event parameters, one case per cell.

use std::path::Path;

use arfault::waveform::{slip_frequency, EventKind, EventSpec, FaultType, ResistanceClass, Transformer};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// One block of a grid. An absent axis takes its single default value; an
/// axis given as an empty list is an error.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub kind: Option<Vec<EventKind>>,
    pub fault_type: Option<Vec<FaultType>>,
    pub resistance: Option<Vec<ResistanceClass>>,
    /// Degrees; values are taken modulo 360.
    pub inception_angle: Option<Vec<f64>>,
    pub transformer: Option<Vec<Transformer>>,
    /// m/s, mapped to the slip-frequency component.
    pub wind_speed: Option<Vec<f64>>,
    pub location: Option<Vec<u8>>,
    pub rating: Option<Vec<f64>>,
    pub snr_db: Option<Vec<f64>>,
    pub ct_sat_level: Option<Vec<f64>>,
    pub sync_delay_ms: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "block", default)]
    pub blocks: Vec<GridBlock>,
}

/// One grid cell: the event, its wind speed and its derived seed.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub spec: EventSpec,
    pub wind_speed: f64,
    pub seed: u64,
}

/// SplitMix64 mix of a master seed and a stream index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn axis<T: Clone>(name: &str, v: &Option<Vec<T>>, default: T) -> CliResult<Vec<T>> {
    match v {
        None => Ok(vec![default]),
        Some(v) if v.is_empty() => Err(CliError::Grid(format!("axis '{name}' is empty"))),
        Some(v) => Ok(v.clone()),
    }
}

fn opt_axis(name: &str, v: &Option<Vec<f64>>) -> CliResult<Vec<Option<f64>>> {
    match v {
        None => Ok(vec![None]),
        Some(v) if v.is_empty() => Err(CliError::Grid(format!("axis '{name}' is empty"))),
        Some(v) => Ok(v.iter().copied().map(Some).collect()),
    }
}

impl GridBlock {
    fn events(&self) -> CliResult<Vec<(EventSpec, f64)>> {
        let base = EventSpec::default();
        let kinds = axis("kind", &self.kind, EventKind::Fault)?;
        let types = axis("fault_type", &self.fault_type, base.fault_type)?;
        let res = axis("resistance", &self.resistance, base.resistance)?;
        let angles = axis("inception_angle", &self.inception_angle, 0.0)?;
        let trafo = axis("transformer", &self.transformer, base.transformer)?;
        let winds = axis("wind_speed", &self.wind_speed, 9.0)?;
        let locs = axis("location", &self.location, base.location)?;
        let ratings = axis("rating", &self.rating, 1.0)?;
        let snrs = opt_axis("snr_db", &self.snr_db)?;
        let sats = opt_axis("ct_sat_level", &self.ct_sat_level)?;
        let delays = opt_axis("sync_delay_ms", &self.sync_delay_ms)?;
        let mut out = Vec::new();
        for &kind in &kinds {
            for &fault_type in &types {
                for &resistance in &res {
                    for &angle in &angles {
                        for &transformer in &trafo {
                            for &wind in &winds {
                                for &location in &locs {
                                    for &rating in &ratings {
                                        for &snr_db in &snrs {
                                            for &ct_sat_level in &sats {
                                                for &sync_delay_ms in &delays {
                                                    let spec = EventSpec {
                                                        kind,
                                                        fault_type,
                                                        resistance,
                                                        inception_angle: angle.rem_euclid(360.0),
                                                        transformer,
                                                        off_nominal_hz: slip_frequency(wind, base.f0),
                                                        location,
                                                        rating,
                                                        snr_db,
                                                        ct_sat_level,
                                                        sync_delay_ms,
                                                        ..base.clone()
                                                    };
                                                    spec.validate()?;
                                                    out.push((spec, wind));
                                                }
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

impl GridSpec {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let g: Self = toml::from_str(text).map_err(|e| CliError::Grid(e.to_string().trim().replace('\n', " ")))?;
        if g.blocks.is_empty() {
            return Err(CliError::Grid("grid has no [[block]] entries".into()));
        }
        Ok(g)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::from_toml(&std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Grid(e.to_string()))
    }

    /// All cells in block order, seeded from `(master, cell index)`.
    pub fn cells(&self, master: u64) -> CliResult<Vec<Cell>> {
        let mut cells = Vec::new();
        for b in &self.blocks {
            for (spec, wind_speed) in b.events()? {
                let index = cells.len();
                cells.push(Cell { index, spec, wind_speed, seed: derive_seed(master, index as u64) });
            }
        }
        Ok(cells)
    }

    /// Applies measurement noise to every cell.
    pub fn with_snr(mut self, snr_db: Option<f64>) -> Self {
        for b in &mut self.blocks {
            b.snr_db = snr_db.map(|s| vec![s]);
        }
        self
    }

    /// Desk-scale corpus: 10 fault types × 3 resistances × 6 inception
    /// angles × 1 transformer × 2 wind speeds × 3 locations = 1080 faults,
    /// and 4 non-fault kinds × 25 switching angles × 2 wind speeds × 3
    /// ratings = 600 non-faults.
    pub fn desk() -> Self {
        let faults = GridBlock {
            kind: Some(vec![EventKind::Fault]),
            fault_type: Some(FaultType::ALL.to_vec()),
            resistance: Some(ResistanceClass::ALL.to_vec()),
            inception_angle: Some((0..6).map(|k| 60.0 * k as f64).collect()),
            transformer: Some(vec![Transformer::Yy]),
            wind_speed: Some(vec![8.0, 11.0]),
            location: Some(vec![2, 5, 7]),
            ..Default::default()
        };
        let others = GridBlock {
            kind: Some(vec![EventKind::CapacitorSwitch, EventKind::LoadSwitch, EventKind::PowerSwing, EventKind::Steady]),
            inception_angle: Some((0..25).map(|k| 15.0 * k as f64).collect()),
            wind_speed: Some(vec![11.0, 22.0]),
            rating: Some(vec![0.5, 1.0, 1.5]),
            ..Default::default()
        };
        Self { blocks: vec![faults, others] }
    }
}
