//! Feature catalog: AR coefficients plus statistical, spectral and
//! sequence-component descriptors of short current windows.

mod ar;
mod catalog;
mod lstsq;
mod registry;

use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

pub use ar::{ar_fit, ar_fit_with_rcond, default_rcond, ArModel, DEFAULT_AR_LAG};
pub use catalog::ricker;
pub use lstsq::{lstsq_min_norm, LstsqSolution};
pub use registry::{
    FeatureId, FeatureKind, FftPart, FEATURE_COUNT, FFT_COEFFS, QUANTILES, WAVELET_POSITIONS, WAVELET_WIDTHS,
};

use crate::error::{Error, Result};
use crate::relay::dft_phasor;
use crate::waveform::{Phase, SampleWindow};
use crate::Scalar;

/// Feature values of one phase of one window. `None` marks a value that is
/// undefined for the window (zero spread, zero mean, too few samples).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector<T> {
    pub phase: Phase,
    pub window_start: usize,
    pub window_len: usize,
    pub values: BTreeMap<FeatureId, Option<T>>,
}

impl<T: Scalar> FeatureVector<T> {
    pub fn get(&self, id: FeatureId) -> Option<T> {
        self.values.get(&id).copied().flatten()
    }

    /// Value with undefined entries imputed as zero; the flag reports whether
    /// imputation happened.
    pub fn get_or_zero(&self, id: FeatureId) -> (T, bool) {
        match self.get(id) {
            Some(v) => (v, false),
            None => (T::zero(), true),
        }
    }

    pub fn undefined(&self) -> impl Iterator<Item = FeatureId> + '_ {
        self.values.iter().filter(|(_, v)| v.is_none()).map(|(k, _)| *k)
    }
}

/// Magnitudes of the zero-, positive- and negative-sequence components.
pub fn sequence_components<T: Scalar>(ia: Complex<T>, ib: Complex<T>, ic: Complex<T>) -> [T; 3] {
    let third = T::lit(1.0 / 3.0);
    let alpha = Complex::from_polar(T::one(), T::lit(2.0) * T::PI() / T::lit(3.0));
    let alpha2 = alpha * alpha;
    let i0 = (ia + ib + ic).scale(third);
    let i1 = (ia + alpha * ib + alpha2 * ic).scale(third);
    let i2 = (ia + alpha2 * ib + alpha * ic).scale(third);
    [i0.norm(), i1.norm(), i2.norm()]
}

/// Sequence magnitudes of a window, from one-cycle phasors at the nominal
/// frequency. `None` when the window is shorter than one cycle.
pub fn window_sequence_components<T: Scalar>(win: &SampleWindow<'_, T>) -> Option<[T; 3]> {
    let rec = win.record();
    let mut ph = [Complex::new(T::zero(), T::zero()); 3];
    for p in Phase::ALL {
        ph[p.index()] = dft_phasor(win.phase(p), rec.fs(), rec.f0()).ok()?.phasor;
    }
    Some(sequence_components(ph[0], ph[1], ph[2]))
}

/// Evaluate the requested features on each phase of a window.
pub fn extract<T: Scalar>(win: &SampleWindow<'_, T>, which: &[FeatureId]) -> Result<[FeatureVector<T>; 3]> {
    extract_with_lag(win, which, DEFAULT_AR_LAG)
}

/// [`extract`] with an AR model of order `ar_lag`; coefficients beyond the
/// order are undefined.
pub fn extract_with_lag<T: Scalar>(
    win: &SampleWindow<'_, T>,
    which: &[FeatureId],
    ar_lag: usize,
) -> Result<[FeatureVector<T>; 3]> {
    if ar_lag == 0 || ar_lag > DEFAULT_AR_LAG {
        return Err(Error::InvalidParameter(format!("AR lag must be in 1..={DEFAULT_AR_LAG}, got {ar_lag}")));
    }
    if win.is_empty() {
        return Err(Error::TooShort { what: "feature window", needed: 1, got: 0 });
    }
    let needs_seq = which.iter().any(|id| matches!(id.kind(), FeatureKind::Sequence(_)));
    let seq = if needs_seq { window_sequence_components(win) } else { None };
    Ok(Phase::ALL.map(|p| {
        let mut ctx = catalog::SeriesContext::new(win.phase(p), ar_lag);
        let values = which
            .iter()
            .map(|&id| {
                let v = match id.kind() {
                    FeatureKind::Sequence(s) => seq.map(|c| c[s]),
                    _ => ctx.value(id),
                };
                (id, v.filter(|v| v.is_finite()))
            })
            .collect();
        FeatureVector { phase: p, window_start: win.start(), window_len: win.len(), values }
    }))
}

/// Per phase, the largest `A_2` and `A_5` over the given windows.
pub fn fuzzy_inputs<T: Scalar>(windows: &[SampleWindow<'_, T>]) -> Result<[(T, T); 3]> {
    fuzzy_inputs_with_lag(windows, DEFAULT_AR_LAG)
}

pub fn fuzzy_inputs_with_lag<T: Scalar>(windows: &[SampleWindow<'_, T>], ar_lag: usize) -> Result<[(T, T); 3]> {
    if ar_lag < 5 {
        return Err(Error::InvalidParameter(format!("fuzzy inputs need an AR lag of at least 5, got {ar_lag}")));
    }
    if windows.is_empty() {
        return Err(Error::InvalidParameter("fuzzy_inputs needs at least one window".into()));
    }
    let mut out = [(T::neg_infinity(), T::neg_infinity()); 3];
    for win in windows {
        for p in Phase::ALL {
            let m = ar_fit(win.phase(p), ar_lag)?;
            let o = &mut out[p.index()];
            o.0 = o.0.max(m.coeff(2));
            o.1 = o.1.max(m.coeff(5));
        }
    }
    Ok(out)
}

/// One row of an exported feature matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRow {
    pub case_id: String,
    pub phase: Phase,
    pub values: Vec<Option<f64>>,
}

/// Write rows as CSV `case_id,phase,<feature names...>`; undefined values
/// are left empty.
pub fn write_feature_csv<W: Write>(writer: W, ids: &[FeatureId], rows: &[FeatureRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["case_id".to_string(), "phase".to_string()];
    header.extend(ids.iter().map(|id| id.name().to_string()));
    w.write_record(&header)?;
    for row in rows {
        if row.values.len() != ids.len() {
            return Err(Error::SchemaMismatch { expected: format!("{} columns", ids.len()), got: row.values.len().to_string() });
        }
        let mut rec = vec![row.case_id.clone(), row.phase.to_string()];
        rec.extend(row.values.iter().map(|v| v.map(|x| format!("{x:e}")).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(reader: R) -> Result<(Vec<FeatureId>, Vec<FeatureRow>)> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = r.headers()?.clone();
    if header.len() < 2 || &header[0] != "case_id" || &header[1] != "phase" {
        return Err(Error::Format("feature CSV must start with case_id,phase".into()));
    }
    let ids = header.iter().skip(2).map(FeatureId::from_name).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let phase = rec[1]
            .chars()
            .next()
            .and_then(Phase::from_letter)
            .ok_or_else(|| Error::Parse { line, msg: format!("bad phase '{}'", &rec[1]) })?;
        let values = rec
            .iter()
            .skip(2)
            .map(|s| {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>().map(Some).map_err(|e| Error::Parse { line, msg: e.to_string() })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != ids.len() {
            return Err(Error::SchemaMismatch { expected: format!("{} columns", ids.len()), got: values.len().to_string() });
        }
        rows.push(FeatureRow { case_id: rec[0].to_string(), phase, values });
    }
    Ok((ids, rows))
}

impl<T: Scalar> FeatureVector<T> {
    /// Export helper: values in `ids` order as `f64`.
    pub fn to_row(&self, case_id: &str, ids: &[FeatureId]) -> FeatureRow {
        FeatureRow {
            case_id: case_id.to_string(),
            phase: self.phase,
            values: ids.iter().map(|&id| self.get(id).map(|v| v.to_f64_lossy())).collect(),
        }
    }
}
