//! Disturbance detection from the half-cycle cumulative-sum ratio, with the
//! trigger threshold tuned by grey wolf optimization.

mod gwo;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::{Phase, Record3Ph};
use crate::Scalar;

pub use gwo::{gwo_minimize, GwoConfig, GwoResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig<T> {
    pub beta: T,
    pub half_cycle_samples: usize,
}

impl<T: Scalar> DetectorConfig<T> {
    pub fn new(beta: T, half_cycle_samples: usize) -> Result<Self> {
        if !(beta > T::zero() && beta < T::one()) {
            return Err(Error::InvalidParameter(format!("beta must lie in (0, 1), got {beta}")));
        }
        if half_cycle_samples < 6 {
            return Err(Error::InvalidParameter(format!(
                "half cycle must span at least 6 samples, got {half_cycle_samples}"
            )));
        }
        Ok(Self {
            beta,
            half_cycle_samples,
        })
    }

    /// Half-cycle length taken from the record's nominal frequency.
    pub fn for_record(rec: &Record3Ph<T>, beta: T) -> Result<Self> {
        let h = (rec.fs() / (T::lit(2.0) * rec.f0())).round().to_usize().unwrap_or(0);
        Self::new(beta, h)
    }

    /// One-cycle re-arm interval.
    pub fn hold_off(&self) -> usize {
        2 * self.half_cycle_samples
    }
}

/// DD(t) per phase. Entries before [`DdSeries::first_valid`] are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct DdSeries<T> {
    pub first_valid: usize,
    pub phases: [Vec<T>; 3],
}

impl<T: Scalar> DdSeries<T> {
    pub fn phase(&self, p: Phase) -> &[T] {
        &self.phases[p.index()]
    }

    pub fn max_abs(&self) -> T {
        self.phases
            .iter()
            .flat_map(|p| p[self.first_valid..].iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection<T> {
    pub phase: Phase,
    pub sample_index: usize,
    pub dd_value: T,
}

/// A disturbance declared from one or more phase detections.
#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    /// Earliest triggering sample; anchors the analysis window.
    pub sample_index: usize,
    pub phases: Vec<Phase>,
}

/// Fractional increase between the absolute-current sums of the current and
/// the preceding half cycle:
///
/// `DD(t) = (S_cur - S_prev) / S_cur`, with `S_cur = Σ|I(t-H+1..=t)|` and
/// `S_prev = Σ|I(t-2H+1..=t-H)|`. `S_cur = 0` gives `DD = 0`.
pub fn dd_series<T: Scalar>(rec: &Record3Ph<T>, cfg: &DetectorConfig<T>) -> Result<DdSeries<T>> {
    let h = cfg.half_cycle_samples;
    if rec.len() < 2 * h {
        return Err(Error::TooShort {
            what: "record for DD filter",
            needed: 2 * h,
            got: rec.len(),
        });
    }
    let first_valid = 2 * h - 1;
    let phases = Phase::ALL.map(|p| {
        let x = rec.phase(p);
        let mut dd = vec![T::zero(); x.len()];
        for t in first_valid..x.len() {
            let cur: T = x[t + 1 - h..=t].iter().map(|v| v.abs()).sum();
            let prev: T = x[t + 1 - 2 * h..=t - h].iter().map(|v| v.abs()).sum();
            dd[t] = if cur == T::zero() { T::zero() } else { (cur - prev) / cur };
        }
        dd
    });
    Ok(DdSeries { first_valid, phases })
}

/// Threshold crossings `DD(t) >= beta` per phase, re-armed one cycle after
/// each trigger. Sorted by sample then phase.
pub fn detect<T: Scalar>(rec: &Record3Ph<T>, cfg: &DetectorConfig<T>) -> Result<Vec<Detection<T>>> {
    let dd = dd_series(rec, cfg)?;
    Ok(detect_in_series(&dd, cfg.beta, cfg.hold_off()))
}

pub fn detect_in_series<T: Scalar>(dd: &DdSeries<T>, beta: T, hold_off: usize) -> Vec<Detection<T>> {
    let mut out = Vec::new();
    for p in Phase::ALL {
        let series = dd.phase(p);
        let mut t = dd.first_valid;
        while t < series.len() {
            if series[t] >= beta {
                out.push(Detection {
                    phase: p,
                    sample_index: t,
                    dd_value: series[t],
                });
                t += hold_off.max(1);
            } else {
                t += 1;
            }
        }
    }
    out.sort_by_key(|d| (d.sample_index, d.phase));
    out
}

/// Groups detections into events: any phase triggering declares an event,
/// and detections within `hold_off` samples of the event's first sample
/// belong to it.
pub fn declare_events<T>(detections: &[Detection<T>], hold_off: usize) -> Vec<Event> {
    let mut sorted: Vec<&Detection<T>> = detections.iter().collect();
    sorted.sort_by_key(|d| (d.sample_index, d.phase));
    let mut events: Vec<Event> = Vec::new();
    for d in sorted {
        match events.last_mut() {
            Some(e) if d.sample_index < e.sample_index + hold_off => {
                if !e.phases.contains(&d.phase) {
                    e.phases.push(d.phase);
                }
            }
            _ => events.push(Event {
                sample_index: d.sample_index,
                phases: vec![d.phase],
            }),
        }
    }
    events
}

/// Earliest triggering sample of a record, if any phase triggers.
pub fn first_trigger<T: Scalar>(rec: &Record3Ph<T>, cfg: &DetectorConfig<T>) -> Result<Option<usize>> {
    Ok(detect(rec, cfg)?.first().map(|d| d.sample_index))
}

/// A record with its true disturbance onset (`None` for steady records).
#[derive(Clone, Debug)]
pub struct AnnotatedRecord<T> {
    pub record: Record3Ph<T>,
    pub onset: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TunedBeta<T> {
    pub beta: T,
    pub objective: T,
    pub trace: Vec<T>,
}

/// Detection-quality objective for a threshold:
/// `1 - in_zone / (declared + missed)`, where `in_zone` counts events
/// anchored inside one cycle after the true onset and `missed` counts
/// disturbed records with no such event. Zero when nothing is declared and
/// nothing is missed.
pub fn beta_objective<T: Scalar>(series: &[(DdSeries<T>, Option<usize>)], beta: T, hold_off: usize) -> T {
    let (mut in_zone, mut total, mut missed) = (0usize, 0usize, 0usize);
    for (dd, onset) in series {
        let events = declare_events(&detect_in_series(dd, beta, hold_off), hold_off);
        total += events.len();
        if let Some(on) = onset {
            let hits = events
                .iter()
                .filter(|e| e.sample_index >= *on && e.sample_index <= on + hold_off)
                .count();
            in_zone += hits;
            if hits == 0 {
                missed += 1;
            }
        }
    }
    let denom = total + missed;
    if denom == 0 {
        T::zero()
    } else {
        T::one() - T::from_usize_lossy(in_zone) / T::from_usize_lossy(denom)
    }
}

/// Tunes the trigger threshold over an annotated corpus with GWO.
pub fn tune_beta<T: Scalar>(
    corpus: &[AnnotatedRecord<T>],
    half_cycle_samples: usize,
    gwo: &GwoConfig,
) -> Result<TunedBeta<T>> {
    if corpus.is_empty() {
        return Err(Error::Degenerate("beta tuning needs a non-empty corpus".into()));
    }
    if gwo.dim != 1 {
        return Err(Error::InvalidParameter("beta tuning searches a single dimension".into()));
    }
    let probe = DetectorConfig::new(T::lit(0.5), half_cycle_samples)?;
    let hold_off = probe.hold_off();
    let series = corpus
        .iter()
        .map(|c| Ok((dd_series(&c.record, &probe)?, c.onset)))
        .collect::<Result<Vec<_>>>()?;
    let lo = T::lit(1e-6);
    let hi = T::one() - lo;
    let clamp = |b: T| b.max(lo).min(hi);
    let res = gwo_minimize(|x: &[T]| beta_objective(&series, clamp(x[0]), hold_off), gwo)?;
    let beta = clamp(res.best_x[0]);
    Ok(TunedBeta {
        beta,
        objective: beta_objective(&series, beta, hold_off),
        trace: res.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const FS: f64 = 7680.0;
    const H: usize = 64;

    fn record(f: impl Fn(usize, usize) -> f64, n: usize) -> Record3Ph<f64> {
        let p = |k| (0..n).map(|i| f(k, i)).collect::<Vec<_>>();
        Record3Ph::new(p(0), p(1), p(2), FS, 60.0, 0.0).unwrap()
    }

    fn sine(k: usize, i: usize) -> f64 {
        (2.0 * PI * 60.0 * i as f64 / FS - k as f64 * 2.0 * PI / 3.0 + 0.3).sin()
    }

    fn step_record(step_at: usize, n: usize) -> Record3Ph<f64> {
        record(|k, i| if i >= step_at { 2.0 * sine(k, i) } else { sine(k, i) }, n)
    }

    #[test]
    fn steady_sinusoid_has_zero_dd() {
        let rec = record(sine, 2000);
        let cfg = DetectorConfig::new(0.05, H).unwrap();
        let dd = dd_series(&rec, &cfg).unwrap();
        assert!(dd.max_abs() < 1e-6);
        assert!(detect(&rec, &cfg).unwrap().is_empty());
    }

    #[test]
    fn doubling_step_gives_half() {
        let rec = step_record(640, 2000);
        let cfg = DetectorConfig::new(0.05, H).unwrap();
        let dd = dd_series(&rec, &cfg).unwrap();
        for p in Phase::ALL {
            assert!((dd.phase(p)[640 + H - 1] - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_record_has_zero_dd() {
        let rec = record(|_, _| 0.0, 500);
        let cfg = DetectorConfig::new(0.05, H).unwrap();
        assert_eq!(dd_series(&rec, &cfg).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn too_short_record() {
        let rec = record(sine, 100);
        let cfg = DetectorConfig::new(0.05, H).unwrap();
        assert!(matches!(dd_series(&rec, &cfg), Err(Error::TooShort { .. })));
    }

    #[test]
    fn detection_within_half_cycle_of_step() {
        let rec = step_record(700, 2000);
        let cfg = DetectorConfig::new(0.05, H).unwrap();
        let dets = detect(&rec, &cfg).unwrap();
        let first = dets[0].sample_index;
        assert!((700..=700 + H).contains(&first), "{first}");
        let events = declare_events(&dets, cfg.hold_off());
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].phases.len(), 3);
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::new(0.0, H).is_err());
        assert!(DetectorConfig::new(1.0, H).is_err());
        assert!(DetectorConfig::new(0.05, 5).is_err());
        let rec = record(sine, 300);
        assert_eq!(DetectorConfig::for_record(&rec, 0.05).unwrap().half_cycle_samples, 64);
    }

    #[test]
    fn tune_on_step_record() {
        let corpus = vec![AnnotatedRecord {
            record: step_record(640, 2000),
            onset: Some(640),
        }];
        let tuned = tune_beta(&corpus, H, &GwoConfig::default()).unwrap();
        assert!(tuned.beta <= 0.5, "{}", tuned.beta);
        assert_eq!(tuned.objective, 0.0);
    }

    #[test]
    fn tune_on_steady_only() {
        let corpus = vec![AnnotatedRecord {
            record: record(sine, 1500),
            onset: None,
        }];
        let tuned = tune_beta(&corpus, H, &GwoConfig::default()).unwrap();
        assert_eq!(tuned.objective, 0.0);
        let cfg = DetectorConfig::new(tuned.beta, H).unwrap();
        assert!(detect(&corpus[0].record, &cfg).unwrap().is_empty());
    }

    #[test]
    fn tune_rejects_empty_corpus() {
        assert!(tune_beta::<f64>(&[], H, &GwoConfig::default()).is_err());
    }
}
