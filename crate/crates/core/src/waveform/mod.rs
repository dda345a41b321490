//! Three-phase current records: ingestion, synthesis, filtering, corruption and windowing.

mod corrupt;
mod filter;
mod synth;

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

pub use corrupt::{add_noise, apply_ct_saturation, apply_sync_delay, empirical_snr_db};
pub use filter::{butterworth_lp, decimate, Biquad, ButterworthFilter};
pub use synth::{
    slip_frequency, synthesize, synthesize_pair, End, EventKind, EventSpec, FaultType,
    LocationProfile, ResistanceClass, Transformer, POST_EVENT_CYCLES, PRE_EVENT_CYCLES,
};

/// Minimum window length: a lag-10 AR fit needs at least two equations.
pub const MIN_WINDOW_SAMPLES: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            Phase::A => 'a',
            Phase::B => 'b',
            Phase::C => 'c',
        }
    }

    pub fn from_letter(c: char) -> Option<Phase> {
        match c.to_ascii_lowercase() {
            'a' => Some(Phase::A),
            'b' => Some(Phase::B),
            'c' => Some(Phase::C),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Uniformly sampled three-phase current record (amperes).
#[derive(Clone, Debug, PartialEq)]
pub struct Record3Ph<T> {
    phases: [Vec<T>; 3],
    fs: T,
    f0: T,
    t0: T,
}

impl<T: Scalar> Record3Ph<T> {
    pub fn new(a: Vec<T>, b: Vec<T>, c: Vec<T>, fs: T, f0: T, t0: T) -> Result<Self> {
        if a.len() != b.len() || a.len() != c.len() {
            return Err(Error::InvalidParameter(format!(
                "phase lengths differ: {}, {}, {}",
                a.len(),
                b.len(),
                c.len()
            )));
        }
        if a.len() < 2 {
            return Err(Error::TooShort {
                what: "record",
                needed: 2,
                got: a.len(),
            });
        }
        if !(f0 > T::zero()) || !f0.is_finite() {
            return Err(Error::InvalidParameter(format!("f0 must be positive, got {f0}")));
        }
        if !(fs > T::lit(2.0) * f0) || !fs.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "fs = {fs} Hz must exceed twice f0 = {f0} Hz"
            )));
        }
        if !t0.is_finite() {
            return Err(Error::NonFinite("t0".into()));
        }
        Ok(Self {
            phases: [a, b, c],
            fs,
            f0,
            t0,
        })
    }

    pub fn len(&self) -> usize {
        self.phases[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fs(&self) -> T {
        self.fs
    }

    pub fn f0(&self) -> T {
        self.f0
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn phase(&self, p: Phase) -> &[T] {
        &self.phases[p.index()]
    }

    pub fn phases(&self) -> &[Vec<T>; 3] {
        &self.phases
    }

    pub fn into_phases(self) -> [Vec<T>; 3] {
        self.phases
    }

    pub fn duration(&self) -> T {
        T::from_usize_lossy(self.len()) / self.fs
    }

    /// Time stamp of sample `i`.
    pub fn time_of(&self, i: usize) -> T {
        self.t0 + T::from_usize_lossy(i) / self.fs
    }

    /// Nearest sample index to absolute time `t` (may be out of range).
    pub fn nearest_index(&self, t: T) -> Option<usize> {
        let k = ((t - self.t0) * self.fs).round();
        if k < T::zero() {
            None
        } else {
            k.to_usize()
        }
    }

    /// Samples per nominal cycle, rounded.
    pub fn samples_per_cycle(&self) -> usize {
        (self.fs / self.f0).round().to_usize().unwrap_or(0)
    }

    /// Number of samples spanning `cycles` nominal cycles.
    pub fn samples_for_cycles(&self, cycles: T) -> usize {
        (cycles * self.fs / self.f0).round().to_usize().unwrap_or(0)
    }

    /// Applies `f` to every sample, keeping the sampling metadata.
    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        let phases = self
            .phases
            .clone()
            .map(|p| p.into_iter().map(&mut f).collect::<Vec<_>>());
        Self { phases, ..*self }
    }

    pub fn with_phases(&self, phases: [Vec<T>; 3]) -> Result<Self> {
        let [a, b, c] = phases;
        Self::new(a, b, c, self.fs, self.f0, self.t0)
    }

    /// Reads a `t,ia,ib,ic` CSV file.
    pub fn load_csv(path: impl AsRef<Path>, f0: T) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::read_csv(file, f0)
    }

    pub fn read_csv<R: Read>(reader: R, f0: T) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let (ct, ca, cb, cc) = (col("t")?, col("ia")?, col("ib")?, col("ic")?);

        let mut t = Vec::new();
        let mut cols: [Vec<T>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut lines = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            let field = |idx: usize, name: &str| -> Result<f64> {
                let raw = row.get(idx).ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("missing field {name}"),
                })?;
                let v: f64 = raw.parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("cannot parse {name} value {raw:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line,
                        msg: format!("non-finite {name} value"),
                    });
                }
                Ok(v)
            };
            t.push(field(ct, "t")?);
            cols[0].push(T::lit(field(ca, "ia")?));
            cols[1].push(T::lit(field(cb, "ib")?));
            cols[2].push(T::lit(field(cc, "ic")?));
            lines.push(line);
        }
        if t.len() < 2 {
            return Err(Error::TooShort {
                what: "record",
                needed: 2,
                got: t.len(),
            });
        }

        let mut dts: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        let raw_dts = dts.clone();
        dts.sort_by(f64::total_cmp);
        let median = dts[dts.len() / 2];
        if !(median > 0.0) {
            return Err(Error::Parse {
                line: lines[1],
                msg: "time column is not increasing".into(),
            });
        }
        for (i, dt) in raw_dts.iter().enumerate() {
            if ((dt - median) / median).abs() > 1e-4 {
                return Err(Error::NonUniformSampling {
                    line: lines[i + 1],
                    dt: *dt,
                    expected: median,
                });
            }
        }
        let [a, b, c] = cols;
        Self::new(a, b, c, T::lit(1.0 / median), f0, T::lit(t[0]))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(writer);
        w.write_record(["t", "ia", "ib", "ic"])?;
        for i in 0..self.len() {
            w.write_record([
                self.time_of(i).to_string(),
                self.phases[0][i].to_string(),
                self.phases[1][i].to_string(),
                self.phases[2][i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref())?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// A fixed-length view into a record.
#[derive(Clone, Copy, Debug)]
pub struct SampleWindow<'a, T> {
    record: &'a Record3Ph<T>,
    start: usize,
    len: usize,
    cycles: T,
}

impl<'a, T: Scalar> SampleWindow<'a, T> {
    pub fn phase(&self, p: Phase) -> &'a [T] {
        &self.record.phase(p)[self.start..self.start + self.len]
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn cycles(&self) -> T {
        self.cycles
    }

    pub fn record(&self) -> &'a Record3Ph<T> {
        self.record
    }

    /// Splits the window into consecutive sub-windows of `cycles` each.
    /// A trailing remainder shorter than one sub-window is dropped.
    pub fn split(&self, cycles: T) -> Result<Vec<SampleWindow<'a, T>>> {
        let w = self.record.samples_for_cycles(cycles);
        if w < MIN_WINDOW_SAMPLES {
            return Err(Error::TooShort {
                what: "sub-window",
                needed: MIN_WINDOW_SAMPLES,
                got: w,
            });
        }
        let count = (self.len / w).max(1);
        Ok((0..count)
            .map(|k| SampleWindow {
                record: self.record,
                start: self.start + k * w,
                len: w.min(self.len),
                cycles,
            })
            .collect())
    }
}

/// Window of `cycles` nominal cycles starting at the sample nearest to `t`.
pub fn window_at<T: Scalar>(rec: &Record3Ph<T>, t: T, cycles: T) -> Result<SampleWindow<'_, T>> {
    let start = rec
        .nearest_index(t)
        .ok_or_else(|| Error::OutOfRange(format!("t = {t} s precedes record start")))?;
    window_at_index(rec, start, cycles)
}

/// Window of `cycles` nominal cycles starting at sample `start`.
pub fn window_at_index<T: Scalar>(
    rec: &Record3Ph<T>,
    start: usize,
    cycles: T,
) -> Result<SampleWindow<'_, T>> {
    if !(cycles > T::zero()) {
        return Err(Error::InvalidParameter(format!("window cycles must be positive, got {cycles}")));
    }
    let len = rec.samples_for_cycles(cycles);
    if len < MIN_WINDOW_SAMPLES {
        return Err(Error::TooShort {
            what: "window",
            needed: MIN_WINDOW_SAMPLES,
            got: len,
        });
    }
    if start + len > rec.len() {
        return Err(Error::OutOfRange(format!(
            "window [{start}, {}) exceeds record length {}",
            start + len,
            rec.len()
        )));
    }
    Ok(SampleWindow {
        record: rec,
        start,
        len,
        cycles,
    })
}
