use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FEATURE_COUNT: u16 = 144;
pub const FFT_COEFFS: usize = 20;
pub const WAVELET_WIDTHS: [f64; 3] = [5.0, 10.0, 20.0];
pub const WAVELET_POSITIONS: usize = 10;
pub const QUANTILES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FftPart {
    Real,
    Imag,
    Abs,
    Angle,
}

impl FftPart {
    const ALL: [FftPart; 4] = [FftPart::Real, FftPart::Imag, FftPart::Abs, FftPart::Angle];

    fn name(self) -> &'static str {
        match self {
            FftPart::Real => "real",
            FftPart::Imag => "imag",
            FftPart::Abs => "abs",
            FftPart::Angle => "angle",
        }
    }
}

/// What a registry slot computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    AbsEnergy,
    AbsSumChanges,
    /// AR coefficient at lag 1..=10.
    Ar(usize),
    MeanAbsChanges,
    StdDev,
    /// Autocorrelation at lag 1..=5.
    Autocorr(usize),
    Kurtosis,
    /// DFT coefficient k = 1..=20.
    Fft(usize, FftPart),
    /// Mexican-hat response: width index into [`WAVELET_WIDTHS`], position 0..10.
    Wavelet(usize, usize),
    SampleEntropy,
    FirstMax,
    LastMax,
    /// Index into [`QUANTILES`].
    Quantile(usize),
    Skewness,
    VariationCoeff,
    Complexity,
    /// Sequence current magnitude: 0 zero, 1 positive, 2 negative.
    Sequence(usize),
}

/// Registry index 1..=144 of a catalog feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub struct FeatureId(u16);

impl FeatureId {
    pub fn new(index: u16) -> Result<Self> {
        if (1..=FEATURE_COUNT).contains(&index) {
            Ok(Self(index))
        } else {
            Err(Error::UnknownFeature(format!("id {index}")))
        }
    }

    pub fn index(self) -> u16 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = FeatureId> {
        (1..=FEATURE_COUNT).map(FeatureId)
    }

    /// AR coefficient `A_k`.
    pub fn ar(k: usize) -> Result<Self> {
        if (1..=10).contains(&k) {
            Ok(Self(2 + k as u16))
        } else {
            Err(Error::UnknownFeature(format!("AR lag {k}")))
        }
    }

    pub fn kind(self) -> FeatureKind {
        let i = self.0 as usize;
        match i {
            1 => FeatureKind::AbsEnergy,
            2 => FeatureKind::AbsSumChanges,
            3..=12 => FeatureKind::Ar(i - 2),
            13 => FeatureKind::MeanAbsChanges,
            14 => FeatureKind::StdDev,
            15..=19 => FeatureKind::Autocorr(i - 14),
            20 => FeatureKind::Kurtosis,
            21..=100 => FeatureKind::Fft((i - 21) / 4 + 1, FftPart::ALL[(i - 21) % 4]),
            101..=130 => FeatureKind::Wavelet((i - 101) / WAVELET_POSITIONS, (i - 101) % WAVELET_POSITIONS),
            131 => FeatureKind::SampleEntropy,
            132 => FeatureKind::FirstMax,
            133 => FeatureKind::LastMax,
            134..=138 => FeatureKind::Quantile(i - 134),
            139 => FeatureKind::Skewness,
            140 => FeatureKind::VariationCoeff,
            141 => FeatureKind::Complexity,
            142..=144 => FeatureKind::Sequence(i - 142),
            _ => unreachable!("feature ids are validated on construction"),
        }
    }

    pub fn name(self) -> &'static str {
        &names()[self.0 as usize - 1]
    }

    pub fn from_name(name: &str) -> Result<Self> {
        names()
            .iter()
            .position(|n| n == name)
            .map(|i| FeatureId(i as u16 + 1))
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }
}

impl TryFrom<u16> for FeatureId {
    type Error = Error;

    fn try_from(v: u16) -> Result<Self> {
        FeatureId::new(v)
    }
}

impl From<FeatureId> for u16 {
    fn from(id: FeatureId) -> u16 {
        id.0
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<u16>() {
            Ok(i) => FeatureId::new(i),
            Err(_) => FeatureId::from_name(s),
        }
    }
}

fn names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| {
        (1..=FEATURE_COUNT)
            .map(|i| match FeatureId(i).kind() {
                FeatureKind::AbsEnergy => "abs_energy".into(),
                FeatureKind::AbsSumChanges => "abs_sum_changes".into(),
                FeatureKind::Ar(k) => format!("ar_coeff_{k}"),
                FeatureKind::MeanAbsChanges => "mean_abs_changes".into(),
                FeatureKind::StdDev => "std_dev".into(),
                FeatureKind::Autocorr(l) => format!("autocorr_lag_{l}"),
                FeatureKind::Kurtosis => "kurtosis".into(),
                FeatureKind::Fft(k, part) => format!("fft_{k}_{}", part.name()),
                FeatureKind::Wavelet(w, p) => format!("ricker_w{}_p{p}", WAVELET_WIDTHS[w]),
                FeatureKind::SampleEntropy => "sample_entropy".into(),
                FeatureKind::FirstMax => "first_max".into(),
                FeatureKind::LastMax => "last_max".into(),
                FeatureKind::Quantile(q) => ["min", "q25", "median", "q75", "max"][q].into(),
                FeatureKind::Skewness => "skewness".into(),
                FeatureKind::VariationCoeff => "variation_coeff".into(),
                FeatureKind::Complexity => "cid_complexity".into(),
                FeatureKind::Sequence(s) => ["seq_zero", "seq_pos", "seq_neg"][s].into(),
            })
            .collect()
    })
}
