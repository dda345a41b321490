//! Per-series formulas for the feature catalog.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::ar::{ar_fit, ArModel};
use super::registry::{FeatureId, FeatureKind, FftPart, QUANTILES, WAVELET_POSITIONS, WAVELET_WIDTHS};
use crate::Scalar;

/// Lazily evaluated intermediate results shared between features of one series.
pub(crate) struct SeriesContext<'a, T: Scalar> {
    x: &'a [T],
    ar_lag: usize,
    moments: Option<Moments<T>>,
    ar: Option<Option<ArModel<T>>>,
    spectrum: Option<Vec<Complex<T>>>,
    sorted: Option<Vec<T>>,
}

#[derive(Clone, Copy)]
struct Moments<T> {
    mean: T,
    std: T,
    m3: T,
    m4: T,
    /// Standard deviation indistinguishable from rounding error.
    flat: bool,
    /// Mean indistinguishable from rounding error.
    zero_mean: bool,
}

impl<'a, T: Scalar> SeriesContext<'a, T> {
    pub(crate) fn new(x: &'a [T], ar_lag: usize) -> Self {
        Self { x, ar_lag, moments: None, ar: None, spectrum: None, sorted: None }
    }

    fn moments(&mut self) -> Moments<T> {
        if let Some(m) = self.moments {
            return m;
        }
        let x = self.x;
        let n = T::from_usize_lossy(x.len());
        let mean = x.iter().copied().sum::<T>() / n;
        let (mut m2, mut m3, mut m4) = (T::zero(), T::zero(), T::zero());
        for &v in x {
            let d = v - mean;
            let d2 = d * d;
            m2 = m2 + d2;
            m3 = m3 + d2 * d;
            m4 = m4 + d2 * d2;
        }
        let max_abs = x.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        let tol = T::epsilon() * n * max_abs;
        let std = (m2 / n).sqrt();
        let m = Moments {
            mean,
            std,
            m3: m3 / n,
            m4: m4 / n,
            flat: std <= tol,
            zero_mean: mean.abs() <= tol,
        };
        self.moments = Some(m);
        m
    }

    fn ar(&mut self) -> Option<&ArModel<T>> {
        if self.ar.is_none() {
            self.ar = Some(ar_fit(self.x, self.ar_lag).ok());
        }
        self.ar.as_ref().and_then(|m| m.as_ref())
    }

    fn spectrum(&mut self) -> &[Complex<T>] {
        if self.spectrum.is_none() {
            let mut buf: Vec<Complex<T>> = self.x.iter().map(|&v| Complex::new(v, T::zero())).collect();
            FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
            self.spectrum = Some(buf);
        }
        self.spectrum.as_deref().unwrap_or(&[])
    }

    fn sorted(&mut self) -> &[T] {
        if self.sorted.is_none() {
            let mut s = self.x.to_vec();
            s.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
            self.sorted = Some(s);
        }
        self.sorted.as_deref().unwrap_or(&[])
    }

    /// Value of a single-series feature. Sequence components are handled by
    /// the caller because they need all three phases.
    pub(crate) fn value(&mut self, id: FeatureId) -> Option<T> {
        let x = self.x;
        let n = x.len();
        if n == 0 {
            return None;
        }
        match id.kind() {
            FeatureKind::AbsEnergy => Some(x.iter().map(|&v| v * v).sum()),
            FeatureKind::AbsSumChanges => Some(abs_sum_changes(x)),
            FeatureKind::MeanAbsChanges => {
                (n > 1).then(|| abs_sum_changes(x) / T::from_usize_lossy(n - 1))
            }
            FeatureKind::Complexity => Some(
                x.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum::<T>().sqrt(),
            ),
            FeatureKind::Ar(k) if k > self.ar_lag => None,
            FeatureKind::Ar(k) => self.ar().map(|m| m.coeff(k)),
            FeatureKind::StdDev => Some(self.moments().std),
            FeatureKind::Autocorr(lag) => {
                let m = self.moments();
                if m.flat || lag >= n {
                    return None;
                }
                let acc: T = (0..n - lag).map(|i| (x[i] - m.mean) * (x[i + lag] - m.mean)).sum();
                Some(acc / (T::from_usize_lossy(n - 1) * m.std * m.std))
            }
            FeatureKind::Kurtosis => {
                let m = self.moments();
                (!m.flat).then(|| m.m4 / m.std.powi(4))
            }
            FeatureKind::Skewness => {
                let m = self.moments();
                (!m.flat).then(|| m.m3 / m.std.powi(3))
            }
            FeatureKind::VariationCoeff => {
                let m = self.moments();
                (!m.zero_mean).then(|| m.std / m.mean)
            }
            FeatureKind::Fft(k, part) => {
                let f = self.spectrum()[k % n];
                Some(match part {
                    FftPart::Real => f.re,
                    FftPart::Imag => f.im,
                    FftPart::Abs => f.norm(),
                    FftPart::Angle => f.im.atan2(f.re),
                })
            }
            FeatureKind::Wavelet(w, p) => Some(ricker_response(x, T::lit(WAVELET_WIDTHS[w]), p)),
            FeatureKind::SampleEntropy => {
                let m = self.moments();
                sample_entropy(x, 2, T::lit(0.2) * m.std)
            }
            FeatureKind::FirstMax | FeatureKind::LastMax => {
                let max = x.iter().copied().fold(T::neg_infinity(), T::max);
                let pos = if id.kind() == FeatureKind::FirstMax {
                    x.iter().position(|&v| v == max)
                } else {
                    x.iter().rposition(|&v| v == max)
                }?;
                Some(if n > 1 { T::from_usize_lossy(pos) / T::from_usize_lossy(n - 1) } else { T::zero() })
            }
            FeatureKind::Quantile(q) => Some(quantile_sorted(self.sorted(), T::lit(QUANTILES[q]))),
            FeatureKind::Sequence(_) => None,
        }
    }
}

fn abs_sum_changes<T: Scalar>(x: &[T]) -> T {
    x.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Linear-interpolation quantile (the default of most statistics packages).
pub(crate) fn quantile_sorted<T: Scalar>(sorted: &[T], q: T) -> T {
    let n = sorted.len();
    let h = q * T::from_usize_lossy(n - 1);
    let lo = h.floor().to_usize().unwrap_or(0).min(n - 1);
    let hi = (lo + 1).min(n - 1);
    let frac = h - T::from_usize_lossy(lo);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Mexican-hat wavelet with width `a`, unit L2 norm.
pub fn ricker<T: Scalar>(t: T, a: T) -> T {
    let norm = T::lit(2.0) / ((T::lit(3.0) * a).sqrt() * T::PI().powf(T::lit(0.25)));
    let r = t / a;
    norm * (T::one() - r * r) * (-(r * r) / T::lit(2.0)).exp()
}

/// Wavelet response centred at position `j` of the uniform grid
/// `c_j = j (N-1) / 9` over the window.
pub(crate) fn ricker_response<T: Scalar>(x: &[T], a: T, j: usize) -> T {
    let span = T::from_usize_lossy(x.len().saturating_sub(1));
    let c = T::from_usize_lossy(j) * span / T::from_usize_lossy(WAVELET_POSITIONS - 1);
    x.iter()
        .enumerate()
        .map(|(i, &v)| v * ricker(T::from_usize_lossy(i) - c, a))
        .sum()
}

/// Sample entropy with template length `m` and Chebyshev tolerance `r`.
/// Undefined when no template pair matches at length `m + 1`.
pub(crate) fn sample_entropy<T: Scalar>(x: &[T], m: usize, r: T) -> Option<T> {
    let n = x.len();
    if n <= m + 1 {
        return None;
    }
    let templates = n - m;
    let (mut b, mut a) = (0usize, 0usize);
    for i in 0..templates {
        for j in i + 1..templates {
            let close = (0..m).all(|k| (x[i + k] - x[j + k]).abs() <= r);
            if close {
                b += 1;
                if (x[i + m] - x[j + m]).abs() <= r {
                    a += 1;
                }
            }
        }
    }
    if a == 0 || b == 0 {
        return None;
    }
    Some(-(T::from_usize_lossy(a) / T::from_usize_lossy(b)).ln())
}
