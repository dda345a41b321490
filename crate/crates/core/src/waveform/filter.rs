use std::f64::consts::PI;

use super::Record3Ph;
use crate::error::{Error, Result};
use crate::Scalar;

/// Second-order section `b0 + b1 z^-1 + b2 z^-2 / 1 + a1 z^-1 + a2 z^-2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Biquad<T> {
    pub b: [T; 3],
    pub a: [T; 2],
}

impl<T: Scalar> Biquad<T> {
    /// Builds a section from f64 coefficients, rescaling the numerator so the
    /// DC gain is exactly one in f64.
    fn unity_dc(mut b: [f64; 3], a: [f64; 3]) -> Self {
        let dc = b.iter().sum::<f64>() / a.iter().sum::<f64>();
        for v in b.iter_mut() {
            *v /= dc * a[0];
        }
        Self {
            b: b.map(T::lit),
            a: [T::lit(a[1] / a[0]), T::lit(a[2] / a[0])],
        }
    }
}

/// Digital Butterworth low-pass realized as cascaded biquads (bilinear
/// transform with cutoff prewarping; odd orders add one first-order section).
#[derive(Clone, Debug, PartialEq)]
pub struct ButterworthFilter<T> {
    sections: Vec<Biquad<T>>,
}

impl<T: Scalar> ButterworthFilter<T> {
    pub fn design(order: usize, fc: f64, fs: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("filter order must be at least 1".into()));
        }
        if !(fc > 0.0 && fc < fs / 2.0) {
            return Err(Error::OutOfRange(format!(
                "cutoff {fc} Hz must lie in (0, {}) Hz",
                fs / 2.0
            )));
        }
        let k = (PI * fc / fs).tan();
        let k2 = k * k;
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for i in 0..order / 2 {
            let theta = PI * (2 * i + 1) as f64 / (2 * order) as f64;
            let alpha = theta.sin();
            sections.push(Biquad::unity_dc(
                [k2, 2.0 * k2, k2],
                [1.0 + 2.0 * alpha * k + k2, 2.0 * k2 - 2.0, 1.0 - 2.0 * alpha * k + k2],
            ));
        }
        if order % 2 == 1 {
            sections.push(Biquad::unity_dc([k, k, 0.0], [1.0 + k, k - 1.0, 0.0]));
        }
        Ok(Self { sections })
    }

    pub fn sections(&self) -> &[Biquad<T>] {
        &self.sections
    }

    /// Filters `x` from a zero initial state.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (T::zero(), T::zero());
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[0] * out + z2;
                z2 = s.b[2] * input - s.a[1] * out;
                *v = out;
            }
        }
        y
    }
}

/// Per-phase Butterworth low-pass filtering.
pub fn butterworth_lp<T: Scalar>(rec: &Record3Ph<T>, order: usize, fc: T) -> Result<Record3Ph<T>> {
    let filt = ButterworthFilter::<T>::design(order, fc.to_f64_lossy(), rec.fs().to_f64_lossy())?;
    rec.with_phases(rec.phases().clone().map(|p| filt.apply(&p)))
}

/// Anti-alias filters (fifth order, cutoff at a quarter of the new rate) and
/// keeps every `factor`-th sample.
pub fn decimate<T: Scalar>(rec: &Record3Ph<T>, factor: usize) -> Result<Record3Ph<T>> {
    if factor == 0 {
        return Err(Error::InvalidParameter("decimation factor must be positive".into()));
    }
    if factor == 1 {
        return Ok(rec.clone());
    }
    let fs_new = rec.fs() / T::from_usize_lossy(factor);
    let filtered = butterworth_lp(rec, 5, fs_new / T::lit(4.0))?;
    let phases = filtered
        .phases()
        .clone()
        .map(|p| p.into_iter().step_by(factor).collect::<Vec<_>>());
    let [a, b, c] = phases;
    Record3Ph::new(a, b, c, fs_new, rec.f0(), rec.t0())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form magnitude of the bilinear Butterworth design.
    fn analytic_gain(order: usize, fc: f64, fs: f64, f: f64) -> f64 {
        let r = (PI * f / fs).tan() / (PI * fc / fs).tan();
        1.0 / (1.0 + r.powi(2 * order as i32)).sqrt()
    }

    fn tone(f: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect()
    }

    fn steady_peak(y: &[f64]) -> f64 {
        y[y.len() / 2..].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn passes_fundamental() {
        let fs = 7680.0;
        let filt = ButterworthFilter::<f64>::design(5, 480.0, fs).unwrap();
        let y = filt.apply(&tone(60.0, fs, 7680));
        let expect = analytic_gain(5, 480.0, fs, 60.0);
        assert!((steady_peak(&y) - 1.0).abs() < 0.005);
        assert!((steady_peak(&y) - expect).abs() < 1e-3);
    }

    #[test]
    fn rejects_3khz() {
        let fs = 7680.0;
        let filt = ButterworthFilter::<f64>::design(5, 480.0, fs).unwrap();
        let y = filt.apply(&tone(3000.0, fs, 7680));
        let expect = analytic_gain(5, 480.0, fs, 3000.0);
        assert!(expect < 0.01);
        assert!(steady_peak(&y) < 0.01);
        assert!((steady_peak(&y) - expect).abs() < 1e-4);
    }

    #[test]
    fn unity_dc_gain() {
        for order in 1..=8 {
            let filt = ButterworthFilter::<f64>::design(order, 480.0, 7680.0).unwrap();
            let y = filt.apply(&vec![1.0; 4000]);
            assert!((y[3999] - 1.0).abs() < 1e-6, "order {order}: {}", y[3999]);
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let filt = ButterworthFilter::<f32>::design(5, 480.0, 7680.0).unwrap();
        assert!(filt.apply(&[0.0; 100]).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cutoff_range_checked() {
        assert!(ButterworthFilter::<f64>::design(5, 0.0, 7680.0).is_err());
        assert!(ButterworthFilter::<f64>::design(5, 3840.0, 7680.0).is_err());
        assert!(ButterworthFilter::<f64>::design(0, 100.0, 7680.0).is_err());
    }

    #[test]
    fn decimate_to_1920() {
        let n = 7680;
        let x = tone(60.0, 7680.0, n);
        let rec = Record3Ph::new(x.clone(), x.clone(), x, 7680.0, 60.0, 0.0).unwrap();
        let d = decimate(&rec, 4).unwrap();
        assert_eq!(d.len(), 1920);
        assert!((d.fs() - 1920.0).abs() < 1e-9);
    }
}
