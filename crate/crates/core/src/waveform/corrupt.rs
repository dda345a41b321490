use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Phase, Record3Ph};
use crate::error::{Error, Result};
use crate::Scalar;

/// Adds white Gaussian noise at `snr_db` per phase.
///
/// The realized noise of each phase is rescaled so that its empirical power
/// sits exactly `snr_db` below that phase's empirical signal power.
/// `snr_db = +inf` returns the input unchanged.
pub fn add_noise<T: Scalar>(rec: &Record3Ph<T>, snr_db: T, seed: u64) -> Result<Record3Ph<T>> {
    if snr_db.is_infinite() && snr_db > T::zero() {
        return Ok(rec.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidParameter(format!("SNR must be finite or +inf, got {snr_db}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rec.len();
    let mut out = rec.phases().clone();
    for p in Phase::ALL {
        let x = rec.phase(p);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("phase {p} samples")));
        }
        let power = x.iter().map(|v| v.to_f64_lossy().powi(2)).sum::<f64>() / n as f64;
        if power == 0.0 {
            return Err(Error::ZeroPower(p.letter()));
        }
        let target = power / 10f64.powf(snr_db.to_f64_lossy() / 10.0);
        let noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let realized = noise.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let scale = (target / realized).sqrt();
        for (o, e) in out[p.index()].iter_mut().zip(noise) {
            *o = *o + T::lit(e * scale);
        }
    }
    rec.with_phases(out)
}

/// Per-phase `10·log10(P_clean / P_noise)` with noise = noisy - clean.
pub fn empirical_snr_db<T: Scalar>(clean: &Record3Ph<T>, noisy: &Record3Ph<T>) -> [f64; 3] {
    Phase::ALL.map(|p| {
        let (c, y) = (clean.phase(p), noisy.phase(p));
        let ps: f64 = c.iter().map(|v| v.to_f64_lossy().powi(2)).sum();
        let pn: f64 = c
            .iter()
            .zip(y)
            .map(|(a, b)| (b.to_f64_lossy() - a.to_f64_lossy()).powi(2))
            .sum();
        10.0 * (ps / pn).log10()
    })
}

/// Delays a record by `delay_ms`, rounded to whole samples.
///
/// Sample `n` of the result is sample `n` of the input re-stamped `d`
/// samples later; the first `d` samples of the timeline carry no data, so
/// the record is shortened by `d`.
pub fn apply_sync_delay<T: Scalar>(rec: &Record3Ph<T>, delay_ms: T) -> Result<Record3Ph<T>> {
    if !(delay_ms >= T::zero()) {
        return Err(Error::InvalidParameter(format!("delay must be non-negative, got {delay_ms} ms")));
    }
    let d = (delay_ms * rec.fs() / T::lit(1000.0))
        .round()
        .to_usize()
        .unwrap_or(usize::MAX);
    if d == 0 {
        return Ok(rec.clone());
    }
    if d.saturating_add(2) > rec.len() {
        return Err(Error::OutOfRange(format!(
            "delay of {d} samples exceeds record length {}",
            rec.len()
        )));
    }
    let keep = rec.len() - d;
    let [a, b, c] = rec.phases().clone().map(|mut p| {
        p.truncate(keep);
        p
    });
    Record3Ph::new(a, b, c, rec.fs(), rec.f0(), rec.t0() + T::from_usize_lossy(d) / rec.fs())
}

/// Soft-clips every sample to `knee·tanh(x / knee)`.
pub fn apply_ct_saturation<T: Scalar>(rec: &Record3Ph<T>, knee: T) -> Record3Ph<T> {
    rec.map(|x| knee * (x / knee).tanh())
}
