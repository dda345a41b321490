use serde::{Deserialize, Serialize};

use super::lstsq::lstsq_min_norm;
use crate::error::{Error, Result};
use crate::Scalar;

/// Lag order used for the fault-detection coefficients.
pub const DEFAULT_AR_LAG: usize = 10;

/// Autoregressive model `s_t = Σ_k coeffs[k-1]·s_{t-k} + η_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArModel<T> {
    pub coeffs: Vec<T>,
    /// Mean squared one-step residual over the fitted equations.
    pub residual_var: T,
    /// Numerical rank of the lagged design matrix.
    pub rank: usize,
}

impl<T: Scalar> ArModel<T> {
    pub fn lag(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient `A_k` (1-based lag).
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs[k - 1]
    }
}

/// Relative singular-value cutoff for the design matrix (`ε^(2/3)`).
pub fn default_rcond<T: Scalar>() -> T {
    T::epsilon().powf(T::lit(2.0 / 3.0))
}

/// Least-squares AR(p) fit over the `L = len - p` lagged equations
/// `[s_{t-1} … s_{t-p}]·A = s_t`, `t = p..len`.
///
/// Solved by an orthogonal (SVD) factorization; rank-deficient systems, such
/// as a pure sinusoid with `p > 2`, get the minimum-norm coefficients.
pub fn ar_fit<T: Scalar>(x: &[T], p: usize) -> Result<ArModel<T>> {
    ar_fit_with_rcond(x, p, default_rcond())
}

pub fn ar_fit_with_rcond<T: Scalar>(x: &[T], p: usize, rcond: T) -> Result<ArModel<T>> {
    if p == 0 {
        return Err(Error::InvalidParameter("AR lag must be at least 1".into()));
    }
    if x.len() < p + 2 {
        return Err(Error::TooShort {
            what: "AR window",
            needed: p + 2,
            got: x.len(),
        });
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("AR input sample {i}")));
    }
    let rows = x.len() - p;
    let design: Vec<Vec<T>> = (1..=p).map(|k| (p..x.len()).map(|t| x[t - k]).collect()).collect();
    let target = &x[p..];
    let sol = lstsq_min_norm(design, target, rcond);

    let mut rss = T::zero();
    for t in p..x.len() {
        let pred = (1..=p).fold(T::zero(), |s, k| s + sol.x[k - 1] * x[t - k]);
        let r = x[t] - pred;
        rss = rss + r * r;
    }
    Ok(ArModel {
        coeffs: sol.x,
        residual_var: rss / T::from_usize_lossy(rows),
        rank: sol.rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn recovers_ar1() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise = Normal::new(0.0, 1e-8).unwrap();
        let mut x = vec![1.0f64];
        for _ in 1..64 {
            let prev = *x.last().unwrap();
            x.push(0.9 * prev + noise.sample(&mut rng));
        }
        let m = ar_fit(&x, 1).unwrap();
        assert!((m.coeff(1) - 0.9).abs() < 1e-3);
    }

    #[test]
    fn sinusoid_recurrence() {
        let w = 2.0 * std::f64::consts::PI * 60.0 / 7680.0;
        let x: Vec<f64> = (0..64).map(|i| (w * i as f64).cos()).collect();
        let m = ar_fit(&x, 2).unwrap();
        assert!((m.coeff(1) - 2.0 * w.cos()).abs() < 1e-6);
        assert!((m.coeff(2) + 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_window_min_norm() {
        let x = vec![3.5f64; 64];
        let m = ar_fit(&x, 10).unwrap();
        assert_eq!(m.rank, 1);
        assert!(m.residual_var < 1e-20);
        assert!((m.coeffs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for c in &m.coeffs {
            assert!((c - 0.1).abs() < 1e-9);
        }
    }

    #[test]
    fn scale_invariant() {
        let x: Vec<f64> = (0..64).map(|i| ((i * 7 % 13) as f64).sin() + 0.1 * i as f64).collect();
        let m1 = ar_fit(&x, 10).unwrap();
        let y: Vec<f64> = x.iter().map(|v| -250.0 * v).collect();
        let m2 = ar_fit(&y, 10).unwrap();
        for (a, b) in m1.coeffs.iter().zip(&m2.coeffs) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(ar_fit(&[1.0f64; 11], 10), Err(Error::TooShort { .. })));
        assert!(ar_fit(&[1.0f64; 12], 10).is_ok());
        assert!(matches!(ar_fit(&[1.0, f64::NAN, 1.0, 2.0], 1), Err(Error::NonFinite(_))));
        assert!(ar_fit(&[1.0f64; 12], 0).is_err());
    }

    #[test]
    fn works_in_f32() {
        let w = 0.3f32;
        let x: Vec<f32> = (0..64).map(|i| (w * i as f32).cos()).collect();
        let m = ar_fit(&x, 2).unwrap();
        assert!((m.coeff(1) - 2.0 * w.cos()).abs() < 1e-3);
    }
}
