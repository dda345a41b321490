//! Canonical grey wolf optimizer: every wolf moves toward the average of
//! three leader-guided positions (alpha, beta, delta) while the encircling
//! coefficient `a` decays linearly from 2 to 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GwoConfig {
    pub population: usize,
    pub dim: usize,
    pub lower: f64,
    pub upper: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for GwoConfig {
    fn default() -> Self {
        Self {
            population: 30,
            dim: 1,
            lower: 0.0,
            upper: 1.0,
            max_iter: 100,
            seed: 0,
        }
    }
}

impl GwoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 3 {
            return Err(Error::InvalidParameter(format!(
                "GWO needs at least 3 wolves, got {}",
                self.population
            )));
        }
        if self.dim == 0 {
            return Err(Error::InvalidParameter("GWO dimension must be positive".into()));
        }
        if !(self.lower < self.upper) {
            return Err(Error::InvalidParameter(format!(
                "GWO bounds must satisfy lower < upper, got [{}, {}]",
                self.lower, self.upper
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GwoResult<T> {
    pub best_x: Vec<T>,
    pub best_f: T,
    /// Best-so-far fitness after initialization and after each iteration.
    pub trace: Vec<T>,
}

#[derive(Clone)]
struct Leader<T> {
    x: Vec<T>,
    f: T,
}

pub fn gwo_minimize<T, F>(objective: F, cfg: &GwoConfig) -> Result<GwoResult<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> T,
{
    cfg.validate()?;
    let (lo, hi) = (T::lit(cfg.lower), T::lit(cfg.upper));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let eval = |x: &[T]| -> Result<T> {
        let f = objective(x);
        if f.is_finite() {
            Ok(f)
        } else {
            Err(Error::NonFinite(format!("objective returned {f} at {x:?}")))
        }
    };

    let mut wolves: Vec<Vec<T>> = (0..cfg.population)
        .map(|_| {
            (0..cfg.dim)
                .map(|_| T::lit(rng.random_range(cfg.lower..=cfg.upper)))
                .collect()
        })
        .collect();
    // alpha, beta, delta; strict comparisons keep the first-found wolf on ties.
    let mut leaders: Vec<Leader<T>> = Vec::with_capacity(3);
    let offer = |leaders: &mut Vec<Leader<T>>, x: &[T], f: T| {
        let pos = leaders.iter().position(|l| f < l.f).unwrap_or(leaders.len());
        if pos < 3 {
            leaders.insert(pos, Leader { x: x.to_vec(), f });
            leaders.truncate(3);
        }
    };
    for w in &wolves {
        let f = eval(w)?;
        offer(&mut leaders, w, f);
    }
    let mut best = leaders[0].clone();
    let mut trace = vec![best.f];

    for iter in 0..cfg.max_iter {
        let a = T::lit(2.0 - 2.0 * iter as f64 / cfg.max_iter as f64);
        for w in wolves.iter_mut() {
            for d in 0..cfg.dim {
                let mut sum = T::zero();
                for l in &leaders {
                    let r1 = T::lit(rng.random::<f64>());
                    let r2 = T::lit(rng.random::<f64>());
                    let big_a = T::lit(2.0) * a * r1 - a;
                    let big_c = T::lit(2.0) * r2;
                    let dist = (big_c * l.x[d] - w[d]).abs();
                    sum = sum + (l.x[d] - big_a * dist);
                }
                w[d] = (sum / T::from_usize_lossy(leaders.len())).max(lo).min(hi);
            }
        }
        for w in &wolves {
            let f = eval(w)?;
            offer(&mut leaders, w, f);
        }
        if leaders[0].f < best.f {
            best = leaders[0].clone();
        }
        trace.push(best.f);
    }
    Ok(GwoResult {
        best_x: best.x,
        best_f: best.f,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_quadratic() {
        let res = gwo_minimize(|x: &[f64]| (x[0] - 0.3).powi(2), &GwoConfig::default()).unwrap();
        assert!((res.best_x[0] - 0.3).abs() < 1e-3);
    }

    #[test]
    fn constant_objective() {
        let res = gwo_minimize(|_: &[f64]| 1.0, &GwoConfig::default()).unwrap();
        assert_eq!(res.best_f, 1.0);
    }

    #[test]
    fn sphere_2d() {
        let cfg = GwoConfig {
            dim: 2,
            lower: -1.0,
            upper: 1.0,
            ..GwoConfig::default()
        };
        let res = gwo_minimize(|x: &[f64]| x[0] * x[0] + x[1] * x[1], &cfg).unwrap();
        assert!(res.best_f < 1e-4);
        assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(res.trace.len(), 101);
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = GwoConfig {
            seed: 42,
            ..GwoConfig::default()
        };
        let f = |x: &[f32]| (x[0] - 0.7).abs();
        assert_eq!(gwo_minimize(f, &cfg).unwrap(), gwo_minimize(f, &cfg).unwrap());
    }

    #[test]
    fn non_finite_objective_aborts() {
        let err = gwo_minimize(|x: &[f64]| 1.0 / (x[0] - x[0]), &GwoConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn too_few_wolves() {
        let cfg = GwoConfig {
            population: 2,
            ..GwoConfig::default()
        };
        assert!(gwo_minimize(|x: &[f64]| x[0], &cfg).is_err());
    }
}
