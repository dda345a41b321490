use serde::{Deserialize, Serialize};

/// Relative variance floor against the largest overall feature variance.
pub const VAR_FLOOR_REL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Log prior per class; `None` for classes absent from training.
    pub log_prior: Vec<Option<f64>>,
    pub mean: Vec<Vec<f64>>,
    pub var: Vec<Vec<f64>>,
}

impl GaussianNb {
    pub fn fit(x: &[Vec<f64>], y: &[usize], classes: usize) -> Self {
        let d = x[0].len();
        let n = x.len() as f64;
        let overall_var = (0..d)
            .map(|j| {
                let m = x.iter().map(|r| r[j]).sum::<f64>() / n;
                x.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n
            })
            .fold(0.0, f64::max);
        let floor = (VAR_FLOOR_REL * overall_var).max(f64::MIN_POSITIVE);
        let mut log_prior = vec![None; classes];
        let mut mean = vec![vec![0.0; d]; classes];
        let mut var = vec![vec![1.0; d]; classes];
        for c in 0..classes {
            let rows: Vec<&Vec<f64>> = x.iter().zip(y).filter(|(_, &l)| l == c).map(|(r, _)| r).collect();
            if rows.is_empty() {
                continue;
            }
            let nc = rows.len() as f64;
            log_prior[c] = Some((nc / n).ln());
            for j in 0..d {
                let m = rows.iter().map(|r| r[j]).sum::<f64>() / nc;
                mean[c][j] = m;
                var[c][j] = (rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / nc).max(floor);
            }
        }
        Self { log_prior, mean, var }
    }

    pub fn proba(&self, row: &[f64]) -> Vec<f64> {
        let ll: Vec<Option<f64>> = self
            .log_prior
            .iter()
            .enumerate()
            .map(|(c, lp)| {
                lp.map(|lp| {
                    lp + row
                        .iter()
                        .zip(&self.mean[c])
                        .zip(&self.var[c])
                        .map(|((x, m), v)| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m).powi(2) / v))
                        .sum::<f64>()
                })
            })
            .collect();
        let max = ll.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = ll.iter().map(|l| l.map_or(0.0, |l| (l - max).exp())).collect();
        let s: f64 = e.iter().sum();
        e.iter().map(|v| v / s).collect()
    }
}
