use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// k-nearest neighbours with Euclidean distance; neighbour ties go to the
/// lower training index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

impl Knn {
    pub fn fit(x: &[Vec<f64>], y: &[usize], k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("kNN needs k >= 1".into()));
        }
        Ok(Self { k: k.min(x.len()), x: x.to_vec(), y: y.to_vec() })
    }

    /// Neighbour indices in order of (distance, index).
    pub fn neighbours(&self, row: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        let k = self.k;
        d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut top: Vec<(f64, usize)> = d[..k].to_vec();
        top.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        top.into_iter().map(|(_, i)| i).collect()
    }

    pub fn proba(&self, row: &[f64], classes: usize) -> Vec<f64> {
        let mut p = vec![0.0; classes];
        let nb = self.neighbours(row);
        for &i in &nb {
            p[self.y[i]] += 1.0;
        }
        p.iter_mut().for_each(|v| *v /= nb.len() as f64);
        p
    }
}
