//! Maximum-relevance minimum-redundancy feature ranking over equal-frequency
//! discretized mutual information.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureId;
use crate::waveform::Phase;

/// A feature column, optionally expanded per phase. Orders by feature id,
/// then phase; this order breaks ranking ties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColumnId {
    pub feature: FeatureId,
    pub phase: Option<Phase>,
}

impl ColumnId {
    pub fn new(feature: FeatureId, phase: Option<Phase>) -> Self {
        Self { feature, phase }
    }
}

impl fmt::Display for ColumnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.phase {
            Some(p) => write!(f, "{}_{}", self.feature, p),
            None => write!(f, "{}", self.feature),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FeatureMatrix {
    columns: Vec<ColumnId>,
    /// Column-major values.
    data: Vec<Vec<f64>>,
    target: Vec<usize>,
}

impl FeatureMatrix {
    pub fn new(columns: Vec<ColumnId>, data: Vec<Vec<f64>>, target: Vec<usize>) -> Result<Self> {
        if columns.len() != data.len() || columns.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "{} column ids for {} data columns",
                columns.len(),
                data.len()
            )));
        }
        let n = target.len();
        if data.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidParameter("columns differ in length from the target".into()));
        }
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix (impute undefined values first)".into()));
        }
        let mut classes = target.clone();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::Degenerate("feature matrix needs at least two classes".into()));
        }
        let distinct = (1..n).any(|r| data.iter().any(|c| c[r] != c[0]));
        if !distinct {
            return Err(Error::Degenerate("feature matrix needs at least two distinct rows".into()));
        }
        Ok(Self { columns, data, target })
    }

    pub fn columns(&self) -> &[ColumnId] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.data[i]
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    pub fn rows(&self) -> usize {
        self.target.len()
    }
}

/// Default bin count: `max(2, floor(sqrt(rows)))`.
pub fn default_bins(rows: usize) -> usize {
    ((rows as f64).sqrt().floor() as usize).max(2)
}

/// Equal-frequency bin labels. Tied values share the bin of their lowest
/// rank, so any strictly increasing transform yields the same labels.
pub fn equal_frequency_bins(x: &[f64], bins: usize) -> Vec<usize> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(Ordering::Equal));
    let mut out = vec![0; n];
    let mut first = 0;
    for (pos, &i) in order.iter().enumerate() {
        if pos > 0 && x[i] != x[order[pos - 1]] {
            first = pos;
        }
        out[i] = (first * bins / n).min(bins - 1);
    }
    out
}

/// Mutual information in nats between two discrete labelings.
pub fn discrete_mi(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let na = a.iter().max().map_or(0, |m| m + 1);
    let nb = b.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0usize; na * nb];
    let mut ca = vec![0usize; na];
    let mut cb = vec![0usize; nb];
    for (&x, &y) in a.iter().zip(b) {
        joint[x * nb + y] += 1;
        ca[x] += 1;
        cb[y] += 1;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for x in 0..na {
        for y in 0..nb {
            let c = joint[x * nb + y];
            if c > 0 {
                mi += c as f64 / nf * (nf * c as f64 / (ca[x] as f64 * cb[y] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Mutual information between a real column and class labels, after
/// equal-frequency discretization of the column.
pub fn mutual_information(x: &[f64], y: &[usize], bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(Error::InvalidParameter(format!("bins must be at least 2, got {bins}")));
    }
    if x.len() != y.len() {
        return Err(Error::InvalidParameter("column and labels differ in length".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mutual information input".into()));
    }
    Ok(discrete_mi(&equal_frequency_bins(x, bins), y))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MrmrStep {
    pub column: ColumnId,
    pub relevance: f64,
    /// Mean MI with the features already selected; 0 for the first pick.
    pub redundancy: f64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MrmrRanking {
    pub bins: usize,
    pub steps: Vec<MrmrStep>,
}

impl MrmrRanking {
    pub fn order(&self) -> Vec<ColumnId> {
        self.steps.iter().map(|s| s.column).collect()
    }

    /// Distinct feature ids in rank order (phase expansion collapsed).
    pub fn features(&self) -> Vec<FeatureId> {
        let mut seen = Vec::new();
        for s in &self.steps {
            if !seen.contains(&s.column.feature) {
                seen.push(s.column.feature);
            }
        }
        seen
    }

    /// CSV `rank,feature,relevance,redundancy,score`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["rank", "feature", "relevance", "redundancy", "score"])?;
        for (i, s) in self.steps.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                s.column.to_string(),
                s.relevance.to_string(),
                s.redundancy.to_string(),
                s.score.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Greedy difference-form mRMR: pick the most relevant column, then
/// repeatedly the column maximising relevance minus mean redundancy with
/// the selected set. Ties go to the lower column id.
pub fn rank(m: &FeatureMatrix, k: usize, bins: usize) -> Result<MrmrRanking> {
    let ncols = m.columns.len();
    if k == 0 || k > ncols {
        return Err(Error::OutOfRange(format!("k = {k} with {ncols} columns")));
    }
    if bins < 2 {
        return Err(Error::InvalidParameter(format!("bins must be at least 2, got {bins}")));
    }
    let binned: Vec<Vec<usize>> = m.data.par_iter().map(|c| equal_frequency_bins(c, bins)).collect();
    let relevance: Vec<f64> = binned.par_iter().map(|b| discrete_mi(b, &m.target)).collect();

    // Candidate order by column id so that a strict comparison keeps the lower id on ties.
    let mut remaining: Vec<usize> = (0..ncols).collect();
    remaining.sort_by_key(|&i| m.columns[i]);
    let mut redundancy_sum = vec![0.0; ncols];
    let mut steps = Vec::with_capacity(k);

    for step in 0..k {
        let denom = step as f64;
        let mut best: Option<(usize, f64)> = None;
        for (pos, &c) in remaining.iter().enumerate() {
            let red = if step == 0 { 0.0 } else { redundancy_sum[c] / denom };
            let score = relevance[c] - red;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((pos, score));
            }
        }
        let (pos, score) = best.expect("k <= ncols leaves a candidate");
        let c = remaining.remove(pos);
        let red = if step == 0 { 0.0 } else { redundancy_sum[c] / denom };
        steps.push(MrmrStep { column: m.columns[c], relevance: relevance[c], redundancy: red, score });
        if step + 1 < k {
            let picked = &binned[c];
            let add: Vec<(usize, f64)> =
                remaining.par_iter().map(|&r| (r, discrete_mi(&binned[r], picked))).collect();
            for (r, v) in add {
                redundancy_sum[r] += v;
            }
        }
    }
    Ok(MrmrRanking { bins, steps })
}
