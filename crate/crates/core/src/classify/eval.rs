use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Classifier, Dataset, Task};
use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

/// Wald interval `η ± z·sqrt(η(1-η)/n)`, clipped to [0, 1].
pub fn wald_interval(eta: f64, n: usize, z: f64) -> (f64, f64) {
    let half = z * (eta * (1.0 - eta) / n as f64).sqrt();
    ((eta - half).max(0.0), (eta + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub labels: Vec<String>,
    pub n: usize,
    pub accuracy: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Rows are true labels, columns predictions.
    pub confusion: Vec<Vec<usize>>,
    /// `None` for classes with no test support.
    pub recall: Vec<Option<f64>>,
}

impl EvalReport {
    pub fn from_predictions(task: Task, truth: &[usize], pred: &[usize]) -> Result<Self> {
        if truth.is_empty() || truth.len() != pred.len() {
            return Err(Error::InvalidParameter("evaluation needs equally many, non-zero labels and predictions".into()));
        }
        let c = task.classes();
        let mut confusion = vec![vec![0usize; c]; c];
        for (&t, &p) in truth.iter().zip(pred) {
            if t >= c || p >= c {
                return Err(Error::LabelMismatch(format!("label outside the {c} classes of {task}")));
            }
            confusion[t][p] += 1;
        }
        let n = truth.len();
        let correct: usize = (0..c).map(|i| confusion[i][i]).sum();
        let accuracy = correct as f64 / n as f64;
        let (ci_lo, ci_hi) = wald_interval(accuracy, n, Z_95);
        let recall = confusion
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let s: usize = row.iter().sum();
                (s > 0).then(|| row[i] as f64 / s as f64)
            })
            .collect();
        Ok(Self { task, labels: task.labels(), n, accuracy, ci_lo, ci_hi, confusion, recall })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Confusion matrix as CSV with a `true\pred` header row.
    pub fn write_confusion_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["true\\pred".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.confusion) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn evaluate<C: Classifier + ?Sized>(model: &C, test: &Dataset) -> Result<EvalReport> {
    if model.task() != test.task {
        return Err(Error::LabelMismatch(format!("model for {} evaluated on {}", model.task(), test.task)));
    }
    let pred = model.predict(&test.table)?;
    EvalReport::from_predictions(test.task, &test.y, &pred)
}

/// Per-class shuffled split; each class contributes `round(n_c · test_fraction)`
/// rows to the test side. Returns sorted (train, test) indices.
pub fn stratified_split(y: &[usize], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidParameter(format!("test fraction {test_fraction} outside [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = y.iter().max().map_or(0, |m| m + 1);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        idx.shuffle(&mut rng);
        let nt = (idx.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&idx[..nt]);
        train.extend_from_slice(&idx[nt..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wald_examples() {
        let (lo, hi) = wald_interval(0.9, 100, Z_95);
        assert!((hi - 0.9 - 0.0588).abs() < 1e-12 && (0.9 - lo - 0.0588).abs() < 1e-12);
        assert_eq!(wald_interval(1.0, 50, Z_95), (1.0, 1.0));
        let h1 = wald_interval(0.8, 100, Z_95);
        let h4 = wald_interval(0.8, 400, Z_95);
        assert!(((h1.1 - h1.0) / (h4.1 - h4.0) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn report_counts() {
        let r = EvalReport::from_predictions(Task::Region, &[0, 0, 1, 2, 2], &[0, 1, 1, 2, 0]).unwrap();
        assert_eq!(r.accuracy, 0.6);
        assert_eq!(r.confusion, vec![vec![1, 1, 0], vec![0, 1, 0], vec![1, 0, 1]]);
        for (row, s) in r.confusion.iter().zip([2, 1, 2]) {
            assert_eq!(row.iter().sum::<usize>(), s);
        }
        assert!(r.ci_lo <= r.accuracy && r.accuracy <= r.ci_hi);
        let mut buf = Vec::new();
        r.write_confusion_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("true\\pred,internal,forward,reverse\ninternal,1,1,0\n"));
    }

    #[test]
    fn split_is_stratified_and_deterministic() {
        let y: Vec<usize> = (0..100).map(|i| (i % 10 < 3) as usize).collect();
        let (tr, te) = stratified_split(&y, 0.3, 4).unwrap();
        assert_eq!(te.len(), 30);
        assert_eq!(te.iter().filter(|&&i| y[i] == 1).count(), 9);
        assert_eq!(tr.len() + te.len(), 100);
        assert_eq!(stratified_split(&y, 0.3, 4).unwrap(), (tr, te));
    }
}
