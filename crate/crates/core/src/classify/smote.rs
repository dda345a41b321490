use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

/// Oversample every smaller present class to the majority count by
/// interpolating between a random member and one of its `k` nearest
/// same-class neighbours. Original rows keep their order at the front.
pub fn smote(d: &Dataset, k: usize, seed: u64) -> Result<Dataset> {
    if k == 0 {
        return Err(Error::InvalidParameter("SMOTE needs k >= 1".into()));
    }
    let counts = d.class_counts();
    let majority = counts.iter().copied().max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = d.clone();
    for (class, &count) in counts.iter().enumerate() {
        if count == 0 || count == majority {
            continue;
        }
        if count < k + 1 {
            return Err(Error::Degenerate(format!("SMOTE class {class} has {count} rows; needs at least {}", k + 1)));
        }
        let members: Vec<usize> = (0..d.len()).filter(|&i| d.y[i] == class).collect();
        let neighbours: Vec<Vec<usize>> = members
            .iter()
            .map(|&i| {
                let mut dist: Vec<(f64, usize)> = members
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| {
                        let s: f64 = d.table.rows[i].iter().zip(&d.table.rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                        (s, j)
                    })
                    .collect();
                dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                dist.into_iter().take(k).map(|(_, j)| j).collect()
            })
            .collect();
        for _ in 0..majority - count {
            let m = rng.random_range(0..members.len());
            let nb = neighbours[m][rng.random_range(0..k)];
            let u: f64 = rng.random();
            let base = &d.table.rows[members[m]];
            let row = base.iter().zip(&d.table.rows[nb]).map(|(x, n)| x + u * (n - x)).collect();
            out.table.rows.push(row);
            out.y.push(class);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{FeatureTable, Task};

    fn data(major: usize, minor: usize, minor_row: impl Fn(usize) -> Vec<f64>) -> Dataset {
        let mut rows: Vec<Vec<f64>> = (0..major).map(|i| vec![i as f64, 100.0]).collect();
        rows.extend((0..minor).map(minor_row));
        let y = std::iter::repeat_n(0, major).chain(std::iter::repeat_n(1, minor)).collect();
        Dataset::new(Task::Detection, FeatureTable::new(vec!["a".into(), "b".into()], rows).unwrap(), y).unwrap()
    }

    #[test]
    fn counts_balance() {
        let d = data(100, 50, |i| vec![i as f64 * 0.1, -(i as f64)]);
        let s = smote(&d, 5, 1).unwrap();
        assert_eq!(s.class_counts(), vec![100, 100]);
        assert_eq!(&s.table.rows[..150], &d.table.rows[..]);
        assert_eq!(smote(&d, 5, 1).unwrap(), s);
    }

    #[test]
    fn identical_minority_stays_identical() {
        let d = data(20, 6, |_| vec![3.0, 4.0]);
        let s = smote(&d, 5, 2).unwrap();
        assert!(s.table.rows[26..].iter().all(|r| r == &vec![3.0, 4.0]));
    }

    #[test]
    fn too_small_minority() {
        let d = data(20, 5, |i| vec![i as f64, 0.0]);
        assert!(smote(&d, 5, 0).is_err());
    }
}
