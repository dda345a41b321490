//! Minimum-norm least squares through a one-sided (Hestenes) Jacobi SVD.

use crate::Scalar;

const MAX_SWEEPS: usize = 80;

/// Solution of `min ||A x - b||` with the smallest norm among minimizers.
#[derive(Clone, Debug)]
pub struct LstsqSolution<T> {
    pub x: Vec<T>,
    pub rank: usize,
    pub singular_values: Vec<T>,
}

/// `a` is column-major: `a[j]` holds column `j` (length `m`).
/// Singular values at or below `rcond · σ_max` are treated as zero.
pub fn lstsq_min_norm<T: Scalar>(mut a: Vec<Vec<T>>, b: &[T], rcond: T) -> LstsqSolution<T> {
    let n = a.len();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let dot = |x: &[T], y: &[T]| x.iter().zip(y).fold(T::zero(), |s, (p, q)| s + *p * *q);
    let tol = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = dot(&a[i], &a[i]);
                let beta = dot(&a[j], &a[j]);
                let gamma = dot(&a[i], &a[j]);
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<T> = a.iter().map(|col| dot(col, col).sqrt()).collect();
    let smax = sigma.iter().fold(T::zero(), |m, s| m.max(*s));
    let cutoff = rcond * smax;
    let mut x = vec![T::zero(); n];
    let mut rank = 0;
    for j in 0..n {
        if sigma[j] > cutoff && sigma[j] > T::zero() {
            rank += 1;
            let coef = dot(&a[j], b) / (sigma[j] * sigma[j]);
            for (xi, vi) in x.iter_mut().zip(&v[j]) {
                *xi = *xi + coef * *vi;
            }
        }
    }
    LstsqSolution {
        x,
        rank,
        singular_values: sigma,
    }
}

fn rotate<T: Scalar>(cols: &mut [Vec<T>], i: usize, j: usize, c: T, s: T) {
    let (lo, hi) = cols.split_at_mut(j);
    for (p, q) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
        let (xp, xq) = (*p, *q);
        *p = c * xp - s * xq;
        *q = s * xp + c * xq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_system() {
        // [2 1; 1 3] x = [3; 5] -> x = [0.8, 1.4]
        let a: Vec<Vec<f64>> = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let s = lstsq_min_norm(a, &[3.0, 5.0], 1e-12);
        assert!((s.x[0] - 0.8).abs() < 1e-12 && (s.x[1] - 1.4).abs() < 1e-12);
        assert_eq!(s.rank, 2);
    }

    #[test]
    fn overdetermined_line_fit() {
        // y = 2x through noisy-free points, single unknown.
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let s = lstsq_min_norm(vec![xs.to_vec()], &ys, 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_min_norm() {
        // Two identical columns: minimum-norm solution splits evenly.
        let col = vec![1.0, 2.0, 3.0];
        let b: Vec<f64> = col.iter().map(|c| 4.0 * c).collect();
        let s = lstsq_min_norm(vec![col.clone(), col], &b, 1e-10);
        assert_eq!(s.rank, 1);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn underdetermined() {
        // x1 + x2 + x3 = 3 -> min norm (1,1,1)
        let a: Vec<Vec<f64>> = vec![vec![1.0], vec![1.0], vec![1.0]];
        let s = lstsq_min_norm(a, &[3.0], 1e-10);
        for v in s.x {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }
}
