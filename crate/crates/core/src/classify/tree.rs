use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { proba: Vec<f64> },
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// CART classification tree grown with Gini impurity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / nf).powi(2)).sum::<f64>()
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    classes: usize,
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let mut p = vec![0.0; self.classes];
        for &i in idx {
            p[self.y[i]] += 1.0;
        }
        p.iter_mut().for_each(|v| *v /= idx.len() as f64);
        self.nodes.push(Node::Leaf { proba: p });
        self.nodes.len() - 1
    }

    /// Best split as (feature, threshold, weighted impurity). Candidates are
    /// scanned by feature index, then threshold; strict improvement keeps the
    /// first of equal candidates.
    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64, f64)> {
        let n = idx.len();
        let nfeat = self.x[idx[0]].len();
        let mut total = vec![0usize; self.classes];
        for &i in idx {
            total[self.y[i]] += 1;
        }
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for f in 0..nfeat {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left = vec![0usize; self.classes];
            for pos in 0..n - 1 {
                let i = order[pos];
                left[self.y[i]] += 1;
                let v = self.x[i][f];
                if v == self.x[order[pos + 1]][f] {
                    continue;
                }
                let nl = pos + 1;
                let nr = n - nl;
                if nl < self.min_leaf || nr < self.min_leaf {
                    continue;
                }
                let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                let imp = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                if best.is_none_or(|b| imp < b.2) {
                    best = Some((f, v, imp));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> usize {
        let mut counts = vec![0usize; self.classes];
        for &i in idx {
            counts[self.y[i]] += 1;
        }
        let parent = gini(&counts, idx.len());
        if depth >= self.max_depth || parent == 0.0 || idx.len() < 2 * self.min_leaf {
            return self.leaf(idx);
        }
        match self.best_split(idx) {
            Some((feature, threshold, imp)) if imp < parent - 1e-12 => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
                let slot = self.nodes.len();
                self.nodes.push(Node::Leaf { proba: vec![] });
                let left = self.grow(&l, depth + 1);
                let right = self.grow(&r, depth + 1);
                self.nodes[slot] = Node::Split { feature, threshold, left, right };
                slot
            }
            _ => self.leaf(idx),
        }
    }
}

impl Tree {
    pub fn fit(x: &[Vec<f64>], y: &[usize], classes: usize, max_depth: usize, min_leaf: usize) -> Result<Self> {
        if x.is_empty() || min_leaf == 0 {
            return Err(Error::InvalidParameter("tree needs rows and min_leaf >= 1".into()));
        }
        let mut b = Builder { x, y, classes, max_depth, min_leaf, nodes: Vec::new() };
        let idx: Vec<usize> = (0..x.len()).collect();
        b.grow(&idx, 0);
        Ok(Self { nodes: b.nodes })
    }

    pub fn proba(&self, row: &[f64]) -> Vec<f64> {
        let mut n = 0;
        loop {
            match &self.nodes[n] {
                Node::Leaf { proba } => return proba.clone(),
                Node::Split { feature, threshold, left, right } => {
                    n = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, n: usize) -> usize {
            match &t.nodes[n] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}
