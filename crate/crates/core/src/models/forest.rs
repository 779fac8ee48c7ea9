//! Random forest of CART trees (Gini impurity); scores are the mean leaf class
//! distributions. Not differentiable.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node<T> {
    Leaf {
        distribution: Vec<T>,
    },
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    fn leaf_distribution(&self, x: &[T]) -> &[T] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { distribution } => return distribution,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams<T> {
    pub trees: Vec<Tree<T>>,
}

impl<T: Scalar> ForestParams<T> {
    pub fn scores(&self, x: &[T], n_classes: usize) -> Vec<T> {
        let mut out = vec![T::zero(); n_classes];
        for t in &self.trees {
            for (o, &p) in out.iter_mut().zip(t.leaf_distribution(x)) {
                *o += p;
            }
        }
        let n = T::from_usize_lossy(self.trees.len());
        out.into_iter().map(|v| v / n).collect()
    }
}

struct Builder<'a, T> {
    rows: &'a [Vec<T>],
    labels: &'a [usize],
    n_classes: usize,
    max_depth: usize,
    max_features: usize,
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<Node<T>>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

impl<'a, T: Scalar> Builder<'a, T> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let mut counts = vec![0usize; self.n_classes];
        for &i in idx {
            counts[self.labels[i]] += 1;
        }
        let n = T::from_usize_lossy(idx.len().max(1));
        self.nodes.push(Node::Leaf {
            distribution: counts.iter().map(|&c| T::from_usize_lossy(c) / n).collect(),
        });
        self.nodes.len() - 1
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<(usize, T)> {
        let d = self.rows[0].len();
        let features = sample(self.rng, d, self.max_features.min(d)).into_vec();
        let mut best: Option<(f64, usize, T)> = None;
        for f in features {
            let mut order: Vec<usize> = idx.to_vec();
            order.sort_by(|&a, &b| self.rows[a][f].partial_cmp(&self.rows[b][f]).unwrap());
            let mut left = vec![0usize; self.n_classes];
            let mut right = vec![0usize; self.n_classes];
            for &i in &order {
                right[self.labels[i]] += 1;
            }
            for s in 1..order.len() {
                let moved = self.labels[order[s - 1]];
                left[moved] += 1;
                right[moved] -= 1;
                let (lo, hi) = (self.rows[order[s - 1]][f], self.rows[order[s]][f]);
                if lo == hi {
                    continue;
                }
                let n = order.len() as f64;
                let score = (s as f64 * gini(&left, s)
                    + (n - s as f64) * gini(&right, order.len() - s))
                    / n;
                if best.as_ref().is_none_or(|b| score < b.0) {
                    best = Some((score, f, (lo + hi) / T::lit(2.0)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> usize {
        let pure = idx.iter().all(|&i| self.labels[i] == self.labels[idx[0]]);
        if depth >= self.max_depth || pure || idx.len() < 2 {
            return self.leaf(idx);
        }
        let Some((feature, threshold)) = self.best_split(idx) else {
            return self.leaf(idx);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.rows[i][feature] <= threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Split {
            feature,
            threshold,
            left: 0,
            right: 0,
        });
        let left = self.grow(&l, depth + 1);
        let right = self.grow(&r, depth + 1);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

/// Bootstrap resampling is skipped for a single tree, which is then an
/// ordinary CART tree on the full data.
pub(crate) fn fit_forest<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[usize],
    n_classes: usize,
    n_trees: usize,
    max_depth: usize,
    seed: u64,
) -> ForestParams<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rows.len();
    let d = rows[0].len();
    let max_features = ((d as f64).sqrt().ceil() as usize).max(1);
    let trees = (0..n_trees)
        .map(|_| {
            let idx: Vec<usize> = if n_trees == 1 {
                (0..n).collect()
            } else {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            };
            let mut b = Builder {
                rows,
                labels,
                n_classes,
                max_depth,
                max_features,
                rng: &mut rng,
                nodes: Vec::new(),
            };
            b.grow(&idx, 0);
            Tree { nodes: b.nodes }
        })
        .collect();
    ForestParams { trees }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stump_separates_two_points() {
        let f = fit_forest(&[vec![0.0], vec![1.0]], &[0, 1], 2, 1, 1, 0);
        assert_eq!(f.scores(&[0.0], 2), vec![1.0, 0.0]);
        assert_eq!(f.scores(&[1.0], 2), vec![0.0, 1.0]);
        assert_eq!(f.scores(&[0.4], 2), vec![1.0, 0.0]);
    }

    #[test]
    fn forest_is_seed_deterministic() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let labels: Vec<usize> = (0..30).map(|i| usize::from(i >= 15)).collect();
        let a = fit_forest(&rows, &labels, 2, 5, 3, 42);
        assert_eq!(a, fit_forest(&rows, &labels, 2, 5, 3, 42));
        assert_ne!(a, fit_forest(&rows, &labels, 2, 5, 3, 43));
    }
}
