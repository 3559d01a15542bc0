use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::Params;
use crate::features::SparseVec;
use crate::util;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Criterion {
    Gini,
    Entropy,
}

impl Criterion {
    fn impurity(self, w0: f64, w1: f64) -> f64 {
        let total = w0 + w1;
        if total <= 0.0 {
            return 0.0;
        }
        let (p0, p1) = (w0 / total, w1 / total);
        match self {
            Criterion::Gini => 1.0 - p0 * p0 - p1 * p1,
            Criterion::Entropy => [p0, p1]
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|p| -p * p.log2())
                .sum(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(super) struct TreeConfig {
    pub criterion: Criterion,
    pub random_splitter: bool,
    pub max_features: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl TreeConfig {
    fn from_params(p: &Params, dim: usize, random_splitter: bool) -> Self {
        Self {
            criterion: if p.str("criterion") == "entropy" {
                Criterion::Entropy
            } else {
                Criterion::Gini
            },
            random_splitter,
            max_features: p.max_features(dim),
            max_depth: p.opt_usize("max_depth"),
            min_samples_split: p.usize("min_samples_split"),
        }
    }

    pub fn stump(dim: usize) -> Self {
        Self {
            criterion: Criterion::Gini,
            random_splitter: false,
            max_features: dim,
            max_depth: Some(1),
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Node {
    /// Weighted share of causal samples that reached the leaf.
    Leaf { p: f64 },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

/// Binary classification tree over sparse features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

struct Candidate {
    feature: u32,
    threshold: f64,
    gain: f64,
}

struct Builder<'a> {
    x: &'a [SparseVec],
    y: &'a [u8],
    w: &'a [f64],
    cfg: TreeConfig,
    nodes: Vec<Node>,
}

impl<'a> Builder<'a> {
    fn class_weights(&self, samples: &[u32]) -> (f64, f64) {
        samples.iter().fold((0.0, 0.0), |(a, b), &s| {
            let w = self.w[s as usize];
            if self.y[s as usize] == 1 {
                (a, b + w)
            } else {
                (a + w, b)
            }
        })
    }

    /// Best split of one feature given its non-zero entries in the node.
    fn best_for_feature(
        &self,
        feature: u32,
        entries: &[(u32, f64)],
        totals: (f64, f64),
        n_samples: usize,
        rng: &mut ChaCha8Rng,
    ) -> Option<Candidate> {
        // groups of (value, w0, w1); zero entries are implicit
        let mut groups: Vec<(f64, f64, f64)> = entries
            .iter()
            .map(|&(s, v)| {
                let w = self.w[s as usize];
                if self.y[s as usize] == 1 {
                    (v, 0.0, w)
                } else {
                    (v, w, 0.0)
                }
            })
            .collect();
        let nz = groups
            .iter()
            .fold((0.0, 0.0), |(a, b), g| (a + g.1, b + g.2));
        if entries.len() < n_samples {
            groups.push((0.0, totals.0 - nz.0, totals.1 - nz.1));
        }
        groups.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (lo, hi) = (groups.first()?.0, groups.last()?.0);
        if lo >= hi {
            return None;
        }
        let parent = self.cfg.criterion.impurity(totals.0, totals.1);
        let total_w = totals.0 + totals.1;
        let gain_at = |left: (f64, f64)| {
            let right = (totals.0 - left.0, totals.1 - left.1);
            let (wl, wr) = (left.0 + left.1, right.0 + right.1);
            parent
                - (wl / total_w) * self.cfg.criterion.impurity(left.0, left.1)
                - (wr / total_w) * self.cfg.criterion.impurity(right.0, right.1)
        };
        if self.cfg.random_splitter {
            let mut threshold = rng.gen_range(lo..hi);
            if threshold >= hi {
                threshold = lo;
            }
            let left = groups
                .iter()
                .filter(|g| g.0 <= threshold)
                .fold((0.0, 0.0), |(a, b), g| (a + g.1, b + g.2));
            return Some(Candidate {
                feature,
                threshold,
                gain: gain_at(left),
            });
        }
        let mut best: Option<Candidate> = None;
        let mut left = (0.0, 0.0);
        for k in 0..groups.len() - 1 {
            left = (left.0 + groups[k].1, left.1 + groups[k].2);
            if groups[k].0 == groups[k + 1].0 {
                continue;
            }
            let gain = gain_at(left);
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                let mut threshold = (groups[k].0 + groups[k + 1].0) / 2.0;
                if threshold >= groups[k + 1].0 {
                    threshold = groups[k].0;
                }
                best = Some(Candidate {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
        best
    }

    fn build(&mut self, samples: Vec<u32>, depth: usize, rng: &mut ChaCha8Rng) -> u32 {
        let id = self.nodes.len() as u32;
        let totals = self.class_weights(&samples);
        self.nodes.push(Node::Leaf {
            p: if totals.0 + totals.1 > 0.0 {
                totals.1 / (totals.0 + totals.1)
            } else {
                0.0
            },
        });
        let pure = totals.0 <= 0.0 || totals.1 <= 0.0;
        if pure
            || samples.len() < self.cfg.min_samples_split
            || self.cfg.max_depth.is_some_and(|d| depth >= d)
        {
            return id;
        }
        let mut columns: HashMap<u32, Vec<(u32, f64)>> = HashMap::new();
        for &s in &samples {
            let xs = &self.x[s as usize];
            for (&j, &v) in xs.indices().iter().zip(xs.values()) {
                columns.entry(j).or_default().push((s, v));
            }
        }

        // A random ordered subset of the features that vary in the node.
        // Equivalent to visiting all features in random order and skipping
        // the constant ones, without touching the whole vocabulary.
        let mut order: Vec<u32> = columns.keys().copied().collect();
        order.sort_unstable();
        let mut best: Option<Candidate> = None;
        let visit = self.cfg.max_features.min(order.len());
        for k in 0..visit {
            let pick = rng.gen_range(k..order.len());
            order.swap(k, pick);
            let f = order[k];
            if let Some(c) = self.best_for_feature(f, &columns[&f], totals, samples.len(), rng) {
                if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        let Some(split) = best.filter(|b| b.gain > 1e-12) else {
            return id;
        };
        let value = |s: u32| self.x[s as usize].get(split.feature as usize);
        let (left, right): (Vec<u32>, Vec<u32>) = samples
            .into_iter()
            .partition(|&s| value(s) <= split.threshold);
        if left.is_empty() || right.is_empty() {
            return id;
        }
        let l = self.build(left, depth + 1, rng);
        let r = self.build(right, depth + 1, rng);
        self.nodes[id as usize] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        id
    }
}

impl Tree {
    pub(super) fn build(cfg: TreeConfig, x: &[SparseVec], y: &[u8], w: &[f64], seed: u64) -> Self {
        let mut b = Builder {
            x,
            y,
            w,
            cfg,
            nodes: Vec::new(),
        };
        let samples: Vec<u32> = (0..x.len() as u32)
            .filter(|&s| w[s as usize] > 0.0)
            .collect();
        let mut rng = util::rng(seed);
        b.build(samples, 0, &mut rng);
        Self { nodes: b.nodes }
    }

    pub fn fit_classifier(p: &Params, x: &[SparseVec], y: &[u8], seed: u64) -> Self {
        let cfg = TreeConfig::from_params(p, x[0].dim(), p.str("splitter") == "random");
        Self::build(cfg, x, y, &vec![1.0; x.len()], seed)
    }

    pub fn proba_one(&self, x: &SparseVec) -> f64 {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { p } => return *p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x.get(*feature as usize) <= *threshold {
                        *left
                    } else {
                        *right
                    } as usize
                }
            }
        }
    }

    #[cfg(test)]
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }
}

/// Bagged random-feature trees with soft voting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    pub fn fit(p: &Params, x: &[SparseVec], y: &[u8], seed: u64) -> Self {
        let cfg = TreeConfig::from_params(p, x[0].dim(), false);
        let bootstrap = p.bool("bootstrap");
        let n = x.len();
        let trees = (0..p.usize("n_estimators"))
            .into_par_iter()
            .map(|t| {
                let tree_seed = util::derive_seed(seed, t as u64);
                let mut weights = vec![if bootstrap { 0.0 } else { 1.0 }; n];
                if bootstrap {
                    let mut rng = util::rng(util::derive_seed(tree_seed, u64::MAX));
                    for _ in 0..n {
                        weights[rng.gen_range(0..n)] += 1.0;
                    }
                }
                Tree::build(cfg, x, y, &weights, tree_seed)
            })
            .collect();
        Self { trees }
    }

    pub fn proba(&self, x: &[SparseVec]) -> Vec<f64> {
        x.iter()
            .map(|xi| {
                self.trees.iter().map(|t| t.proba_one(xi)).sum::<f64>() / self.trees.len() as f64
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impurities() {
        assert_eq!(Criterion::Gini.impurity(1.0, 1.0), 0.5);
        assert_eq!(Criterion::Entropy.impurity(2.0, 2.0), 1.0);
        assert_eq!(Criterion::Gini.impurity(3.0, 0.0), 0.0);
    }

    #[test]
    fn stump_picks_informative_feature() {
        let x: Vec<SparseVec> = (0..10)
            .map(|i| SparseVec::from_dense(&[(i % 3) as f64, if i < 5 { 0.0 } else { 2.0 }]))
            .collect();
        let y: Vec<u8> = (0..10).map(|i| u8::from(i >= 5)).collect();
        let t = Tree::build(TreeConfig::stump(2), &x, &y, &[1.0; 10], 0);
        assert_eq!(t.n_nodes(), 3);
        match &t.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 1);
                assert_eq!(*threshold, 1.0);
            }
            leaf => panic!("expected split, got {leaf:?}"),
        }
    }

    #[test]
    fn weights_shift_leaf_probabilities() {
        let x = vec![SparseVec::from_dense(&[1.0]); 2];
        let t = Tree::build(TreeConfig::stump(1), &x, &[0, 1], &[3.0, 1.0], 0);
        assert_eq!(t.proba_one(&x[0]), 0.25);
    }
}
