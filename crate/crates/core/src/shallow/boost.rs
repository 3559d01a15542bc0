use serde::{Deserialize, Serialize};

use super::params::Params;
use super::tree::{Tree, TreeConfig};
use crate::features::SparseVec;
use crate::util;

const EPS: f64 = 1e-15;

/// AdaBoost over depth-one trees, discrete (`SAMME`) or real (`SAMME.R`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    real: bool,
    stumps: Vec<Tree>,
    /// Stage weights; unused by the real variant.
    alphas: Vec<f64>,
}

fn half_log_ratio(p1: f64) -> f64 {
    let p1 = p1.clamp(EPS, 1.0 - EPS);
    0.5 * (p1.ln() - (1.0 - p1).ln())
}

impl AdaBoost {
    pub fn fit(p: &Params, x: &[SparseVec], y: &[u8], seed: u64) -> Self {
        let real = p.str("algorithm") == "SAMME.R";
        let lr = p.f64("learning_rate");
        let n = x.len();
        let cfg = TreeConfig::stump(x[0].dim());
        let mut w = vec![1.0 / n as f64; n];
        let mut stumps = Vec::new();
        let mut alphas = Vec::new();
        for stage in 0..p.usize("n_estimators") {
            let stump = Tree::build(cfg, x, y, &w, util::derive_seed(seed, stage as u64));
            let probs: Vec<f64> = x.iter().map(|xi| stump.proba_one(xi)).collect();
            if real {
                // two-class form of exp(-lr (K-1)/K y_coded . log p)
                for i in 0..n {
                    let p1 = probs[i].clamp(EPS, 1.0 - EPS);
                    let (lp_true, lp_false) = if y[i] == 1 {
                        (p1.ln(), (1.0 - p1).ln())
                    } else {
                        ((1.0 - p1).ln(), p1.ln())
                    };
                    w[i] *= (-0.5 * lr * (lp_true - lp_false)).exp();
                }
                stumps.push(stump);
                alphas.push(1.0);
            } else {
                let miss: Vec<bool> = probs
                    .iter()
                    .zip(y)
                    .map(|(&p1, &yi)| u8::from(p1 > 0.5) != yi)
                    .collect();
                let total: f64 = w.iter().sum();
                let err = miss
                    .iter()
                    .zip(&w)
                    .filter(|(m, _)| **m)
                    .map(|(_, wi)| wi)
                    .sum::<f64>()
                    / total;
                if err <= 0.0 {
                    stumps.push(stump);
                    alphas.push(1.0);
                    break;
                }
                if err >= 0.5 {
                    if stumps.is_empty() {
                        stumps.push(stump);
                        alphas.push(1.0);
                    }
                    break;
                }
                let alpha = lr * ((1.0 - err) / err).ln();
                for (wi, m) in w.iter_mut().zip(&miss) {
                    if *m {
                        *wi *= alpha.exp();
                    }
                }
                stumps.push(stump);
                alphas.push(alpha);
            }
            let total: f64 = w.iter().sum();
            if total <= 0.0 || !total.is_finite() {
                break;
            }
            w.iter_mut().for_each(|wi| *wi /= total);
        }
        Self {
            real,
            stumps,
            alphas,
        }
    }

    /// Positive values favour the causal class.
    fn score(&self, x: &SparseVec) -> f64 {
        let total: f64 = if self.real {
            self.stumps
                .iter()
                .map(|s| half_log_ratio(s.proba_one(x)))
                .sum()
        } else {
            self.stumps
                .iter()
                .zip(&self.alphas)
                .map(|(s, a)| if s.proba_one(x) > 0.5 { *a } else { -*a })
                .sum()
        };
        total / self.alphas.iter().sum::<f64>().max(EPS)
    }

    pub fn proba(&self, x: &[SparseVec]) -> Vec<f64> {
        x.iter()
            .map(|xi| 1.0 / (1.0 + (-2.0 * self.score(xi)).exp()))
            .collect()
    }
}
