use serde::{Deserialize, Serialize};

use super::params::Params;
use crate::features::SparseVec;

/// Multinomial naive Bayes with additive smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    class_log_prior: [f64; 2],
    /// Per class, log P(feature | class).
    feature_log_prob: [Vec<f64>; 2],
}

impl NaiveBayes {
    pub fn fit(p: &Params, x: &[SparseVec], y: &[u8]) -> Self {
        let dim = x[0].dim();
        let alpha = p.f64("alpha");
        let mut counts = [vec![0.0; dim], vec![0.0; dim]];
        let mut class_n = [0usize; 2];
        for (xi, &yi) in x.iter().zip(y) {
            class_n[yi as usize] += 1;
            for (j, v) in xi.iter() {
                counts[yi as usize][j] += v;
            }
        }
        let class_log_prior = if p.bool("fit_prior") {
            let n = y.len() as f64;
            [(class_n[0] as f64 / n).ln(), (class_n[1] as f64 / n).ln()]
        } else {
            [0.5f64.ln(); 2]
        };
        let feature_log_prob = counts.map(|c| {
            let total: f64 = c.iter().sum::<f64>() + alpha * dim as f64;
            c.iter().map(|v| ((v + alpha) / total).ln()).collect()
        });
        Self {
            class_log_prior,
            feature_log_prob,
        }
    }

    fn joint_log_likelihood(&self, x: &SparseVec) -> [f64; 2] {
        [0, 1].map(|c| self.class_log_prior[c] + x.dot_dense(&self.feature_log_prob[c]))
    }

    pub fn proba(&self, x: &[SparseVec]) -> Vec<f64> {
        x.iter()
            .map(|xi| {
                let [a, b] = self.joint_log_likelihood(xi);
                1.0 / (1.0 + (a - b).exp())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shallow::{params, Algorithm, Hyperparameters};

    #[test]
    fn hand_computed_posterior() {
        let x = vec![
            SparseVec::from_dense(&[2.0, 0.0]),
            SparseVec::from_dense(&[0.0, 1.0]),
            SparseVec::from_dense(&[1.0, 1.0]),
        ];
        let y = [1, 0, 0];
        let p = params::Params::new(
            Algorithm::NaiveBayes,
            params::resolve(Algorithm::NaiveBayes, &Hyperparameters::new()),
        );
        let nb = NaiveBayes::fit(&p, &x, &y);
        // class 1: counts (2,0) -> (3/4, 1/4); class 0: counts (1,2) -> (2/5, 3/5)
        let probe = SparseVec::from_dense(&[1.0, 0.0]);
        let l1 = (1.0f64 / 3.0) * 0.75;
        let l0 = (2.0f64 / 3.0) * 0.4;
        let expected = l1 / (l1 + l0);
        assert!((nb.proba(&[probe])[0] - expected).abs() < 1e-12);
    }
}
