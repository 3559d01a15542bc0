use serde::{Deserialize, Serialize};

use super::params::Params;
use crate::features::SparseVec;

/// k-nearest-neighbour vote under Euclidean distance. All `algorithm`
/// settings search exhaustively, so they differ only in name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    distance_weighted: bool,
    points: Vec<SparseVec>,
    labels: Vec<u8>,
}

impl Knn {
    pub fn fit(p: &Params, x: &[SparseVec], y: &[u8]) -> Self {
        Self {
            k: p.usize("n_neighbors").min(x.len()),
            distance_weighted: p.str("weights") == "distance",
            points: x.to_vec(),
            labels: y.to_vec(),
        }
    }

    fn proba_one(&self, q: &SparseVec) -> f64 {
        let mut d: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, x)| (x.squared_distance(q), i))
            .collect();
        d.select_nth_unstable_by(self.k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut nearest = d[..self.k].to_vec();
        nearest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let weights: Vec<f64> = if !self.distance_weighted {
            vec![1.0; self.k]
        } else if nearest.iter().any(|(dist, _)| *dist == 0.0) {
            // exact matches take all the weight
            nearest
                .iter()
                .map(|(dist, _)| if *dist == 0.0 { 1.0 } else { 0.0 })
                .collect()
        } else {
            nearest.iter().map(|(dist, _)| 1.0 / dist.sqrt()).collect()
        };
        let total: f64 = weights.iter().sum();
        let causal: f64 = nearest
            .iter()
            .zip(&weights)
            .filter(|((_, i), _)| self.labels[*i] == 1)
            .map(|(_, w)| w)
            .sum();
        causal / total
    }

    pub fn proba(&self, x: &[SparseVec]) -> Vec<f64> {
        x.iter().map(|q| self.proba_one(q)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shallow::{params, Algorithm, Hyperparameters};

    fn knn(k: i64, weights: &str, x: &[SparseVec], y: &[u8]) -> Knn {
        let mut h = Hyperparameters::new();
        h.insert("n_neighbors".into(), k.into());
        h.insert("weights".into(), weights.into());
        Knn::fit(
            &params::Params::new(
                Algorithm::KNearestNeighbor,
                params::resolve(Algorithm::KNearestNeighbor, &h),
            ),
            x,
            y,
        )
    }

    #[test]
    fn distance_weighting() {
        let x: Vec<SparseVec> = [0.0, 1.0, 3.0]
            .iter()
            .map(|&v| SparseVec::from_dense(&[v]))
            .collect();
        let y = [1, 0, 0];
        let q = SparseVec::from_dense(&[0.5]);
        assert!((knn(3, "uniform", &x, &y).proba_one(&q) - 1.0 / 3.0).abs() < 1e-12);
        // weights 2, 2, 0.4
        assert!((knn(3, "distance", &x, &y).proba_one(&q) - 2.0 / 4.4).abs() < 1e-12);
        assert_eq!(knn(3, "distance", &x, &y).proba_one(&x[0]), 1.0);
    }

    #[test]
    fn even_split_goes_to_not_causal() {
        let x: Vec<SparseVec> = [0.0, 2.0]
            .iter()
            .map(|&v| SparseVec::from_dense(&[v]))
            .collect();
        let m = knn(2, "uniform", &x, &[1, 0]);
        assert_eq!(m.proba(&[SparseVec::from_dense(&[1.0])]), vec![0.5]);
    }
}
