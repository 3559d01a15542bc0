use serde::{Deserialize, Serialize};

/// Sparse vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVec {
    dim: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVec {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// `entries` must be sorted by index; zeros are dropped.
    pub fn from_sorted(dim: usize, entries: Vec<(usize, f64)>) -> Self {
        let mut v = Self::zeros(dim);
        for (i, x) in entries {
            debug_assert!(i < dim && v.indices.last().is_none_or(|&l| (l as usize) < i));
            if x != 0.0 {
                v.indices.push(i as u32);
                v.values.push(x);
            }
        }
        v
    }

    pub fn from_dense(values: &[f64]) -> Self {
        Self::from_sorted(values.len(), values.iter().copied().enumerate().collect())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, x) in self.iter() {
            out[i] = x;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .map(|&i| i as usize)
            .zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&(index as u32)) {
            Ok(p) => self.values[p],
            Err(_) => 0.0,
        }
    }

    pub fn dot(&self, other: &SparseVec) -> f64 {
        let (mut a, mut b, mut acc) = (0, 0, 0.0);
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    pub fn dot_dense(&self, weights: &[f64]) -> f64 {
        self.iter().map(|(i, x)| weights[i] * x).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum()
    }

    pub fn squared_distance(&self, other: &SparseVec) -> f64 {
        (self.norm_sq() + other.norm_sq() - 2.0 * self.dot(other)).max(0.0)
    }

    pub fn map_entries(&mut self, f: impl Fn(usize, f64) -> f64) {
        for (i, x) in self.indices.iter().zip(self.values.iter_mut()) {
            *x = f(*i as usize, *x);
        }
    }

    /// Scales to unit Euclidean norm; the zero vector is left unchanged.
    pub fn l2_normalize(&mut self) {
        let norm = self.norm_sq().sqrt();
        if norm > 0.0 {
            self.values.iter_mut().for_each(|x| *x /= norm);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_and_distances() {
        let a = SparseVec::from_dense(&[1.0, 0.0, 2.0, 0.0]);
        let b = SparseVec::from_dense(&[0.0, 3.0, 4.0, 1.0]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.dot(&b), 8.0);
        assert_eq!(a.dot_dense(&[1.0, 1.0, 1.0, 1.0]), 3.0);
        assert_eq!(a.squared_distance(&b), 1.0 + 9.0 + 4.0 + 1.0);
        assert_eq!(b.get(1), 3.0);
        assert_eq!(b.get(0), 0.0);
        assert_eq!(b.to_dense(), vec![0.0, 3.0, 4.0, 1.0]);
    }

    #[test]
    fn normalizing_zero_is_noop() {
        let mut z = SparseVec::zeros(3);
        z.l2_normalize();
        assert_eq!(z, SparseVec::zeros(3));
        let mut v = SparseVec::from_dense(&[3.0, 4.0]);
        v.l2_normalize();
        assert_eq!(v.values(), &[0.6, 0.8]);
    }
}
