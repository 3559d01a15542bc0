use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::params::Params;
use crate::features::SparseVec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    fn eval(self, dot: f64, norm_a: f64, norm_b: f64) -> f64 {
        match self {
            Kernel::Linear => dot,
            Kernel::Rbf { gamma } => (-gamma * (norm_a + norm_b - 2.0 * dot).max(0.0)).exp(),
        }
    }
}

/// C-support vector classifier trained by sequential minimal optimization
/// with second-order working-set selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    kernel: Kernel,
    support: Vec<SparseVec>,
    /// alpha_i * y_i per support vector.
    dual_coef: Vec<f64>,
    intercept: f64,
}

const TAU: f64 = 1e-12;
const MAX_ITER: usize = 10_000_000;

/// Column-major copy of the training matrix for kernel rows.
struct Inverted {
    columns: HashMap<u32, Vec<(u32, f64)>>,
}

impl Inverted {
    fn new(x: &[SparseVec]) -> Self {
        let mut columns: HashMap<u32, Vec<(u32, f64)>> = HashMap::new();
        for (i, xi) in x.iter().enumerate() {
            for (&j, &v) in xi.indices().iter().zip(xi.values()) {
                columns.entry(j).or_default().push((i as u32, v));
            }
        }
        Self { columns }
    }

    fn dots(&self, q: &SparseVec, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (&j, &v) in q.indices().iter().zip(q.values()) {
            if let Some(col) = self.columns.get(&j) {
                for &(i, w) in col {
                    out[i as usize] += v * w;
                }
            }
        }
    }
}

struct KernelRows<'a> {
    x: &'a [SparseVec],
    norms: Vec<f64>,
    inverted: Inverted,
    kernel: Kernel,
    cache: HashMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    fn new(x: &'a [SparseVec], kernel: Kernel) -> Self {
        let n = x.len();
        // about 256 MB of cached rows
        let capacity = ((256usize << 20) / (8 * n.max(1))).max(2);
        Self {
            norms: x.iter().map(SparseVec::norm_sq).collect(),
            inverted: Inverted::new(x),
            x,
            kernel,
            cache: HashMap::new(),
            order: VecDeque::new(),
            capacity,
        }
    }

    fn diag(&self, i: usize) -> f64 {
        self.kernel
            .eval(self.norms[i], self.norms[i], self.norms[i])
    }

    fn row(&mut self, i: usize) -> &[f64] {
        if !self.cache.contains_key(&i) {
            if self.cache.len() >= self.capacity {
                if let Some(old) = self.order.pop_front() {
                    self.cache.remove(&old);
                }
            }
            let mut row = vec![0.0; self.x.len()];
            self.inverted.dots(&self.x[i], &mut row);
            for (t, r) in row.iter_mut().enumerate() {
                *r = self.kernel.eval(*r, self.norms[i], self.norms[t]);
            }
            self.cache.insert(i, row);
            self.order.push_back(i);
        }
        &self.cache[&i]
    }
}

/// `1 / (n_features * Var(X))` over all matrix entries, zeros included.
fn scale_gamma(x: &[SparseVec]) -> f64 {
    let dim = x[0].dim();
    let cells = (x.len() * dim) as f64;
    let sum: f64 = x.iter().flat_map(|r| r.values()).sum();
    let sum_sq: f64 = x.iter().map(SparseVec::norm_sq).sum();
    let mean = sum / cells;
    let var = sum_sq / cells - mean * mean;
    if var > 0.0 {
        1.0 / (dim as f64 * var)
    } else {
        1.0
    }
}

impl Svm {
    pub fn fit(p: &Params, x: &[SparseVec], labels: &[u8]) -> Self {
        let kernel = match p.str("kernel") {
            "linear" => Kernel::Linear,
            _ => Kernel::Rbf {
                gamma: p.value("gamma").as_f64().unwrap_or_else(|| scale_gamma(x)),
            },
        };
        let c = p.f64("C");
        let eps = p.f64("tol");
        let n = x.len();
        let y: Vec<f64> = labels
            .iter()
            .map(|&l| if l == 1 { 1.0 } else { -1.0 })
            .collect();
        let mut rows = KernelRows::new(x, kernel);
        let diag: Vec<f64> = (0..n).map(|i| rows.diag(i)).collect();
        let mut alpha = vec![0.0; n];
        let mut grad = vec![-1.0; n];
        let is_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
        let is_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

        for _ in 0..MAX_ITER {
            // i: maximal violating index among I_up
            let mut gmax = f64::NEG_INFINITY;
            let mut i_sel = usize::MAX;
            for t in 0..n {
                if is_up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax {
                    gmax = -y[t] * grad[t];
                    i_sel = t;
                }
            }
            if i_sel == usize::MAX {
                break;
            }
            let ki: Vec<f64> = rows.row(i_sel).to_vec();
            let mut gmax2 = f64::NEG_INFINITY;
            let mut obj_min = f64::INFINITY;
            let mut j_sel = usize::MAX;
            for t in 0..n {
                if !is_low(alpha[t], y[t]) {
                    continue;
                }
                let yg = y[t] * grad[t];
                gmax2 = gmax2.max(yg);
                let b = gmax + yg;
                if b > 0.0 {
                    let a = diag[i_sel] + diag[t] - 2.0 * ki[t];
                    let a = if a > 0.0 { a } else { TAU };
                    let obj = -(b * b) / a;
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = t;
                    }
                }
            }
            if gmax + gmax2 < eps || j_sel == usize::MAX {
                break;
            }
            let (i, j) = (i_sel, j_sel);
            let kj: Vec<f64> = rows.row(j).to_vec();
            let (old_ai, old_aj) = (alpha[i], alpha[j]);
            let quad = (diag[i] + diag[j] - 2.0 * ki[j]).max(TAU);
            if y[i] != y[j] {
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 && alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                } else if diff <= 0.0 && alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 && alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                } else if diff <= 0.0 && alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c && alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                } else if sum <= c && alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c && alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                } else if sum <= c && alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (dai, daj) = (alpha[i] - old_ai, alpha[j] - old_aj);
            for t in 0..n {
                // Q_it = y_i y_t K_it
                grad[t] += y[t] * (y[i] * ki[t] * dai + y[j] * kj[t] * daj);
            }
        }

        // rho as in libsvm: mean over free vectors, else midpoint of bounds
        let (mut ub, mut lb, mut sum_free, mut n_free) =
            (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
        for t in 0..n {
            let yg = y[t] * grad[t];
            if alpha[t] >= c {
                if y[t] < 0.0 {
                    ub = ub.min(yg)
                } else {
                    lb = lb.max(yg)
                }
            } else if alpha[t] <= 0.0 {
                if y[t] > 0.0 {
                    ub = ub.min(yg)
                } else {
                    lb = lb.max(yg)
                }
            } else {
                n_free += 1;
                sum_free += yg;
            }
        }
        let rho = if n_free > 0 {
            sum_free / n_free as f64
        } else {
            (ub + lb) / 2.0
        };

        let mut support = Vec::new();
        let mut dual_coef = Vec::new();
        for t in 0..n {
            if alpha[t] > 0.0 {
                support.push(x[t].clone());
                dual_coef.push(alpha[t] * y[t]);
            }
        }
        Self {
            kernel,
            support,
            dual_coef,
            intercept: -rho,
        }
    }

    pub fn decision(&self, q: &[SparseVec]) -> Vec<f64> {
        let inverted = Inverted::new(&self.support);
        let norms: Vec<f64> = self.support.iter().map(SparseVec::norm_sq).collect();
        let mut dots = vec![0.0; self.support.len()];
        q.iter()
            .map(|xq| {
                inverted.dots(xq, &mut dots);
                let nq = xq.norm_sq();
                self.intercept
                    + dots
                        .iter()
                        .zip(&norms)
                        .zip(&self.dual_coef)
                        .map(|((&d, &ns), &coef)| coef * self.kernel.eval(d, ns, nq))
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn proba(&self, q: &[SparseVec]) -> Vec<f64> {
        self.decision(q)
            .into_iter()
            .map(|d| 1.0 / (1.0 + (-d).exp()))
            .collect()
    }
}
