use serde::{Deserialize, Serialize};

use super::params::Params;
use crate::features::SparseVec;

/// L2-regularized logistic regression.
///
/// Minimizes `0.5 |w|^2 + C * sum log(1 + exp(-y (w.x + b)))` with L-BFGS.
/// The `liblinear` solver treats the intercept as an ordinary weight on a
/// constant feature and so regularizes it; `lbfgs` leaves it free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    weights: Vec<f64>,
    intercept: f64,
}

fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Logistic {
    pub fn fit(p: &Params, x: &[SparseVec], y: &[u8]) -> Self {
        let dim = x[0].dim();
        let c = p.f64("C");
        let penalize_intercept = p.str("solver") == "liblinear";
        let signs: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        // parameter vector: weights followed by the intercept
        let objective = |theta: &[f64], grad: &mut [f64]| -> f64 {
            let (w, b) = theta.split_at(dim);
            let b = b[0];
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut loss = 0.0;
            for (xi, &s) in x.iter().zip(&signs) {
                let margin = s * (xi.dot_dense(w) + b);
                loss += log1p_exp(-margin);
                let coef = -s * sigmoid(-margin) * c;
                for (j, v) in xi.iter() {
                    grad[j] += coef * v;
                }
                grad[dim] += coef;
            }
            loss *= c;
            let reg_end = if penalize_intercept { dim + 1 } else { dim };
            for j in 0..reg_end {
                loss += 0.5 * theta[j] * theta[j];
                grad[j] += theta[j];
            }
            loss
        };
        let theta = lbfgs(
            objective,
            vec![0.0; dim + 1],
            p.usize("max_iter"),
            p.f64("tol"),
        );
        Self {
            intercept: theta[dim],
            weights: theta[..dim].to_vec(),
        }
    }

    pub fn decision(&self, x: &SparseVec) -> f64 {
        x.dot_dense(&self.weights) + self.intercept
    }

    pub fn proba(&self, x: &[SparseVec]) -> Vec<f64> {
        x.iter().map(|xi| sigmoid(self.decision(xi))).collect()
    }
}

/// Limited-memory BFGS with a backtracking Armijo line search. Stops when
/// the largest gradient component falls below `tol` or after `max_iter`
/// iterations.
fn lbfgs(
    mut f: impl FnMut(&[f64], &mut [f64]) -> f64,
    mut x: Vec<f64>,
    max_iter: usize,
    tol: f64,
) -> Vec<f64> {
    const MEMORY: usize = 10;
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let mut g_new = vec![0.0; n];
    for _ in 0..max_iter {
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < tol {
            break;
        }
        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, yv) in s_hist.iter().zip(&y_hist).rev() {
            let a = dot(s, &d) / dot(yv, s);
            d.iter_mut().zip(yv).for_each(|(di, yi)| *di -= a * yi);
            alphas.push(a);
        }
        if let (Some(s), Some(yv)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, yv) / dot(yv, yv);
            d.iter_mut().for_each(|di| *di *= gamma);
        }
        for ((s, yv), a) in s_hist.iter().zip(&y_hist).zip(alphas.into_iter().rev()) {
            let b = dot(yv, &d) / dot(yv, s);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
            s_hist.clear();
            y_hist.clear();
        }
        let mut step = if s_hist.is_empty() {
            1.0 / dot(&g, &g).sqrt().max(1.0)
        } else {
            1.0
        };
        let mut x_new = vec![0.0; n];
        let mut f_new;
        loop {
            x_new
                .iter_mut()
                .zip(&x)
                .zip(&d)
                .for_each(|((xn, xi), di)| *xn = xi + step * di);
            f_new = f(&x_new, &mut g_new);
            if f_new <= fx + 1e-4 * step * slope || step < 1e-20 {
                break;
            }
            step *= 0.5;
        }
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let improvement = fx - f_new;
        x.copy_from_slice(&x_new);
        g.copy_from_slice(&g_new);
        fx = f_new;
        if dot(&s, &yv) > 1e-12 {
            s_hist.push(s);
            y_hist.push(yv);
            if s_hist.len() > MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        if improvement.abs() <= 1e-12 * fx.abs().max(1.0) {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lbfgs_minimizes_quadratic() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 3.0);
            g[1] = 20.0 * (x[1] + 1.0);
            (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2)
        };
        let x = lbfgs(f, vec![0.0, 0.0], 100, 1e-10);
        assert!(
            (x[0] - 3.0).abs() < 1e-6 && (x[1] + 1.0).abs() < 1e-6,
            "{x:?}"
        );
    }

    #[test]
    fn intercept_penalty_depends_on_solver() {
        use crate::shallow::{params, Algorithm};
        let x: Vec<SparseVec> = (0..8)
            .map(|i| SparseVec::from_dense(&[if i < 6 { 0.0 } else { 1.0 }]))
            .collect();
        let y = [0, 0, 0, 0, 0, 0, 1, 1];
        let fit = |solver: &str| {
            let mut h = params::Hyperparameters::new();
            h.insert("solver".into(), solver.into());
            h.insert("C".into(), 0.1.into());
            Logistic::fit(
                &params::Params::new(
                    Algorithm::LogisticRegression,
                    params::resolve(Algorithm::LogisticRegression, &h),
                ),
                &x,
                &y,
            )
        };
        let free = fit("lbfgs");
        let shrunk = fit("liblinear");
        assert!(free.intercept.abs() > shrunk.intercept.abs());
    }
}
