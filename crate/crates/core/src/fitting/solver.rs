//! Damped Gauss–Newton (Levenberg–Marquardt) least squares for small models.

use nalgebra::{DMatrix, DVector};

/// A scalar model y = f(x; p) with an analytic gradient in p.
pub trait Model {
    fn n_params(&self) -> usize;
    fn value(&self, x: f64, p: &[f64]) -> f64;
    /// ∂f/∂p_k at x, written into `out` (length `n_params`).
    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Stop once every accepted step changes each parameter by less than this, relatively.
    pub rel_tol: f64,
    pub initial_damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 200,
            rel_tol: 1e-10,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub params: Vec<f64>,
    /// Weighted sum of squared residuals at `params`.
    pub objective: f64,
    /// (JᵀWJ)⁻¹ at `params`, unscaled; `None` when singular.
    pub covariance: Option<DMatrix<f64>>,
    /// Objective after each accepted step, starting with the initial guess.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_DAMPING: f64 = 1e16;

struct Linearization {
    normal: DMatrix<f64>,
    gradient: DVector<f64>,
}

fn objective<M: Model>(model: &M, x: &[f64], y: &[f64], w: &[f64], p: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((&xi, &yi), &wi)| {
            let r = yi - model.value(xi, p);
            wi * r * r
        })
        .sum()
}

fn linearize<M: Model>(model: &M, x: &[f64], y: &[f64], w: &[f64], p: &[f64]) -> Linearization {
    let n = model.n_params();
    let mut normal = DMatrix::zeros(n, n);
    let mut gradient = DVector::zeros(n);
    let mut row = vec![0.0; n];
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
        model.gradient(xi, p, &mut row);
        let r = yi - model.value(xi, p);
        for a in 0..n {
            gradient[a] += wi * row[a] * r;
            for b in 0..=a {
                normal[(a, b)] += wi * row[a] * row[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            normal[(b, a)] = normal[(a, b)];
        }
    }
    Linearization { normal, gradient }
}

/// Minimize Σ wᵢ(yᵢ − f(xᵢ; p))² from `p0`.
pub fn solve<M: Model>(model: &M, x: &[f64], y: &[f64], weights: &[f64], p0: &[f64], opts: &SolverOptions) -> Solution {
    assert_eq!(x.len(), y.len());
    assert_eq!(x.len(), weights.len());
    assert_eq!(p0.len(), model.n_params());
    let n = model.n_params();

    let mut p = p0.to_vec();
    let mut cost = objective(model, x, y, weights, &p);
    let mut history = vec![cost];
    let mut lambda = opts.initial_damping;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations && !converged {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let lin = linearize(model, x, y, weights, &p);
        let diag_floor = lin.normal.diagonal().max() * 1e-15;
        let mut accepted = false;
        while lambda <= MAX_DAMPING {
            let mut damped = lin.normal.clone();
            for k in 0..n {
                damped[(k, k)] += lambda * lin.normal[(k, k)].max(diag_floor);
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&lin.gradient),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
            let trial_cost = objective(model, x, y, weights, &trial);
            if trial_cost.is_finite() && trial_cost < cost {
                let rel_change = step
                    .iter()
                    .zip(&p)
                    .map(|(d, a)| d.abs() / a.abs().max(f64::MIN_POSITIVE))
                    .fold(0.0, f64::max);
                p = trial;
                cost = trial_cost;
                history.push(cost);
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if rel_change < opts.rel_tol {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no descent direction left at working precision
            converged = true;
        }
    }

    let lin = linearize(model, x, y, weights, &p);
    Solution {
        covariance: lin.normal.try_inverse(),
        params: p,
        objective: cost,
        history,
        iterations,
        converged,
    }
}
