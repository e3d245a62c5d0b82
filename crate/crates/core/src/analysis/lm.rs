//! Damped Gauss-Newton (Levenberg-Marquardt) least squares with lower
//! bounds enforced by projection.

use nalgebra::{DMatrix, DVector};

/// A weighted nonlinear least-squares problem, Σ wᵢ (yᵢ − f(xᵢ; p))².
pub trait Problem {
    fn n_params(&self) -> usize;
    fn n_points(&self) -> usize;
    /// Writes the model values f(xᵢ; p).
    fn model(&self, p: &[f64], out: &mut [f64]);
    /// Writes ∂f(xᵢ; p)/∂pⱼ into row i, column j.
    fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>);
    fn data(&self) -> &[f64];
    fn weights(&self) -> &[f64];
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub max_iterations: usize,
    /// Relative decrease of the cost below which the fit has converged.
    pub ftol: f64,
    /// Relative step length below which the fit has converged.
    pub xtol: f64,
    pub initial_damping: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            ftol: 1.49e-8,
            xtol: 1.49e-8,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub params: Vec<f64>,
    /// Weighted sum of squared residuals.
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Weighted Jacobian at the solution, rows scaled by sqrt(wᵢ).
    pub weighted_jacobian: DMatrix<f64>,
}

fn cost<P: Problem>(problem: &P, p: &[f64], scratch: &mut [f64]) -> f64 {
    problem.model(p, scratch);
    problem
        .data()
        .iter()
        .zip(scratch.iter())
        .zip(problem.weights())
        .map(|((y, f), w)| w * (y - f) * (y - f))
        .sum()
}

pub fn minimize<P: Problem>(problem: &P, initial: &[f64], lower: &[f64], opts: &Options) -> Solution {
    let n = problem.n_points();
    let m = problem.n_params();
    let sqrt_w: Vec<f64> = problem.weights().iter().map(|w| w.sqrt()).collect();
    let project = |p: &mut [f64]| {
        for (x, lo) in p.iter_mut().zip(lower) {
            if *x < *lo {
                *x = *lo;
            }
        }
    };

    let mut p = initial.to_vec();
    project(&mut p);
    let mut scratch = vec![0.0; n];
    let mut current = cost(problem, &p, &mut scratch);
    let mut lambda = opts.initial_damping;
    let mut jac = DMatrix::zeros(n, m);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        problem.jacobian(&p, &mut jac);
        problem.model(&p, &mut scratch);
        let mut jw = jac.clone();
        let mut r = DVector::zeros(n);
        for i in 0..n {
            r[i] = sqrt_w[i] * (problem.data()[i] - scratch[i]);
            for j in 0..m {
                jw[(i, j)] *= sqrt_w[i];
            }
        }
        let jtj = jw.transpose() * &jw;
        let grad = jw.transpose() * &r;
        if grad.amax() == 0.0 || current == 0.0 {
            converged = true;
            break;
        }

        // unidentifiable directions (zero columns) still get some damping
        let diag_floor = 1e-12 * (0..m).map(|j| jtj[(j, j)]).fold(0.0, f64::max);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for j in 0..m {
                a[(j, j)] += lambda * jtj[(j, j)].max(diag_floor).max(f64::MIN_POSITIVE);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            project(&mut trial);
            let trial_cost = cost(problem, &trial, &mut scratch);
            if trial_cost.is_finite() && trial_cost <= current {
                let step_norm: f64 = p
                    .iter()
                    .zip(&trial)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let p_norm: f64 = p.iter().map(|a| a * a).sum::<f64>().sqrt();
                let decrease = (current - trial_cost) / current.max(f64::MIN_POSITIVE);
                p = trial;
                current = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if decrease < opts.ftol || step_norm <= opts.xtol * (p_norm + opts.xtol) {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: stationary to working precision
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    problem.jacobian(&p, &mut jac);
    for i in 0..n {
        for j in 0..m {
            jac[(i, j)] *= sqrt_w[i];
        }
    }
    Solution {
        params: p,
        cost: current,
        converged,
        iterations,
        weighted_jacobian: jac,
    }
}

/// (JᵀWJ)⁺ via SVD; unidentifiable directions get zero variance instead of
/// blowing up.
pub fn covariance(weighted_jacobian: &DMatrix<f64>) -> DMatrix<f64> {
    let jtj = weighted_jacobian.transpose() * weighted_jacobian;
    let m = jtj.nrows();
    jtj.clone()
        .pseudo_inverse(1e-14 * jtj.amax().max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DMatrix::zeros(m, m))
}
