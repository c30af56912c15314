//! Levenberg–Marquardt with a central-difference Jacobian, for the handful
//! of parameters the calibration fits need.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop once a step changes every parameter by less than this, relatively.
    pub step_tol: f64,
    /// Stop once the cost is below this absolute floor.
    pub cost_floor: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 200, step_tol: 1e-13, cost_floor: 0.0 }
    }
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn jacobian(f: &impl Fn(&[f64]) -> Vec<f64>, x: &[f64], m: usize) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(m, x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        let h = 1e-6 * x[j].abs().max(1e-8);
        probe[j] = x[j] + h;
        let up = f(&probe);
        probe[j] = x[j] - h;
        let down = f(&probe);
        probe[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    jac
}

/// Minimizes `Σ r_i(x)²` starting from `x0`. Non-finite residuals are
/// treated as infinitely bad, which keeps steps inside the model's domain.
pub fn minimize(residuals: impl Fn(&[f64]) -> Vec<f64>, x0: &[f64], opts: &LmOptions) -> LmResult {
    let mut x = x0.to_vec();
    let mut r = residuals(&x);
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    let n = x.len();
    for iter in 0..opts.max_iterations {
        if c <= opts.cost_floor {
            return LmResult { params: x, cost: c, iterations: iter, converged: true };
        }
        let jac = jacobian(&residuals, &x, r.len());
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * DVector::from_column_slice(&r);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, si)| xi + si).collect();
            let rt = residuals(&trial);
            let ct = cost(&rt);
            if ct.is_finite() && ct <= c {
                let small = x.iter().zip(step.iter()).all(|(xi, si)| si.abs() <= opts.step_tol * xi.abs().max(1e-12));
                x = trial;
                r = rt;
                let improved = c - ct;
                c = ct;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                if small || improved == 0.0 {
                    return LmResult { params: x, cost: c, iterations: iter + 1, converged: true };
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No downhill step at any damping: a stationary point.
            return LmResult { params: x, cost: c, iterations: iter + 1, converged: true };
        }
    }
    LmResult { params: x, cost: c, iterations: opts.max_iterations, converged: false }
}
