//! Dense BFGS with a backtracking (Armijo) line search.
//!
//! Close to a minimum the predicted decrease drops below the resolution of
//! the objective value. A trial step whose value agrees with the current one
//! to round-off is then judged by its directional derivative instead
//! (approximate Wolfe conditions).

use log::trace;

use crate::error::Result;

pub(crate) trait Problem {
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
    /// Stationarity measure compared against the gradient tolerance.
    fn gradient_measure(&self, g: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BfgsOptions {
    pub grad_tol: f64,
    pub step_tol: f64,
    pub max_iterations: usize,
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Relative value change treated as round-off.
    pub value_noise: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_measure: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Values after each accepted step (first entry is the start).
    pub history: Vec<f64>,
}

/// Dense symmetric inverse-Hessian approximation.
struct InverseHessian {
    n: usize,
    m: Vec<f64>,
}

impl InverseHessian {
    fn from_blocks(h0: &[f64], n: usize) -> Self {
        debug_assert_eq!(h0.len(), n * n);
        Self { n, m: h0.to_vec() }
    }

    fn apply(&self, g: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let row = &self.m[i * n..(i + 1) * n];
                row.iter().zip(g).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// `H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T`
    fn update(&mut self, s: &[f64], y: &[f64]) {
        let n = self.n;
        let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
        let rho = 1.0 / sy;
        let hy = self.apply(y);
        let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
        let coef = rho * rho * yhy + rho;
        for i in 0..n {
            let row = &mut self.m[i * n..(i + 1) * n];
            for j in 0..n {
                row[j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
            }
        }
    }
}

pub(crate) fn minimize<P: Problem>(
    problem: &P,
    x0: Vec<f64>,
    h0: &[f64],
    opts: &BfgsOptions,
) -> Result<BfgsOutcome> {
    let n = x0.len();
    let mut x = x0;
    let (mut f, mut g) = problem.value_grad(&x)?;
    let mut measure = problem.gradient_measure(&g);
    let mut history = vec![f];
    let mut h = InverseHessian::from_blocks(h0, n);
    let mut fresh = true;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        if measure <= opts.grad_tol {
            break;
        }
        let mut d: Vec<f64> = h.apply(&g).iter().map(|v| -v).collect();
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            h = InverseHessian::from_blocks(h0, n);
            fresh = true;
            d = h.apply(&g).iter().map(|v| -v).collect();
            slope = d.iter().zip(&g).map(|(a, b)| a * b).sum();
            if !(slope < 0.0) {
                break;
            }
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        let noise = opts.value_noise * f.abs();
        for _ in 0..opts.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            if let Ok(ft) = problem.value(&trial) {
                if ft.is_finite() && ft <= f + opts.armijo * alpha * slope {
                    accepted = Some((trial, None));
                    break;
                }
                if ft.is_finite() && ft <= f + noise {
                    let (fg, gt) = problem.value_grad(&trial)?;
                    let dslope: f64 = d.iter().zip(&gt).map(|(a, b)| a * b).sum();
                    if dslope >= 0.9 * slope && dslope <= -0.8 * slope {
                        accepted = Some((trial, Some((fg, gt))));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        let Some((xn, known)) = accepted else {
            if fresh {
                break;
            }
            // Stale curvature information; retry from the initial metric.
            h = InverseHessian::from_blocks(h0, n);
            fresh = true;
            continue;
        };

        let (fn_, gn) = match known {
            Some(v) => v,
            None => problem.value_grad(&xn)?,
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let s_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy > 1e-12 * s_norm * y_norm {
            h.update(&s, &y);
            fresh = false;
        }
        let step = s.iter().map(|v| v.abs()).fold(0.0, f64::max);
        x = xn;
        f = fn_;
        g = gn;
        measure = problem.gradient_measure(&g);
        history.push(f);
        iterations += 1;
        trace!("bfgs it {iterations}: f = {f:.12e}, |g| = {measure:.3e}, alpha = {alpha:.2e}");
        if step < opts.step_tol {
            break;
        }
    }

    Ok(BfgsOutcome {
        converged: measure <= opts.grad_tol,
        x,
        value: f,
        grad_measure: measure,
        iterations,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;

    impl Problem for Rosenbrock {
        fn value(&self, x: &[f64]) -> Result<f64> {
            Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2))
        }
        fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
            let g = vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ];
            Ok((self.value(x)?, g))
        }
        fn gradient_measure(&self, g: &[f64]) -> f64 {
            g.iter().map(|v| v.abs()).fold(0.0, f64::max)
        }
    }

    #[test]
    fn solves_rosenbrock_monotonically() {
        let opts = BfgsOptions {
            grad_tol: 1e-10,
            step_tol: 0.0,
            max_iterations: 500,
            armijo: 1e-4,
            max_backtracks: 60,
            value_noise: 0.0,
        };
        let out = minimize(&Rosenbrock, vec![-1.2, 1.0], &[1.0, 0.0, 0.0, 1.0], &opts).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] - 1.0).abs() < 1e-8);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_iterations_returns_start() {
        let opts = BfgsOptions {
            grad_tol: 1e-10,
            step_tol: 0.0,
            max_iterations: 0,
            armijo: 1e-4,
            max_backtracks: 60,
            value_noise: 0.0,
        };
        let out = minimize(&Rosenbrock, vec![-1.2, 1.0], &[1.0, 0.0, 0.0, 1.0], &opts).unwrap();
        assert!(!out.converged);
        assert_eq!(out.x, vec![-1.2, 1.0]);
        assert_eq!(out.iterations, 0);
    }
}
