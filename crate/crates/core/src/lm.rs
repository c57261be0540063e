//! Box-constrained Levenberg-Marquardt refinement.
//!
//! The damped Gauss-Newton system `(H + lambda*I) d = -g` with `g = J^T r`
//! and `H = J^T J` is normalized to unit diagonal before being solved, which
//! decouples the damping factor from the parameter units. Jacobians come
//! from forward finite differences with a backward fallback at the upper
//! bound; trial points are projected onto the box; the damping factor is
//! driven by the classic multiplicative accept/reject rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{clamp_to_bounds, ParameterSpace};

/// Diagonal entries at or below this are treated as momentarily
/// uninfluential: the coordinate is frozen out of the normalized solve.
pub const FROZEN_DIAG_EPS: f64 = 1e-30;

/// Normalized gradient and Hessian over the active coordinates, the scale
/// factors `sqrt(H[i][i])`, and the active index map.
pub type NormalizedSystem = (Vec<f64>, Matrix, Vec<f64>, Vec<usize>);

/// Damping and termination settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmConfig {
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub lambda_max: f64,
    pub max_iterations: usize,
    pub fd_relative_step: f64,
    pub cost_tol: f64,
    pub step_tol: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            lambda0: 1e-3,
            lambda_up: 10.0,
            lambda_down: 10.0,
            lambda_max: 1e10,
            max_iterations: 200,
            fd_relative_step: 1e-6,
            cost_tol: 1e-12,
            step_tol: 1e-10,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("lambda0", self.lambda0),
            ("lambda_max", self.lambda_max),
            ("fd_relative_step", self.fd_relative_step),
            ("cost_tol", self.cost_tol),
            ("step_tol", self.step_tol),
        ];
        for (name, v) in positives {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("lambda_up", self.lambda_up), ("lambda_down", self.lambda_down)] {
            if v.is_nan() || v <= 1.0 {
                return Err(Error::InvalidConfig(format!("{name} must exceed 1, got {v}")));
            }
        }
        Ok(())
    }
}

/// Small dense row-major matrix used for Jacobians and normal equations.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidConfig("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// `self^T * v`.
    pub fn transpose_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            for (c, acc) in out.iter_mut().enumerate() {
                *acc += self.get(r, c) * vr;
            }
        }
        out
    }

    /// Gram matrix `self^T * self` (symmetric positive semidefinite).
    pub fn gram(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.cols);
        for i in 0..self.cols {
            for j in i..self.cols {
                let mut acc = 0.0;
                for r in 0..self.rows {
                    acc += self.get(r, i) * self.get(r, j);
                }
                out.set(i, j, acc);
                out.set(j, i, acc);
            }
        }
        out
    }
}

/// Gaussian elimination with partial pivoting; errors on a singular system.
fn solve_linear(mut a: Matrix, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if a.get(r, col).abs() > a.get(pivot, col).abs() {
                pivot = r;
            }
        }
        if a.get(pivot, col).abs() < 1e-300 {
            return Err(Error::Solver("singular normalized system".into()));
        }
        if pivot != col {
            for c in 0..n {
                let tmp = a.get(col, c);
                a.set(col, c, a.get(pivot, c));
                a.set(pivot, c, tmp);
            }
            b.swap(col, pivot);
        }
        for r in col + 1..n {
            let factor = a.get(r, col) / a.get(col, col);
            if factor != 0.0 {
                for c in col..n {
                    a.set(r, c, a.get(r, c) - factor * a.get(col, c));
                }
                b[r] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for (c, &xc) in x.iter().enumerate().skip(r + 1) {
            acc -= a.get(r, c) * xc;
        }
        x[r] = acc / a.get(r, r);
    }
    Ok(x)
}

/// Finite-difference Jacobian of `residual_fn` at `theta`: forward
/// differences with step `fd_relative_step * max(|theta_i|, width_i * 1e-3)`,
/// switching to a backward difference when the probe would leave the upper
/// bound.
pub fn fd_jacobian<F>(
    residual_fn: &F,
    theta: &[f64],
    space: &ParameterSpace,
    fd_relative_step: f64,
) -> Result<Matrix>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let base = residual_fn(theta)?;
    fd_jacobian_with_base(residual_fn, theta, &base, space, fd_relative_step)
}

fn fd_jacobian_with_base<F>(
    residual_fn: &F,
    theta: &[f64],
    base: &[f64],
    space: &ParameterSpace,
    fd_relative_step: f64,
) -> Result<Matrix>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut jac = Matrix::zeros(base.len(), theta.len());
    let mut probe = theta.to_vec();
    for i in 0..theta.len() {
        let step = fd_relative_step * theta[i].abs().max(space.width(i) * 1e-3);
        let backward = theta[i] + step > space.upper()[i];
        probe[i] = if backward { theta[i] - step } else { theta[i] + step };
        let shifted = residual_fn(&probe)?;
        if shifted.len() != base.len() {
            return Err(Error::DimensionMismatch { expected: base.len(), actual: shifted.len() });
        }
        let sign = if backward { -1.0 } else { 1.0 };
        for r in 0..base.len() {
            jac.set(r, i, sign * (shifted[r] - base[r]) / step);
        }
        probe[i] = theta[i];
    }
    Ok(jac)
}

/// Rescales the damped system to unit diagonal:
/// `g_norm[i] = g[i]/sqrt(H[i][i])`, `H_norm[i][j] = H[i][j]/sqrt(H[i][i]*H[j][j])`.
///
/// Coordinates whose diagonal is at or below [`FROZEN_DIAG_EPS`] are frozen:
/// they are excluded from the system and get a zero step. Returns the
/// normalized gradient and matrix over active coordinates, the scale factors
/// `sqrt(H[i][i])`, and the active index map.
pub fn normalize_system(gradient: &[f64], hessian: &Matrix) -> Result<NormalizedSystem> {
    let n = gradient.len();
    if hessian.rows() != n || hessian.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: hessian.rows() });
    }
    let active: Vec<usize> = (0..n).filter(|&i| hessian.get(i, i) > FROZEN_DIAG_EPS).collect();
    let scales: Vec<f64> = active.iter().map(|&i| hessian.get(i, i).sqrt()).collect();
    let mut g_norm = vec![0.0; active.len()];
    let mut h_norm = Matrix::zeros(active.len(), active.len());
    for (a, &i) in active.iter().enumerate() {
        g_norm[a] = gradient[i] / scales[a];
        for (b, &j) in active.iter().enumerate() {
            h_norm.set(a, b, hessian.get(i, j) / (scales[a] * scales[b]));
        }
    }
    Ok((g_norm, h_norm, scales, active))
}

/// Solves the normalized damped system and maps the step back to parameter
/// units: `(H_norm + lambda*I) d = -g_norm`, `dtheta[i] = d[i]/sqrt(H[i][i])`.
pub fn normalized_step(gradient: &[f64], hessian: &Matrix, lambda: f64) -> Result<Vec<f64>> {
    let (g_norm, mut h_norm, scales, active) = normalize_system(gradient, hessian)?;
    let mut dtheta = vec![0.0; gradient.len()];
    if active.is_empty() {
        return Ok(dtheta);
    }
    for a in 0..active.len() {
        h_norm.set(a, a, h_norm.get(a, a) + lambda);
    }
    let rhs: Vec<f64> = g_norm.iter().map(|g| -g).collect();
    let d = solve_linear(h_norm, rhs)?;
    for (a, &i) in active.iter().enumerate() {
        dtheta[i] = d[a] / scales[a];
    }
    Ok(dtheta)
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Relative cost decrease fell below `cost_tol`.
    CostTol,
    /// Scaled step norm fell below `step_tol`.
    StepTol,
    /// Damping exceeded `lambda_max` without an acceptable step.
    LambdaMax,
    /// Iteration budget exhausted.
    MaxIterations,
}

/// One trial step of the refinement loop.
#[derive(Debug, Clone, PartialEq)]
pub struct LmIteration {
    pub iteration: usize,
    pub cost: f64,
    pub lambda: f64,
    pub step_norm: f64,
    pub accepted: bool,
}

/// Refinement result: best visited point, its cost, and the trial history.
#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub theta: Vec<f64>,
    pub cost: f64,
    pub trace: Vec<LmIteration>,
    pub termination: Termination,
}

impl LmOutcome {
    /// Number of accepted steps.
    pub fn accepted_steps(&self) -> usize {
        self.trace.iter().filter(|t| t.accepted).count()
    }
}

fn sum_of_squares(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn norm(v: &[f64]) -> f64 {
    sum_of_squares(v).sqrt()
}

/// Runs the damped, normalized Gauss-Newton iteration from `theta0`,
/// projecting every trial point onto the box constraints.
///
/// A rejected step raises the damping and retries with the same Jacobian; an
/// accepted step lowers it. Trial-point evaluation failures count as
/// rejections, so the solver escalates damping instead of aborting; a
/// failure at the starting point or while building the Jacobian is an error.
pub fn run_lm<F>(
    residual_fn: &F,
    theta0: &[f64],
    space: &ParameterSpace,
    config: &LmConfig,
) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    config.validate()?;
    if theta0.len() != space.count() {
        return Err(Error::DimensionMismatch { expected: space.count(), actual: theta0.len() });
    }
    if !space.contains(theta0) {
        return Err(Error::OutOfBounds(format!("{theta0:?}")));
    }

    let mut theta = theta0.to_vec();
    let mut residuals = residual_fn(&theta)?;
    let mut cost = sum_of_squares(&residuals);
    let mut best_theta = theta.clone();
    let mut best_cost = cost;
    let mut lambda = config.lambda0;
    let mut trace = Vec::new();
    let mut termination = Termination::MaxIterations;

    'outer: for iteration in 1..=config.max_iterations {
        let jac = fd_jacobian_with_base(residual_fn, &theta, &residuals, space, config.fd_relative_step)?;
        let gradient = jac.transpose_mul_vec(&residuals);
        let hessian = jac.gram();

        loop {
            let dtheta = normalized_step(&gradient, &hessian, lambda)?;
            let proposal: Vec<f64> =
                theta.iter().zip(&dtheta).map(|(&t, &d)| t + d).collect();
            let trial = clamp_to_bounds(&proposal, space)?;
            let actual_step: Vec<f64> =
                trial.iter().zip(&theta).map(|(&a, &b)| a - b).collect();
            let step_norm = norm(&actual_step) / norm(&theta).max(1.0);

            if step_norm < config.step_tol {
                trace.push(LmIteration { iteration, cost, lambda, step_norm, accepted: false });
                termination = Termination::StepTol;
                break 'outer;
            }

            let trial_cost = match residual_fn(&trial) {
                Ok(r) => {
                    let c = sum_of_squares(&r);
                    if c < cost {
                        residuals = r;
                    }
                    c
                }
                Err(_) => f64::INFINITY,
            };

            if trial_cost < cost {
                let previous = cost;
                theta = trial;
                cost = trial_cost;
                lambda /= config.lambda_down;
                trace.push(LmIteration { iteration, cost, lambda, step_norm, accepted: true });
                if cost < best_cost {
                    best_cost = cost;
                    best_theta = theta.clone();
                }
                if (previous - cost) / previous.max(1e-300) < config.cost_tol {
                    termination = Termination::CostTol;
                    break 'outer;
                }
                break;
            }

            trace.push(LmIteration { iteration, cost, lambda, step_norm, accepted: false });
            lambda *= config.lambda_up;
            if lambda > config.lambda_max {
                termination = Termination::LambdaMax;
                break 'outer;
            }
        }
    }

    Ok(LmOutcome { theta: best_theta, cost: best_cost, trace, termination })
}
