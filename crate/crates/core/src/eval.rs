//! Evaluation of the series at a parameter value, residuals against the
//! operators themselves, and heuristic convergence diagnostics.

use crate::error::{Error, Result};
use crate::operator::{homotopy_apply, homotopy_matrix, norm2, DenseMatrix, EigenBasis, HomotopyProblem};
use crate::series::{compute_coefficients, SeriesCoefficients};

/// Coefficient magnitudes at or below this are treated as exact zeros by the
/// radius fit.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub order: usize,
    pub convergence_tol: f64,
    /// Trailing window for the radius fit; shrunk to `order − 2` when the
    /// order is too small for it.
    pub window: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            order: 20,
            convergence_tol: 1e-9,
            window: 8,
        }
    }
}

impl SolveOptions {
    pub fn with_order(order: usize) -> Self {
        SolveOptions {
            order,
            ..Self::default()
        }
    }

    pub fn effective_window(&self) -> Result<usize> {
        let window = self.window.min(self.order.saturating_sub(2));
        if window < 3 {
            return Err(Error::InsufficientOrder {
                order: self.order,
                window: self.window.max(3),
            });
        }
        Ok(window)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenpairResult {
    /// 0-based eigen-index into the starting basis.
    pub index: usize,
    pub theta: f64,
    pub lambda: f64,
    /// `a[i][0..=R]`.
    pub lambda_coefficients: Vec<f64>,
    /// Unit 2-norm, largest-magnitude entry positive.
    pub vector: Vec<f64>,
    /// Series output normalized so that `<x, e_i> = 1`.
    pub raw_gauge_vector: Vec<f64>,
    pub residual: f64,
    /// `f64::INFINITY` when every trailing coefficient vanishes.
    pub radius_estimate: f64,
    /// Geometric tail bound divided by `max(1, |lambda|)`.
    pub tail_estimate: f64,
    pub converged: bool,
}

/// Horner evaluation of `Σ_r a[i][r] θ^r`.
pub fn eval_lambda(coeffs: &SeriesCoefficients, i: usize, theta: f64) -> f64 {
    horner(coeffs.lambda_coefficients(i), theta)
}

fn horner(c: &[f64], theta: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * theta + v)
}

/// Flips the sign so the largest-magnitude entry (first on ties) is positive.
pub fn canonicalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for (p, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = p;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Returns `(raw, unit)` where `raw = Σ_j φ_{i,j}(θ) e_j` and `unit` is its
/// sign-canonical normalization.
pub fn eval_eigenvector(
    coeffs: &SeriesCoefficients,
    basis: &EigenBasis,
    i: usize,
    theta: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = coeffs.dim();
    let mut raw = vec![0.0; n];
    for j in 0..n {
        let phi = horner(&coeffs.phi_coefficients(i, j), theta);
        if phi == 0.0 {
            continue;
        }
        for (out, e) in raw.iter_mut().zip(basis.vector(j)) {
            *out += phi * e;
        }
    }
    let norm = norm2(&raw);
    if !norm.is_finite() || norm < f64::MIN_POSITIVE {
        return Err(Error::ZeroVector { index: i });
    }
    let mut unit: Vec<f64> = raw.iter().map(|v| v / norm).collect();
    canonicalize_sign(&mut unit);
    Ok((raw, unit))
}

/// `‖M(θ)x − λx‖₂ / max(1, ‖x‖₂ · maxabs(M(θ)))`, computed from `K` and `L`.
pub fn residual(k: &DenseMatrix, l: &DenseMatrix, theta: f64, lambda: f64, x: &[f64]) -> Result<f64> {
    let mx = homotopy_apply(k, l, theta, x)?;
    let diff = mx
        .iter()
        .zip(x)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = homotopy_matrix(k, l, theta)?.max_abs();
    Ok(diff / (norm2(x) * scale).max(1.0))
}

/// Log-linear least-squares fit of `c_r` over the last `window` orders,
/// returning `exp(−slope)`. Orders whose magnitude is below
/// [`UNDERFLOW_FLOOR`] are skipped; if fewer than two remain the tail is taken
/// as identically zero and `f64::INFINITY` is returned.
pub fn estimate_radius(coeffs: &SeriesCoefficients, i: usize, window: usize) -> Result<f64> {
    let order = coeffs.order();
    if window < 3 || order < window + 2 {
        return Err(Error::InsufficientOrder { order, window });
    }
    let points: Vec<(f64, f64)> = (order + 1 - window..=order)
        .filter_map(|r| {
            let c = coeffs.magnitude(i, r);
            (c > UNDERFLOW_FLOOR).then(|| (r as f64, c.ln()))
        })
        .collect();
    if points.len() < 2 {
        return Ok(f64::INFINITY);
    }
    let count = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / count;
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), &(x, y)| {
        (sxy + (x - mean_x) * (y - mean_y), sxx + (x - mean_x).powi(2))
    });
    Ok((-(sxy / sxx)).exp())
}

/// Geometric bound on the discarded tail at `θ`:
/// `c_R θ^R · q / (1 − q)` with `q = θ / radius`. Infinite outside the disk.
pub fn tail_estimate(coeffs: &SeriesCoefficients, i: usize, theta: f64, radius: f64) -> f64 {
    let theta = theta.abs();
    if theta >= radius {
        return f64::INFINITY;
    }
    let order = coeffs.order();
    let last = coeffs.magnitude(i, order);
    if last == 0.0 || theta == 0.0 {
        return 0.0;
    }
    let q = theta / radius;
    last * theta.powi(order as i32) * q / (1.0 - q)
}

/// Evaluates one eigen-index of precomputed coefficients at `θ`.
pub fn evaluate_index(
    problem: &HomotopyProblem,
    coeffs: &SeriesCoefficients,
    i: usize,
    theta: f64,
    opts: &SolveOptions,
) -> Result<EigenpairResult> {
    let window = opts.effective_window()?;
    let lambda = eval_lambda(coeffs, i, theta);
    let (raw, unit) = eval_eigenvector(coeffs, problem.basis(), i, theta)?;
    let res = residual(problem.k(), problem.l(), theta, lambda, &unit)?;
    let radius = estimate_radius(coeffs, i, window)?;
    let tail = tail_estimate(coeffs, i, theta, radius) / lambda.abs().max(1.0);
    let converged = lambda.is_finite() && res.is_finite() && radius > theta.abs() && tail <= opts.convergence_tol;
    Ok(EigenpairResult {
        index: i,
        theta,
        lambda,
        lambda_coefficients: coeffs.lambda_coefficients(i).to_vec(),
        vector: unit,
        raw_gauge_vector: raw,
        residual: res,
        radius_estimate: radius,
        tail_estimate: tail,
        converged,
    })
}

/// Computes coefficients to `opts.order` and evaluates every eigenpair at `θ`.
pub fn solve_at(problem: &HomotopyProblem, theta: f64, opts: &SolveOptions) -> Result<Vec<EigenpairResult>> {
    if !theta.is_finite() {
        return Err(Error::InvalidArgument(format!("theta must be finite, got {theta}")));
    }
    opts.effective_window()?;
    let coeffs = compute_coefficients(problem, opts.order)?;
    (0..problem.dim())
        .map(|i| evaluate_index(problem, &coeffs, i, theta, opts))
        .collect()
}

/// Eigenpairs of `L`: the series evaluated at `θ = 1`.
pub fn solve_at_one(problem: &HomotopyProblem, opts: &SolveOptions) -> Result<Vec<EigenpairResult>> {
    solve_at(problem, 1.0, opts)
}
