//! Staged homotopy and parameter sweeps.
//!
//! A stage starting at `θ_s` runs the series from an eigenbasis of
//! `K_s = θ_s L + (1 − θ_s) K` towards `L` with a local parameter `t`, using
//! `(1 − t) K_s + t L = M(θ_s + t (1 − θ_s))`. Evaluating at
//! `t_s = (θ_{s+1} − θ_s) / (1 − θ_s)` lands on `θ_{s+1}`.
//!
//! Later stages take the previous stage's eigenvectors, re-orthonormalize
//! them, and refresh the eigenvalues as Rayleigh quotients against `K_s`. The
//! stage then starts from the operator `Σ μ_i v_i v_iᵀ`, which has that basis
//! exactly and differs from `K_s` only by the previous stage's error. Every
//! stage still ends at `L`, so only the last stage decides convergence.
//!
//! Staging is restricted to symmetric `K` and `L`.

use crate::error::{Error, Result};
use crate::eval::{
    estimate_radius, eval_eigenvector, eval_lambda, evaluate_index, residual, EigenpairResult, SolveOptions,
};
use crate::operator::{dot, homotopy_matrix, norm2, DenseMatrix, EigenBasis, HomotopyProblem, Tolerances};
use crate::oracle::{combo_eigen, jacobi_eigen, match_pairs, DEFAULT_JACOBI_TOL, DEFAULT_MAX_SWEEPS};
use crate::series::{compute_coefficients, SeriesCoefficients};

/// Smallest pivot accepted by modified Gram–Schmidt.
pub const MIN_PIVOT: f64 = 1e-8;
/// Smallest `θ` step `auto_stage` will take before giving up.
pub const MIN_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct StagePlan {
    breakpoints: Vec<f64>,
    pub opts: SolveOptions,
}

impl StagePlan {
    /// Breakpoints must start at 0, end at 1 and increase strictly.
    pub fn new(breakpoints: Vec<f64>, opts: SolveOptions) -> Result<Self> {
        let ok = breakpoints.len() >= 2
            && breakpoints[0] == 0.0
            && *breakpoints.last().unwrap() == 1.0
            && breakpoints.windows(2).all(|w| w[1] > w[0]);
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "stage breakpoints must increase strictly from 0 to 1, got {breakpoints:?}"
            )));
        }
        Ok(StagePlan { breakpoints, opts })
    }

    pub fn uniform(stages: usize, opts: SolveOptions) -> Result<Self> {
        if stages == 0 {
            return Err(Error::InvalidArgument("stage count must be at least 1".into()));
        }
        let mut points: Vec<f64> = (0..stages).map(|s| s as f64 / stages as f64).collect();
        points.push(1.0);
        Self::new(points, opts)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn stages(&self) -> usize {
        self.breakpoints.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: usize,
    pub theta_start: f64,
    pub theta_end: f64,
    pub local_target: f64,
    pub min_radius: f64,
    pub all_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StagedSolution {
    /// Eigenpairs of `L` (θ = 1), indexed by the eigen-index of `K`'s basis.
    pub results: Vec<EigenpairResult>,
    pub stages: Vec<StageReport>,
}

/// Modified Gram–Schmidt in index order.
pub fn reorthonormalize(vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        let mut w = v.clone();
        let scale = norm2(&w);
        for q in &out {
            let c = dot(&w, q);
            w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
        let pivot = norm2(&w) / scale;
        if pivot.is_nan() || pivot < MIN_PIVOT {
            return Err(Error::ReorthonormalizationFailure { index, pivot });
        }
        let nw = norm2(&w);
        w.iter_mut().for_each(|x| *x /= nw);
        out.push(w);
    }
    Ok(out)
}

/// Eigenbasis for a later stage: orthonormalized `vectors` with Rayleigh
/// quotients against `k_stage`, together with the operator they diagonalize.
pub fn rebase(k_stage: &DenseMatrix, vectors: &[Vec<f64>], tol: &Tolerances) -> Result<(DenseMatrix, EigenBasis)> {
    let q = reorthonormalize(vectors)?;
    let values = q
        .iter()
        .map(|v| Ok(dot(&k_stage.mul_vec(v)?, v)))
        .collect::<Result<Vec<_>>>()?;
    let k_tilde = DenseMatrix::from_spectral(&q, &values)?;
    let basis = EigenBasis::with_values(&k_tilde, q, values, tol)?;
    Ok((k_tilde, basis))
}

struct StageOutcome {
    problem: HomotopyProblem,
    coeffs: SeriesCoefficients,
}

fn require_symmetric_pair(k: &DenseMatrix, l: &DenseMatrix, tol: &Tolerances) -> Result<()> {
    k.require_symmetric(tol.sym)?;
    l.require_symmetric(tol.sym)?;
    if k.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            context: "K and L dimensions".into(),
            expected: k.dim(),
            found: l.dim(),
        });
    }
    Ok(())
}

fn initial_problem(k: &DenseMatrix, l: &DenseMatrix, tol: &Tolerances) -> Result<HomotopyProblem> {
    let dec = jacobi_eigen(k, DEFAULT_JACOBI_TOL, DEFAULT_MAX_SWEEPS, tol.sym)?;
    let basis = EigenBasis::from_operator(k, dec.vectors, tol)?;
    HomotopyProblem::new(k.clone(), l.clone(), basis, *tol)
}

fn stage_problem(
    k: &DenseMatrix,
    l: &DenseMatrix,
    theta_start: f64,
    previous: Option<&[Vec<f64>]>,
    tol: &Tolerances,
) -> Result<HomotopyProblem> {
    match previous {
        None => initial_problem(k, l, tol),
        Some(vectors) => {
            let k_stage = homotopy_matrix(k, l, theta_start)?;
            let (k_tilde, basis) = rebase(&k_stage, vectors, tol)?;
            HomotopyProblem::new(k_tilde, l.clone(), basis, *tol)
        }
    }
}

fn run_stage(
    k: &DenseMatrix,
    l: &DenseMatrix,
    theta_start: f64,
    previous: Option<&[Vec<f64>]>,
    opts: &SolveOptions,
    tol: &Tolerances,
) -> Result<StageOutcome> {
    let problem = stage_problem(k, l, theta_start, previous, tol)?;
    let coeffs = compute_coefficients(&problem, opts.order)?;
    Ok(StageOutcome { problem, coeffs })
}

fn in_stage<T>(stage: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage,
        source: Box::new(e),
    })
}

/// Runs `plan` from `K` to `L`. Results are checked against `L` directly.
pub fn staged_solve(k: &DenseMatrix, l: &DenseMatrix, plan: &StagePlan, tol: &Tolerances) -> Result<StagedSolution> {
    require_symmetric_pair(k, l, tol)?;
    let opts = plan.opts;
    opts.effective_window()?;

    let mut carried: Option<Vec<Vec<f64>>> = None;
    let mut reports = Vec::with_capacity(plan.stages());
    let mut results = Vec::new();

    for (stage, w) in plan.breakpoints().windows(2).enumerate() {
        let (start, end) = (w[0], w[1]);
        let last = stage + 1 == plan.stages();
        let target = if last { 1.0 } else { (end - start) / (1.0 - start) };

        let outcome = in_stage(stage, run_stage(k, l, start, carried.as_deref(), &opts, tol))?;
        let stage_results = in_stage(
            stage,
            (0..outcome.problem.dim())
                .map(|i| evaluate_index(&outcome.problem, &outcome.coeffs, i, target, &opts))
                .collect::<Result<Vec<_>>>(),
        )?;

        reports.push(StageReport {
            stage,
            theta_start: start,
            theta_end: end,
            local_target: target,
            min_radius: stage_results
                .iter()
                .map(|r| r.radius_estimate)
                .fold(f64::INFINITY, f64::min),
            all_converged: stage_results.iter().all(|r| r.converged),
        });
        carried = Some(stage_results.iter().map(|r| r.vector.clone()).collect());
        results = stage_results;
    }

    Ok(StagedSolution {
        results,
        stages: reports,
    })
}

/// Chooses breakpoints adaptively: from `θ_s`, step to
/// `min(1, θ_s + safety · ρ · (1 − θ_s))` with `ρ` the smallest estimated
/// radius of the stage's series.
pub fn auto_stage(
    k: &DenseMatrix,
    l: &DenseMatrix,
    opts: &SolveOptions,
    safety: f64,
    tol: &Tolerances,
) -> Result<StagePlan> {
    if !(safety > 0.0 && safety < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "safety must lie in (0, 1), got {safety}"
        )));
    }
    require_symmetric_pair(k, l, tol)?;
    let window = opts.effective_window()?;

    let mut breakpoints = vec![0.0];
    let mut carried: Option<Vec<Vec<f64>>> = None;
    let mut theta = 0.0;
    while theta < 1.0 {
        let stage = breakpoints.len() - 1;
        let outcome = in_stage(stage, run_stage(k, l, theta, carried.as_deref(), opts, tol))?;
        let n = outcome.problem.dim();
        let radius = in_stage(
            stage,
            (0..n)
                .map(|i| estimate_radius(&outcome.coeffs, i, window))
                .collect::<Result<Vec<_>>>(),
        )?
        .into_iter()
        .fold(f64::INFINITY, f64::min);

        let proposed = theta + safety * radius * (1.0 - theta);
        let next = if proposed >= 1.0 { 1.0 } else { proposed };
        if next < 1.0 && next - theta < MIN_STEP {
            return Err(Error::Stall {
                theta,
                step: next - theta,
            });
        }
        breakpoints.push(next);
        if next < 1.0 {
            let target = (next - theta) / (1.0 - theta);
            let vectors = in_stage(
                stage,
                (0..n)
                    .map(|i| eval_eigenvector(&outcome.coeffs, outcome.problem.basis(), i, target).map(|v| v.1))
                    .collect::<Result<Vec<_>>>(),
            )?;
            carried = Some(vectors);
        }
        theta = next;
    }
    StagePlan::new(breakpoints, *opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub theta: f64,
    /// 0-based eigen-index.
    pub index: usize,
    pub lambda_series: f64,
    pub lambda_oracle: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryTable {
    pub rows: Vec<TrajectoryRow>,
}

/// Evaluates every eigenpath on `grid`, optionally alongside the oracle
/// spectrum of `M(θ)` matched by eigenvector overlap.
pub fn sweep(problem: &HomotopyProblem, grid: &[f64], order: usize, with_oracle: bool) -> Result<TrajectoryTable> {
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "grid must be finite and sorted ascending".into(),
        ));
    }
    let coeffs = compute_coefficients(problem, order)?;
    let n = problem.dim();
    let mut rows = Vec::with_capacity(grid.len() * n);
    for &theta in grid {
        let mut lambdas = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n);
        for i in 0..n {
            lambdas.push(eval_lambda(&coeffs, i, theta));
            vectors.push(eval_eigenvector(&coeffs, problem.basis(), i, theta)?.1);
        }
        let oracle = if with_oracle {
            let dec = combo_eigen(problem.k(), problem.l(), theta)?;
            let m = match_pairs(&vectors, &dec)?;
            Some(m.permutation.iter().map(|&j| dec.values[j]).collect::<Vec<_>>())
        } else {
            None
        };
        for i in 0..n {
            rows.push(TrajectoryRow {
                theta,
                index: i,
                lambda_series: lambdas[i],
                lambda_oracle: oracle.as_ref().map(|o| o[i]),
                residual: residual(problem.k(), problem.l(), theta, lambdas[i], &vectors[i])?,
            });
        }
    }
    Ok(TrajectoryTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::solve_at_one;
    use crate::operator::validate_orthonormal_basis;
    use crate::oracle::{problem_from_symmetric, symmetric_eigen};

    fn canonical() -> (DenseMatrix, DenseMatrix) {
        (
            DenseMatrix::diag(&[1.0, 3.0]).unwrap(),
            DenseMatrix::from_rows(&[vec![1.0, 0.1], vec![0.1, 3.0]]).unwrap(),
        )
    }

    fn divergent() -> (DenseMatrix, DenseMatrix) {
        (
            DenseMatrix::diag(&[0.0, 1.0]).unwrap(),
            DenseMatrix::from_rows(&[vec![0.0, 10.0], vec![10.0, 1.0]]).unwrap(),
        )
    }

    #[test]
    fn plan_validation() {
        let o = SolveOptions::default();
        assert!(StagePlan::new(vec![0.0, 0.5, 1.0], o).is_ok());
        assert!(StagePlan::new(vec![0.0, 0.5, 0.5, 1.0], o).is_err());
        assert!(StagePlan::new(vec![0.1, 1.0], o).is_err());
        assert!(StagePlan::new(vec![0.0, 0.9], o).is_err());
        assert!(StagePlan::uniform(0, o).is_err());
        assert_eq!(
            StagePlan::uniform(4, o).unwrap().breakpoints(),
            &[0.0, 0.25, 0.5, 0.75, 1.0]
        );
    }

    #[test]
    fn single_stage_matches_plain_solve() {
        let (k, l) = canonical();
        let opts = SolveOptions::default();
        let plan = StagePlan::uniform(1, opts).unwrap();
        let staged = staged_solve(&k, &l, &plan, &Tolerances::default()).unwrap();
        let plain = solve_at_one(&problem_from_symmetric(k, l, Tolerances::default()).unwrap(), &opts).unwrap();
        assert_eq!(staged.results, plain);
    }

    #[test]
    fn uniform_staging_recovers_divergent_pair() {
        let (k, l) = divergent();
        let plan = StagePlan::uniform(16, SolveOptions::with_order(12)).unwrap();
        let sol = staged_solve(&k, &l, &plan, &Tolerances::default()).unwrap();
        let oracle = symmetric_eigen(&l).unwrap();
        let m = match_pairs(
            &sol.results.iter().map(|r| r.vector.clone()).collect::<Vec<_>>(),
            &oracle,
        )
        .unwrap();
        for r in &sol.results {
            assert!(r.converged, "{r:?}");
            assert!((r.lambda - oracle.values[m.permutation[r.index]]).abs() < 1e-6);
        }
    }

    #[test]
    fn unperturbed_staging_is_exact() {
        let k = DenseMatrix::from_rows(&[vec![2.0, 0.3, 0.0], vec![0.3, 1.0, 0.1], vec![0.0, 0.1, -1.0]]).unwrap();
        let plan = StagePlan::uniform(3, SolveOptions::default()).unwrap();
        let sol = staged_solve(&k, &k, &plan, &Tolerances::default()).unwrap();
        let oracle = symmetric_eigen(&k).unwrap();
        assert!(sol.stages.iter().all(|s| s.all_converged));
        for r in &sol.results {
            assert!((r.lambda - oracle.values[r.index]).abs() < 1e-13);
            assert!(r.residual < 1e-14);
        }
    }

    #[test]
    fn staging_rejects_asymmetric_operators() {
        let k = DenseMatrix::diag(&[0.0, 1.0]).unwrap();
        let l = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let plan = StagePlan::uniform(2, SolveOptions::default()).unwrap();
        assert!(matches!(
            staged_solve(&k, &l, &plan, &Tolerances::default()),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn local_reparameterization_identity() {
        let (k, l) = divergent();
        for &(theta_s, t) in &[(0.3, 0.1), (0.0, 0.77), (0.9, 0.5), (0.123, 1.0)] {
            let k_s = homotopy_matrix(&k, &l, theta_s).unwrap();
            let local = l.lincomb(t, &k_s, 1.0 - t).unwrap();
            let global = homotopy_matrix(&k, &l, theta_s + t * (1.0 - theta_s)).unwrap();
            let scale = k.max_abs().max(l.max_abs());
            assert!(local.sub(&global).unwrap().max_abs() <= 1e-14 * scale);
        }
    }

    #[test]
    fn rebased_basis_is_orthonormal() {
        let vs = vec![vec![1.0, 0.1, 0.0], vec![0.05, 1.0, 0.2], vec![0.0, 0.3, 1.0]];
        let q = reorthonormalize(&vs).unwrap();
        validate_orthonormal_basis(&q, 1e-10).unwrap();
        assert!(matches!(
            reorthonormalize(&[vec![1.0, 0.0], vec![1.0, 1e-12]]),
            Err(Error::ReorthonormalizationFailure { index: 1, .. })
        ));
    }

    #[test]
    fn auto_stage_examples() {
        let tol = Tolerances::default();
        let opts = SolveOptions::default();
        let k = DenseMatrix::diag(&[1.0, 3.0]).unwrap();
        assert_eq!(auto_stage(&k, &k, &opts, 0.5, &tol).unwrap().breakpoints(), &[0.0, 1.0]);

        let (k, l) = canonical();
        assert_eq!(auto_stage(&k, &l, &opts, 0.5, &tol).unwrap().stages(), 1);

        let (k, l) = divergent();
        let plan = auto_stage(&k, &l, &opts, 0.5, &tol).unwrap();
        assert!(plan.stages() >= 2);
        assert!(plan.breakpoints()[1] < 0.05);
        assert!(auto_stage(&k, &l, &opts, 1.0, &tol).is_err());
    }

    #[test]
    fn stage_errors_carry_the_stage_index() {
        let k = DenseMatrix::diag(&[1.0, 1.0, 2.0]).unwrap();
        let l = DenseMatrix::identity(3);
        let plan = StagePlan::uniform(2, SolveOptions::default()).unwrap();
        match staged_solve(&k, &l, &plan, &Tolerances::default()) {
            Err(Error::Stage { stage: 0, source }) => {
                assert!(matches!(*source, Error::DegenerateBaseSpectrum { i: 0, k: 1, .. }))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sweep_examples() {
        let (k, l) = canonical();
        let p = problem_from_symmetric(k.clone(), l, Tolerances::default()).unwrap();
        let t = sweep(&p, &[0.0], 20, false).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].lambda_series, 1.0);
        assert_eq!(t.rows[1].lambda_series, 3.0);
        assert!(t.rows.iter().all(|r| r.residual <= 1e-13 && r.lambda_oracle.is_none()));

        let t = sweep(&p, &[0.0, 0.5, 1.0], 20, true).unwrap();
        assert_eq!(t.rows.len(), 6);
        for r in &t.rows {
            assert!((r.lambda_series - r.lambda_oracle.unwrap()).abs() < 1e-9);
        }

        let flat = problem_from_symmetric(k.clone(), k, Tolerances::default()).unwrap();
        let grid: Vec<f64> = (0..=10).map(|s| s as f64 / 10.0).collect();
        let t = sweep(&flat, &grid, 20, false).unwrap();
        assert_eq!(t.rows.len(), 22);
        assert!(t.rows.iter().all(|r| r.lambda_series == [1.0, 3.0][r.index]));

        assert!(sweep(&p, &[0.5, 0.0], 5, false).is_err());
    }
}
