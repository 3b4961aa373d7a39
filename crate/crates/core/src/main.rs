use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use homotopy_eigen::continuation::{auto_stage, staged_solve, sweep, StagePlan};
use homotopy_eigen::eval::{solve_at, EigenpairResult, SolveOptions};
use homotopy_eigen::io::matrix_market::{parse_market, parse_matrix_market};
use homotopy_eigen::io::report::{write_coefficient_report, Meta, OracleComparison, Report, StageEntry, ToleranceEcho};
use homotopy_eigen::io::trajectory::write_trajectory_csv;
use homotopy_eigen::operator::norm2;
use homotopy_eigen::oracle::{combo_eigen, match_pairs};
use homotopy_eigen::{
    compute_coefficients, problem_from_symmetric, DenseMatrix, EigenBasis, Error, HomotopyProblem, Result, Tolerances,
};

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;

/// Eigenpairs of L from the eigenbasis of a nearby operator K, by homotopy
/// power series.
#[derive(Parser, Debug)]
#[command(name = "homotopy-eigen", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the series at theta (default 1) and report eigenpairs.
    Solve(Common),
    /// Dump the a and b coefficient tensors.
    Coeffs(Common),
    /// Write a CSV trajectory of the eigenvalue paths over a theta grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated ascending theta values.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        /// Number of uniform grid points on [0, 1] when --grid is absent.
        #[arg(long, default_value_t = 11)]
        points: usize,
    },
    /// Compare the series against the Jacobi oracle at theta.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Maximum eigenvalue disagreement accepted.
        #[arg(long, default_value_t = 1e-8)]
        tol_agree: f64,
    },
    /// Staged homotopy with re-basing between stages.
    Stage {
        #[command(flatten)]
        common: Common,
        /// Number of uniform stages, or "auto".
        #[arg(long, default_value = "4")]
        stages: String,
        /// Fraction of the estimated radius taken per automatic stage.
        #[arg(long, default_value_t = 0.5)]
        safety: f64,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Matrix Market file for the solved operator K.
    #[arg(long = "k")]
    k: PathBuf,
    /// Matrix Market file for the target operator L.
    #[arg(long = "l")]
    l: PathBuf,
    /// Matrix Market array whose columns are an orthonormal eigenbasis of K.
    #[arg(long)]
    basis: Option<PathBuf>,
    /// Matrix Market array (n x 1) of the eigenvalues matching --basis.
    #[arg(long, requires = "basis")]
    basis_values: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    order: usize,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[arg(long, default_value_t = 8)]
    window: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol_gap: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol_ortho: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol_eig: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol_conv: f64,
    /// Attach oracle comparisons (symmetric K and L only).
    #[arg(long)]
    oracle: bool,
    /// Write output here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Common {
    fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::InvalidArgument("--order must be at least 1".into()));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidArgument("--theta must be finite".into()));
        }
        for (name, v) in [
            ("--tol-gap", self.tol_gap),
            ("--tol-ortho", self.tol_ortho),
            ("--tol-eig", self.tol_eig),
            ("--tol-conv", self.tol_conv),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances {
            ortho: self.tol_ortho,
            eig: self.tol_eig,
            gap: self.tol_gap,
            ..Tolerances::default()
        }
    }

    fn options(&self) -> SolveOptions {
        SolveOptions {
            order: self.order,
            convergence_tol: self.tol_conv,
            window: self.window,
        }
    }

    fn meta(&self, command: &str, dimension: usize) -> Meta {
        let tol = self.tolerances();
        let window = self.options().effective_window().unwrap_or(self.window);
        let mut meta = Meta::new(
            command,
            dimension,
            self.order,
            self.theta,
            window,
            ToleranceEcho {
                ortho: tol.ortho,
                eig: tol.eig,
                gap: tol.gap,
                convergence: self.tol_conv,
            },
        );
        meta.k_path = Some(self.k.display().to_string());
        meta.l_path = Some(self.l.display().to_string());
        meta.basis_path = self.basis.as_ref().map(|p| p.display().to_string());
        meta.with_oracle = self.oracle;
        meta
    }

    fn operators(&self) -> Result<(DenseMatrix, DenseMatrix)> {
        Ok((read_matrix(&self.k)?, read_matrix(&self.l)?))
    }

    fn problem(&self) -> Result<HomotopyProblem> {
        self.validate()?;
        let (k, l) = self.operators()?;
        let tol = self.tolerances();
        let Some(path) = &self.basis else {
            return problem_from_symmetric(k, l, tol);
        };
        let basis = parse_market(&fs::read_to_string(path)?)?;
        let vectors: Vec<Vec<f64>> = (0..basis.cols).map(|c| basis.column(c)).collect();
        let basis = match &self.basis_values {
            Some(vp) => {
                let vals = parse_market(&fs::read_to_string(vp)?)?;
                EigenBasis::with_values(&k, vectors, vals.values, &tol)?
            }
            None => EigenBasis::from_operator(&k, vectors, &tol)?,
        };
        HomotopyProblem::new(k, l, basis, tol)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.output {
            Some(path) => fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    parse_matrix_market(&fs::read_to_string(path)?)
}

fn exit_for(all_converged: bool) -> u8 {
    if all_converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

fn oracle_comparisons(
    problem: &HomotopyProblem,
    theta: f64,
    results: &[EigenpairResult],
) -> Result<Vec<OracleComparison>> {
    let dec = combo_eigen(problem.k(), problem.l(), theta)?;
    let vectors: Vec<Vec<f64>> = results.iter().map(|r| r.vector.clone()).collect();
    let m = match_pairs(&vectors, &dec)?;
    Ok(results
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let j = m.permutation[i];
            let diff: Vec<f64> = r.vector.iter().zip(&dec.vectors[j]).map(|(a, b)| a - b).collect();
            OracleComparison {
                lambda: dec.values[j],
                lambda_error: (r.lambda - dec.values[j]).abs(),
                eigenvector_distance: norm2(&diff),
                overlap: m.overlaps[i],
            }
        })
        .collect())
}

fn solve_report(common: &Common, command: &str) -> Result<(Report, HomotopyProblem)> {
    let problem = common.problem()?;
    let results = solve_at(&problem, common.theta, &common.options())?;
    let mut report = Report::new(&results, common.meta(command, problem.dim()));
    if common.oracle || command == "validate" {
        let cmp = oracle_comparisons(&problem, common.theta, &results)?;
        for (entry, c) in report.results.iter_mut().zip(cmp) {
            entry.oracle = Some(c);
        }
        report.meta.with_oracle = true;
    }
    Ok((report, problem))
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve(common) => {
            let (report, _) = solve_report(&common, "solve")?;
            common.emit(&report.to_json()?)?;
            Ok(exit_for(report.meta.all_converged))
        }
        Command::Coeffs(common) => {
            let problem = common.problem()?;
            let coeffs = compute_coefficients(&problem, common.order)?;
            common.emit(&write_coefficient_report(
                &coeffs,
                common.meta("coeffs", problem.dim()),
            )?)?;
            Ok(EXIT_OK)
        }
        Command::Sweep { common, grid, points } => {
            let grid = match grid {
                Some(g) => g,
                None if points == 0 => Vec::new(),
                None if points == 1 => vec![0.0],
                None => (0..points).map(|s| s as f64 / (points - 1) as f64).collect(),
            };
            let problem = common.problem()?;
            let table = sweep(&problem, &grid, common.order, common.oracle)?;
            common.emit(&write_trajectory_csv(&table))?;
            Ok(EXIT_OK)
        }
        Command::Validate { common, tol_agree } => {
            let (report, _) = solve_report(&common, "validate")?;
            common.emit(&report.to_json()?)?;
            let agree = report
                .results
                .iter()
                .all(|r| r.oracle.as_ref().is_some_and(|o| o.lambda_error <= tol_agree));
            Ok(exit_for(report.meta.all_converged && agree))
        }
        Command::Stage { common, stages, safety } => {
            common.validate()?;
            if common.basis.is_some() {
                return Err(Error::InvalidArgument(
                    "stage computes its own bases; --basis is not accepted".into(),
                ));
            }
            if common.theta != 1.0 {
                return Err(Error::InvalidArgument("stage always targets theta = 1".into()));
            }
            let (k, l) = common.operators()?;
            let tol = common.tolerances();
            let opts = common.options();
            let plan = if stages.eq_ignore_ascii_case("auto") {
                auto_stage(&k, &l, &opts, safety, &tol)?
            } else {
                let count: usize = stages.parse().map_err(|_| {
                    Error::InvalidArgument(format!("--stages must be a count or \"auto\", got {stages:?}"))
                })?;
                StagePlan::uniform(count, opts)?
            };
            let solution = staged_solve(&k, &l, &plan, &tol)?;
            let mut meta = common.meta("stage", k.dim());
            meta.stages = Some(if stages.eq_ignore_ascii_case("auto") {
                format!("auto:{}", plan.stages())
            } else {
                plan.stages().to_string()
            });
            let mut report = Report::new(&solution.results, meta);
            report.stages = Some(solution.stages.iter().map(StageEntry::from).collect());
            if common.oracle {
                let problem = problem_from_symmetric(k, l, tol)?;
                let cmp = oracle_comparisons(&problem, 1.0, &solution.results)?;
                for (entry, c) in report.results.iter_mut().zip(cmp) {
                    entry.oracle = Some(c);
                }
            }
            common.emit(&report.to_json()?)?;
            Ok(exit_for(report.meta.all_converged))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
