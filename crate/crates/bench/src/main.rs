use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use sylten_bench::{run_benchmark, BenchConfig, OutputFormat, ProblemSpec, SolverKind};
use sylten_core::gallery::Example;
use sylten_core::nelder_mead::NelderMeadConfig;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Problem {
    Poisson3d,
    Convdiff,
    Fdm2d,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Runs the Sylvester tensor solvers on gallery problems and writes convergence data.
#[derive(Debug, Parser)]
#[command(name = "sylten", version)]
struct Cli {
    #[arg(long, value_enum, default_value = "poisson3d")]
    problem: Problem,

    /// Comma-separated subset of tlb,tbicor,tcors,ptlb,ptbicor,ptcors.
    #[arg(long, value_delimiter = ',', default_value = "tlb,tbicor,tcors,ptlb,ptbicor,ptcors")]
    solvers: Vec<SolverKind>,

    /// Relative-error tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,

    /// Iteration cap per run; defaults to ten times the number of unknowns.
    #[arg(long)]
    max_iters: Option<usize>,

    /// Convection coefficients for convdiff; a list runs one problem per value.
    #[arg(long = "v", value_delimiter = ',', default_value = "1")]
    v: Vec<f64>,

    /// Reaction coefficients `c1,c2,c3` for convdiff; repeat the flag for a grid.
    #[arg(long = "c", value_parser = parse_triple)]
    c: Vec<[f64; 3]>,

    /// Grid size of each convdiff factor.
    #[arg(long, default_value_t = 10)]
    p: usize,

    /// Tensor shape for random problems.
    #[arg(long, value_delimiter = ',', default_value = "2,2,2")]
    shape: Vec<usize>,

    /// Seed for random problems.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output directory.
    #[arg(long, default_value = "sylten-out")]
    out: PathBuf,

    #[arg(long, value_enum, default_value = "csv")]
    format: Format,

    /// Exit with status 2 when any run fails to converge.
    #[arg(long)]
    strict: bool,

    /// Write zeros in the timing columns so reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,

    /// Also write `plot.gp` for the histories.
    #[arg(long)]
    gnuplot_script: bool,

    /// Constant value of every entry of the initial guess.
    #[arg(long, default_value_t = 0.0)]
    x0_fill: f64,

    /// Evaluation budget for the preconditioner fit; defaults to 2000 per unknown.
    #[arg(long)]
    fit_evals: Option<usize>,
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let vals: Vec<f64> =
        s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"))).collect::<Result<_, _>>()?;
    vals.try_into().map_err(|v: Vec<f64>| format!("expected three values, got {}", v.len()))
}

impl Cli {
    fn problems(&self) -> Vec<ProblemSpec> {
        match self.problem {
            Problem::Poisson3d => vec![ProblemSpec::Gallery(Example::poisson3d())],
            Problem::Fdm2d => vec![ProblemSpec::Gallery(Example::fdm2d())],
            Problem::Random => vec![ProblemSpec::Random { shape: self.shape.clone(), seed: self.seed }],
            Problem::Convdiff => {
                let cs = if self.c.is_empty() { vec![[1.0; 3]] } else { self.c.clone() };
                self.v
                    .iter()
                    .flat_map(|&v| {
                        cs.iter().map(move |c| {
                            ProblemSpec::Gallery(Example::ConvectionDiffusion { p: self.p, v, c: c.to_vec() })
                        })
                    })
                    .collect()
            }
        }
    }

    fn config(&self) -> BenchConfig {
        BenchConfig {
            problems: self.problems(),
            solvers: self.solvers.clone(),
            tol: self.tol,
            max_iters: self.max_iters,
            optimizer: NelderMeadConfig { max_evals: self.fit_evals, ..Default::default() },
            out: Some(self.out.clone()),
            format: match self.format {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            },
            x0_fill: self.x0_fill,
            deterministic: self.deterministic,
            gnuplot: self.gnuplot_script,
            threads: None,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match run_benchmark(&cli.config()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let width = outcome.records.iter().map(|r| r.problem.len()).max().unwrap_or(0);
    for r in &outcome.records {
        println!(
            "{:width$}  {:8} {:>5} it  err {:.3e}  {:>9.1} ms  {}",
            r.problem,
            r.solver.name(),
            r.iterations,
            r.final_rel_error,
            r.wall_ms,
            r.status
        );
    }
    println!("wrote {} files to {}", outcome.files.len(), cli.out.display());
    if cli.strict && !outcome.all_converged() {
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
