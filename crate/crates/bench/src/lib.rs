//! Benchmark harness for the `sylten-core` solvers: builds gallery problems, runs
//! solver grids and writes summary tables plus per-run convergence histories.

mod output;

pub use output::{emit_history, emit_summary, history_file_name, write_gnuplot_script};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use sylten_core::gallery::{build_example, random_consistent_instance, Conditioning, Example, ProblemInstance};
use sylten_core::nelder_mead::NelderMeadConfig;
use sylten_core::nkp::{fit_nkp, PreconditionedOperator};
use sylten_core::solvers::{
    solve_tbicor_monitored, solve_tcors_monitored, solve_tlb_monitored, HistoryEntry, SolveMonitor,
};
use sylten_core::{DenseTensor, LinearOperator, Shape, SolveConfig, SolveStatus};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Solver(#[from] sylten_core::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SolverKind {
    Tlb,
    Tbicor,
    Tcors,
    Ptlb,
    Ptbicor,
    Ptcors,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::Tlb,
        SolverKind::Tbicor,
        SolverKind::Tcors,
        SolverKind::Ptlb,
        SolverKind::Ptbicor,
        SolverKind::Ptcors,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Tlb => "tlb",
            SolverKind::Tbicor => "tbicor",
            SolverKind::Tcors => "tcors",
            SolverKind::Ptlb => "ptlb",
            SolverKind::Ptbicor => "ptbicor",
            SolverKind::Ptcors => "ptcors",
        }
    }

    pub fn is_preconditioned(self) -> bool {
        matches!(self, SolverKind::Ptlb | SolverKind::Ptbicor | SolverKind::Ptcors)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| BenchError::Config(format!("unknown solver `{s}`")))
    }
}

/// One problem of a benchmark grid.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Gallery(Example),
    Random { shape: Vec<usize>, seed: u64 },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<ProblemInstance> {
        Ok(match self {
            ProblemSpec::Gallery(e) => build_example(e)?,
            ProblemSpec::Random { shape, seed } => {
                random_consistent_instance(&Shape::new(shape.clone())?, *seed, Conditioning::WellPosed)?
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub problems: Vec<ProblemSpec>,
    pub solvers: Vec<SolverKind>,
    pub tol: f64,
    /// `None` keeps the solver default of ten times the number of unknowns.
    pub max_iters: Option<usize>,
    pub optimizer: NelderMeadConfig,
    /// Directory for the summary and history files; `None` writes nothing.
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// Constant fill of the initial guess.
    pub x0_fill: f64,
    /// Writes zero in every timing column so reruns are byte-identical.
    pub deterministic: bool,
    pub gnuplot: bool,
    /// Worker cap; `None` reads `SYLTEN_THREADS`, then the available parallelism.
    pub threads: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            problems: vec![ProblemSpec::Gallery(Example::poisson3d())],
            solvers: SolverKind::ALL.to_vec(),
            tol: 1e-10,
            max_iters: None,
            optimizer: NelderMeadConfig::default(),
            out: None,
            format: OutputFormat::Csv,
            x0_fill: 0.0,
            deterministic: false,
            gnuplot: false,
            threads: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(BenchError::Config("no solver selected".into()));
        }
        if self.problems.is_empty() {
            return Err(BenchError::Config("no problem selected".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(BenchError::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iters == Some(0) {
            return Err(BenchError::Config("max_iters must be at least 1".into()));
        }
        if !self.x0_fill.is_finite() {
            return Err(BenchError::Config("x0 fill must be finite".into()));
        }
        self.optimizer.validate()?;
        Ok(())
    }

    fn worker_count(&self, jobs: usize) -> usize {
        let cap = self
            .threads
            .or_else(|| std::env::var("SYLTEN_THREADS").ok().and_then(|v| v.trim().parse().ok()))
            .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()));
        cap.clamp(1, jobs.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub problem: String,
    pub solver: SolverKind,
    pub status: SolveStatus,
    pub iterations: usize,
    pub final_rel_error: f64,
    /// Includes the preconditioner fit for the preconditioned solvers.
    pub wall_ms: f64,
    pub history: Vec<HistoryEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutcome {
    pub records: Vec<BenchRecord>,
    pub files: Vec<PathBuf>,
}

impl BenchOutcome {
    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.status.is_converged())
    }
}

struct Clock(Instant);

impl SolveMonitor for Clock {
    fn elapsed_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

fn run_one(inst: &ProblemInstance, solver: SolverKind, cfg: &BenchConfig) -> Result<BenchRecord> {
    let mut scfg = SolveConfig::default().with_tol(cfg.tol).with_exact(inst.exact.clone());
    scfg.max_iters = cfg.max_iters;
    let x0 = DenseTensor::filled(inst.op.shape().clone(), cfg.x0_fill);
    let mut clock = Clock(Instant::now());

    let report = if solver.is_preconditioned() {
        let pre = fit_nkp(&inst.op, &cfg.optimizer)?;
        let pop = PreconditionedOperator::new(&inst.op, &pre)?;
        let d = pre.precondition_rhs(&inst.rhs)?;
        dispatch(solver, &pop, &d, &x0, &scfg, &mut clock)?
    } else {
        dispatch(solver, &inst.op, &inst.rhs, &x0, &scfg, &mut clock)?
    };
    let mut wall_ms = clock.elapsed_ms();
    let mut history = report.history;
    if cfg.deterministic {
        wall_ms = 0.0;
        history.iter_mut().for_each(|h| h.elapsed_ms = 0.0);
    }
    Ok(BenchRecord {
        problem: inst.label.clone(),
        solver,
        status: report.status,
        iterations: report.iterations,
        final_rel_error: report.final_metric,
        wall_ms,
        history,
    })
}

fn dispatch<O: LinearOperator>(
    solver: SolverKind,
    op: &O,
    d: &DenseTensor,
    x0: &DenseTensor,
    cfg: &SolveConfig,
    monitor: &mut dyn SolveMonitor,
) -> sylten_core::Result<sylten_core::SolveReport> {
    match solver {
        SolverKind::Tlb | SolverKind::Ptlb => solve_tlb_monitored(op, d, x0, cfg, monitor),
        SolverKind::Tbicor | SolverKind::Ptbicor => solve_tbicor_monitored(op, d, x0, cfg, monitor),
        SolverKind::Tcors | SolverKind::Ptcors => solve_tcors_monitored(op, d, x0, cfg, monitor),
    }
}

/// Runs every (problem, solver) pair from `X₀ = x0_fill` and writes the results.
///
/// Records come back sorted by problem label, then solver. A breakdown is a record with
/// a breakdown status, not an error.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchOutcome> {
    cfg.validate()?;
    let instances: Vec<ProblemInstance> = cfg.problems.iter().map(ProblemSpec::build).collect::<Result<_>>()?;
    let mut solvers = cfg.solvers.clone();
    solvers.sort();
    solvers.dedup();
    let jobs: Vec<(usize, SolverKind)> =
        (0..instances.len()).flat_map(|p| solvers.iter().map(move |&s| (p, s))).collect();

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Result<BenchRecord>)>> = Mutex::new(Vec::with_capacity(jobs.len()));
    thread::scope(|scope| {
        for _ in 0..cfg.worker_count(jobs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(p, s)) = jobs.get(i) else { break };
                let rec = run_one(&instances[p], s, cfg);
                results.lock().expect("worker panicked").push((i, rec));
            });
        }
    });
    let mut results = results.into_inner().expect("worker panicked");
    results.sort_by_key(|(i, _)| *i);
    let mut records: Vec<BenchRecord> = results.into_iter().map(|(_, r)| r).collect::<Result<_>>()?;
    records.sort_by(|a, b| a.problem.cmp(&b.problem).then(a.solver.cmp(&b.solver)));

    let files = match &cfg.out {
        Some(dir) => write_outputs(dir, &records, cfg)?,
        None => Vec::new(),
    };
    Ok(BenchOutcome { records, files })
}

fn write_outputs(dir: &Path, records: &[BenchRecord], cfg: &BenchConfig) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| BenchError::Io { path: dir.to_path_buf(), source })?;
    let mut files = Vec::new();
    for r in records {
        let path = dir.join(history_file_name(&r.problem, r.solver));
        emit_history(&r.history, &path)?;
        files.push(path);
    }
    let summary = dir.join(match cfg.format {
        OutputFormat::Csv => "summary.csv",
        OutputFormat::Json => "summary.json",
    });
    emit_summary(records, cfg.format, &summary)?;
    files.push(summary);
    if cfg.gnuplot {
        let path = dir.join("plot.gp");
        write_gnuplot_script(records, &path)?;
        files.push(path);
    }
    Ok(files)
}
