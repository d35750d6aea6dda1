use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sylten_core::solvers::HistoryEntry;

use crate::{BenchError, BenchRecord, OutputFormat, Result, SolverKind};

pub const SUMMARY_HEADER: [&str; 6] = ["problem", "solver", "status", "iterations", "final_rel_error", "wall_ms"];
pub const HISTORY_HEADER: [&str; 4] = ["iter", "rel_error", "rel_residual", "elapsed_ms"];

#[derive(Serialize)]
struct SummaryRow<'a> {
    problem: &'a str,
    solver: &'static str,
    status: String,
    iterations: usize,
    final_rel_error: f64,
    wall_ms: f64,
}

impl<'a> From<&'a BenchRecord> for SummaryRow<'a> {
    fn from(r: &'a BenchRecord) -> Self {
        SummaryRow {
            problem: &r.problem,
            solver: r.solver.name(),
            status: r.status.to_string(),
            iterations: r.iterations,
            final_rel_error: r.final_rel_error,
            wall_ms: r.wall_ms,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> BenchError + '_ {
    move |e| BenchError::Io { path: path.to_path_buf(), source: e.into() }
}

pub fn history_file_name(problem: &str, solver: SolverKind) -> String {
    format!("history_{problem}_{solver}.csv")
}

/// Writes the summary table. An empty record list gives a header-only CSV or `[]`.
pub fn emit_summary(records: &[BenchRecord], format: OutputFormat, path: &Path) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
            w.write_record(SUMMARY_HEADER).map_err(csv_err(path))?;
            for r in records {
                w.write_record([
                    r.problem.clone(),
                    r.solver.name().to_string(),
                    r.status.to_string(),
                    r.iterations.to_string(),
                    format!("{:e}", r.final_rel_error),
                    format!("{:.3}", r.wall_ms),
                ])
                .map_err(csv_err(path))?;
            }
            w.flush().map_err(io_err(path))
        }
        OutputFormat::Json => {
            let rows: Vec<SummaryRow> = records.iter().map(SummaryRow::from).collect();
            let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
            serde_json::to_writer_pretty(&mut w, &rows)
                .map_err(|e| BenchError::Io { path: path.to_path_buf(), source: e.into() })?;
            writeln!(w).and_then(|_| w.flush()).map_err(io_err(path))
        }
    }
}

/// One row per iterate, starting with `X₀`. A missing relative error is left blank.
pub fn emit_history(history: &[HistoryEntry], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(HISTORY_HEADER).map_err(csv_err(path))?;
    for h in history {
        w.write_record([
            h.iteration.to_string(),
            h.rel_error.map(|e| format!("{e:e}")).unwrap_or_default(),
            format!("{:e}", h.rel_residual),
            format!("{:.3}", h.elapsed_ms),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// A gnuplot script drawing relative error against iteration, one PNG per problem.
pub fn write_gnuplot_script(records: &[BenchRecord], path: &Path) -> Result<()> {
    let mut s = String::from("set datafile separator ','\nset logscale y\nset format y '10^{%L}'\n");
    s.push_str("set xlabel 'iteration'\nset ylabel 'relative error'\nset key outside right\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    let mut problems: Vec<&str> = records.iter().map(|r| r.problem.as_str()).collect();
    problems.dedup();
    for p in problems {
        let curves: Vec<String> = records
            .iter()
            .filter(|r| r.problem == p)
            .map(|r| {
                format!(
                    "'{}' using 1:2 with linespoints title '{}'",
                    history_file_name(p, r.solver),
                    r.solver.name().to_uppercase()
                )
            })
            .collect();
        s.push_str(&format!(
            "\nset output '{p}.png'\nset title '{p}' noenhanced\nplot {}\n",
            curves.join(", \\\n     ")
        ));
    }
    std::fs::write(path, s).map_err(io_err(path))
}
