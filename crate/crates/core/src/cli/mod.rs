//! Experiment configuration, parameter sweeps and result files.

mod config;
mod output;
mod sweep;

pub use config::{parse_config, CliArgs, ConfigFile, Invocation, Job};
pub use output::{emit_csv, emit_history_csv, emit_plotdata, plot_file_name, read_csv, CSV_HEADER};
pub use sweep::{run_sweep, SweepRow, SweepSpec, SweepTable};

use std::path::Path;

use crate::ddm::run;
use crate::error::Result;

/// Runs a parsed invocation and writes its outputs. Returns the text printed
/// on stdout.
pub fn execute(invocation: &Invocation) -> Result<String> {
    let pool = match invocation.workers {
        Some(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| crate::Error::Config(format!("cannot start {n} workers: {e}")))?,
        ),
        None => None,
    };
    let work = || -> Result<String> {
        match &invocation.job {
            Job::Run(config) => {
                let out = run(config)?;
                if let Some(path) = &invocation.out {
                    emit_history_csv(&out.history, path)?;
                }
                let last = out.last();
                Ok(format!(
                    "method={} p={} q={} iterations={} log10_ratio={:.6} err_inf={:.6e} J_p={:.6e} J_q={:.6e} diverged={}\n",
                    config.method,
                    config.p,
                    config.q,
                    last.iteration,
                    out.log_ratio,
                    last.err_inf,
                    last.j_p,
                    last.j_q,
                    out.diverged
                ))
            }
            Job::Sweep(spec) => {
                let table = run_sweep(spec)?;
                let dir = invocation
                    .out
                    .clone()
                    .unwrap_or_else(|| Path::new("sweep-out").to_path_buf());
                std::fs::create_dir_all(&dir).map_err(|e| crate::Error::io(&dir, e))?;
                emit_csv(&table, &dir.join("sweep.csv"))?;
                let files = emit_plotdata(&table, &dir.join("plot"))?;
                let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
                let diverged = table.rows.iter().filter(|r| r.diverged).count();
                Ok(format!(
                    "{} rows ({} diverged, {} failed) -> {}; {} plot files\n",
                    table.rows.len(),
                    diverged,
                    failed,
                    dir.join("sweep.csv").display(),
                    files.len()
                ))
            }
        }
    };
    match pool {
        Some(pool) => pool.install(work),
        None => work(),
    }
}
