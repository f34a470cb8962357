//! Replication fan-out. Replications run in parallel; results are merged in
//! replication order so output does not depend on scheduling.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ncsched_core::sim::{build_layout, run_replication_on};
use ncsched_core::{summarize, Mode, ScenarioConfig, SummaryStats};
use rayon::prelude::*;

use crate::document::ScenarioDocument;
use crate::error::HarnessError;
use crate::output::write_outputs;

#[derive(Debug, Clone)]
pub struct CellResult {
    pub mode: Mode,
    pub sweep_value: Option<f64>,
    pub config: ScenarioConfig,
    pub stats: SummaryStats,
}

/// Runs every (mode, sweep value) cell of `doc`. `threads = None` uses the
/// global rayon pool.
pub fn run_cells(
    doc: &ScenarioDocument,
    threads: Option<usize>,
) -> Result<Vec<CellResult>, HarnessError> {
    let mut cells = Vec::new();
    for (mode, v) in doc.cells() {
        let cfg = doc.config_for(mode, v)?;
        let layout = build_layout(&cfg)?;
        cells.push((mode, v, cfg, layout));
    }
    let jobs: Vec<(usize, u64)> = cells
        .iter()
        .enumerate()
        .flat_map(|(i, c)| (0..c.2.replications).map(move |rep| (i, rep)))
        .collect();
    let run = || {
        jobs.par_iter()
            .map(|&(i, rep)| {
                let (_, _, cfg, layout) = &cells[i];
                run_replication_on(cfg, Arc::clone(layout), rep, |_, _| Ok(()))
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let accs = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };

    let mut out = Vec::with_capacity(cells.len());
    let mut rest = accs.as_slice();
    for (mode, sweep_value, config, _) in cells {
        let (mine, tail) = rest.split_at(config.replications as usize);
        rest = tail;
        out.push(CellResult {
            mode,
            sweep_value,
            stats: summarize(mine)?,
            config,
        });
    }
    Ok(out)
}

/// Output directory: explicit argument, then the document's `output`, then
/// `results/<id>`.
pub fn output_dir(doc: &ScenarioDocument, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| doc.output.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(&doc.id))
}

pub fn run_scenario(
    doc: &ScenarioDocument,
    out: Option<&Path>,
    threads: Option<usize>,
) -> Result<(PathBuf, Vec<CellResult>), HarnessError> {
    let cells = run_cells(doc, threads)?;
    let dir = output_dir(doc, out);
    write_outputs(&dir, doc, &cells)?;
    Ok((dir, cells))
}
