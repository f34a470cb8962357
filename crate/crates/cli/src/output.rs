//! CSV row types and file emission. Column order is fixed; probabilities use
//! six significant digits so reruns are byte-identical.

use std::fs;
use std::io::Write;
use std::path::Path;

use ncsched_core::metrics::{CurvePoint, Estimate};
use ncsched_core::Mode;

use crate::analytic::leader_analytic_for;
use crate::document::ScenarioDocument;
use crate::error::HarnessError;
use crate::format::{g6, opt_g6};
use crate::runner::CellResult;

pub const RESULT_COLUMNS: [&str; 19] = [
    "scenario",
    "mode",
    "sweep_value",
    "N",
    "T",
    "W",
    "R",
    "s",
    "lambda",
    "pbd",
    "reps",
    "slots",
    "ext_block_prob",
    "ext_block_se",
    "throughput_norm",
    "throughput_norm_se",
    "throughput_raw",
    "throughput_raw_se",
    "analytic_ext_block",
];

pub const LEADER_COLUMNS: [&str; 10] = [
    "mode",
    "pbd",
    "rank",
    "block_prob",
    "stderr",
    "n_obs",
    "analytic_value",
    "analytic_lb",
    "analytic_ub",
    "sweep_value",
];

pub const USEFUL_COLUMNS: [&str; 8] = [
    "mode",
    "pbd",
    "sweep_value",
    "useful_drives",
    "block_prob",
    "stderr",
    "n_obs",
    "analytic_value",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub mode: Mode,
    pub sweep_value: Option<f64>,
    pub n: usize,
    pub t: usize,
    pub w: Option<usize>,
    pub r: Option<usize>,
    pub s: Option<usize>,
    pub lambda: f64,
    pub pbd: Option<f64>,
    pub reps: Option<u64>,
    pub slots: Option<u64>,
    pub ext_block: Option<Estimate>,
    pub throughput_norm: Option<Estimate>,
    pub throughput_raw: Option<Estimate>,
    pub analytic_ext_block: Option<f64>,
}

fn num<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ResultRow {
    pub fn record(&self) -> Vec<String> {
        let est = |e: Option<Estimate>| [opt_g6(e.map(|e| e.value)), opt_g6(e.map(|e| e.stderr))];
        let [eb, eb_se] = est(self.ext_block);
        let [tn, tn_se] = est(self.throughput_norm);
        let [tr, tr_se] = est(self.throughput_raw);
        vec![
            self.scenario.clone(),
            self.mode.as_str().into(),
            num(self.sweep_value),
            self.n.to_string(),
            self.t.to_string(),
            num(self.w),
            num(self.r),
            num(self.s),
            self.lambda.to_string(),
            num(self.pbd),
            num(self.reps),
            num(self.slots),
            eb,
            eb_se,
            tn,
            tn_se,
            tr,
            tr_se,
            opt_g6(self.analytic_ext_block),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderRow {
    pub mode: Mode,
    pub pbd: f64,
    pub rank: usize,
    pub observed: Option<CurvePoint>,
    pub analytic_value: Option<f64>,
    pub analytic_lb: Option<f64>,
    pub analytic_ub: Option<f64>,
    pub sweep_value: Option<f64>,
}

impl LeaderRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.mode.as_str().into(),
            self.pbd.to_string(),
            self.rank.to_string(),
            opt_g6(self.observed.map(|p| p.prob)),
            opt_g6(self.observed.map(|p| p.stderr)),
            num(self.observed.map(|p| p.n_obs)),
            opt_g6(self.analytic_value),
            opt_g6(self.analytic_lb),
            opt_g6(self.analytic_ub),
            num(self.sweep_value),
        ]
    }
}

pub fn result_row(id: &str, cell: &CellResult) -> ResultRow {
    let c = &cell.config;
    ResultRow {
        scenario: id.to_string(),
        mode: cell.mode,
        sweep_value: cell.sweep_value,
        n: c.n,
        t: c.t,
        w: Some(c.w),
        r: Some(c.drives()),
        s: Some(c.s),
        lambda: c.lambda,
        pbd: Some(c.pbd),
        reps: Some(c.replications),
        slots: Some(c.horizon),
        ext_block: Some(cell.stats.ext_block_prob),
        throughput_norm: Some(cell.stats.throughput_norm),
        throughput_raw: Some(cell.stats.throughput_raw),
        analytic_ext_block: (cell.mode == Mode::UncodedInf)
            .then(|| ncsched_core::analytics::erlang_blocking(c.lambda, c.t, c.n).ok())
            .flatten(),
    }
}

pub fn leader_rows(cell: &CellResult) -> Vec<LeaderRow> {
    cell.stats
        .leader_block_by_rank
        .iter()
        .map(|(&rank, &p)| {
            let a = leader_analytic_for(&cell.config, rank);
            LeaderRow {
                mode: cell.mode,
                pbd: cell.config.pbd,
                rank,
                observed: Some(p),
                analytic_value: a.value,
                analytic_lb: a.lower,
                analytic_ub: a.upper,
                sweep_value: cell.sweep_value,
            }
        })
        .collect()
}

/// Leader blocking binned by the number of drives still useful to the
/// leader; the leader is blocked exactly when all of them are busy.
pub fn useful_records(cell: &CellResult) -> Vec<Vec<String>> {
    cell.stats
        .leader_block_by_useful
        .iter()
        .map(|(&u, p)| {
            let analytic = cell
                .mode
                .finite_io()
                .then(|| cell.config.pbd.powi(u as i32));
            vec![
                cell.mode.as_str().into(),
                cell.config.pbd.to_string(),
                num(cell.sweep_value),
                u.to_string(),
                g6(p.prob),
                g6(p.stderr),
                p.n_obs.to_string(),
                opt_g6(analytic),
            ]
        })
        .collect()
}

pub fn csv_bytes<I, R>(header: &[&str], records: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in records {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let mut f = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    f.write_all(bytes).map_err(|e| HarnessError::io(path, e))
}

/// Writes every output file for a finished scenario into `dir`.
pub fn write_outputs(
    dir: &Path,
    doc: &ScenarioDocument,
    cells: &[CellResult],
) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let results = csv_bytes(
        &RESULT_COLUMNS,
        cells.iter().map(|c| result_row(&doc.id, c).record()),
    );
    write_file(&dir.join("results.csv"), &results)?;

    let leader = csv_bytes(
        &LEADER_COLUMNS,
        cells.iter().flat_map(leader_rows).map(|r| r.record()),
    );
    write_file(&dir.join("leader_block.csv"), &leader)?;

    let useful = csv_bytes(&USEFUL_COLUMNS, cells.iter().flat_map(useful_records));
    write_file(&dir.join("leader_block_useful.csv"), &useful)?;

    let mut echo = serde_json::to_vec_pretty(&doc.echo()?).expect("echo serializes");
    echo.push(b'\n');
    write_file(&dir.join("scenario.json"), &echo)?;

    if doc.dump_layout {
        for &mode in &doc.compare_modes {
            let cfg = doc.config_for(mode, None)?;
            let layout = ncsched_core::sim::build_layout(&cfg)?;
            let mut json = serde_json::to_vec_pretty(&layout.dump()).expect("layout serializes");
            json.push(b'\n');
            write_file(&dir.join(format!("layout_{}.json", mode.as_str())), &json)?;
        }
    }
    Ok(())
}
