//! Scenario-driven front end: parses scenario files, runs them on a worker
//! pool and writes plot-ready CSV tables plus a JSON run manifest.

pub mod error;
pub mod manifest;
pub mod runners;
pub mod scenario;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use error::SimError;
pub use manifest::{NumericalChecks, RunManifest};
pub use runners::{Cell, RunOutput, RunnerRegistry, ScenarioRunner, Table};
pub use scenario::{parse_scenario, Scenario};

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Worker threads; `None` uses the available parallelism.
    pub jobs: Option<usize>,
    pub out_dir: PathBuf,
    /// Scenario file, recorded in the manifest.
    pub source: Option<PathBuf>,
}

pub fn read_scenario(path: &Path, registry: &RunnerRegistry) -> Result<Scenario, SimError> {
    let bytes = fs::read(path).map_err(|source| SimError::Io { path: path.to_path_buf(), source })?;
    let text = String::from_utf8(bytes).map_err(|e| SimError::parse(None, format!("scenario is not UTF-8: {e}")))?;
    parse_scenario(&text, registry)
}

fn format_cell(c: &Cell, column: &str, row: usize) -> Result<String, SimError> {
    match c {
        Cell::Num(x) if x.is_finite() => Ok(format!("{x}")),
        Cell::Num(x) => Err(SimError::Numerical(format!("non-finite value {x} in column `{column}`, row {row}; nothing was written"))),
        Cell::Text(s) => Ok(s.clone()),
    }
}

/// Renders a table to CSV bytes, refusing non-finite values.
pub fn render_table(t: &Table) -> Result<Vec<u8>, SimError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| SimError::Numerical(format!("CSV encoding failed: {e}"));
    w.write_record(&t.header).map_err(io)?;
    for (i, row) in t.rows.iter().enumerate() {
        let fields = row.iter().zip(&t.header).map(|(c, h)| format_cell(c, h, i)).collect::<Result<Vec<_>, _>>()?;
        w.write_record(&fields).map_err(io)?;
    }
    w.into_inner().map_err(|e| SimError::Numerical(format!("CSV encoding failed: {e}")))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), SimError> {
    fs::write(path, bytes).map_err(|source| SimError::Io { path: path.to_path_buf(), source })
}

/// Runs a validated scenario and writes its CSV files and manifest into `out_dir`.
/// All tables are rendered before anything is written, so a numerical failure
/// leaves no partial output.
pub fn run_scenario(sc: &Scenario, registry: &RunnerRegistry, opts: &RunOptions) -> Result<RunManifest, SimError> {
    let started = Instant::now();
    let runner = registry.get(&sc.kind).ok_or_else(|| SimError::parse(None, format!("unknown kind `{}`", sc.kind)))?;
    let propagator = registry.propagators().get(&sc.propagator).map_err(|e| SimError::parse(None, e.to_string()))?;
    let jobs = opts.jobs.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SimError::Numerical(format!("cannot start worker pool: {e}")))?;
    let output = pool.install(|| runner.run(sc, propagator))?;

    let rendered = output
        .tables
        .iter()
        .map(|t| {
            let name = match &t.suffix {
                Some(s) => format!("{}_{s}.csv", sc.output),
                None => format!("{}.csv", sc.output),
            };
            Ok((name, render_table(t)?))
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    fs::create_dir_all(&opts.out_dir).map_err(|source| SimError::Io { path: opts.out_dir.clone(), source })?;
    let mut outputs = Vec::with_capacity(rendered.len());
    for (name, bytes) in &rendered {
        write_file(&opts.out_dir.join(name), bytes)?;
        outputs.push(name.clone());
    }
    let manifest = RunManifest::new(sc, opts, jobs, started.elapsed(), outputs, output);
    let name = format!("{}.manifest.json", sc.output);
    write_file(&opts.out_dir.join(name), manifest.to_json().as_bytes())?;
    Ok(manifest)
}
