//! Batch front end: configuration loading, pipelines and report output.

pub mod config;
pub mod output;
pub mod pipeline;

use std::path::PathBuf;

use rayon::prelude::*;

use config::{parse_sweep, Format, Overrides, RunConfig};
use pipeline::{run_verify, Prepared, SweepSection, Verdict};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 2;
pub const EXIT_NOT_SATURATED: u8 = 3;
pub const EXIT_CONFIG: u8 = 64;
pub const EXIT_NUMERICAL: u8 = 65;
pub const EXIT_IO: u8 = 74;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Numerical(_) => EXIT_NUMERICAL,
            Self::Io(_) => EXIT_IO,
        }
    }
}

fn load(path: &std::path::Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    cfg.apply(overrides);
    cfg.validate()?;
    Ok(cfg)
}

fn target(cfg: &RunConfig, out: Option<PathBuf>) -> Option<PathBuf> {
    out.or_else(|| cfg.output.path.as_ref().map(PathBuf::from))
}

pub fn evolve(path: &std::path::Path, overrides: &Overrides, out: Option<PathBuf>) -> Result<u8, CliError> {
    let cfg = load(path, overrides)?;
    let prepared = Prepared::from_config(&cfg)?;
    let (columns, rows) = prepared.evolve(&cfg)?;
    let text = match cfg.output.format {
        Format::Csv => output::render_csv(&cfg, "evolve", &columns, &rows),
        Format::Json => {
            let records: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|row| {
                    columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), serde_json::Value::from(*v)))
                        .collect()
                })
                .collect();
            output::render_json(&serde_json::json!({
                "model": cfg.model,
                "config_sha256": cfg.digest(),
                "columns": columns,
                "rows": records,
            }))?
        }
    };
    output::emit(&text, target(&cfg, out).as_deref())?;
    Ok(EXIT_OK)
}

pub fn verify(path: &std::path::Path, overrides: &Overrides, out: Option<PathBuf>) -> Result<u8, CliError> {
    let cfg = load(path, overrides)?;
    let (reports, verdict) = run_verify(&cfg)?;
    output::emit(&output::render_json(&reports)?, target(&cfg, out).as_deref())?;
    Ok(verdict.exit_code())
}

fn thread_count() -> Result<usize, CliError> {
    match std::env::var("QSLQ_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("QSLQ_THREADS must be a non-negative integer, got '{v}'"))),
        _ => Ok(0),
    }
}

/// Cartesian product of the `--set` specifications, in the order given.
fn expand(sets: &[String]) -> Result<Vec<Vec<(String, f64)>>, CliError> {
    if sets.is_empty() {
        return Err(CliError::Config("sweep needs at least one --set key=v1,v2,...".into()));
    }
    let mut combos: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for spec in sets {
        let (key, values) = parse_sweep(spec)?;
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                let key = &key;
                values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push((key.clone(), *v));
                    next
                })
            })
            .collect();
    }
    Ok(combos)
}

pub fn sweep(
    path: &std::path::Path,
    overrides: &Overrides,
    sets: &[String],
    out: Option<PathBuf>,
) -> Result<u8, CliError> {
    let mut base = RunConfig::load(path)?;
    base.apply(overrides);
    let combos = expand(sets)?;
    let configs = combos
        .iter()
        .map(|combo| {
            let mut cfg = base.clone();
            for (k, v) in combo {
                cfg.set(k, *v)?;
            }
            cfg.validate()?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let results: Vec<Result<(Vec<qslq_core::BoundReport>, Verdict), CliError>> =
        pool.install(|| configs.par_iter().map(run_verify).collect());
    let mut sections = Vec::with_capacity(results.len());
    let mut worst = Verdict::Valid;
    for (combo, result) in combos.into_iter().zip(results) {
        let (reports, verdict) = result?;
        worst = worst.worst(verdict);
        let set = combo
            .into_iter()
            .map(|(k, v)| (k, serde_json::Value::from(v)))
            .collect();
        sections.push(SweepSection { set, reports });
    }
    output::emit(&output::render_json(&sections)?, target(&base, out).as_deref())?;
    Ok(worst.exit_code())
}
