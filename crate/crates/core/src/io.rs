//! File formats.
//!
//! # Log-likelihood CSV
//!
//! One header row, then one row per observation (`pointwise`) or per posterior
//! draw (`draws`). The first column holds a row label (canonical files use
//! `1..=rows`); the rest hold numbers.
//!
//! ```text
//! pointwise,H0,H1                 draws,y1,y2,y3
//! 1,0.0000000000000000e0,...      1,-0.69...,-0.71...,...
//! ```
//!
//! A `pointwise` file is an `n × K` matrix with model labels in the header; a
//! `draws` file is an `S × n` matrix with observation labels. Numbers are
//! written with 17 significant digits, so a write/read round trip is lossless.
//!
//! # Experiment config
//!
//! Flat `key = value` lines; `#` starts a comment; lists are comma separated.
//!
//! ```text
//! example = 2
//! mode = epsilon
//! epsilon = 0.02, 0.05, 0.1, 0.2
//! a = 1
//! b = 1
//! n_grid = 100, 1000, 10000
//! schemes = stacking, bma
//! replications = 50
//! seed = 42
//! threshold = 0.95
//! bootstrap = 1000
//! tol = 1e-10
//! ```
//!
//! `a`/`b` (default 1) apply to examples 1–2, `tau0` (default 1) to example 3.
//!
//! # Experiment outputs
//!
//! `trajectories.csv`: `scheme,epsilon,n,replication,model,weight`;
//! `sweep.csv`: `scheme,epsilon,n_star` (empty `n_star` when the threshold is
//! never reached). Idealized runs report `epsilon = 0`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{Example, ExperimentConfig, Mode, Prior, SweepResult};
use crate::loo::LogLikDraws;
use crate::weights::{PointwiseMatrix, Scheme, DEFAULT_BOOTSTRAP_DRAWS};

pub const POINTWISE_KIND: &str = "pointwise";
pub const DRAWS_KIND: &str = "draws";

/// Decimal text with 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parsed contents of a log-likelihood CSV file.
#[derive(Debug, Clone, PartialEq)]
pub enum LoglikFile {
    Pointwise(PointwiseMatrix),
    Draws {
        draws: LogLikDraws,
        observation_labels: Vec<String>,
    },
}

pub fn read_loglik_csv(path: impl AsRef<Path>) -> Result<LoglikFile> {
    parse_loglik_csv(File::open(path)?)
}

pub fn parse_loglik_csv<R: Read>(reader: R) -> Result<LoglikFile> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        Some(rec) => rec?,
        None => {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "empty file".into(),
            })
        }
    };
    let kind = header.get(0).unwrap_or("").to_ascii_lowercase();
    if kind != POINTWISE_KIND && kind != DRAWS_KIND {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: format!(
                "header must start with `{POINTWISE_KIND}` or `{DRAWS_KIND}`, got {kind:?}"
            ),
        });
    }
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if labels.is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 2,
            message: "no column labels".into(),
        });
    }
    let mut seen = HashSet::new();
    for (j, label) in labels.iter().enumerate() {
        if label.is_empty() {
            return Err(Error::Parse {
                line: 1,
                column: j + 2,
                message: "empty label".into(),
            });
        }
        if !seen.insert(label.as_str()) {
            return Err(Error::Parse {
                line: 1,
                column: j + 2,
                message: format!("duplicate label {label:?}"),
            });
        }
    }

    let width = labels.len() + 1;
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(rows.len() + 2, |p| p.line() as usize);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != width {
            return Err(Error::Parse {
                line,
                column: rec.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        let mut row = Vec::with_capacity(labels.len());
        for (j, cell) in rec.iter().enumerate().skip(1) {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                column: j + 1,
                message: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    location: format!("row {}, column {} (line {line})", rows.len() + 1, j + 1),
                    value: v,
                });
            }
            row.push(v);
        }
        rows.push(row);
    }

    if kind == POINTWISE_KIND {
        Ok(LoglikFile::Pointwise(PointwiseMatrix::new(rows, labels)?))
    } else {
        Ok(LoglikFile::Draws {
            draws: LogLikDraws::from_rows(rows)?,
            observation_labels: labels,
        })
    }
}

fn write_table<W: Write>(
    out: W,
    kind: &str,
    labels: &[String],
    rows: usize,
    get: impl Fn(usize, usize) -> f64,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    let mut header = vec![kind.to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for i in 0..rows {
        let mut rec = vec![(i + 1).to_string()];
        rec.extend((0..labels.len()).map(|j| format_value(get(i, j))));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pointwise_csv<W: Write>(out: W, matrix: &PointwiseMatrix) -> Result<()> {
    write_table(out, POINTWISE_KIND, matrix.labels(), matrix.n(), |i, k| {
        matrix.get(i, k)
    })
}

pub fn write_draws_csv<W: Write>(
    out: W,
    draws: &LogLikDraws,
    observation_labels: &[String],
) -> Result<()> {
    if observation_labels.len() != draws.observations() {
        return Err(Error::LengthMismatch(
            observation_labels.len(),
            draws.observations(),
        ));
    }
    write_table(
        out,
        DRAWS_KIND,
        observation_labels,
        draws.draws(),
        |s, i| draws.get(s, i),
    )
}

pub fn write_loglik_csv<W: Write>(out: W, file: &LoglikFile) -> Result<()> {
    match file {
        LoglikFile::Pointwise(m) => write_pointwise_csv(out, m),
        LoglikFile::Draws {
            draws,
            observation_labels,
        } => write_draws_csv(out, draws, observation_labels),
    }
}

fn parse_list<T: std::str::FromStr>(field: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::config(field, format!("cannot parse {s:?}")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(field: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(field, format!("cannot parse {value:?}")))
}

/// Parses the flat `key = value` config format and validates the result.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut example = None;
    let mut mode = None;
    let mut epsilons: Option<Vec<f64>> = None;
    let mut a = None;
    let mut b = None;
    let mut tau0 = None;
    let mut n_grid = None;
    let mut schemes = None;
    let mut replications = None;
    let mut seed = None;
    let mut threshold = None;
    let mut bootstrap = None;
    let mut tol = None;
    let mut seen = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            column: 1,
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        let canonical = match key.as_str() {
            "epsilons" => "epsilon".to_string(),
            "b_boot" | "bootstrap_draws" => "bootstrap".to_string(),
            _ => key.clone(),
        };
        if !seen.insert(canonical.clone()) {
            return Err(Error::Parse {
                line: line_no,
                column: 1,
                message: format!("duplicate key {key:?}"),
            });
        }
        match canonical.as_str() {
            "example" => example = Some(Example::from_id(parse_one("example", value)?)?),
            "mode" => {
                mode = Some(match value.to_ascii_lowercase().as_str() {
                    "idealized" => false,
                    "epsilon" => true,
                    other => {
                        return Err(Error::config(
                            "mode",
                            format!("must be idealized or epsilon, got {other:?}"),
                        ))
                    }
                })
            }
            "epsilon" => epsilons = Some(parse_list("epsilon", value)?),
            "a" => a = Some(parse_one("a", value)?),
            "b" => b = Some(parse_one("b", value)?),
            "tau0" => tau0 = Some(parse_one("tau0", value)?),
            "n_grid" => n_grid = Some(parse_list("n_grid", value)?),
            "schemes" => {
                schemes = Some(
                    parse_list::<String>("schemes", value)?
                        .iter()
                        .map(|s| s.parse::<Scheme>())
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| Error::config("schemes", e.to_string()))?,
                )
            }
            "replications" => replications = Some(parse_one("replications", value)?),
            "seed" => seed = Some(parse_one("seed", value)?),
            "threshold" => threshold = Some(parse_one("threshold", value)?),
            "bootstrap" => bootstrap = Some(parse_one("bootstrap", value)?),
            "tol" => tol = Some(parse_one("tol", value)?),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    column: 1,
                    message: format!("unknown key {key:?}"),
                })
            }
        }
    }

    let example: Example = example.ok_or_else(|| Error::config("example", "missing"))?;
    let prior = if example.is_bernoulli() {
        if tau0.is_some() {
            return Err(Error::config("tau0", "only applies to example 3"));
        }
        Prior::Beta {
            a: a.unwrap_or(1.0),
            b: b.unwrap_or(1.0),
        }
    } else {
        if a.is_some() || b.is_some() {
            return Err(Error::config("a/b", "only apply to examples 1 and 2"));
        }
        Prior::Normal {
            tau0: tau0.unwrap_or(1.0),
        }
    };
    let epsilon_mode = mode.unwrap_or(epsilons.is_some());
    let mode = match (epsilon_mode, epsilons) {
        (true, Some(epsilons)) => Mode::Epsilon { epsilons },
        (true, None) => return Err(Error::config("epsilon", "required in epsilon mode")),
        (false, None) => Mode::Idealized,
        (false, Some(_)) => return Err(Error::config("epsilon", "not allowed in idealized mode")),
    };
    let n_grid = n_grid.ok_or_else(|| Error::config("n_grid", "missing"))?;
    let mut config = ExperimentConfig::new(example, mode, prior, n_grid);
    if let Some(s) = schemes {
        config.schemes = s;
    }
    config.replications = replications.unwrap_or(1);
    config.seed = seed.unwrap_or(0);
    if let Some(t) = threshold {
        config.threshold = t;
    }
    config.bootstrap_draws = bootstrap.unwrap_or(DEFAULT_BOOTSTRAP_DRAWS);
    if let Some(t) = tol {
        config.tol = t;
    }
    config.validate()?;
    Ok(config)
}

pub fn read_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Renders a config in the flat format accepted by [`parse_config`].
pub fn format_config(config: &ExperimentConfig) -> String {
    let join = |v: Vec<String>| v.join(", ");
    let mut out = format!("example = {}\n", config.example.id());
    match &config.mode {
        Mode::Idealized => out.push_str("mode = idealized\n"),
        Mode::Epsilon { epsilons } => {
            out.push_str("mode = epsilon\n");
            out.push_str(&format!(
                "epsilon = {}\n",
                join(epsilons.iter().map(|e| e.to_string()).collect())
            ));
        }
    }
    match config.prior {
        Prior::Beta { a, b } => out.push_str(&format!("a = {a}\nb = {b}\n")),
        Prior::Normal { tau0 } => out.push_str(&format!("tau0 = {tau0}\n")),
    }
    out.push_str(&format!(
        "n_grid = {}\n",
        join(config.n_grid.iter().map(|n| n.to_string()).collect())
    ));
    out.push_str(&format!(
        "schemes = {}\n",
        join(config.schemes.iter().map(|s| s.to_string()).collect())
    ));
    out.push_str(&format!("replications = {}\n", config.replications));
    out.push_str(&format!("seed = {}\n", config.seed));
    out.push_str(&format!("threshold = {}\n", config.threshold));
    out.push_str(&format!("bootstrap = {}\n", config.bootstrap_draws));
    out.push_str(&format!("tol = {:e}\n", config.tol));
    out
}

fn epsilon_text(e: Option<f64>) -> String {
    e.map_or_else(|| "0".to_string(), |e| e.to_string())
}

pub fn write_trajectories_csv<W: Write>(out: W, sweep: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scheme", "epsilon", "n", "replication", "model", "weight"])?;
    for &scheme in &sweep.config.schemes {
        for t in &sweep.trajectories {
            for p in &t.points {
                if let Some(wv) = p.weights(scheme) {
                    for (label, weight) in crate::experiments::MODEL_LABELS.iter().zip(&wv.weights)
                    {
                        w.write_record([
                            scheme.as_str().to_string(),
                            epsilon_text(t.epsilon),
                            p.n.to_string(),
                            t.replication.to_string(),
                            label.to_string(),
                            format_value(*weight),
                        ])?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(out: W, sweep: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scheme", "epsilon", "n_star"])?;
    for c in &sweep.crossings {
        w.write_record([
            c.scheme.as_str().to_string(),
            epsilon_text(c.epsilon),
            c.n_star.map_or_else(String::new, |n| n.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub scheme: Scheme,
    pub epsilon: f64,
    pub n: usize,
    pub replication: usize,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Provenance for one experiment run. Every row of `trajectories.csv`
/// corresponds to an `ok` cell here; failed cells carry their error.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub config: ExperimentConfig,
    pub config_text: String,
    pub outputs: Vec<String>,
    pub error_count: usize,
    pub cells: Vec<CellRecord>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        sweep: &SweepResult,
        started_at: String,
        finished_at: String,
    ) -> Self {
        let mut cells = Vec::new();
        for &scheme in &sweep.config.schemes {
            for t in &sweep.trajectories {
                for p in &t.points {
                    let cell = p.cells.iter().find(|c| c.scheme == scheme);
                    let error = cell.and_then(|c| c.outcome.as_ref().err().cloned());
                    cells.push(CellRecord {
                        scheme,
                        epsilon: t.epsilon.unwrap_or(0.0),
                        n: p.n,
                        replication: t.replication,
                        status: if error.is_some() { "error" } else { "ok" },
                        error,
                    });
                }
            }
        }
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed: sweep.config.seed,
            started_at,
            finished_at,
            config: sweep.config.clone(),
            config_text: format_config(&sweep.config),
            outputs: vec![
                "trajectories.csv".into(),
                "sweep.csv".into(),
                "manifest.json".into(),
            ],
            error_count: sweep.error_count(),
            cells,
        }
    }
}

/// Writes `trajectories.csv`, `sweep.csv` and `manifest.json` into `dir`.
pub fn write_experiment_outputs(
    dir: &Path,
    sweep: &SweepResult,
    manifest: &RunManifest,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_trajectories_csv(
        BufWriter::new(File::create(dir.join("trajectories.csv"))?),
        sweep,
    )?;
    write_sweep_csv(BufWriter::new(File::create(dir.join("sweep.csv"))?), sweep)?;
    let mut f = BufWriter::new(File::create(dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut f, manifest)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}
