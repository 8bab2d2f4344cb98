//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage, input or I/O errors, 2 when an
//! experiment finished but some cells failed (results are still written).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{run_epsilon_sweep, ExperimentConfig, Mode};
use crate::io::{read_config, read_loglik_csv, write_experiment_outputs, LoglikFile, RunManifest};
use crate::loo::{
    elpd_from_pointwise, paired_diff, psis_loo_with, ElpdEstimate, ParetoDiagnostics, PsisOptions,
};
use crate::weights::{
    bma, pseudo_bma, pseudo_bma_plus, stacking, uniform_prior, PointwiseMatrix, Scheme,
    WeightVector,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "loo-lab",
    version,
    about = "LOO model comparison and model-weighting experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Model weights from a pointwise matrix, or from one draws file per model.
    Weights(WeightsArgs),
    /// Run an experiment config and write trajectories, n* table and manifest.
    Experiment(ExperimentArgs),
    /// Like `experiment`, but requires an epsilon-mode config.
    Sweep(ExperimentArgs),
    /// PSIS-LOO for one log-likelihood draws file.
    Psis(PsisArgs),
}

#[derive(Debug, Args)]
struct WeightsArgs {
    /// Pointwise CSV, or several draws CSVs (one per model).
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    /// Model labels for draws inputs (default: file stems).
    #[arg(long = "label")]
    labels: Vec<String>,
    /// pseudo-bma, pseudo-bma-plus, stacking, bma (repeatable or comma separated).
    #[arg(long = "scheme", value_delimiter = ',')]
    schemes: Vec<Scheme>,
    /// Bootstrap draws for pseudo-bma-plus.
    #[arg(long = "B", default_value_t = crate::weights::DEFAULT_BOOTSTRAP_DRAWS)]
    bootstrap: usize,
    /// Stacking KKT tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Seed for the pseudo-bma-plus bootstrap.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// khat threshold for draws inputs.
    #[arg(long, default_value_t = crate::loo::DEFAULT_KHAT_THRESHOLD)]
    threshold: f64,
    /// Log marginal likelihoods for `bma`, one per model.
    #[arg(
        long = "log-marginal",
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    log_marginals: Vec<f64>,
    /// Write a JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment config (key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's schemes.
    #[arg(long = "scheme", value_delimiter = ',')]
    schemes: Vec<Scheme>,
    /// Overrides the config's bootstrap size.
    #[arg(long = "B")]
    bootstrap: Option<usize>,
    /// Overrides the config's stacking tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Median-weight threshold for n*.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct PsisArgs {
    /// Draws CSV (S rows, one column per observation).
    #[arg(long)]
    input: PathBuf,
    /// Observations with khat above this are flagged.
    #[arg(long, default_value_t = crate::loo::DEFAULT_KHAT_THRESHOLD)]
    threshold: f64,
    /// Write a JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Weights(a) => cmd_weights(&a, out),
        Command::Experiment(a) => cmd_experiment(&a, false, out),
        Command::Sweep(a) => cmd_experiment(&a, true, out),
        Command::Psis(a) => cmd_psis(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

#[derive(Debug, Serialize)]
struct ModelElpd {
    label: String,
    elpd: f64,
    se: f64,
}

#[derive(Debug, Serialize)]
struct PairReport {
    a: String,
    b: String,
    diff: f64,
    se_diff: f64,
}

#[derive(Debug, Serialize)]
struct ModelKhat {
    label: String,
    diagnostics: ParetoDiagnostics,
}

#[derive(Debug, Serialize)]
struct WeightsReport {
    models: Vec<String>,
    elpd: Vec<ModelElpd>,
    paired_diffs: Vec<PairReport>,
    weights: Vec<WeightVector>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    khat: Vec<ModelKhat>,
}

fn load_matrix(args: &WeightsArgs) -> Result<(PointwiseMatrix, Vec<ModelKhat>)> {
    let files = args
        .inputs
        .iter()
        .map(|p| read_loglik_csv(p).map_err(|e| annotate(p, e)))
        .collect::<Result<Vec<_>>>()?;
    if files.len() == 1 {
        return match files.into_iter().next() {
            Some(LoglikFile::Pointwise(m)) => Ok((m, Vec::new())),
            _ => Err(Error::InvalidArgument(
                "a single draws file describes one model; at least 2 models (K >= 2) are required"
                    .into(),
            )),
        };
    }
    let labels: Vec<String> = if args.labels.is_empty() {
        args.inputs
            .iter()
            .map(|p| {
                p.file_stem().map_or_else(
                    || p.display().to_string(),
                    |s| s.to_string_lossy().into_owned(),
                )
            })
            .collect()
    } else if args.labels.len() == args.inputs.len() {
        args.labels.clone()
    } else {
        return Err(Error::InvalidArgument(format!(
            "{} labels given for {} inputs",
            args.labels.len(),
            args.inputs.len()
        )));
    };
    let options = PsisOptions {
        khat_threshold: args.threshold,
    };
    let mut columns = Vec::new();
    let mut khat = Vec::new();
    for (file, label) in files.iter().zip(&labels) {
        match file {
            LoglikFile::Draws { draws, .. } => {
                let (est, diag) = psis_loo_with(draws, &options)?;
                columns.push(est.pointwise);
                khat.push(ModelKhat {
                    label: label.clone(),
                    diagnostics: diag,
                });
            }
            LoglikFile::Pointwise(_) => {
                return Err(Error::InvalidArgument(
                    "multiple inputs must all be draws files".into(),
                ))
            }
        }
    }
    Ok((PointwiseMatrix::from_columns(columns, labels)?, khat))
}

fn annotate(path: &Path, e: Error) -> Error {
    match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => Error::InvalidArgument(format!("{}: {other}", path.display())),
    }
}

fn cmd_weights(args: &WeightsArgs, out: &mut dyn Write) -> Result<i32> {
    let (matrix, khat) = load_matrix(args)?;
    let schemes = if args.schemes.is_empty() {
        let mut s = vec![Scheme::PseudoBma, Scheme::PseudoBmaPlus, Scheme::Stacking];
        if !args.log_marginals.is_empty() {
            s.push(Scheme::Bma);
        }
        s
    } else {
        args.schemes.clone()
    };

    let labels = matrix.labels().to_vec();
    let estimates: Vec<ElpdEstimate> = (0..matrix.k())
        .map(|k| elpd_from_pointwise(&matrix.column(k)))
        .collect::<Result<_>>()?;
    let mut paired_diffs = Vec::new();
    for a in 0..matrix.k() {
        for b in a + 1..matrix.k() {
            let d = paired_diff(&estimates[a].pointwise, &estimates[b].pointwise)?;
            paired_diffs.push(PairReport {
                a: labels[a].clone(),
                b: labels[b].clone(),
                diff: d.diff,
                se_diff: d.se_diff,
            });
        }
    }

    let mut weights = Vec::new();
    for scheme in &schemes {
        let w = match scheme {
            Scheme::PseudoBma => pseudo_bma(&matrix)?,
            Scheme::PseudoBmaPlus => pseudo_bma_plus(&matrix, args.bootstrap, args.seed)?,
            Scheme::Stacking => stacking(&matrix, args.tol)?,
            Scheme::Bma => {
                if args.log_marginals.len() != matrix.k() {
                    return Err(Error::InvalidArgument(format!(
                        "bma needs one --log-marginal per model ({} models, {} given)",
                        matrix.k(),
                        args.log_marginals.len()
                    )));
                }
                bma(&args.log_marginals, &uniform_prior(matrix.k()))?
            }
        };
        weights.push(w);
    }

    writeln!(out, "{:<16} {:>14} {:>12}", "model", "elpd", "se")?;
    for (label, est) in labels.iter().zip(&estimates) {
        writeln!(out, "{:<16} {:>14.4} {:>12.4}", label, est.elpd, est.se)?;
    }
    for d in &paired_diffs {
        writeln!(
            out,
            "diff {} - {}: {:.4} (se {:.4})",
            d.a, d.b, d.diff, d.se_diff
        )?;
    }
    for mk in &khat {
        writeln!(
            out,
            "khat {}: max {:.3}, {} flagged above {}",
            mk.label,
            mk.diagnostics.max_khat(),
            mk.diagnostics.flagged.len(),
            mk.diagnostics.threshold
        )?;
    }
    for w in &weights {
        let parts: Vec<String> = labels
            .iter()
            .zip(&w.weights)
            .map(|(l, x)| format!("{l}={x:.4}"))
            .collect();
        writeln!(out, "{}: {}", w.scheme, parts.join(" "))?;
    }

    let report = WeightsReport {
        models: labels.clone(),
        elpd: labels
            .iter()
            .zip(&estimates)
            .map(|(l, e)| ModelElpd {
                label: l.clone(),
                elpd: e.elpd,
                se: e.se,
            })
            .collect(),
        paired_diffs,
        weights,
        khat,
    };
    if let Some(path) = &args.out {
        std::fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok(EXIT_OK)
}

fn apply_overrides(config: &mut ExperimentConfig, args: &ExperimentArgs) -> Result<()> {
    if !args.schemes.is_empty() {
        config.schemes = args.schemes.clone();
    }
    if let Some(b) = args.bootstrap {
        config.bootstrap_draws = b;
    }
    if let Some(t) = args.tol {
        config.tol = t;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(t) = args.threshold {
        config.threshold = t;
    }
    config.validate()
}

fn cmd_experiment(args: &ExperimentArgs, require_sweep: bool, out: &mut dyn Write) -> Result<i32> {
    let started_at = chrono::Utc::now().to_rfc3339();
    let mut config = read_config(&args.config).map_err(|e| annotate(&args.config, e))?;
    apply_overrides(&mut config, args)?;
    if require_sweep && config.mode == Mode::Idealized {
        return Err(Error::config("mode", "sweep needs an epsilon-mode config"));
    }
    let sweep = run_epsilon_sweep(&config)?;
    let finished_at = chrono::Utc::now().to_rfc3339();
    let command = if require_sweep { "sweep" } else { "experiment" };
    let manifest = RunManifest::new(command, &sweep, started_at, finished_at);
    write_experiment_outputs(&args.out, &sweep, &manifest)?;

    for c in &sweep.crossings {
        let eps = c
            .epsilon
            .map_or_else(|| "idealized".to_string(), |e| e.to_string());
        let n_star = c
            .n_star
            .map_or_else(|| "not reached".to_string(), |n| n.to_string());
        writeln!(out, "{} epsilon={}: n*={}", c.scheme, eps, n_star)?;
    }
    let errors = sweep.error_count();
    if errors > 0 {
        writeln!(out, "{errors} cells failed; see manifest.json")?;
        Ok(EXIT_PARTIAL)
    } else {
        Ok(EXIT_OK)
    }
}

#[derive(Debug, Serialize)]
struct PsisReport {
    observation_labels: Vec<String>,
    estimate: ElpdEstimate,
    diagnostics: ParetoDiagnostics,
}

fn cmd_psis(args: &PsisArgs, out: &mut dyn Write) -> Result<i32> {
    let (draws, labels) =
        match read_loglik_csv(&args.input).map_err(|e| annotate(&args.input, e))? {
            LoglikFile::Draws {
                draws,
                observation_labels,
            } => (draws, observation_labels),
            LoglikFile::Pointwise(_) => {
                return Err(Error::InvalidArgument("psis needs a draws file".into()))
            }
        };
    let (estimate, diagnostics) = psis_loo_with(
        &draws,
        &PsisOptions {
            khat_threshold: args.threshold,
        },
    )?;
    writeln!(out, "elpd_loo {:.4} (se {:.4})", estimate.elpd, estimate.se)?;
    writeln!(out, "max khat {:.3}", diagnostics.max_khat())?;
    for &i in &diagnostics.flagged {
        writeln!(out, "flagged {} khat {:.3}", labels[i], diagnostics.khat[i])?;
    }
    if let Some(path) = &args.out {
        let report = PsisReport {
            observation_labels: labels,
            estimate,
            diagnostics,
        };
        std::fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok(EXIT_OK)
}
