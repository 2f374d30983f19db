use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use propcascade::config::RunConfig;
use propcascade::pipeline;

#[derive(Parser)]
#[command(name = "propcascade", version, about = "Propaganda technique classification cascade")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the base softmax and the minority ensembles.
    Train(Common),
    /// Run the cascade and write predictions.
    Predict(Common),
    /// Score predictions against gold labels.
    Evaluate(Common),
    /// Sweep the repetition slope and write `m,micro_f1` rows.
    Sweep(Sweep),
}

#[derive(Args)]
struct Sweep {
    #[command(flatten)]
    common: Common,
    #[arg(long = "m-min", value_name = "FLOAT", allow_negative_numbers = true)]
    m_min: Option<String>,
    #[arg(long = "m-max", value_name = "FLOAT", allow_negative_numbers = true)]
    m_max: Option<String>,
    #[arg(long, value_name = "FLOAT", allow_negative_numbers = true)]
    step: Option<String>,
}

/// Options shared by every subcommand. Values are validated when the run
/// configuration is resolved.
#[derive(Args)]
struct Common {
    /// `key = value` file; flags given on the command line win.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    articles: Option<String>,
    #[arg(long, value_name = "FILE")]
    labels: Option<String>,
    #[arg(long, value_name = "FILE")]
    embeddings: Option<String>,
    #[arg(long = "base-scores", value_name = "FILE")]
    base_scores: Option<String>,
    #[arg(long, value_name = "DIR")]
    models: Option<String>,
    #[arg(long, value_name = "FILE")]
    out: Option<String>,
    /// Predictions to score (evaluate).
    #[arg(long, value_name = "FILE")]
    predictions: Option<String>,
    /// Per-instance provenance side file (predict).
    #[arg(long, value_name = "FILE")]
    provenance: Option<String>,
    #[arg(long, value_name = "FLOAT", allow_negative_numbers = true)]
    theta: Option<String>,
    #[arg(long, value_name = "mean|min")]
    aggregation: Option<String>,
    #[arg(long, value_name = "FLOAT", allow_negative_numbers = true)]
    slope: Option<String>,
    #[arg(long = "tau-min", value_name = "FLOAT", allow_negative_numbers = true)]
    tau_min: Option<String>,
    #[arg(long = "window-mode", value_name = "whole|windowed")]
    window_mode: Option<String>,
    #[arg(long = "window-factor", value_name = "FLOAT", allow_negative_numbers = true)]
    window_factor: Option<String>,
    #[arg(long = "stride-factor", value_name = "FLOAT", allow_negative_numbers = true)]
    stride_factor: Option<String>,
    #[arg(long, value_name = "article|window:K")]
    context: Option<String>,
    #[arg(long = "repetition-context", value_name = "article|window:K")]
    repetition_context: Option<String>,
    #[arg(long, value_name = "INT")]
    seed: Option<String>,
    #[arg(long = "ngram-dim", value_name = "INT")]
    ngram_dim: Option<String>,
    #[arg(long, value_name = "INT")]
    epochs: Option<String>,
}

impl Common {
    fn overrides(&self) -> Vec<(String, String)> {
        let pairs = [
            ("articles", &self.articles),
            ("labels", &self.labels),
            ("embeddings", &self.embeddings),
            ("base-scores", &self.base_scores),
            ("models", &self.models),
            ("out", &self.out),
            ("predictions", &self.predictions),
            ("provenance", &self.provenance),
            ("theta", &self.theta),
            ("aggregation", &self.aggregation),
            ("slope", &self.slope),
            ("tau-min", &self.tau_min),
            ("window-mode", &self.window_mode),
            ("window-factor", &self.window_factor),
            ("stride-factor", &self.stride_factor),
            ("context", &self.context),
            ("repetition-context", &self.repetition_context),
            ("seed", &self.seed),
            ("ngram-dim", &self.ngram_dim),
            ("epochs", &self.epochs),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }

    fn resolve(&self, extra: Vec<(String, String)>) -> propcascade::Result<RunConfig> {
        let mut overrides = self.overrides();
        overrides.extend(extra);
        RunConfig::resolve(self.config.as_deref(), &overrides)
    }
}

fn run(cli: Cli) -> propcascade::Result<bool> {
    match cli.command {
        Command::Train(common) => {
            let cfg = common.resolve(Vec::new())?;
            let summary = pipeline::train(&cfg)?;
            println!("{summary}");
            Ok(true)
        }
        Command::Predict(common) => {
            let cfg = common.resolve(Vec::new())?;
            let outcome = pipeline::predict(&cfg)?;
            let mut clean = true;
            for err in outcome.errors() {
                eprintln!("error: {err}");
                clean = false;
            }
            println!("predictions: {}", outcome.predictions.len());
            Ok(clean)
        }
        Command::Evaluate(common) => {
            let cfg = common.resolve(Vec::new())?;
            let report = pipeline::evaluate(&cfg)?;
            println!("micro-F1 {:.6}", report.micro_f1);
            Ok(true)
        }
        Command::Sweep(sweep) => {
            let extra = [("m-min", &sweep.m_min), ("m-max", &sweep.m_max), ("step", &sweep.step)]
                .into_iter()
                .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
                .collect();
            let cfg = sweep.common.resolve(extra)?;
            for (m, f1) in pipeline::sweep(&cfg)? {
                println!("m={m:.6} micro-F1 {f1:.6}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err @ propcascade::Error::Usage(_)) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
