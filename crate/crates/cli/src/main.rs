use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use gossipsim_core::experiment::{run, ExperimentConfig, Mode};

/// Simulate staleness and learning under asynchronous gossip.
#[derive(Parser, Debug)]
#[command(name = "gossipsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep time-average staleness and compare with the analytic bounds.
    Staleness(Overrides),
    /// Train per-node models over the gossip network and record loss curves.
    Train(Overrides),
    /// Tabulate the analytic bounds without simulating.
    Bounds(Overrides),
}

/// Every config key is also a flag; flags override the file.
#[derive(Args, Debug)]
struct Overrides {
    /// Config file with `key = value` lines under `[section]` headers.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Network sizes, comma separated.
    #[arg(long)]
    n: Option<String>,
    /// uniform | opportunistic
    #[arg(long)]
    scheme: Option<String>,
    /// What an opportunistic transmission carries: own | column
    #[arg(long)]
    relay: Option<String>,
    /// Gossip rate scaling in n, comma separated: const | loglog | log | linear
    #[arg(long)]
    scaling: Option<String>,
    /// Base gossip rate before scaling.
    #[arg(long)]
    lambda0: Option<String>,
    /// Update rate.
    #[arg(long)]
    mu: Option<String>,
    /// Computation delay added to each update.
    #[arg(long)]
    c: Option<String>,
    /// Minimum delay between transmissions of one node.
    #[arg(long)]
    d: Option<String>,

    /// Simulated time per run.
    #[arg(long)]
    horizon: Option<String>,
    /// Initial time excluded from averages; defaults to a fifth of the horizon.
    #[arg(long, alias = "burn_in")]
    burn_in: Option<String>,
    /// Seeds as a list (`1,2,3`) or a half-open range (`0..5`).
    #[arg(long)]
    seeds: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    /// Also write each generated dataset as CSV.
    #[arg(long, alias = "dump_data", num_args = 0..=1, default_missing_value = "true")]
    dump_data: Option<String>,

    /// linear | bilinear
    #[arg(long)]
    predictor: Option<String>,
    /// Feature dimension of the linear predictor.
    #[arg(long)]
    dim: Option<String>,
    /// Number of data distributions, or `n` for one per node.
    #[arg(long)]
    m: Option<String>,
    #[arg(long, alias = "samples_per_user")]
    samples_per_user: Option<String>,
    #[arg(long, alias = "label_noise_sd")]
    label_noise_sd: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    normalize: Option<String>,

    #[arg(long)]
    alpha: Option<String>,
    #[arg(long, alias = "alpha_decay", num_args = 0..=1, default_missing_value = "true")]
    alpha_decay: Option<String>,
    /// Local SGD steps per update.
    #[arg(long)]
    tau: Option<String>,
    /// Mini-batch size or `full`.
    #[arg(long)]
    batch: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> [(&'static str, &Option<String>); 25] {
        [
            ("n", &self.n),
            ("scheme", &self.scheme),
            ("relay", &self.relay),
            ("scaling", &self.scaling),
            ("lambda0", &self.lambda0),
            ("mu", &self.mu),
            ("c", &self.c),
            ("d", &self.d),
            ("horizon", &self.horizon),
            ("burn_in", &self.burn_in),
            ("seeds", &self.seeds),
            ("out", &self.out),
            ("threads", &self.threads),
            ("dump_data", &self.dump_data),
            ("predictor", &self.predictor),
            ("dim", &self.dim),
            ("m", &self.m),
            ("samples_per_user", &self.samples_per_user),
            ("label_noise_sd", &self.label_noise_sd),
            ("normalize", &self.normalize),
            ("alpha", &self.alpha),
            ("alpha_decay", &self.alpha_decay),
            ("tau", &self.tau),
            ("batch", &self.batch),
            ("epochs", &self.epochs),
        ]
    }

    fn build(&self, mode: Mode) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(mode, path)
                .with_context(|| format!("reading config {}", path.display()))?,
            None => ExperimentConfig::new(mode),
        };
        for (key, value) in self.pairs() {
            if let Some(v) = value {
                cfg.set(key, v)
                    .with_context(|| format!("--{}", key.replace('_', "-")))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, overrides) = match &cli.command {
        Command::Staleness(o) => (Mode::Staleness, o),
        Command::Train(o) => (Mode::Train, o),
        Command::Bounds(o) => (Mode::Bounds, o),
    };
    let result = overrides.build(mode).and_then(|cfg| Ok(run(&cfg)?));
    match result {
        Ok((path, rows)) => {
            println!("wrote {rows} rows to {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
