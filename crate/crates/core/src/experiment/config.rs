//! Experiment configuration: defaults, `key = value` files with
//! `[section]` headers, and per-key overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gossip::{Relay, Scheme};
use crate::learning::{BatchSize, HyperParams, PredictorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Staleness,
    Train,
    Bounds,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Staleness => "staleness",
            Mode::Train => "train",
            Mode::Bounds => "bounds",
        }
    }

    /// Output file name for this mode's rows.
    pub fn csv_name(&self) -> &'static str {
        match self {
            Mode::Staleness => "staleness.csv",
            Mode::Train => "loss.csv",
            Mode::Bounds => "bounds.csv",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "staleness" => Ok(Mode::Staleness),
            "train" => Ok(Mode::Train),
            "bounds" => Ok(Mode::Bounds),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

/// How the per-node gossip rate grows with the network size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LambdaScaling {
    Const,
    LogLog,
    Log,
    Linear,
}

impl LambdaScaling {
    pub fn name(&self) -> &'static str {
        match self {
            LambdaScaling::Const => "const",
            LambdaScaling::LogLog => "loglog",
            LambdaScaling::Log => "log",
            LambdaScaling::Linear => "linear",
        }
    }
}

impl fmt::Display for LambdaScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LambdaScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "const" => Ok(LambdaScaling::Const),
            "loglog" => Ok(LambdaScaling::LogLog),
            "log" => Ok(LambdaScaling::Log),
            "linear" => Ok(LambdaScaling::Linear),
            other => Err(Error::Config(format!("unknown scaling `{other}`"))),
        }
    }
}

/// Number of distinct data distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistCount {
    Fixed(usize),
    /// One distribution per user (`m = n`).
    PerUser,
}

impl DistCount {
    pub fn resolve(&self, n: usize) -> usize {
        match *self {
            DistCount::Fixed(m) => m,
            DistCount::PerUser => n,
        }
    }
}

impl FromStr for DistCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "n" => Ok(DistCount::PerUser),
            v => v
                .parse()
                .ok()
                .filter(|&m| m >= 1)
                .map(DistCount::Fixed)
                .ok_or_else(|| Error::Config(format!("invalid m `{v}`"))),
        }
    }
}

impl fmt::Display for DistCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistCount::Fixed(m) => write!(f, "{m}"),
            DistCount::PerUser => f.write_str("n"),
        }
    }
}

pub const DEFAULT_STALENESS_N: [usize; 7] = [2, 4, 8, 16, 32, 64, 128];
pub const DEFAULT_TRAIN_N: [usize; 3] = [10, 50, 100];
/// Fraction of the horizon discarded when no burn-in is configured.
pub const DEFAULT_BURN_IN_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub scheme: Scheme,
    pub relay: Relay,
    /// Network sizes; `None` picks the mode's default grid.
    pub n: Option<Vec<usize>>,
    pub scalings: Vec<LambdaScaling>,
    pub lambda0: f64,
    pub mu: f64,
    pub c: f64,
    pub d: f64,
    pub horizon: f64,
    /// `None` means the default fraction of the horizon.
    pub burn_in: Option<f64>,
    pub seeds: Vec<u64>,
    pub predictor: String,
    pub dim: usize,
    pub m: DistCount,
    pub samples_per_user: usize,
    pub label_noise_sd: f64,
    pub normalize: bool,
    pub hyper: HyperParams,
    pub epochs: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub dump_data: bool,
}

impl ExperimentConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            scheme: Scheme::Uniform,
            relay: Relay::default(),
            n: None,
            scalings: vec![LambdaScaling::Const],
            lambda0: 1.0,
            mu: 1.0,
            c: 0.0,
            d: 0.0,
            horizon: 10_000.0,
            burn_in: None,
            seeds: (0..5).collect(),
            predictor: "linear".into(),
            dim: 100,
            m: DistCount::Fixed(1),
            samples_per_user: 200,
            label_noise_sd: 0.0,
            normalize: false,
            hyper: HyperParams::default(),
            epochs: 100,
            out: PathBuf::from("results"),
            threads: None,
            dump_data: false,
        }
    }

    /// Defaults overlaid with a config file.
    pub fn from_file(mode: Mode, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::new(mode);
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn n_values(&self) -> Vec<usize> {
        match &self.n {
            Some(v) => v.clone(),
            None if self.mode == Mode::Train => DEFAULT_TRAIN_N.to_vec(),
            None => DEFAULT_STALENESS_N.to_vec(),
        }
    }

    pub fn burn_in(&self) -> f64 {
        self.burn_in
            .unwrap_or(DEFAULT_BURN_IN_FRACTION * self.horizon)
    }

    pub fn predictor_kind(&self) -> Result<PredictorKind> {
        PredictorKind::from_name(&self.predictor, self.dim)
    }

    /// Parses `key = value` lines grouped under `[section]` headers.
    /// `#` and `;` start comments.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut section: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split(['#', ';']).next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: format!("unterminated section header `{line}`"),
                })?;
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("unknown section `[{name}]`"),
                    });
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            if let (Some(sec), Some(home)) = (&section, section_of(key)) {
                if sec != home {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("key `{key}` belongs in [{home}], found in [{sec}]"),
                    });
                }
            }
            self.set(key, value.trim()).map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Sets one key. Also accepts `section.key`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = match key.split_once('.') {
            Some((sec, k)) if section_of(k) == Some(sec) => k,
            Some(_) => return Err(Error::Config(format!("unknown key `{key}`"))),
            None => key,
        };
        let bad = |what: &str| Error::Config(format!("invalid {what} `{value}` for `{key}`"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad("number"));
        let int = |v: &str| v.trim().parse::<usize>().map_err(|_| bad("integer"));
        match key {
            "n" => self.n = Some(parse_list(value, int)?),
            "scheme" => self.scheme = value.parse()?,
            "relay" => self.relay = value.parse()?,
            "scaling" => self.scalings = parse_list(value, |v| v.parse())?,
            "lambda0" => self.lambda0 = num(value)?,
            "mu" => self.mu = num(value)?,
            "c" => self.c = num(value)?,
            "d" => self.d = num(value)?,
            "horizon" => self.horizon = num(value)?,
            "burn_in" => self.burn_in = Some(num(value)?),
            "seeds" => self.seeds = parse_seeds(value).ok_or_else(|| bad("seed list"))?,
            "out" => self.out = PathBuf::from(value),
            "threads" => self.threads = Some(int(value)?),
            "dump_data" => self.dump_data = parse_bool(value).ok_or_else(|| bad("flag"))?,
            "predictor" => self.predictor = value.to_string(),
            "dim" => self.dim = int(value)?,
            "m" => self.m = value.parse()?,
            "samples_per_user" => self.samples_per_user = int(value)?,
            "label_noise_sd" => self.label_noise_sd = num(value)?,
            "normalize" => self.normalize = parse_bool(value).ok_or_else(|| bad("flag"))?,
            "alpha" => self.hyper.alpha = num(value)?,
            "alpha_decay" => self.hyper.decay = parse_bool(value).ok_or_else(|| bad("flag"))?,
            "tau" => self.hyper.tau = int(value)?,
            "batch" => self.hyper.batch = value.parse::<BatchSize>()?,
            "epochs" => self.epochs = int(value)? as u64,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let ns = self.n_values();
        if ns.is_empty() || self.scalings.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config(
                "n, scaling and seeds lists must be non-empty".into(),
            ));
        }
        let min_n = if self.mode == Mode::Train { 1 } else { 2 };
        if let Some(&bad) = ns.iter().find(|&&n| n < min_n) {
            return Err(Error::Config(format!(
                "{} mode needs n >= {min_n}, got {bad}",
                self.mode
            )));
        }
        let positive = [("lambda0", self.lambda0), ("mu", self.mu)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("c", self.c), ("d", self.d)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.mode == Mode::Staleness && !(self.horizon > self.burn_in()) {
            return Err(Error::Estimation(format!(
                "horizon {} must exceed burn-in {}",
                self.horizon,
                self.burn_in()
            )));
        }
        if self.mode == Mode::Train {
            let kind = self.predictor_kind()?;
            self.hyper.validate()?;
            if self.epochs == 0 {
                return Err(Error::Config("epochs must be >= 1".into()));
            }
            if self.samples_per_user == 0 {
                return Err(Error::Config("samples_per_user must be >= 1".into()));
            }
            if let DistCount::Fixed(m) = self.m {
                if let Some(&n) = ns.iter().find(|&&n| m > n) {
                    return Err(Error::Config(format!("m = {m} exceeds n = {n}")));
                }
            }
            debug_assert_eq!(kind.dim(), self.dim);
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        Ok(())
    }
}

const SECTIONS: [&str; 4] = ["network", "run", "dataset", "train"];

fn section_of(key: &str) -> Option<&'static str> {
    Some(match key {
        "n" | "scheme" | "relay" | "scaling" | "lambda0" | "mu" | "c" | "d" => "network",
        "horizon" | "burn_in" | "seeds" | "out" | "threads" | "dump_data" => "run",
        "predictor" | "dim" | "m" | "samples_per_user" | "label_noise_sd" | "normalize" => {
            "dataset"
        }
        "alpha" | "alpha_decay" | "tau" | "batch" | "epochs" => "train",
        _ => return None,
    })
}

fn parse_list<T>(value: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

/// Comma-separated seeds; `a..b` expands to the half-open range.
fn parse_seeds(value: &str) -> Option<Vec<u64>> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (a.trim().parse::<u64>().ok()?, b.trim().parse::<u64>().ok()?);
                out.extend(a..b);
            }
            None => out.push(part.parse().ok()?),
        }
    }
    Some(out)
}

fn parse_bool(value: &str) -> Option<bool> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sectioned_file() {
        let text = "\
# staleness sweep
[network]
n = 4, 8 ,16
scaling = const,log
scheme = opportunistic   ; comment
mu = 2

[run]
horizon = 500
seeds = 0..3, 10
";
        let mut cfg = ExperimentConfig::new(Mode::Staleness);
        cfg.apply_text(text).unwrap();
        assert_eq!(cfg.n, Some(vec![4, 8, 16]));
        assert_eq!(cfg.scalings, vec![LambdaScaling::Const, LambdaScaling::Log]);
        assert_eq!(cfg.scheme, Scheme::Opportunistic);
        assert_eq!(cfg.mu, 2.0);
        assert_eq!(cfg.seeds, vec![0, 1, 2, 10]);
        assert_eq!(cfg.burn_in(), 100.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_misplaced_and_unknown_keys() {
        let mut cfg = ExperimentConfig::new(Mode::Train);
        let err = cfg.apply_text("[run]\nalpha = 0.1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(cfg.apply_text("[weird]\n").is_err());
        assert!(cfg.apply_text("bogus = 1\n").is_err());
        assert!(cfg.apply_text("novalue\n").is_err());
        assert!(cfg.set("train.alpha", "0.5").is_ok());
        assert_eq!(cfg.hyper.alpha, 0.5);
        assert!(cfg.set("run.alpha", "0.5").is_err());
    }

    #[test]
    fn mode_default_grids() {
        assert_eq!(
            ExperimentConfig::new(Mode::Train).n_values(),
            vec![10, 50, 100]
        );
        assert_eq!(
            ExperimentConfig::new(Mode::Staleness).n_values(),
            DEFAULT_STALENESS_N.to_vec()
        );
    }

    #[test]
    fn validation_errors() {
        let mut cfg = ExperimentConfig::new(Mode::Staleness);
        cfg.horizon = 100.0;
        cfg.burn_in = Some(100.0);
        assert!(matches!(cfg.validate(), Err(Error::Estimation(_))));

        let mut cfg = ExperimentConfig::new(Mode::Train);
        cfg.set("m", "20").unwrap();
        assert!(cfg.validate().is_err());
        cfg.set("m", "n").unwrap();
        cfg.validate().unwrap();
        cfg.set("predictor", "bilinear").unwrap();
        assert!(cfg.validate().is_err());
        cfg.set("dim", "2").unwrap();
        cfg.validate().unwrap();

        let mut cfg = ExperimentConfig::new(Mode::Staleness);
        cfg.set("n", "1,4").unwrap();
        assert!(cfg.validate().is_err());
        cfg.set("seeds", "").unwrap();
        assert!(cfg.validate().is_err());
    }
}
