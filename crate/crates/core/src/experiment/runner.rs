//! Sweep execution for the three run modes.

use std::path::PathBuf;

use rayon::prelude::*;

use super::config::{ExperimentConfig, LambdaScaling, Mode};
use super::output::{emit_csv, BoundsRow, LossRow, StalenessRow};
use crate::bounds::BoundReport;
use crate::data::{build_shards, Dataset, DatasetSpec};
use crate::error::{Error, Result};
use crate::gossip::{NodeConfig, SchemeConfig};
use crate::learning::LossEvaluator;
use crate::sim::{SimSetup, Simulation, Step};

/// Per-node gossip rate for network size `n`. `loglog` is clamped below at
/// `lambda0` because `ln ln n <= 1` for small `n`. Networks with fewer than
/// two nodes never gossip and get `lambda0`.
pub fn resolve_lambda(scaling: LambdaScaling, lambda0: f64, n: usize) -> f64 {
    if n < 2 {
        return lambda0;
    }
    let nf = n as f64;
    match scaling {
        LambdaScaling::Const => lambda0,
        LambdaScaling::LogLog => lambda0 * nf.ln().ln().max(1.0),
        LambdaScaling::Log => lambda0 * nf.ln(),
        LambdaScaling::Linear => lambda0 * nf,
    }
}

/// One simulated configuration within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SweepPoint {
    pub n: usize,
    pub scaling: LambdaScaling,
    pub seed: u64,
}

/// Points in `n`, then scaling, then seed order.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for n in cfg.n_values() {
        for &scaling in &cfg.scalings {
            for &seed in &cfg.seeds {
                out.push(SweepPoint { n, scaling, seed });
            }
        }
    }
    out
}

/// Maps `f` over the points in parallel, keeping input order.
fn par_map<T, F>(cfg: &ExperimentConfig, points: &[SweepPoint], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&SweepPoint) -> Result<T> + Sync,
{
    let run = || points.par_iter().map(&f).collect::<Result<Vec<T>>>();
    match cfg.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

fn setup_for(cfg: &ExperimentConfig, p: &SweepPoint, burn_in: f64) -> Result<(SimSetup, f64)> {
    let lambda = resolve_lambda(p.scaling, cfg.lambda0, p.n);
    let nodes = vec![NodeConfig::new(cfg.mu, cfg.c, lambda, cfg.d)?; p.n];
    let scheme = SchemeConfig::for_nodes(cfg.scheme, cfg.relay, &nodes)?;
    Ok((
        SimSetup {
            nodes,
            scheme,
            seed: p.seed,
            burn_in,
        },
        lambda,
    ))
}

pub fn run_staleness_point(cfg: &ExperimentConfig, p: &SweepPoint) -> Result<StalenessRow> {
    let burn_in = cfg.burn_in();
    let (setup, lambda) = setup_for(cfg, p, burn_in)?;
    let mut sim = Simulation::new(setup)?;
    sim.run_until(cfg.horizon)?;
    let summary = sim.staleness_summary(cfg.horizon)?;
    let bounds = BoundReport::new(cfg.mu, lambda, lambda, cfg.c, p.n as u64)?;
    Ok(StalenessRow {
        mode: Mode::Staleness.name(),
        scheme: cfg.scheme.to_string(),
        n: p.n,
        scaling: p.scaling.to_string(),
        lambda0: cfg.lambda0,
        mu: cfg.mu,
        c: cfg.c,
        seed: p.seed,
        horizon: cfg.horizon,
        burn_in,
        mean_staleness: summary.mean,
        max_staleness: summary.max,
        lemma1_bound: bounds.lemma1_upper,
        thm2_fixed_point: bounds.thm2_fixed_point_lower,
        thm2_printed: bounds.thm2_printed,
    })
}

pub fn run_staleness(cfg: &ExperimentConfig) -> Result<Vec<StalenessRow>> {
    cfg.validate()?;
    par_map(cfg, &sweep_points(cfg), |p| run_staleness_point(cfg, p))
}

pub fn dataset_for(cfg: &ExperimentConfig, p: &SweepPoint) -> Result<Dataset> {
    let kind = cfg.predictor_kind()?;
    let spec = DatasetSpec {
        dim: cfg.dim,
        m: cfg.m.resolve(p.n),
        samples_per_user: cfg.samples_per_user,
        label_noise_sd: cfg.label_noise_sd,
        normalize: cfg.normalize,
        seed: p.seed,
    };
    build_shards(&spec, p.n, kind)
}

/// Trains until `epochs * n` updates have completed, logging one row per
/// epoch (plus epoch 0 before any update).
pub fn run_training_point(cfg: &ExperimentConfig, p: &SweepPoint) -> Result<Vec<LossRow>> {
    let ds = dataset_for(cfg, p)?;
    run_training_on(cfg, p, &ds)
}

pub fn run_training_on(
    cfg: &ExperimentConfig,
    p: &SweepPoint,
    ds: &Dataset,
) -> Result<Vec<LossRow>> {
    let (setup, _) = setup_for(cfg, p, 0.0)?;
    let eval = LossEvaluator::new(ds.dim(), ds.rows())?;
    let mut sim = Simulation::with_training(setup, ds, cfg.hyper)?;
    let n = p.n as u64;
    let checkpoint = |sim: &Simulation, epoch: u64| -> Result<LossRow> {
        let models = sim.models().unwrap_or_default();
        let losses = models
            .iter()
            .map(|m| eval.loss(ds.kind, &m.theta))
            .collect::<Result<Vec<_>>>()?;
        Ok(LossRow {
            mode: Mode::Train.name(),
            scheme: cfg.scheme.to_string(),
            n: p.n,
            scaling: p.scaling.to_string(),
            lambda0: cfg.lambda0,
            seed: p.seed,
            predictor: ds.kind.to_string(),
            m: ds.w_star.len(),
            epoch,
            mean_loss: losses.iter().sum::<f64>() / losses.len() as f64,
            max_loss: losses.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            sim_time: sim.now(),
            diverged: sim.skipped_updates() > 0,
        })
    };
    let mut rows = Vec::with_capacity(cfg.epochs as usize + 1);
    rows.push(checkpoint(&sim, 0)?);
    let target = cfg.epochs * n;
    while sim.total_updates() < target {
        match sim.step()? {
            Some(Step::Update { .. }) if sim.total_updates() % n == 0 => {
                let epoch = sim.total_updates() / n;
                rows.push(checkpoint(&sim, epoch)?);
            }
            Some(_) => {}
            None => {
                return Err(Error::Internal(
                    "event queue drained during training".into(),
                ))
            }
        }
    }
    Ok(rows)
}

pub fn run_training(cfg: &ExperimentConfig) -> Result<Vec<LossRow>> {
    cfg.validate()?;
    let per_point = par_map(cfg, &sweep_points(cfg), |p| {
        let ds = dataset_for(cfg, p)?;
        if cfg.dump_data {
            let path = cfg.out.join(format!("data_n{}_seed{}.csv", p.n, p.seed));
            std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
            ds.dump_csv(&path)?;
        }
        run_training_on(cfg, p, &ds)
    })?;
    Ok(per_point.into_iter().flatten().collect())
}

pub fn run_bounds(cfg: &ExperimentConfig) -> Result<Vec<BoundsRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for n in cfg.n_values() {
        for &scaling in &cfg.scalings {
            let lambda = resolve_lambda(scaling, cfg.lambda0, n);
            let b = BoundReport::new(cfg.mu, lambda, lambda, cfg.c, n as u64)?;
            rows.push(BoundsRow {
                mode: Mode::Bounds.name(),
                n,
                scaling: scaling.to_string(),
                lambda0: cfg.lambda0,
                lambda,
                mu: cfg.mu,
                c: cfg.c,
                lemma1_bound: b.lemma1_upper,
                harmonic_exact: b.harmonic_exact,
                harmonic_approx: b.harmonic_approx,
                harmonic_gap: b.harmonic_exact - b.harmonic_approx,
                thm2_fixed_point: b.thm2_fixed_point_lower,
                thm2_printed: b.thm2_printed,
            });
        }
    }
    Ok(rows)
}

/// Runs the configured mode and writes its CSV under `cfg.out`.
pub fn run(cfg: &ExperimentConfig) -> Result<(PathBuf, usize)> {
    let path = cfg.out.join(cfg.mode.csv_name());
    let count = match cfg.mode {
        Mode::Staleness => {
            let rows = run_staleness(cfg)?;
            emit_csv(&rows, &path)?;
            rows.len()
        }
        Mode::Train => {
            let rows = run_training(cfg)?;
            emit_csv(&rows, &path)?;
            rows.len()
        }
        Mode::Bounds => {
            let rows = run_bounds(cfg)?;
            emit_csv(&rows, &path)?;
            rows.len()
        }
    };
    Ok((path, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lambda_scalings() {
        assert_eq!(resolve_lambda(LambdaScaling::Const, 2.0, 77), 2.0);
        assert_relative_eq!(resolve_lambda(LambdaScaling::Log, 1.0, 20), 20f64.ln());
        assert_relative_eq!(
            resolve_lambda(LambdaScaling::Log, 1.0, 20),
            2.9957,
            epsilon = 1e-4
        );
        assert_eq!(resolve_lambda(LambdaScaling::Linear, 0.5, 100), 50.0);
        assert_eq!(resolve_lambda(LambdaScaling::LogLog, 1.5, 10), 1.5);
        assert_relative_eq!(
            resolve_lambda(LambdaScaling::LogLog, 1.0, 100_000),
            100_000f64.ln().ln()
        );
    }

    #[test]
    fn sweep_order() {
        let mut cfg = ExperimentConfig::new(Mode::Staleness);
        cfg.set("n", "4,8").unwrap();
        cfg.set("scaling", "const,log").unwrap();
        cfg.set("seeds", "1,2").unwrap();
        let pts = sweep_points(&cfg);
        assert_eq!(pts.len(), 8);
        assert_eq!(
            pts[0],
            SweepPoint {
                n: 4,
                scaling: LambdaScaling::Const,
                seed: 1
            }
        );
        assert_eq!(
            pts[3],
            SweepPoint {
                n: 4,
                scaling: LambdaScaling::Log,
                seed: 2
            }
        );
        assert_eq!(pts[4].n, 8);
    }

    #[test]
    fn zero_step_size_keeps_loss_flat() {
        let mut cfg = ExperimentConfig::new(Mode::Train);
        cfg.set("n", "4").unwrap();
        cfg.set("dim", "5").unwrap();
        cfg.set("samples_per_user", "20").unwrap();
        cfg.set("alpha", "0").unwrap();
        cfg.set("epochs", "5").unwrap();
        cfg.set("seeds", "3").unwrap();
        let rows = run_training(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.mean_loss == rows[0].mean_loss));
        assert_eq!(
            rows.iter().map(|r| r.epoch).collect::<Vec<_>>(),
            vec![0, 1, 2, 3, 4, 5]
        );
    }

    #[test]
    fn bounds_rows() {
        let mut cfg = ExperimentConfig::new(Mode::Bounds);
        cfg.set("n", "4,100").unwrap();
        let rows = run_bounds(&cfg).unwrap();
        assert_relative_eq!(rows[0].lemma1_bound, 11.0 / 6.0, epsilon = 1e-15);
        assert!(rows[1].harmonic_gap > 0.0 && rows[1].harmonic_gap <= 0.0051);
    }
}
