//! Synthetic Gaussian-mixture regression data, sharded equally over users.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::learning::{predict, PredictorKind, Samples};
use crate::rng::{Purpose, RngStream};

/// Offset of the mixture components along `w*`, scaled by `1/d`.
pub const MIXTURE_OFFSET: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub dim: usize,
    /// Number of distinct ground-truth vectors.
    pub m: usize,
    pub samples_per_user: usize,
    pub label_noise_sd: f64,
    pub normalize: bool,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            dim: 100,
            m: 1,
            samples_per_user: 200,
            label_noise_sd: 0.0,
            normalize: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shard {
    pub owner: usize,
    pub dist_id: usize,
    pub samples: Samples,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub kind: PredictorKind,
    pub shards: Vec<Shard>,
    /// Ground truth per distribution, in the unnormalized feature space.
    pub w_star: Vec<Vec<f64>>,
    /// Global factor applied to every feature row and label.
    pub scale: f64,
}

impl Dataset {
    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn len(&self) -> usize {
        self.shards.iter().map(|s| s.samples.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every sample, shard by shard.
    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.shards.iter().flat_map(|s| s.samples.rows())
    }

    /// Writes `dist_id,x_1..x_d,y` rows.
    pub fn dump_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let d = self.dim();
        let mut header = vec!["dist_id".to_string()];
        header.extend((1..=d).map(|k| format!("x_{k}")));
        header.push("y".into());
        w.write_record(&header).map_err(|e| Error::csv(path, e))?;
        for shard in &self.shards {
            for (x, y) in shard.samples.rows() {
                let mut rec = Vec::with_capacity(d + 2);
                rec.push(shard.dist_id.to_string());
                rec.extend(x.iter().map(|v| v.to_string()));
                rec.push(y.to_string());
                w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Loads a dump written by [`Dataset::dump_csv`] as `(dist_id, samples)`
/// rows in file order.
pub fn load_csv(path: &Path) -> Result<Vec<(usize, Samples)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let dim = r
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .len()
        .saturating_sub(2);
    let mut out: Vec<(usize, Samples)> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let num = |k: usize| -> Result<f64> {
            rec[k].parse().map_err(|_| {
                Error::Config(format!("bad number `{}` in {}", &rec[k], path.display()))
            })
        };
        let dist_id: usize = rec[0]
            .parse()
            .map_err(|_| Error::Config(format!("bad dist_id `{}`", &rec[0])))?;
        let x = (1..=dim).map(num).collect::<Result<Vec<_>>>()?;
        let y = num(dim + 1)?;
        let mut s = Samples::new(dim);
        s.push(&x, y);
        out.push((dist_id, s));
    }
    Ok(out)
}

/// Ground truth with i.i.d. `Uniform[0, 1]` components.
pub fn sample_w_star<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(0.0..=1.0)).collect()
}

/// One draw from the symmetric mixture
/// `N(+(1.5/d) w*, I) / 2 + N(-(1.5/d) w*, I) / 2`, labelled by `f(x, w*)`.
pub fn sample_point<R: Rng + ?Sized>(
    kind: PredictorKind,
    w_star: &[f64],
    label_noise_sd: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    let d = kind.dim();
    if w_star.len() != d {
        return Err(Error::Dimension {
            expected: d,
            found: w_star.len(),
        });
    }
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let offset = sign * MIXTURE_OFFSET / d as f64;
    let x: Vec<f64> = w_star
        .iter()
        .map(|w| offset * w + rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut y = predict(kind, w_star, &x)?;
    if label_noise_sd > 0.0 {
        y += label_noise_sd * rng.sample::<f64, _>(StandardNormal);
    }
    Ok((x, y))
}

/// Builds `n` equal shards. User `i` draws from distribution `i mod m`.
pub fn build_shards(spec: &DatasetSpec, n: usize, kind: PredictorKind) -> Result<Dataset> {
    if spec.dim != kind.dim() {
        return Err(Error::Config(format!(
            "dataset dim {} does not match {kind} predictor dim {}",
            spec.dim,
            kind.dim()
        )));
    }
    if spec.m == 0 || spec.m > n {
        return Err(Error::Config(format!(
            "need 1 <= m <= n, got m = {}, n = {n}",
            spec.m
        )));
    }
    if spec.samples_per_user == 0 {
        return Err(Error::Config("samples_per_user must be >= 1".into()));
    }
    if !(spec.label_noise_sd >= 0.0) {
        return Err(Error::Config("label_noise_sd must be >= 0".into()));
    }
    let w_star: Vec<Vec<f64>> = (0..spec.m)
        .map(|ell| {
            sample_w_star(
                spec.dim,
                &mut RngStream::new(spec.seed, ell, Purpose::WStar),
            )
        })
        .collect();
    let mut shards = Vec::with_capacity(n);
    for owner in 0..n {
        let dist_id = owner % spec.m;
        let mut rng = RngStream::new(spec.seed, owner, Purpose::Data);
        let mut samples = Samples::new(spec.dim);
        for _ in 0..spec.samples_per_user {
            let (x, y) = sample_point(kind, &w_star[dist_id], spec.label_noise_sd, &mut rng)?;
            samples.push(&x, y);
        }
        shards.push(Shard {
            owner,
            dist_id,
            samples,
        });
    }
    let mut scale = 1.0;
    if spec.normalize {
        let max_norm = shards
            .iter()
            .flat_map(|s| s.samples.rows())
            .map(|(x, _)| x.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if max_norm > 0.0 {
            scale = 1.0 / max_norm;
            for s in &mut shards {
                s.samples.x.iter_mut().for_each(|v| *v *= scale);
                s.samples.y.iter_mut().for_each(|v| *v *= scale);
            }
        }
    }
    Ok(Dataset {
        kind,
        shards,
        w_star,
        scale,
    })
}
