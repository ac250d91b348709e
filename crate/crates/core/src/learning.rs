//! Predictors, squared loss, gradients, local SGD and pairwise mixing.

use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorKind {
    /// `f(x, theta) = x . theta`.
    Linear { dim: usize },
    /// `f(x, theta) = theta_1 x_1 + theta_1 theta_2 x_2`, two dimensions.
    Bilinear,
}

impl PredictorKind {
    pub fn dim(&self) -> usize {
        match *self {
            PredictorKind::Linear { dim } => dim,
            PredictorKind::Bilinear => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PredictorKind::Linear { .. } => "linear",
            PredictorKind::Bilinear => "bilinear",
        }
    }

    /// Builds a predictor from its name and requested dimension.
    pub fn from_name(name: &str, dim: usize) -> Result<Self> {
        match name.trim() {
            "linear" if dim >= 1 => Ok(PredictorKind::Linear { dim }),
            "linear" => Err(Error::Config("linear predictor needs dim >= 1".into())),
            "bilinear" | "nonlinear" if dim == 2 => Ok(PredictorKind::Bilinear),
            "bilinear" | "nonlinear" => Err(Error::Config(format!(
                "bilinear predictor requires dim = 2, got {dim}"
            ))),
            other => Err(Error::Config(format!("unknown predictor `{other}`"))),
        }
    }

    /// The predictor is linear in `x` with this effective weight vector.
    fn effective_weight(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            PredictorKind::Linear { .. } => theta.to_vec(),
            PredictorKind::Bilinear => vec![theta[0], theta[0] * theta[1]],
        }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSize {
    Full,
    Mini(usize),
}

impl FromStr for BatchSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(BatchSize::Full),
            v => match v.parse::<usize>() {
                Ok(b) if b >= 1 => Ok(BatchSize::Mini(b)),
                _ => Err(Error::Config(format!("invalid batch size `{v}`"))),
            },
        }
    }
}

impl fmt::Display for BatchSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BatchSize::Full => f.write_str("full"),
            BatchSize::Mini(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub alpha: f64,
    /// Scale the step size by `1/sqrt(k)` on a node's `k`-th update.
    pub decay: bool,
    /// SGD steps per update event.
    pub tau: usize,
    pub batch: BatchSize,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            decay: false,
            tau: 1,
            batch: BatchSize::Mini(32),
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if self.tau == 0 {
            return Err(Error::Config("tau must be >= 1".into()));
        }
        if self.batch == BatchSize::Mini(0) {
            return Err(Error::Config("batch must be >= 1".into()));
        }
        Ok(())
    }

    /// Step size for a node's `k`-th update (1-based).
    pub fn step_size(&self, k: u64) -> f64 {
        if self.decay {
            self.alpha / (k.max(1) as f64).sqrt()
        } else {
            self.alpha
        }
    }
}

/// A node's parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub node: usize,
    pub theta: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(node: usize, dim: usize) -> Self {
        Self {
            node,
            theta: vec![0.0; dim],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|v| v.is_finite())
    }
}

/// Row-major samples of one dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Samples {
    pub dim: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Samples {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            x: Vec::new(),
            y: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn push(&mut self, x: &[f64], y: f64) {
        debug_assert_eq!(x.len(), self.dim);
        self.x.extend_from_slice(x);
        self.y.push(y);
    }

    pub fn row(&self, k: usize) -> (&[f64], f64) {
        (&self.x[k * self.dim..(k + 1) * self.dim], self.y[k])
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.x
            .chunks_exact(self.dim.max(1))
            .zip(self.y.iter().copied())
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

pub fn predict(kind: PredictorKind, theta: &[f64], x: &[f64]) -> Result<f64> {
    check_dim(kind.dim(), theta.len())?;
    check_dim(kind.dim(), x.len())?;
    Ok(predict_unchecked(kind, theta, x))
}

#[inline]
fn predict_unchecked(kind: PredictorKind, theta: &[f64], x: &[f64]) -> f64 {
    match kind {
        PredictorKind::Linear { .. } => theta.iter().zip(x).map(|(t, v)| t * v).sum(),
        PredictorKind::Bilinear => theta[0] * x[0] + theta[0] * theta[1] * x[1],
    }
}

/// Mean squared residual over `data`.
pub fn loss<'a, I>(kind: PredictorKind, theta: &[f64], data: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a [f64], f64)>,
{
    check_dim(kind.dim(), theta.len())?;
    let (mut sum, mut count) = (0.0, 0usize);
    for (x, y) in data {
        check_dim(kind.dim(), x.len())?;
        let r = predict_unchecked(kind, theta, x) - y;
        sum += r * r;
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyData);
    }
    Ok(sum / count as f64)
}

/// Gradient of the mean squared residual over `batch`.
pub fn gradient<'a, I>(kind: PredictorKind, theta: &[f64], batch: I) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = (&'a [f64], f64)>,
{
    let mut g = vec![0.0; kind.dim()];
    let count = accumulate_gradient(kind, theta, batch, &mut g)?;
    if count == 0 {
        return Err(Error::EmptyData);
    }
    let scale = 1.0 / count as f64;
    g.iter_mut().for_each(|v| *v *= scale);
    Ok(g)
}

/// Adds the summed (unnormalized) gradient into `g`; returns the count.
fn accumulate_gradient<'a, I>(
    kind: PredictorKind,
    theta: &[f64],
    batch: I,
    g: &mut [f64],
) -> Result<usize>
where
    I: IntoIterator<Item = (&'a [f64], f64)>,
{
    check_dim(kind.dim(), theta.len())?;
    let mut count = 0;
    for (x, y) in batch {
        check_dim(kind.dim(), x.len())?;
        let r2 = 2.0 * (predict_unchecked(kind, theta, x) - y);
        match kind {
            PredictorKind::Linear { .. } => {
                for (gk, xk) in g.iter_mut().zip(x) {
                    *gk += r2 * xk;
                }
            }
            PredictorKind::Bilinear => {
                g[0] += r2 * (x[0] + theta[1] * x[1]);
                g[1] += r2 * theta[0] * x[1];
            }
        }
        count += 1;
    }
    Ok(count)
}

/// Runs `tau` SGD steps from `snapshot` on `shard` and returns the end point.
/// Each step draws its mini-batch uniformly with replacement.
pub fn local_update<R: Rng + ?Sized>(
    kind: PredictorKind,
    snapshot: &[f64],
    shard: &Samples,
    hyper: &HyperParams,
    alpha: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_dim(kind.dim(), snapshot.len())?;
    check_dim(kind.dim(), shard.dim)?;
    if shard.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut theta = snapshot.to_vec();
    let mut g = vec![0.0; kind.dim()];
    let mut picks = Vec::new();
    for _ in 0..hyper.tau {
        g.iter_mut().for_each(|v| *v = 0.0);
        let count = match hyper.batch {
            BatchSize::Mini(b) if b < shard.len() => {
                picks.clear();
                picks.extend((0..b).map(|_| rng.random_range(0..shard.len())));
                accumulate_gradient(kind, &theta, picks.iter().map(|&k| shard.row(k)), &mut g)?
            }
            _ => accumulate_gradient(kind, &theta, shard.rows(), &mut g)?,
        };
        let step = alpha / count as f64;
        for (t, gk) in theta.iter_mut().zip(&g) {
            *t -= step * gk;
        }
    }
    Ok(theta)
}

/// `receiver <- beta * receiver + (1 - beta) * sender`.
pub fn mix_with_beta(receiver: &mut [f64], sender: &[f64], beta: f64) -> Result<()> {
    check_dim(receiver.len(), sender.len())?;
    for (r, s) in receiver.iter_mut().zip(sender) {
        *r = beta * *r + (1.0 - beta) * s;
    }
    Ok(())
}

/// Mixing with `beta` drawn uniformly on the open unit interval.
pub fn mix<R: Rng + ?Sized>(receiver: &mut [f64], sender: &[f64], rng: &mut R) -> Result<f64> {
    let beta: f64 = rng.sample(Open01);
    mix_with_beta(receiver, sender, beta)?;
    Ok(beta)
}

/// Loss on a fixed data set through its second moments, so each evaluation
/// costs O(d^2) instead of O(|D| d). Valid for both predictor kinds since
/// they are linear in `x`.
#[derive(Debug, Clone)]
pub struct LossEvaluator {
    dim: usize,
    /// `X^T X / |D|`, row-major.
    gram: Vec<f64>,
    /// `X^T y / |D|`.
    xty: Vec<f64>,
    /// `y^T y / |D|`.
    yty: f64,
}

impl LossEvaluator {
    pub fn new<'a, I>(dim: usize, data: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [f64], f64)>,
    {
        let mut gram = vec![0.0; dim * dim];
        let mut xty = vec![0.0; dim];
        let (mut yty, mut count) = (0.0, 0usize);
        for (x, y) in data {
            check_dim(dim, x.len())?;
            for a in 0..dim {
                let xa = x[a];
                xty[a] += xa * y;
                let row = &mut gram[a * dim..(a + 1) * dim];
                for (g, xb) in row.iter_mut().zip(x) {
                    *g += xa * xb;
                }
            }
            yty += y * y;
            count += 1;
        }
        if count == 0 {
            return Err(Error::EmptyData);
        }
        let inv = 1.0 / count as f64;
        gram.iter_mut().for_each(|v| *v *= inv);
        xty.iter_mut().for_each(|v| *v *= inv);
        Ok(Self {
            dim,
            gram,
            xty,
            yty: yty * inv,
        })
    }

    pub fn loss(&self, kind: PredictorKind, theta: &[f64]) -> Result<f64> {
        check_dim(self.dim, kind.dim())?;
        check_dim(self.dim, theta.len())?;
        let w = kind.effective_weight(theta);
        let d = self.dim;
        let mut quad = 0.0;
        for a in 0..d {
            let row = &self.gram[a * d..(a + 1) * d];
            quad += w[a] * row.iter().zip(&w).map(|(g, wb)| g * wb).sum::<f64>();
        }
        let lin: f64 = self.xty.iter().zip(&w).map(|(b, wa)| b * wa).sum();
        // Rounding can push an exact fit slightly below zero.
        Ok((quad - 2.0 * lin + self.yty).max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, RngStream};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn linear(d: usize) -> PredictorKind {
        PredictorKind::Linear { dim: d }
    }

    fn random_samples(dim: usize, count: usize, seed: u64) -> Samples {
        let mut rng = RngStream::new(seed, 0, Purpose::Test);
        let mut s = Samples::new(dim);
        for _ in 0..count {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            s.push(&x, rng.random_range(-3.0..3.0));
        }
        s
    }

    #[test]
    fn predict_basics() {
        assert_eq!(
            predict(linear(3), &[0.0; 3], &[4.0, -1.0, 2.0]).unwrap(),
            0.0
        );
        assert_eq!(
            predict(PredictorKind::Bilinear, &[1.0, 1.0], &[1.0, 1.0]).unwrap(),
            2.0
        );
        assert_eq!(
            predict(linear(4), &[0.0, 0.0, 1.0, 0.0], &[5.0, 6.0, 7.0, 8.0]).unwrap(),
            7.0
        );
        assert!(matches!(
            predict(linear(3), &[0.0; 2], &[0.0; 3]),
            Err(Error::Dimension {
                expected: 3,
                found: 2
            })
        ));
    }

    #[test]
    fn predictor_names() {
        assert_eq!(
            PredictorKind::from_name("linear", 100).unwrap(),
            linear(100)
        );
        assert_eq!(
            PredictorKind::from_name("bilinear", 2).unwrap(),
            PredictorKind::Bilinear
        );
        assert!(PredictorKind::from_name("bilinear", 3).is_err());
        assert!(PredictorKind::from_name("mlp", 3).is_err());
    }

    #[test]
    fn loss_values() {
        let mut s = Samples::new(1);
        s.push(&[3.0], 1.0);
        assert_eq!(loss(linear(1), &[1.0], s.rows()).unwrap(), 4.0);
        assert!(matches!(
            loss(linear(1), &[1.0], Samples::new(1).rows()),
            Err(Error::EmptyData)
        ));
    }

    #[test]
    fn loss_at_ground_truth_is_zero() {
        let w = [0.3, -0.7, 1.1];
        let mut s = random_samples(3, 50, 9);
        for k in 0..s.len() {
            let y = predict(linear(3), &w, s.row(k).0).unwrap();
            s.y[k] = y;
        }
        assert!(loss(linear(3), &w, s.rows()).unwrap() < 1e-28);
        let g = gradient(linear(3), &w, s.rows()).unwrap();
        assert!(g.iter().all(|v| v.abs() <= 1e-10));
    }

    #[test]
    fn global_loss_is_mean_of_equal_shard_losses() {
        let all = random_samples(4, 400, 3);
        let theta = [0.5, -0.1, 0.2, 1.0];
        let global = loss(linear(4), &theta, all.rows()).unwrap();
        let per_shard: f64 = (0..8)
            .map(|s| {
                let rows = (s * 50..(s + 1) * 50).map(|k| all.row(k));
                loss(linear(4), &theta, rows).unwrap()
            })
            .sum::<f64>()
            / 8.0;
        assert_relative_eq!(global, per_shard, max_relative = 1e-12);
    }

    #[test]
    fn single_sample_linear_gradient() {
        let mut s = Samples::new(5);
        s.push(&[1.0, 0.0, 0.0, 0.0, 0.0], 2.0);
        let g = gradient(linear(5), &[0.0; 5], s.rows()).unwrap();
        assert_eq!(g, vec![-4.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            gradient(linear(5), &[0.0; 5], Samples::new(5).rows()),
            Err(Error::EmptyData)
        ));
    }

    #[test]
    fn one_full_batch_step_by_hand() {
        // Two samples: x = (1, 0), y = 1 and x = (1, 2), y = 3; theta = 0.
        // grad = (2/2) * [(-1)(1,0) + (-3)(1,2)] = (-4, -6).
        let mut s = Samples::new(2);
        s.push(&[1.0, 0.0], 1.0);
        s.push(&[1.0, 2.0], 3.0);
        let hyper = HyperParams {
            alpha: 0.1,
            tau: 1,
            batch: BatchSize::Full,
            decay: false,
        };
        let mut rng = RngStream::new(0, 0, Purpose::Sgd);
        let out = local_update(linear(2), &[0.0, 0.0], &s, &hyper, 0.1, &mut rng).unwrap();
        assert_relative_eq!(out[0], 0.4, epsilon = 1e-15);
        assert_relative_eq!(out[1], 0.6, epsilon = 1e-15);
    }

    #[test]
    fn zero_step_size_keeps_theta() {
        let s = random_samples(3, 20, 1);
        let mut rng = RngStream::new(0, 0, Purpose::Sgd);
        let hyper = HyperParams::default();
        let out = local_update(linear(3), &[1.0, 2.0, 3.0], &s, &hyper, 0.0, &mut rng).unwrap();
        assert_eq!(out, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn step_size_decay() {
        let h = HyperParams {
            decay: true,
            alpha: 0.4,
            ..HyperParams::default()
        };
        assert_eq!(h.step_size(1), 0.4);
        assert_eq!(h.step_size(4), 0.2);
        assert_eq!(HyperParams::default().step_size(100), 0.01);
    }

    #[test]
    fn batch_parsing() {
        assert_eq!("full".parse::<BatchSize>().unwrap(), BatchSize::Full);
        assert_eq!("32".parse::<BatchSize>().unwrap(), BatchSize::Mini(32));
        assert!("0".parse::<BatchSize>().is_err());
    }

    #[test]
    fn mix_midpoint_and_fixed_point() {
        let mut a = [1.0, 1.0];
        mix_with_beta(&mut a, &[3.0, 3.0], 0.5).unwrap();
        assert_eq!(a, [2.0, 2.0]);
        let mut rng = RngStream::new(0, 0, Purpose::Mix);
        let mut b = [0.25, -4.0];
        mix(&mut b, &[0.25, -4.0], &mut rng).unwrap();
        assert_eq!(b, [0.25, -4.0]);
        assert!(mix_with_beta(&mut b, &[1.0], 0.5).is_err());
    }

    #[test]
    fn evaluator_matches_direct_loss() {
        let s = random_samples(2, 300, 17);
        let ev = LossEvaluator::new(2, s.rows()).unwrap();
        for theta in [[0.0, 0.0], [0.4, -1.2], [2.0, 3.0]] {
            for kind in [linear(2), PredictorKind::Bilinear] {
                let direct = loss(kind, &theta, s.rows()).unwrap();
                assert_relative_eq!(ev.loss(kind, &theta).unwrap(), direct, max_relative = 1e-10);
            }
        }
    }

    proptest! {
        #[test]
        fn mix_is_a_convex_combination(
            a in prop::collection::vec(-1e3f64..1e3, 6),
            b in prop::collection::vec(-1e3f64..1e3, 6),
            seed in any::<u64>(),
        ) {
            let mut rng = RngStream::new(seed, 0, Purpose::Mix);
            let mut r = a.clone();
            let beta = mix(&mut r, &b, &mut rng).unwrap();
            prop_assert!(beta > 0.0 && beta < 1.0);
            let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            prop_assert!(inf(&r) <= inf(&a).max(inf(&b)) * (1.0 + 1e-15));
            for k in 0..6 {
                let (lo, hi) = (a[k].min(b[k]), a[k].max(b[k]));
                prop_assert!(r[k] >= lo - 1e-12 && r[k] <= hi + 1e-12);
            }
        }
    }
}
