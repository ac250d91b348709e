use rand::distr::Open01;
use rand::Rng;

use crate::error::{Error, Result};

/// A deterministic delay followed by an exponential wait.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedExponential {
    shift: f64,
    rate: f64,
}

impl ShiftedExponential {
    pub fn new(shift: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Config(format!("rate must be positive, got {rate}")));
        }
        if !(shift >= 0.0) || !shift.is_finite() {
            return Err(Error::Config(format!(
                "shift must be non-negative, got {shift}"
            )));
        }
        Ok(Self { shift, rate })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(0.0, rate)
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        self.shift + 1.0 / self.rate
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.shift {
            0.0
        } else {
            1.0 - (-(x - self.shift) * self.rate).exp()
        }
    }

    /// Inverse-CDF sample. The uniform is drawn on the open interval, so the
    /// exponential part is strictly positive.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.shift - u.ln() / self.rate
    }
}
