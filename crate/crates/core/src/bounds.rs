//! Closed-form staleness bounds.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant, truncated to ten decimals.
pub const EULER_GAMMA: f64 = 0.577_215_664_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub exact: f64,
    pub approx: f64,
}

impl Harmonic {
    /// `exact - approx`; the Euler–Maclaurin remainder is about `1/(2n)`.
    pub fn gap(&self) -> f64 {
        self.exact - self.approx
    }
}

/// `H_n = sum_{k=1}^n 1/k` and its `ln n + gamma` approximation.
pub fn harmonic(n: u64) -> Result<Harmonic> {
    if n == 0 {
        return Err(Error::Domain("harmonic number needs n >= 1".into()));
    }
    // Smallest terms first.
    let exact = (1..=n).rev().map(|k| 1.0 / k as f64).sum();
    Ok(Harmonic {
        exact,
        approx: (n as f64).ln() + EULER_GAMMA,
    })
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// Upper bound on steady-state expected staleness under uniform gossip:
/// `(mu_i / lambda_min) * H_{n-1}`.
pub fn lemma1_bound(mu_i: f64, lambda_min: f64, n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("bound needs n >= 2, got {n}")));
    }
    check_rate("mu_i", mu_i)?;
    check_rate("lambda_min", lambda_min)?;
    Ok(mu_i / lambda_min * harmonic(n - 1)?.exact)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thm2Bound {
    /// Per-update no-contact factor `exp(-(lambda_max/n)(c_max + 1/mu_min))`.
    pub q: f64,
    /// Fixed point `q/(1-q)` of `s' = (s + 1) q` started from zero.
    pub fixed_point: f64,
    /// `1/(1 - exp(-lambda_max/(n mu_min)))`.
    pub printed: f64,
}

/// Lower bound on expected staleness under the opportunistic
/// (freshest-node) scheme, in both the recursion's fixed-point form and the
/// closed form with `c_max` dropped.
pub fn thm2_lower_bound(lambda_max: f64, mu_min: f64, c_max: f64, n: u64) -> Result<Thm2Bound> {
    if n < 2 {
        return Err(Error::Domain(format!("bound needs n >= 2, got {n}")));
    }
    check_rate("lambda_max", lambda_max)?;
    check_rate("mu_min", mu_min)?;
    if !(c_max >= 0.0) || !c_max.is_finite() {
        return Err(Error::Domain(format!("c_max must be >= 0, got {c_max}")));
    }
    let nf = n as f64;
    let mean_gossip_time = (c_max + 1.0 / mu_min) / nf;
    let q = (-lambda_max * mean_gossip_time).exp();
    let q_printed = (-lambda_max / (nf * mu_min)).exp();
    if !(q < 1.0) || !(q_printed < 1.0) {
        return Err(Error::Domain(format!(
            "contact probability vanished (q = {q}); rates too small for f64"
        )));
    }
    // exp_m1 keeps precision when the exponent is tiny.
    let one_minus_q = -(-lambda_max * mean_gossip_time).exp_m1();
    let one_minus_qp = -(-lambda_max / (nf * mu_min)).exp_m1();
    Ok(Thm2Bound {
        q,
        fixed_point: q / one_minus_q,
        printed: 1.0 / one_minus_qp,
    })
}

/// All closed-form quantities for one network size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub n: u64,
    pub lemma1_upper: f64,
    pub thm2_fixed_point_lower: f64,
    pub thm2_printed: f64,
    /// Harmonic number `H_{n-1}` entering the upper bound.
    pub harmonic_exact: f64,
    pub harmonic_approx: f64,
}

impl BoundReport {
    pub fn new(mu: f64, lambda_min: f64, lambda_max: f64, c_max: f64, n: u64) -> Result<Self> {
        let h = harmonic(n.saturating_sub(1).max(1))?;
        let t2 = thm2_lower_bound(lambda_max, mu, c_max, n)?;
        Ok(Self {
            n,
            lemma1_upper: lemma1_bound(mu, lambda_min, n)?,
            thm2_fixed_point_lower: t2.fixed_point,
            thm2_printed: t2.printed,
            harmonic_exact: h.exact,
            harmonic_approx: h.approx,
        })
    }
}
