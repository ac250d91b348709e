//! Communication schemes: uniform randomized gossip and the opportunistic
//! freshest-node scheme.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::event::{EventKind, EventQueue};
use crate::timing::ShiftedExponential;

/// Per-node rates and delays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeConfig {
    /// Update rate after the availability wait.
    pub mu: f64,
    /// Gradient computation delay.
    pub c: f64,
    /// Gossip rate.
    pub lambda: f64,
    /// Deterministic sender unavailability before each gossip wait.
    pub d: f64,
}

impl NodeConfig {
    pub fn new(mu: f64, c: f64, lambda: f64, d: f64) -> Result<Self> {
        let cfg = Self { mu, c, lambda, d };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.update_wait()?;
        self.gossip_wait()?;
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(Error::Config(format!("c must be >= 0, got {}", self.c)));
        }
        Ok(())
    }

    fn update_wait(&self) -> Result<ShiftedExponential> {
        ShiftedExponential::exponential(self.mu)
    }

    fn gossip_wait(&self) -> Result<ShiftedExponential> {
        ShiftedExponential::new(self.d, self.lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Uniform,
    Opportunistic,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Uniform => "uniform",
            Scheme::Opportunistic => "opportunistic",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" => Ok(Scheme::Uniform),
            "opportunistic" => Ok(Scheme::Opportunistic),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// What an opportunistic transmission refreshes at the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Relay {
    /// Only the holder's own source version: node `j` learns about source
    /// `i` only from `i` itself.
    #[default]
    OwnSource,
    /// The holder's entire version column, relaying everything it knows.
    FullColumn,
}

impl FromStr for Relay {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "own" | "own_source" => Ok(Relay::OwnSource),
            "column" | "full_column" => Ok(Relay::FullColumn),
            other => Err(Error::Config(format!("unknown relay mode `{other}`"))),
        }
    }
}

impl fmt::Display for Relay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relay::OwnSource => "own",
            Relay::FullColumn => "column",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeConfig {
    Uniform,
    Opportunistic {
        /// Full network capacity, the sum of all gossip rates.
        total_capacity: f64,
        relay: Relay,
    },
}

impl SchemeConfig {
    /// Builds the scheme for `nodes`; the opportunistic capacity is the sum
    /// of the per-node gossip rates.
    pub fn for_nodes(scheme: Scheme, relay: Relay, nodes: &[NodeConfig]) -> Result<Self> {
        match scheme {
            Scheme::Uniform => Ok(SchemeConfig::Uniform),
            Scheme::Opportunistic => {
                let total_capacity: f64 = nodes.iter().map(|c| c.lambda).sum();
                if !(total_capacity > 0.0) {
                    return Err(Error::Config(
                        "opportunistic scheme needs positive total capacity".into(),
                    ));
                }
                Ok(SchemeConfig::Opportunistic {
                    total_capacity,
                    relay,
                })
            }
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            SchemeConfig::Uniform => Scheme::Uniform,
            SchemeConfig::Opportunistic { .. } => Scheme::Opportunistic,
        }
    }
}

/// Who may transmit under the opportunistic scheme.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TokenState {
    /// Most recent self-updater; `None` until the first update.
    pub holder: Option<usize>,
    pub acquired_at: f64,
    /// Bumped on every hand-over; pending transmissions of older
    /// generations are dropped when popped.
    pub generation: u64,
}

/// Uniform choice among the `n - 1` peers of `i`.
pub fn select_target<R: Rng + ?Sized>(i: usize, n: usize, rng: &mut R) -> Result<usize> {
    if n < 2 {
        return Err(Error::Config(format!("gossip needs n >= 2, got {n}")));
    }
    let k = rng.random_range(0..n - 1);
    Ok(if k >= i { k + 1 } else { k })
}

/// Schedules node `i`'s next update cycle starting at `t`: an `Exp(mu)`
/// availability wait followed by `c` of computation. With `split` the start
/// of computation is a separate event, so the model can be snapshotted.
pub fn schedule_next_update<R: Rng + ?Sized>(
    queue: &mut EventQueue,
    i: usize,
    cfg: &NodeConfig,
    t: f64,
    split: bool,
    rng: &mut R,
) -> Result<()> {
    let start = t + cfg.update_wait()?.sample(rng);
    if split {
        queue.schedule(start, EventKind::UpdateStart { node: i })?;
    } else {
        queue.schedule(start + cfg.c, EventKind::UpdateComplete { node: i })?;
    }
    Ok(())
}

/// Schedules node `i`'s next uniform-gossip transmission after `d + Exp(lambda)`.
pub fn schedule_next_gossip_uniform<R: Rng + ?Sized>(
    queue: &mut EventQueue,
    i: usize,
    cfg: &NodeConfig,
    t: f64,
    rng: &mut R,
) -> Result<()> {
    let at = t + cfg.gossip_wait()?.sample(rng);
    queue.schedule(
        at,
        EventKind::GossipTransmit {
            from: i,
            generation: 0,
        },
    )?;
    Ok(())
}

/// Schedules the token holder's next transmission at the full capacity.
pub fn schedule_next_opportunistic<R: Rng + ?Sized>(
    queue: &mut EventQueue,
    token: &TokenState,
    total_capacity: f64,
    t: f64,
    rng: &mut R,
) -> Result<()> {
    let Some(holder) = token.holder else {
        return Ok(());
    };
    let at = t + ShiftedExponential::exponential(total_capacity)?.sample(rng);
    queue.schedule(
        at,
        EventKind::GossipTransmit {
            from: holder,
            generation: token.generation,
        },
    )?;
    Ok(())
}

/// Node `i` just updated: it takes the token, the previous holder's pending
/// transmission is invalidated, and `i` starts transmitting.
pub fn opportunistic_on_update<R: Rng + ?Sized>(
    queue: &mut EventQueue,
    token: &mut TokenState,
    i: usize,
    t: f64,
    total_capacity: f64,
    rng: &mut R,
) -> Result<()> {
    token.holder = Some(i);
    token.acquired_at = t;
    token.generation += 1;
    schedule_next_opportunistic(queue, token, total_capacity, t, rng)
}
