//! Discrete-event simulation of asynchronous gossip learning.
//!
//! Nodes alternate between local SGD updates and randomized model exchanges.
//! The simulator tracks how many versions each node lags behind every other
//! node's own model, compares the time-averaged lag against closed-form
//! bounds, and runs the regression sweeps used to study how gossip capacity
//! must scale with network size.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod data;
pub mod error;
pub mod event;
pub mod experiment;
pub mod gossip;
pub mod learning;
pub mod rng;
pub mod sim;
pub mod staleness;
pub mod timing;

pub use bounds::{
    harmonic, lemma1_bound, thm2_lower_bound, BoundReport, Harmonic, Thm2Bound, EULER_GAMMA,
};
pub use data::{build_shards, Dataset, DatasetSpec, Shard};
pub use error::{Error, Result};
pub use event::{Event, EventKind, EventQueue, SimClock};
pub use gossip::{NodeConfig, Relay, Scheme, SchemeConfig, TokenState};
pub use learning::{BatchSize, HyperParams, ModelParams, PredictorKind, Samples};
pub use rng::{Purpose, RngStream};
pub use sim::{SimSetup, Simulation, Step, TraceEntry};
pub use staleness::{StalenessSummary, StalenessTracker, VersionMatrix};
pub use timing::ShiftedExponential;
