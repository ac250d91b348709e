//! The event loop that wires timing, gossip, staleness and learning.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::event::{EventKind, EventQueue};
use crate::gossip::{
    opportunistic_on_update, schedule_next_gossip_uniform, schedule_next_opportunistic,
    schedule_next_update, select_target, NodeConfig, Relay, SchemeConfig, TokenState,
};
use crate::learning::{local_update, mix, HyperParams, ModelParams, PredictorKind};
use crate::rng::{Purpose, RngStream};
use crate::staleness::{StalenessSummary, StalenessTracker};

#[derive(Debug, Clone, PartialEq)]
pub struct SimSetup {
    pub nodes: Vec<NodeConfig>,
    pub scheme: SchemeConfig,
    pub seed: u64,
    pub burn_in: f64,
}

impl SimSetup {
    /// `n` identical nodes.
    pub fn symmetric(
        n: usize,
        node: NodeConfig,
        scheme: SchemeConfig,
        seed: u64,
        burn_in: f64,
    ) -> Self {
        Self {
            nodes: vec![node; n],
            scheme,
            seed,
            burn_in,
        }
    }
}

/// What a processed event did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Update {
        node: usize,
    },
    Transmit {
        from: usize,
        to: usize,
    },
    /// Gradient computation started, or a cancelled transmission was dropped.
    Internal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub time: f64,
    pub step: Step,
}

#[derive(Debug, Clone)]
struct NodeStreams {
    update: RngStream,
    gossip: RngStream,
    target: RngStream,
    mix: RngStream,
    sgd: RngStream,
}

impl NodeStreams {
    fn new(seed: u64, node: usize) -> Self {
        Self {
            update: RngStream::new(seed, node, Purpose::UpdateTiming),
            gossip: RngStream::new(seed, node, Purpose::GossipTiming),
            target: RngStream::new(seed, node, Purpose::Target),
            mix: RngStream::new(seed, node, Purpose::Mix),
            sgd: RngStream::new(seed, node, Purpose::Sgd),
        }
    }
}

#[derive(Debug, Clone)]
struct PendingUpdate {
    snapshot: Vec<f64>,
    end: Vec<f64>,
    /// The live model was mixed after the snapshot was taken.
    dirty: bool,
}

#[derive(Debug)]
struct Learner<'a> {
    kind: PredictorKind,
    dataset: &'a Dataset,
    hyper: HyperParams,
    models: Vec<ModelParams>,
    pending: Vec<Option<PendingUpdate>>,
    updates: Vec<u64>,
    skipped: u64,
}

#[derive(Debug)]
pub struct Simulation<'a> {
    nodes: Vec<NodeConfig>,
    scheme: SchemeConfig,
    queue: EventQueue,
    streams: Vec<NodeStreams>,
    tracker: StalenessTracker,
    token: TokenState,
    learner: Option<Learner<'a>>,
    total_updates: u64,
    total_transmissions: u64,
    total_mixes: u64,
    trace: Option<Vec<TraceEntry>>,
}

impl<'a> Simulation<'a> {
    /// Version and staleness tracking only, no model math.
    pub fn new(setup: SimSetup) -> Result<Self> {
        Self::build(setup, None)
    }

    /// Full simulation with per-node models trained on `dataset`'s shards.
    pub fn with_training(
        setup: SimSetup,
        dataset: &'a Dataset,
        hyper: HyperParams,
    ) -> Result<Self> {
        hyper.validate()?;
        let n = setup.nodes.len();
        if dataset.shards.len() != n {
            return Err(Error::Config(format!(
                "dataset has {} shards for {n} nodes",
                dataset.shards.len()
            )));
        }
        let kind = dataset.kind;
        let learner = Learner {
            kind,
            dataset,
            hyper,
            models: (0..n).map(|i| ModelParams::zeros(i, kind.dim())).collect(),
            pending: vec![None; n],
            updates: vec![0; n],
            skipped: 0,
        };
        Self::build(setup, Some(learner))
    }

    fn build(setup: SimSetup, learner: Option<Learner<'a>>) -> Result<Self> {
        let n = setup.nodes.len();
        if n == 0 {
            return Err(Error::Config("need at least one node".into()));
        }
        for cfg in &setup.nodes {
            cfg.validate()?;
        }
        let mut sim = Self {
            streams: (0..n).map(|i| NodeStreams::new(setup.seed, i)).collect(),
            tracker: StalenessTracker::new(n, setup.burn_in),
            nodes: setup.nodes,
            scheme: setup.scheme,
            queue: EventQueue::new(),
            token: TokenState::default(),
            learner,
            total_updates: 0,
            total_transmissions: 0,
            total_mixes: 0,
            trace: None,
        };
        let split = sim.learner.is_some();
        for i in 0..n {
            let s = &mut sim.streams[i];
            schedule_next_update(&mut sim.queue, i, &sim.nodes[i], 0.0, split, &mut s.update)?;
            if n >= 2 && sim.scheme == SchemeConfig::Uniform {
                schedule_next_gossip_uniform(&mut sim.queue, i, &sim.nodes[i], 0.0, &mut s.gossip)?;
            }
        }
        Ok(sim)
    }

    /// Records every update and transmission from now on.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[TraceEntry] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn now(&self) -> f64 {
        self.queue.now()
    }

    pub fn tracker(&self) -> &StalenessTracker {
        &self.tracker
    }

    pub fn token(&self) -> &TokenState {
        &self.token
    }

    pub fn total_updates(&self) -> u64 {
        self.total_updates
    }

    pub fn total_transmissions(&self) -> u64 {
        self.total_transmissions
    }

    /// Model mixes performed at receivers; zero without training.
    pub fn total_mixes(&self) -> u64 {
        self.total_mixes
    }

    /// Current models, if training.
    pub fn models(&self) -> Option<&[ModelParams]> {
        self.learner.as_ref().map(|l| l.models.as_slice())
    }

    /// Updates dropped because they produced non-finite parameters.
    pub fn skipped_updates(&self) -> u64 {
        self.learner.as_ref().map_or(0, |l| l.skipped)
    }

    pub fn staleness_summary(&self, horizon: f64) -> Result<StalenessSummary> {
        self.tracker.time_average_staleness(horizon)
    }

    /// Processes events up to and including time `horizon`.
    pub fn run_until(&mut self, horizon: f64) -> Result<()> {
        while self.queue.peek_time().is_some_and(|t| t <= horizon) {
            self.step()?;
        }
        Ok(())
    }

    /// Processes the next event; `None` once the queue is exhausted.
    pub fn step(&mut self) -> Result<Option<Step>> {
        let Some(ev) = self.queue.pop_next() else {
            return Ok(None);
        };
        let t = ev.time;
        let step = match ev.kind {
            EventKind::UpdateStart { node } => {
                self.start_update(node)?;
                self.queue
                    .schedule(t + self.nodes[node].c, EventKind::UpdateComplete { node })?;
                Step::Internal
            }
            EventKind::UpdateComplete { node } => {
                self.complete_update(node, t)?;
                Step::Update { node }
            }
            EventKind::GossipTransmit { from, generation } => self.transmit(from, generation, t)?,
        };
        if step != Step::Internal {
            if let Some(trace) = &mut self.trace {
                trace.push(TraceEntry { time: t, step });
            }
        }
        Ok(Some(step))
    }

    fn start_update(&mut self, node: usize) -> Result<()> {
        let Some(l) = self.learner.as_mut() else {
            return Ok(());
        };
        let snapshot = l.models[node].theta.clone();
        let alpha = l.hyper.step_size(l.updates[node] + 1);
        let shard = &l.dataset.shards[node].samples;
        let end = local_update(
            l.kind,
            &snapshot,
            shard,
            &l.hyper,
            alpha,
            &mut self.streams[node].sgd,
        )?;
        l.pending[node] = Some(PendingUpdate {
            snapshot,
            end,
            dirty: false,
        });
        Ok(())
    }

    fn complete_update(&mut self, node: usize, t: f64) -> Result<()> {
        self.tracker.record_self_update(node, t);
        self.total_updates += 1;
        if let Some(l) = self.learner.as_mut() {
            l.updates[node] += 1;
            let p = l.pending[node].take().ok_or_else(|| {
                Error::Internal(format!("node {node} completed without starting"))
            })?;
            let theta = &mut l.models[node].theta;
            let next: Vec<f64> = if p.dirty {
                theta
                    .iter()
                    .zip(p.end.iter().zip(&p.snapshot))
                    .map(|(cur, (e, s))| cur + (e - s))
                    .collect()
            } else {
                p.end
            };
            if next.iter().all(|v| v.is_finite()) {
                *theta = next;
            } else {
                l.skipped += 1;
            }
        }
        if let SchemeConfig::Opportunistic { total_capacity, .. } = self.scheme {
            if self.n() >= 2 {
                let rng = &mut self.streams[node].gossip;
                opportunistic_on_update(
                    &mut self.queue,
                    &mut self.token,
                    node,
                    t,
                    total_capacity,
                    rng,
                )?;
            }
        }
        let split = self.learner.is_some();
        let s = &mut self.streams[node];
        schedule_next_update(
            &mut self.queue,
            node,
            &self.nodes[node],
            t,
            split,
            &mut s.update,
        )
    }

    fn transmit(&mut self, from: usize, generation: u64, t: f64) -> Result<Step> {
        let n = self.n();
        let relay = match self.scheme {
            SchemeConfig::Uniform => None,
            SchemeConfig::Opportunistic { relay, .. } => {
                if generation != self.token.generation || self.token.holder != Some(from) {
                    return Ok(Step::Internal);
                }
                Some(relay)
            }
        };
        let to = select_target(from, n, &mut self.streams[from].target)?;
        match relay {
            None | Some(Relay::FullColumn) => self.tracker.merge_on_gossip(from, to, t)?,
            Some(Relay::OwnSource) => self.tracker.merge_source(from, from, to, t)?,
        }
        if let Some(l) = self.learner.as_mut() {
            let (sender, receiver) = pair_mut(&mut l.models, from, to);
            mix(
                &mut receiver.theta,
                &sender.theta,
                &mut self.streams[to].mix,
            )?;
            if let Some(p) = l.pending[to].as_mut() {
                p.dirty = true;
            }
            self.total_mixes += 1;
        }
        self.total_transmissions += 1;
        match self.scheme {
            SchemeConfig::Uniform => {
                let s = &mut self.streams[from];
                schedule_next_gossip_uniform(
                    &mut self.queue,
                    from,
                    &self.nodes[from],
                    t,
                    &mut s.gossip,
                )?;
            }
            SchemeConfig::Opportunistic { total_capacity, .. } => {
                let rng = &mut self.streams[from].gossip;
                schedule_next_opportunistic(&mut self.queue, &self.token, total_capacity, t, rng)?;
            }
        }
        Ok(Step::Transmit { from, to })
    }
}

fn pair_mut<T>(v: &mut [T], a: usize, b: usize) -> (&T, &mut T) {
    debug_assert_ne!(a, b);
    if a < b {
        let (lo, hi) = v.split_at_mut(b);
        (&lo[a], &mut hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(a);
        (&hi[0], &mut lo[b])
    }
}
