//! Version and staleness processes.
//!
//! `N[i][j]` is the latest version of source `i`'s model that node `j` has
//! incorporated; the staleness of node `j` with respect to source `i` is
//! `N[i][i] - N[i][j]`. Time integrals of the version entries are kept lazily:
//! an entry only accrues when its value changes, so a self-update costs O(1)
//! and a merge costs O(n).

use crate::error::{Error, Result};

/// Column-major `n x n` version matrix: column `j` holds what node `j` knows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionMatrix {
    n: usize,
    cols: Vec<u64>,
}

impl VersionMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            cols: vec![0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, source: usize, node: usize) -> usize {
        node * self.n + source
    }

    pub fn get(&self, source: usize, node: usize) -> u64 {
        self.cols[self.idx(source, node)]
    }

    pub fn staleness(&self, source: usize, node: usize) -> u64 {
        self.get(source, source) - self.get(source, node)
    }

    /// Versions of every source held at `node`.
    pub fn column(&self, node: usize) -> &[u64] {
        &self.cols[node * self.n..(node + 1) * self.n]
    }
}

/// Time-weighted staleness statistics collected after a burn-in period.
#[derive(Debug, Clone)]
pub struct StalenessAccumulator {
    burn_in: f64,
    start: f64,
    /// Integral of each version entry over `[burn_in, last_change]`.
    integral: Vec<f64>,
    last_change: Vec<f64>,
    /// Running maximum of each pair's staleness after burn-in (row-major by
    /// source, diagonal unused).
    running_max: Vec<u64>,
    max_primed: bool,
    last_event_time: f64,
}

impl StalenessAccumulator {
    fn new(n: usize, start: f64, burn_in: f64) -> Self {
        Self {
            burn_in,
            start,
            integral: vec![0.0; n * n],
            last_change: vec![start; n * n],
            running_max: vec![0; n * n],
            max_primed: false,
            last_event_time: start,
        }
    }

    pub fn burn_in(&self) -> f64 {
        self.burn_in
    }

    pub fn last_event_time(&self) -> f64 {
        self.last_event_time
    }

    /// Accrues `value` over `[last_change[idx], t]`, clipped to post-burn-in.
    #[inline]
    fn accrue(&mut self, idx: usize, value: u64, t: f64) {
        let lo = self.last_change[idx].max(self.burn_in);
        if t > lo {
            self.integral[idx] += value as f64 * (t - lo);
        }
        self.last_change[idx] = t;
    }

    fn integral_to(&self, idx: usize, value: u64, t: f64) -> f64 {
        let lo = self.last_change[idx].max(self.burn_in);
        self.integral[idx] + if t > lo { value as f64 * (t - lo) } else { 0.0 }
    }
}

/// Per-run staleness summary.
#[derive(Debug, Clone, PartialEq)]
pub struct StalenessSummary {
    pub n: usize,
    /// Row-major by source: `per_pair[i * n + j]` is the time-average of
    /// `S[i][j]`. The diagonal is zero.
    pub per_pair: Vec<f64>,
    /// Mean over the `n(n-1)` off-diagonal pairs.
    pub mean: f64,
    /// Largest per-pair time average.
    pub max: f64,
    /// Length of the averaging window.
    pub window: f64,
}

/// Version matrix plus accumulator, updated together at every event.
#[derive(Debug, Clone)]
pub struct StalenessTracker {
    versions: VersionMatrix,
    acc: StalenessAccumulator,
}

impl StalenessTracker {
    pub fn new(n: usize, burn_in: f64) -> Self {
        Self {
            versions: VersionMatrix::new(n),
            acc: StalenessAccumulator::new(n, 0.0, burn_in.max(0.0)),
        }
    }

    pub fn versions(&self) -> &VersionMatrix {
        &self.versions
    }

    pub fn accumulator(&self) -> &StalenessAccumulator {
        &self.acc
    }

    fn observe(&mut self, t: f64) {
        debug_assert!(t >= self.acc.last_event_time);
        if !self.acc.max_primed && t >= self.acc.burn_in {
            // The state just before this event was in force at burn-in.
            let n = self.versions.n;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        self.acc.running_max[i * n + j] = self.versions.staleness(i, j);
                    }
                }
            }
            self.acc.max_primed = true;
        }
        self.acc.last_event_time = t;
    }

    /// Node `i` finished a local update: `N[i][i] += 1`.
    pub fn record_self_update(&mut self, i: usize, t: f64) {
        self.observe(t);
        let idx = self.versions.idx(i, i);
        let v = self.versions.cols[idx];
        self.acc.accrue(idx, v, t);
        self.versions.cols[idx] = v + 1;
        if self.acc.max_primed {
            let n = self.versions.n;
            let own = v + 1;
            for j in (0..n).filter(|&j| j != i) {
                let s = own - self.versions.get(i, j);
                let m = &mut self.acc.running_max[i * n + j];
                *m = (*m).max(s);
            }
        }
    }

    /// Node `k` pushes its whole version column to `j`:
    /// `N[i][j] = max(N[i][j], N[i][k])` for every source `i`.
    pub fn merge_on_gossip(&mut self, k: usize, j: usize, t: f64) -> Result<()> {
        if k == j {
            return Err(Error::Internal(format!("node {k} gossiped to itself")));
        }
        self.observe(t);
        let n = self.versions.n;
        for i in 0..n {
            let from = self.versions.cols[k * n + i];
            let to_idx = j * n + i;
            let to = self.versions.cols[to_idx];
            if from > to {
                self.acc.accrue(to_idx, to, t);
                self.versions.cols[to_idx] = from;
            }
        }
        Ok(())
    }

    /// Merge restricted to a single source row: only `N[source][j]` moves.
    pub fn merge_source(&mut self, source: usize, k: usize, j: usize, t: f64) -> Result<()> {
        if k == j {
            return Err(Error::Internal(format!("node {k} gossiped to itself")));
        }
        self.observe(t);
        let from = self.versions.get(source, k);
        let to_idx = self.versions.idx(source, j);
        let to = self.versions.cols[to_idx];
        if from > to {
            self.acc.accrue(to_idx, to, t);
            self.versions.cols[to_idx] = from;
        }
        Ok(())
    }

    /// Per-pair running maximum of `S[source][node]` since burn-in.
    pub fn running_max(&self, source: usize, node: usize) -> u64 {
        let n = self.versions.n;
        if self.acc.max_primed {
            self.acc.running_max[source * n + node]
        } else {
            0
        }
    }

    /// Time-average staleness over `[max(burn_in, start), horizon]`.
    pub fn time_average_staleness(&self, horizon: f64) -> Result<StalenessSummary> {
        let acc = &self.acc;
        let from = acc.burn_in.max(acc.start);
        if !(horizon > from) {
            return Err(Error::Estimation(format!(
                "horizon {horizon} does not exceed burn-in {from}"
            )));
        }
        if horizon < acc.last_event_time {
            return Err(Error::Estimation(format!(
                "horizon {horizon} precedes last event at {}",
                acc.last_event_time
            )));
        }
        let n = self.versions.n;
        if n < 2 {
            return Err(Error::Estimation(
                "staleness needs at least two nodes".into(),
            ));
        }
        let window = horizon - from;
        let vm = &self.versions;
        let mut per_pair = vec![0.0; n * n];
        let (mut sum, mut max) = (0.0, f64::NEG_INFINITY);
        for i in 0..n {
            let own_idx = vm.idx(i, i);
            let own = acc.integral_to(own_idx, vm.cols[own_idx], horizon);
            for j in (0..n).filter(|&j| j != i) {
                let idx = vm.idx(i, j);
                let held = acc.integral_to(idx, vm.cols[idx], horizon);
                let avg = (own - held) / window;
                per_pair[i * n + j] = avg;
                sum += avg;
                max = max.max(avg);
            }
        }
        Ok(StalenessSummary {
            n,
            per_pair,
            mean: sum / (n * (n - 1)) as f64,
            max,
            window,
        })
    }
}
