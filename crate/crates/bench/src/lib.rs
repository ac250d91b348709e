//! Fixtures shared by the benchmarks.

use gossipsim_core::{
    build_shards, Dataset, DatasetSpec, NodeConfig, PredictorKind, Relay, Scheme, SchemeConfig,
    SimSetup,
};

/// `n` identical nodes with unit update rate and gossip rate `lambda`.
pub fn symmetric_setup(n: usize, lambda: f64, scheme: Scheme) -> SimSetup {
    let nodes = vec![NodeConfig::new(1.0, 0.0, lambda, 0.0).expect("valid node"); n];
    let scheme = SchemeConfig::for_nodes(scheme, Relay::OwnSource, &nodes).expect("valid scheme");
    SimSetup {
        nodes,
        scheme,
        seed: 7,
        burn_in: 0.0,
    }
}

pub fn linear_dataset(n: usize, dim: usize) -> Dataset {
    let spec = DatasetSpec {
        dim,
        samples_per_user: 200,
        seed: 7,
        ..DatasetSpec::default()
    };
    build_shards(&spec, n, PredictorKind::Linear { dim }).expect("dataset")
}
