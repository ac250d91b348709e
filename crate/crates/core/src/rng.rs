//! Keyed random streams.
//!
//! Every consumer of randomness draws from its own [`RngStream`], keyed by the
//! run seed, a node index and a [`Purpose`]. Streams are ChaCha8 instances
//! sharing the seed-derived key and differing in the stream nonce, so adding a
//! new consumer never shifts the draws of an existing one.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. The tag becomes part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Purpose {
    UpdateTiming = 1,
    GossipTiming = 2,
    Target = 3,
    Mix = 4,
    Sgd = 5,
    WStar = 6,
    Data = 7,
    Normalize = 8,
    Test = 0xff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub node: u32,
    pub purpose: Purpose,
}

impl StreamId {
    fn nonce(self) -> u64 {
        (u64::from(self.node) << 8) | self.purpose as u64
    }
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    id: StreamId,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, node: usize, purpose: Purpose) -> Self {
        let node = u32::try_from(node).expect("node index exceeds u32");
        let id = StreamId { node, purpose };
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(id.nonce());
        Self { seed, id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
