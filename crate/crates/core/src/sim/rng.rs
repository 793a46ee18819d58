use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::protocol::NodeRef;

const NODE_DOMAIN: u64 = 0x6e6f_6465;

/// Scheduler-side randomness domains, kept disjoint from node streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum SchedulerDomain {
    Shuffle = 1,
    Delay = 2,
    Workload = 3,
}

/// Deterministic random stream keyed by `(seed, job, slot, round)`.
///
/// The key never mentions the machine executing the node, so a node draws
/// the same bits whichever scheduler runs it and wherever it is placed.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive(parts: &[u64]) -> [u8; 32] {
    let mut acc = 0u64;
    for &p in parts {
        acc ^= p;
        acc = splitmix(&mut acc);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix(&mut acc).to_le_bytes());
    }
    seed
}

impl RngStream {
    pub fn for_node(seed: u64, node: NodeRef, round: usize) -> Self {
        RngStream(ChaCha8Rng::from_seed(derive(&[
            NODE_DOMAIN,
            seed,
            node.job as u64,
            node.slot as u64,
            round as u64,
        ])))
    }

    pub fn for_scheduler(seed: u64, domain: SchedulerDomain, a: u64, b: u64) -> Self {
        RngStream(ChaCha8Rng::from_seed(derive(&[domain as u64, seed, a, b])))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

impl CryptoRng for RngStream {}
