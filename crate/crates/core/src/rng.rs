//! Seeded random streams.
//!
//! Every random consumer gets its own ChaCha stream so that, for example,
//! changing the exploration seed never perturbs the generated workload.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named stream selectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Workload = 1,
    Failure = 2,
    Exploration = 3,
    Clustering = 4,
    Instance = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
