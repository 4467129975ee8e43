//! Seeded random streams. Each run seed owns independent substreams, one per purpose,
//! so that changing how often one consumer draws never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Outcome vectors drawn from the instance.
    Outcomes = 1,
    /// Arm draws from the policy distributions.
    Arms = 2,
    /// Instance generation.
    Generator = 3,
    /// Auxiliary randomness in checks and oracles.
    Auxiliary = 4,
}

pub fn substream(seed: u64, stream: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
