//! Independent random streams per purpose, all derived from one seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Placement,
    Traffic,
    Hopping,
    Assistants,
    Clustering,
    Shadowing,
    /// One stream per mobile node, indexed by walker.
    Walker(u32),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Placement => 1,
            Stream::Traffic => 2,
            Stream::Hopping => 3,
            Stream::Assistants => 4,
            Stream::Clustering => 5,
            Stream::Shadowing => 6,
            Stream::Walker(i) => (1 << 32) | i as u64,
        }
    }
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
