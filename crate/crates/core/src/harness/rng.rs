use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent consumers of one run's randomness. Each gets its own ChaCha
/// stream of the run seed, so adding draws to one never shifts another.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Env = 0,
    Noise = 1,
    Sampling = 2,
    Init = 3,
    Eval = 4,
}

pub fn stream(seed: u64, s: Stream) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(s as u64);
    r
}
