//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream derived from the
//! run seed, a fixed label (`"data"`, `"init"`, `"sampler"`, `"mix"`) and an
//! index. Streams never overlap, so independent consumers can run on
//! different threads and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const DATA: &str = "data";
pub const INIT: &str = "init";
pub const SAMPLER: &str = "sampler";
pub const MIX: &str = "mix";

// FNV-1a, 64 bit.
fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Independent stream `index` under `label` for the given seed.
pub fn stream(seed: u64, label: &str, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ label_hash(label));
    rng.set_stream(index);
    rng
}
