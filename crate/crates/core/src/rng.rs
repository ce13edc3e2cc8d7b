//! Counter-based random streams.
//!
//! Every stream is keyed by a master seed, a trial index and a tag. The key
//! selects the ChaCha key and the (trial, tag) pair selects the ChaCha stream,
//! so any trial can be regenerated without replaying earlier trials.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream tags used across the crate.
pub mod tag {
    pub const MASK: u64 = 0x6d61_736b;
    pub const COUPLING: u64 = 0x636f_7570;
    pub const STATE: u64 = 0x7374_6174;
    pub const SHADOW: u64 = 0x7368_6164;
    pub const REPLICA: u64 = 0x7265_706c;
    pub const ALGORITHM: u64 = 0x616c_676f;
    pub const PAIR: u64 = 0x7061_6972;
    pub const TRIAL: u64 = 0x7472_6961;
    pub const SAMPLER: u64 = 0x7361_6d70;
}

/// The generator type handed out by [`stream`].
pub type Rng = ChaCha12Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Returns the generator for `(seed, trial, tag)`.
pub fn stream(seed: u64, trial: u64, tag: u64) -> Rng {
    let mut key = [0u8; 32];
    let mut s = seed;
    for chunk in key.chunks_mut(8) {
        s = splitmix(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(splitmix(trial ^ splitmix(tag)));
    rng
}

/// Derives a child seed from `(seed, trial, tag)`.
pub fn derive(seed: u64, trial: u64, tag: u64) -> u64 {
    splitmix(splitmix(seed ^ splitmix(tag)) ^ splitmix(trial.wrapping_add(0x51ed)))
}
