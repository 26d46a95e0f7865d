//! Seed derivation.
//!
//! Every source of randomness in a run gets its own generator whose seed is
//! a hash of `(master seed, role, client, round, epoch)`. Streams for
//! different roles never overlap, so enabling an attack on one client cannot
//! shift the minibatch order of another, and running clients on different
//! threads cannot change any draw.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type SimRng = ChaCha12Rng;

/// Independent randomness streams within one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    Init = 1,
    Partition = 2,
    LabelPoison = 3,
    ModelPoison = 4,
    Train = 5,
    ServerTrain = 6,
    RootSample = 7,
    EvalSubset = 8,
    SynthTrain = 9,
    SynthTest = 10,
    Shuffle = 11,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash an ordered list of words into one seed.
pub fn mix(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// Seed for `role` at `(client, round, epoch)` under `master`.
pub fn derive_seed(master: u64, role: Role, client: u64, round: u64, epoch: u64) -> u64 {
    mix(&[master, role as u64, client, round, epoch])
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn derive_rng(master: u64, role: Role, client: u64, round: u64, epoch: u64) -> SimRng {
    rng_from_seed(derive_seed(master, role, client, round, epoch))
}
