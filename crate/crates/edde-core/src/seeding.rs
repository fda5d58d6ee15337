//! Deterministic seed derivation.
//!
//! Every stochastic choice in the crate (parameter init, epoch shuffles,
//! bootstrap draws, fresh layers during transfer) draws from a ChaCha stream
//! seeded through these mixers, so a run is reproducible from a single root
//! seed while distinct uses get distinct streams.

/// splitmix64 finalizer; full-period mixing of a 64-bit state.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a domain tag `k`.
pub fn mix(seed: u64, k: u64) -> u64 {
    splitmix64(seed ^ splitmix64(k))
}

/// Seed for initializing the parameters of ensemble member `round` (1-based).
pub fn member_init_seed(run_seed: u64, round: usize) -> u64 {
    mix(run_seed, 0x1000_0000 + round as u64)
}

/// Seed driving the mini-batch shuffles while training member `round`.
pub fn member_train_seed(run_seed: u64, round: usize) -> u64 {
    mix(run_seed, 0x2000_0000 + round as u64)
}

/// Seed for the freshly re-initialized upper layers of member `round`.
pub fn member_fresh_seed(run_seed: u64, round: usize) -> u64 {
    mix(run_seed, 0x3000_0000 + round as u64)
}

/// Per-epoch shuffle seed inside one training run.
pub fn epoch_shuffle_seed(train_seed: u64, epoch: usize) -> u64 {
    mix(train_seed, 0x4000_0000 + epoch as u64)
}
