//! Counter-based seed splitting.
//!
//! Every random stream in an experiment is keyed by `(master, index,
//! purpose)`, so results never depend on which worker ran which job.

/// What a derived stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Target = 1,
    Training = 2,
    Defects = 3,
    Sampling = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for stream `index` of kind `purpose` under `master`.
pub fn derive(master: u64, index: u64, purpose: Purpose) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ index) ^ purpose as u64)
}
