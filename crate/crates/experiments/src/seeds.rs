//! Seed derivation. Every cell's streams are a pure function of the master
//! seed and the cell's indices, so cells never share or consume each other's
//! randomness and results do not depend on scheduling.

pub const MAZE: u64 = 0x6d61_7a65;
pub const TWIN: u64 = 0x7477_696e;
pub const DATA: u64 = 0x6461_7461;
pub const PERTURB: u64 = 0x7065_7274;
pub const INIT: u64 = 0x696e_6974;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `master` together with a path of tags and indices.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &x| splitmix64(acc ^ splitmix64(x)))
}
