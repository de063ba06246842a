//! Stateless counter-based uniform variates.
//!
//! A variate is a pure function of `(seed, index, site)`:
//!
//! ```text
//! h = splitmix64(seed)
//! h = splitmix64(h ^ index)
//! h = splitmix64(h ^ site)
//! u = (h >> 11) * 2^-53            in [0, 1)
//! ```
//!
//! with the usual SplitMix64 finalizer (all arithmetic wrapping mod 2^64):
//!
//! ```text
//! z = x + 0x9E3779B97F4A7C15
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! splitmix64(x) = z ^ (z >> 31)
//! ```

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix(seed: u64, index: u64, site: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ index) ^ site)
}

/// Uniform variate in `[0, 1)` for `(seed, index, site)`.
pub fn uniform(seed: u64, index: u64, site: u64) -> f64 {
    (mix(seed, index, site) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
