//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose key is
//! derived from `(seed, label)` and whose stream id is a trial counter, so a
//! draw depends only on its coordinates and never on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed, a label and integer coordinates.
pub fn derive_seed(seed: u64, label: &str, coords: &[u64]) -> u64 {
    let mut h = mix64(seed ^ fnv1a(label.as_bytes()));
    for &c in coords {
        h = mix64(h ^ mix64(c));
    }
    h
}

/// Generator for `(seed, label, stream)`.
pub fn stream_rng(seed: u64, label: &str, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut h = mix64(seed ^ fnv1a(label.as_bytes()));
    for chunk in key.chunks_exact_mut(8) {
        h = mix64(h);
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(1, "x", 0), |r, _: u64| Some(r.gen())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(1, "x", 0), |r, _: u64| Some(r.gen())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(1, "x", 1), |r, _: u64| Some(r.gen())).collect();
        let d: Vec<u64> = (0..4).map(|_| 0).scan(stream_rng(1, "y", 0), |r, _: u64| Some(r.gen())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn derived_seeds_depend_on_every_coordinate() {
        let base = derive_seed(7, "trial", &[1, 2, 3]);
        assert_eq!(base, derive_seed(7, "trial", &[1, 2, 3]));
        assert_ne!(base, derive_seed(7, "trial", &[1, 2, 4]));
        assert_ne!(base, derive_seed(7, "trial", &[2, 1, 3]));
        assert_ne!(base, derive_seed(8, "trial", &[1, 2, 3]));
    }
}
