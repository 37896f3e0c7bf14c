//! Deterministic seed schedule.
//!
//! Every random decision derives from one root seed. A stream tag and an
//! index are mixed into the root with SplitMix64 so that independent
//! consumers (dataset generation, fold partition, label permutation, piece
//! construction, piece halving) never share a random sequence and the result
//! does not depend on the order in which they run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Dataset = 1,
    Partition = 2,
    Permutation = 3,
    Pieces = 4,
    PieceHalves = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for `stream` at position `index` below `root`.
pub fn derive(root: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(root ^ splitmix64(stream as u64)) ^ splitmix64(index.wrapping_add(0x5851_F42D)))
}

pub fn rng(root: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, stream, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_and_indices_differ() {
        let a = derive(7, Stream::Partition, 0);
        assert_ne!(a, derive(7, Stream::Permutation, 0));
        assert_ne!(a, derive(7, Stream::Partition, 1));
        assert_ne!(a, derive(8, Stream::Partition, 0));
        assert_eq!(a, derive(7, Stream::Partition, 0));
    }
}
