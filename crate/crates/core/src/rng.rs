//! Seed derivation and deterministic random streams.
//!
//! All randomness in a run flows from a single root seed. Sub-seeds are
//! derived by hashing the parent seed together with a textual label, so
//! unrelated consumers (per-epoch shuffles, per-head estimation clones,
//! per-trial Monte-Carlo draws) never share or perturb each other's streams.
//! Adding parallelism therefore never changes results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Root of a deterministic RNG tree. Identical seed + identical op sequence
/// gives bit-identical results.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Derives a child seed from a label.
    pub fn derive(&self, label: &str) -> RngSeed {
        let mut hasher = Sha256::new();
        hasher.update(self.0.to_le_bytes());
        hasher.update(label.as_bytes());
        let digest = hasher.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        RngSeed(u64::from_le_bytes(bytes))
    }

    /// Instantiates the stream for this seed.
    pub fn stream(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}
