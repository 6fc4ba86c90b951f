//! Seed derivation shared by every crate: `(seed, tag, index)` is mixed into
//! an independent ChaCha8 stream.

pub use entsched_qmcs::rng::{derive_seed, stream, tag_hash};
pub use rand_chacha::ChaCha8Rng as StreamRng;
