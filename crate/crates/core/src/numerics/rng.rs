use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

/// The random stream handed to every sampler.
pub type StreamRng = ChaCha20Rng;

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    /// Stream for replica `replica` below this one: stream index
    /// `stream_index * 2^32 + replica`. Distinct for `stream_index < 2^32`
    /// and `replica < 2^32`.
    pub fn child(self, replica: u64) -> Self {
        Self {
            master_seed: self.master_seed,
            stream_index: (self.stream_index << 32) | (replica & 0xFFFF_FFFF),
        }
    }
}

/// ChaCha20 keyed by the little-endian bytes of `master_seed` (bytes 0..8 of
/// the 256-bit key, remaining key bytes zero), with the 64-bit ChaCha stream
/// id set to `stream_index` and the word position at 0.
///
/// Distinct specs give distinct (key, stream) pairs, so the mapping is
/// injective and the streams are independent in the ChaCha sense.
pub fn split_seed(spec: SeedSpec) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&spec.master_seed.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(spec.stream_index);
    rng.set_word_pos(0);
    rng
}

/// Runs `work(replica, rng)` for `replicas` independent replicas in
/// parallel. Replica `r` always receives the stream `base.child(r)`, and the
/// results come back in replica order, so any reduction done by the caller
/// in index order is independent of thread count.
pub fn par_replicas<R, F>(base: SeedSpec, replicas: usize, work: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, &mut StreamRng) -> R + Sync,
{
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = split_seed(base.child(r as u64));
            work(r, &mut rng)
        })
        .collect()
}
