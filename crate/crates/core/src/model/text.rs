use alloc::vec;
use alloc::vec::Vec;

use super::network::PooledSegment;

/// FNV-1a over the lowercased token bytes.
fn token_hash(token: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in token.bytes() {
        h ^= b.to_ascii_lowercase() as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Hashed bag-of-words term frequencies. Tokens are maximal runs of ASCII
/// alphanumerics or apostrophes, compared case-insensitively. An empty
/// transcript gives an empty (fully padded) input.
pub fn text_features(transcript: &str, dim: usize) -> PooledSegment {
    let mut counts = vec![0.0; dim];
    let mut n = 0usize;
    if dim > 0 {
        for token in transcript
            .split(|c: char| !(c.is_ascii_alphanumeric() || c == '\''))
            .filter(|t| !t.is_empty())
        {
            counts[(token_hash(token) % dim as u64) as usize] += 1.0;
            n += 1;
        }
    }
    if n > 0 {
        counts.iter_mut().for_each(|c| *c /= n as f64);
    }
    PooledSegment {
        input: counts,
        real_frames: usize::from(n > 0),
        n_frames: 1,
    }
}

pub fn text_features_batch<'a, I>(transcripts: I, dim: usize) -> Vec<PooledSegment>
where
    I: IntoIterator<Item = &'a str>,
{
    transcripts.into_iter().map(|t| text_features(t, dim)).collect()
}
