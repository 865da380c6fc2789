//! Hyperdimensional genome pattern matching on a simulated CAM.
//!
//! A k-mer is encoded by binding cyclically rotated base vectors,
//! `H = im[s0] ^ rot(im[s1], 1) ^ ... ^ rot(im[s(k-1)], k-1)`, so the encoding is
//! position sensitive and two distinct k-mers land near `D/2` apart. Every
//! reference window becomes one index entry, stored as `D/64` binary CAM words.

mod fasta;
mod index;

pub use fasta::{parse_fasta, read_queries, FastaRecord};
pub use index::{build_index, oracle_match, query, GenomeIndex, HdcConfig, QueryHit, QueryResult};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const ALPHABET: [u8; 4] = *b"ACGT";

/// Binary vector of dimension `dim`, packed 64 bits per word (bit `i` is
/// bit `i % 64` of word `i / 64`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Hypervector {
    dim: usize,
    words: Vec<u64>,
}

impl Hypervector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            words: vec![0; dim.div_ceil(64)],
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        let mut hv = Self {
            dim,
            words: (0..dim.div_ceil(64)).map(|_| rng.random()).collect(),
        };
        hv.mask_tail();
        hv
    }

    /// Builds a vector from packed words; bits past `dim` are cleared.
    pub fn from_words(dim: usize, words: Vec<u64>) -> Result<Self> {
        if words.len() != dim.div_ceil(64) {
            return Err(Error::InvalidParameter(format!(
                "{} words for dimension {dim}",
                words.len()
            )));
        }
        let mut hv = Self { dim, words };
        hv.mask_tail();
        Ok(hv)
    }

    fn mask_tail(&mut self) {
        if !self.dim.is_multiple_of(64) {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << (self.dim % 64)) - 1;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor_assign(&mut self, other: &Self) {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn hamming(&self, other: &Self) -> usize {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Cyclic rotation: bit `j` moves to `(j + by) % dim`.
    pub fn rotate(&self, by: usize) -> Self {
        let d = self.dim;
        let by = by % d;
        if by == 0 {
            return self.clone();
        }
        if !d.is_multiple_of(64) {
            let mut out = Self::zeros(d);
            for j in (0..d).filter(|&j| self.bit(j)) {
                let t = (j + by) % d;
                out.words[t / 64] |= 1 << (t % 64);
            }
            return out;
        }
        let n = self.words.len();
        let (q, b) = (by / 64, by % 64);
        let words = (0..n)
            .map(|w| {
                let hi = self.words[(w + n - q) % n];
                if b == 0 {
                    hi
                } else {
                    let lo = self.words[(w + 2 * n - q - 1) % n];
                    (hi << b) | (lo >> (64 - b))
                }
            })
            .collect();
        Self { dim: d, words }
    }
}

/// Base hypervectors for A, C, G, T.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemMemory {
    pub seed: u64,
    base: [Hypervector; 4],
}

impl ItemMemory {
    pub fn dim(&self) -> usize {
        self.base[0].dim
    }

    pub fn get(&self, symbol: usize) -> &Hypervector {
        &self.base[symbol]
    }
}

/// `dim` must be a power of two, at least 64.
pub fn build_item_memory(seed: u64, dim: usize) -> Result<ItemMemory> {
    if dim < 64 || !dim.is_power_of_two() {
        return Err(Error::Config(format!(
            "hypervector dimension must be a power of two >= 64, got {dim}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = std::array::from_fn(|_| Hypervector::random(&mut rng, dim));
    Ok(ItemMemory { seed, base })
}

/// Index of a base in [`ALPHABET`]; lowercase is accepted.
pub fn base_index(b: u8) -> Option<usize> {
    match b.to_ascii_uppercase() {
        b'A' => Some(0),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' => Some(3),
        _ => None,
    }
}

/// Base indices of a sequence, or the position of the first invalid character.
pub fn sequence_symbols(seq: &str) -> Result<Vec<usize>> {
    seq.char_indices()
        .enumerate()
        .map(|(pos, (_, c))| {
            u8::try_from(c)
                .ok()
                .and_then(base_index)
                .ok_or(Error::Encoding { position: pos, found: c })
        })
        .collect()
}

/// Uniform random ACGT sequence, deterministic per seed.
pub fn random_sequence(len: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..4)] as char)
        .collect()
}

pub fn encode_kmer(seq: &str, im: &ItemMemory) -> Result<Hypervector> {
    Ok(encode_symbols(&sequence_symbols(seq)?, im))
}

pub(crate) fn encode_symbols(symbols: &[usize], im: &ItemMemory) -> Hypervector {
    let mut h = Hypervector::zeros(im.dim());
    for (i, &s) in symbols.iter().enumerate() {
        h.xor_assign(&im.base[s].rotate(i));
    }
    h
}
