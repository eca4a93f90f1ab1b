use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};

/// Largest supported message or compression set.
pub const MAX_CODEBOOK_SIZE: usize = 1 << 24;
/// Budget on stored symbols across one codebook set.
pub const MAX_CODEBOOK_SYMBOLS: usize = 1 << 27;
/// Exponents within this distance of an integer are rounded to it.
const EXPONENT_SLACK: f64 = 1e-9;

fn pow2(exponent: f64) -> f64 {
    let r = exponent.round();
    let e = if (exponent - r).abs() <= EXPONENT_SLACK { r } else { exponent };
    e.exp2()
}

/// ⌈2^{nR}⌉ for a message or compression set.
pub fn codebook_size(n: usize, rate: f64) -> Result<usize> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::InvalidParameter(format!("rate must be finite and nonnegative; got {rate}")));
    }
    let size = pow2(n as f64 * rate).ceil();
    if size > MAX_CODEBOOK_SIZE as f64 {
        return Err(Error::ResourceCap(format!(
            "codebook of 2^{:.3} words exceeds the cap of {MAX_CODEBOOK_SIZE}",
            n as f64 * rate
        )));
    }
    Ok(size as usize)
}

/// max(1, ⌊2^{nC}⌋), never more than the number of compression indices.
pub fn bin_count(n: usize, capacity: f64, compression_size: usize) -> usize {
    let exponent = (n as f64 * capacity).min(62.0);
    let bins = pow2(exponent).floor().max(1.0);
    (bins as usize).min(compression_size.max(1))
}

/// Codewords of one length stored back to back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    n: usize,
    symbols: Vec<u16>,
}

impl Codebook {
    pub fn new(n: usize, words: &[Vec<u16>]) -> Result<Self> {
        if n == 0 || words.is_empty() {
            return Err(Error::InvalidParameter("a codebook needs n ≥ 1 and at least one word".into()));
        }
        if let Some(w) = words.iter().find(|w| w.len() != n) {
            return Err(Error::DimensionMismatch(format!("codeword of length {} in a length-{n} codebook", w.len())));
        }
        Ok(Self { n, symbols: words.concat() })
    }

    /// Draws `size` words with symbol j distributed as `laws[q[j]]`.
    pub(crate) fn draw<R: Rng>(size: usize, q: &[u16], laws: &[WeightedIndex<f64>], rng: &mut R) -> Self {
        let n = q.len();
        let mut symbols = Vec::with_capacity(size * n);
        for _ in 0..size {
            symbols.extend(q.iter().map(|&qj| laws[qj as usize].sample(rng) as u16));
        }
        Self { n, symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn word(&self, index: usize) -> &[u16] {
        &self.symbols[index * self.n..(index + 1) * self.n]
    }

    pub(crate) fn max_symbol(&self) -> u16 {
        self.symbols.iter().copied().max().unwrap_or(0)
    }
}

/// Time-sharing sequence, message codebooks, compression codebooks and
/// their bin partitions. Index l of compression codebook k is in bin
/// l mod B_k, so the bins partition the indices with sizes differing by at
/// most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodebookSet {
    q: Vec<u16>,
    messages: Vec<Codebook>,
    compressions: Vec<Codebook>,
    bins: Vec<usize>,
}

impl CodebookSet {
    pub fn new(q: Vec<u16>, messages: Vec<Codebook>, compressions: Vec<Codebook>, bins: Vec<usize>) -> Result<Self> {
        let n = q.len();
        if n == 0 {
            return Err(Error::InvalidParameter("blocklength must be at least 1".into()));
        }
        if messages.iter().chain(&compressions).any(|c| c.n != n) {
            return Err(Error::DimensionMismatch("codeword length differs from the time-sharing sequence".into()));
        }
        if bins.len() != compressions.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} bin counts for {} compression codebooks",
                bins.len(),
                compressions.len()
            )));
        }
        for (b, c) in bins.iter().zip(&compressions) {
            if *b == 0 || *b > c.len() {
                return Err(Error::InvalidParameter(format!("bin count {b} outside 1..={}", c.len())));
            }
        }
        Ok(Self { q, messages, compressions, bins })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[u16] {
        &self.q
    }

    pub fn message_codebook(&self, source: usize) -> &Codebook {
        &self.messages[source]
    }

    pub fn sources(&self) -> usize {
        self.messages.len()
    }

    pub fn compression_codebook(&self, destination: usize) -> &Codebook {
        &self.compressions[destination]
    }

    pub fn bin_count(&self, destination: usize) -> usize {
        self.bins[destination]
    }

    pub fn bin_of(&self, destination: usize, l: usize) -> usize {
        l % self.bins[destination]
    }

    pub fn bin_members(&self, destination: usize, bin: usize) -> impl Iterator<Item = usize> {
        (bin..self.compressions[destination].len()).step_by(self.bins[destination])
    }

    pub fn bin_sizes(&self, destination: usize) -> Vec<usize> {
        (0..self.bins[destination]).map(|b| self.bin_members(destination, b).count()).collect()
    }
}
