//! Empirical check that randomized encoding looks memoryless to an observer
//! without codebook knowledge.
//!
//! With q^n fixed, each sample draws fresh codebooks of ⌈2^{n·rate}⌉ words per
//! source and a uniform message per source, transmits the selected words
//! through the kernel, and records the sequences seen. The empirical laws are
//! compared in total variation with ∏_j p(x_j|q_j) and ∏_j p(y_j|q_j).

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{Channel, Policy};
use crate::error::{Error, Result};

use super::codebook::{codebook_size, Codebook};

/// Largest sequence alphabet |A|^n that is enumerated.
pub const MAX_ENUMERATION: usize = 4096;
const MAX_SAMPLE_SYMBOLS: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma1Config {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    /// Codebook rate in bits per use.
    #[serde(default = "default_rate")]
    pub rate: f64,
}

fn default_rate() -> f64 {
    1.0
}

impl Default for Lemma1Config {
    fn default() -> Self {
        Self { n: 2, samples: 100_000, seed: 0, rate: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub config: Lemma1Config,
    pub q_sequence: Vec<usize>,
    pub codebook_size: usize,
    /// TV distance of x_i^n from its product law, per source.
    pub input_tv: Vec<f64>,
    /// TV distance of y_k^n from its product law, per destination.
    pub output_tv: Vec<f64>,
    pub relay_tv: f64,
}

impl Lemma1Report {
    pub fn max_tv(&self) -> f64 {
        self.input_tv.iter().chain(&self.output_tv).fold(self.relay_tv, |a, &b| a.max(b))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn checked_space(size: usize, n: usize, what: &str) -> Result<usize> {
    u32::try_from(n)
        .ok()
        .and_then(|e| size.checked_pow(e))
        .filter(|&s| s <= MAX_ENUMERATION)
        .ok_or_else(|| Error::ResourceCap(format!("{what} alphabet {size}^{n} exceeds {MAX_ENUMERATION} sequences")))
}

/// ∏_j law[q_j][s_j] over all sequences, first symbol most significant.
fn product_law(laws: &[Vec<f64>], q: &[usize], size: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for &qj in q {
        out = out.iter().flat_map(|&p| laws[qj].iter().map(move |&l| p * l)).collect();
    }
    debug_assert_eq!(out.len(), size.pow(q.len() as u32));
    out
}

fn tv(counts: &[u64], law: &[f64], samples: u64) -> f64 {
    0.5 * counts.iter().zip(law).map(|(&c, &p)| (c as f64 / samples as f64 - p).abs()).sum::<f64>()
}

fn index(seq: impl Iterator<Item = usize>, size: usize) -> usize {
    seq.fold(0, |acc, s| acc * size + s)
}

pub fn verify_lemma1(channel: &Channel, policy: &Policy, cfg: &Lemma1Config) -> Result<Lemma1Report> {
    policy.check_against(channel)?;
    if cfg.n == 0 || cfg.samples == 0 {
        return Err(Error::InvalidParameter("memorylessness check needs n ≥ 1 and at least one sample".into()));
    }
    let n = cfg.n;
    let (m, k, r) = (channel.m(), channel.k(), channel.relay_size());
    for (i, &s) in channel.input_sizes().iter().enumerate() {
        checked_space(s, n, &format!("X{}", i + 1))?;
    }
    for (d, &s) in channel.output_sizes().iter().enumerate() {
        checked_space(s, n, &format!("Y{}", d + 1))?;
    }
    checked_space(r, n, "YR")?;
    let size = codebook_size(n, cfg.rate)?;
    if size.saturating_mul(n * m) > MAX_SAMPLE_SYMBOLS {
        return Err(Error::ResourceCap(format!("{size} codewords per sample exceed the sampling budget")));
    }

    let q_size = policy.q_size();
    let input_laws: Vec<Vec<Vec<f64>>> =
        (0..m).map(|i| (0..q_size).map(|q| policy.input_dist(i, q).to_vec()).collect()).collect();
    // p(y_k | q) and p(y_R | q)
    let mut output_laws: Vec<Vec<Vec<f64>>> =
        channel.output_sizes().iter().map(|&s| vec![vec![0.0; s]; q_size]).collect();
    let mut relay_laws = vec![vec![0.0; r]; q_size];
    let mut xs = vec![0; m];
    let mut ys = vec![0; k];
    for q in 0..q_size {
        for t in 0..channel.input_tuples() {
            channel.decode_inputs(t, &mut xs);
            let w: f64 = xs.iter().enumerate().map(|(i, &x)| input_laws[i][q][x]).product();
            for (idx, &p) in channel.kernel_row(t).iter().enumerate() {
                let yr = channel.decode_outputs(idx, &mut ys);
                relay_laws[q][yr] += w * p;
                for (d, &y) in ys.iter().enumerate() {
                    output_laws[d][q][y] += w * p;
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let q_law = WeightedIndex::new(policy.q_dist().iter().copied()).map_err(|e| Error::Internal(e.to_string()))?;
    let q: Vec<usize> = (0..n).map(|_| q_law.sample(&mut rng)).collect();
    let q16: Vec<u16> = q.iter().map(|&v| v as u16).collect();
    let samplers = |laws: &[Vec<f64>]| -> Result<Vec<WeightedIndex<f64>>> {
        laws.iter().map(|l| WeightedIndex::new(l.iter().copied()).map_err(|e| Error::Internal(e.to_string()))).collect()
    };
    let input_samplers: Vec<Vec<WeightedIndex<f64>>> = input_laws.iter().map(|l| samplers(l)).collect::<Result<_>>()?;
    let kernel_samplers = (0..channel.input_tuples())
        .map(|t| WeightedIndex::new(channel.kernel_row(t).iter().copied()).map_err(|e| Error::Internal(e.to_string())))
        .collect::<Result<Vec<_>>>()?;

    let mut x_counts: Vec<Vec<u64>> = channel.input_sizes().iter().map(|&s| vec![0; s.pow(n as u32)]).collect();
    let mut y_counts: Vec<Vec<u64>> = channel.output_sizes().iter().map(|&s| vec![0; s.pow(n as u32)]).collect();
    let mut r_counts = vec![0u64; r.pow(n as u32)];
    let mut sent: Vec<Vec<usize>> = vec![vec![0; n]; m];
    let mut y_seq: Vec<Vec<usize>> = vec![vec![0; n]; k];
    let mut r_seq = vec![0; n];
    for _ in 0..cfg.samples {
        for (i, law) in input_samplers.iter().enumerate() {
            let book = Codebook::draw(size, &q16, law, &mut rng);
            let w = rng.random_range(0..size);
            for (s, &x) in sent[i].iter_mut().zip(book.word(w)) {
                *s = x as usize;
            }
            x_counts[i][index(sent[i].iter().copied(), channel.input_sizes()[i])] += 1;
        }
        for j in 0..n {
            for (x, s) in xs.iter_mut().zip(&sent) {
                *x = s[j];
            }
            let out = kernel_samplers[channel.input_index(&xs)].sample(&mut rng);
            r_seq[j] = channel.decode_outputs(out, &mut ys);
            for (seq, &y) in y_seq.iter_mut().zip(&ys) {
                seq[j] = y;
            }
        }
        for (d, seq) in y_seq.iter().enumerate() {
            y_counts[d][index(seq.iter().copied(), channel.output_sizes()[d])] += 1;
        }
        r_counts[index(r_seq.iter().copied(), r)] += 1;
    }

    let input_tv = (0..m)
        .map(|i| tv(&x_counts[i], &product_law(&input_laws[i], &q, channel.input_sizes()[i]), cfg.samples))
        .collect();
    let output_tv = (0..k)
        .map(|d| tv(&y_counts[d], &product_law(&output_laws[d], &q, channel.output_sizes()[d]), cfg.samples))
        .collect();
    let relay_tv = tv(&r_counts, &product_law(&relay_laws, &q, r), cfg.samples);
    Ok(Lemma1Report { config: *cfg, q_sequence: q, codebook_size: size, input_tv, output_tv, relay_tv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{builtin_channel, uniform_policy, ChannelKind, Mode};
    use std::collections::BTreeMap;

    #[test]
    fn single_letter_alphabet_is_exact() {
        let ch = Channel::from_kernel_fn(ChannelKind::Pmarc, Mode::Multicast, vec![1, 1], vec![1], 1, vec![0.0], |_, _, _| 1.0)
            .unwrap();
        let pol = uniform_policy(&ch, 1, &[1]).unwrap();
        let r = verify_lemma1(&ch, &pol, &Lemma1Config { n: 3, samples: 50, seed: 1, rate: 1.0 }).unwrap();
        assert_eq!(r.max_tv(), 0.0);
    }

    #[test]
    fn product_law_sums_to_one() {
        let laws = vec![vec![0.2, 0.8], vec![0.5, 0.5]];
        let p = product_law(&laws, &[0, 1, 0], 2);
        assert_eq!(p.len(), 8);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[0] - 0.2 * 0.5 * 0.2).abs() < 1e-15);
    }

    #[test]
    fn enumeration_cap() {
        let ch = builtin_channel("binary_adder_pmarc", &BTreeMap::new()).unwrap();
        let pol = uniform_policy(&ch, 1, &[1]).unwrap();
        let e = verify_lemma1(&ch, &pol, &Lemma1Config { n: 13, samples: 1, seed: 0, rate: 0.1 }).unwrap_err();
        assert!(e.is_resource_cap());
    }

    #[test]
    fn binary_inputs_look_memoryless() {
        let ch = builtin_channel("bsc_pmarc", &BTreeMap::new()).unwrap();
        let pol = uniform_policy(&ch, 2, &[1]).unwrap();
        let r = verify_lemma1(&ch, &pol, &Lemma1Config { n: 2, samples: 20_000, seed: 4, rate: 1.0 }).unwrap();
        assert_eq!(r.codebook_size, 4);
        assert!(r.max_tv() < 0.03, "{r:?}");
    }
}
