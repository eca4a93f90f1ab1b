//! Monte Carlo realization of generalized compress-forward with an
//! oblivious relay.
//!
//! One codebook set is drawn per run from the seed and shared read-only by
//! all trials. Trial t draws its messages and channel noise from a ChaCha8
//! stream seeded with `seed ^ t`, so reports do not depend on the number of
//! worker threads.
//!
//! Failure events for destination k with true messages (w1, w2), relay index
//! l and bin b, in order of precedence:
//!
//! | event | meaning |
//! |-------|---------|
//! | E0 | no compression codeword is typical with y_R |
//! | E1 | the true tuple (w1, w2, l) is not typical with y_k |
//! | E2 | a tuple (w1' ≠ w1, w2, l) is typical |
//! | E3 | a tuple (w1, w2' ≠ w2, l) is typical |
//! | E4 | a tuple (w1' ≠ w1, w2' ≠ w2, l) is typical |
//! | E5–E7 | as E2–E4 with some l' ≠ l in bin b |
//!
//! A trial counts as a failure for destination k exactly when the joint
//! typicality decoder does not return the intended messages. For the
//! interference topology only the destination's own message is intended, so
//! events that perturb only the other message never cause a failure there.

mod codebook;
mod lemma;
mod typical;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::channel::{Channel, Mode, Policy};
use crate::dist::{build_joint, var};
use crate::error::{Error, Result};

pub use codebook::{bin_count, codebook_size, Codebook, CodebookSet, MAX_CODEBOOK_SIZE, MAX_CODEBOOK_SYMBOLS};
pub use lemma::{verify_lemma1, Lemma1Config, Lemma1Report, MAX_ENUMERATION};
pub use typical::Typicality;

use typical::{Rule, Scratch, TypicalSet};

pub const DEFAULT_EPSILON: f64 = 0.2;
/// Cap on ⌈2^{nR1}⌉·⌈2^{nR2}⌉·(largest bin) per destination.
pub const MAX_DECODE_TUPLES: u64 = 10_000_000;
pub const MAX_BLOCKLENGTH: usize = 64;
pub const EVENTS: usize = 8;
const CODEBOOK_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Pmarc,
    Pifrc,
}

impl Topology {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pmarc" => Ok(Self::Pmarc),
            "pifrc" => Ok(Self::Pifrc),
            other => Err(Error::InvalidParameter(format!("unknown topology '{other}' (pmarc|pifrc)"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pmarc => "pmarc",
            Self::Pifrc => "pifrc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub topology: Topology,
    pub n: usize,
    /// Source rates in bits per use.
    pub rates: Vec<f64>,
    /// Compression rate per destination in bits per use.
    pub rhat: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub typicality: Typicality,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl SimConfig {
    /// 1000 trials, seed 0, ε = 0.2 and joint typicality.
    pub fn new(topology: Topology, n: usize, rates: Vec<f64>, rhat: Vec<f64>) -> Self {
        Self { topology, n, rates, rhat, epsilon: DEFAULT_EPSILON, trials: 1000, seed: 0, typicality: Typicality::Joint }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_BLOCKLENGTH {
            return Err(Error::InvalidParameter(format!("blocklength must be in 1..={MAX_BLOCKLENGTH}; got {}", self.n)));
        }
        if self.rates.iter().chain(&self.rhat).any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidParameter("rates must be finite and nonnegative".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be in (0, 1); got {}", self.epsilon)));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("at least one trial is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeOutcome {
    /// The unique intended messages: both for a single destination, only the
    /// destination's own for the interference topology.
    Decoded(Vec<usize>),
    Ambiguous,
    NoneTypical,
}

#[derive(Clone, Copy)]
enum Cand {
    Only(usize),
    AllBut(usize),
    Any,
}

#[derive(Clone, Copy)]
enum Indices {
    One(usize),
    Bin { bin: usize, except: Option<usize> },
}

struct Tables {
    decode: TypicalSet,
    pre_x1: TypicalSet,
    pre_x2: TypicalSet,
    pre_yh: TypicalSet,
    cover: TypicalSet,
}

/// Partial cell indices from (q^n, y_k^n) in each decoding table.
struct Observed {
    decode: Vec<u32>,
    x1: Vec<u32>,
    x2: Vec<u32>,
    yh: Vec<u32>,
}

/// Everything a trial needs besides the codebooks.
pub struct GcfSimulator<'a> {
    channel: &'a Channel,
    cfg: SimConfig,
    message_sizes: Vec<usize>,
    compression_sizes: Vec<usize>,
    bins: Vec<usize>,
    q_law: WeightedIndex<f64>,
    input_laws: Vec<Vec<WeightedIndex<f64>>>,
    compression_laws: Vec<Vec<WeightedIndex<f64>>>,
    kernel_laws: Vec<WeightedIndex<f64>>,
    tables: Vec<Tables>,
    max_cells: usize,
}

fn law(weights: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(weights.iter().copied()).map_err(|e| Error::Internal(format!("sampling law: {e}")))
}

impl<'a> GcfSimulator<'a> {
    pub fn new(channel: &'a Channel, policy: &Policy, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        policy.check_against(channel)?;
        let (m, k) = (channel.m(), channel.k());
        match cfg.topology {
            Topology::Pmarc if (m, k) != (2, 1) => {
                return Err(Error::Topology(format!("pmarc simulation needs M=2, K=1; got M={m}, K={k}")))
            }
            Topology::Pifrc if (m, k) != (2, 2) || channel.mode() != Mode::Unicast => {
                return Err(Error::Topology(format!(
                    "pifrc simulation needs a unicast channel with M=2, K=2; got M={m}, K={k}"
                )))
            }
            _ => {}
        }
        if cfg.rates.len() != m {
            return Err(Error::DimensionMismatch(format!("{} rates for {m} sources", cfg.rates.len())));
        }
        if cfg.rhat.len() != k {
            return Err(Error::DimensionMismatch(format!("{} compression rates for {k} destinations", cfg.rhat.len())));
        }
        let alphabets = channel.input_sizes().iter().chain(channel.output_sizes()).chain(policy.compression_sizes());
        if alphabets.chain([&channel.relay_size(), &policy.q_size()]).any(|&s| s > u16::MAX as usize) {
            return Err(Error::ResourceCap("alphabets above 65535 symbols are not simulated".into()));
        }
        let n = cfg.n;
        let message_sizes: Vec<usize> = cfg.rates.iter().map(|&r| codebook_size(n, r)).collect::<Result<_>>()?;
        let compression_sizes: Vec<usize> = cfg.rhat.iter().map(|&r| codebook_size(n, r)).collect::<Result<_>>()?;
        let bins: Vec<usize> = compression_sizes
            .iter()
            .zip(channel.link_capacities())
            .map(|(&l, &c)| bin_count(n, c, l))
            .collect();
        let stored: usize = message_sizes.iter().chain(&compression_sizes).sum::<usize>() * n;
        if stored > MAX_CODEBOOK_SYMBOLS {
            return Err(Error::ResourceCap(format!("codebooks need {stored} symbols; cap is {MAX_CODEBOOK_SYMBOLS}")));
        }
        for (d, (&l, &b)) in compression_sizes.iter().zip(&bins).enumerate() {
            let tuples = message_sizes[0] as u64 * message_sizes[1] as u64 * l.div_ceil(b) as u64;
            if tuples > MAX_DECODE_TUPLES {
                return Err(Error::ResourceCap(format!(
                    "destination {} would scan {tuples} tuples per trial; cap is {MAX_DECODE_TUPLES}",
                    d + 1
                )));
            }
        }

        let q_size = policy.q_size();
        let q_law = law(policy.q_dist())?;
        let input_laws = (0..m)
            .map(|i| (0..q_size).map(|q| law(policy.input_dist(i, q))).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let relay_given_q = relay_law(channel, policy);
        let compression_laws = (0..k)
            .map(|d| {
                (0..q_size)
                    .map(|q| {
                        let w: Vec<f64> = (0..policy.compression_sizes()[d])
                            .map(|h| {
                                relay_given_q[q].iter().enumerate().map(|(r, &p)| p * policy.compression_prob(d, q, r, h)).sum()
                            })
                            .collect();
                        law(&w)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let kernel_laws = (0..channel.input_tuples()).map(|t| law(channel.kernel_row(t))).collect::<Result<_>>()?;

        let joint = build_joint(channel, policy)?;
        let (eps, conv) = (cfg.epsilon, cfg.typicality);
        let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let (x1, x2) = (var::x(0), var::x(1));
        let mut tables = Vec::with_capacity(k);
        for d in 0..k {
            let (yh, y) = (var::yh(d), var::y(d));
            let t = |vars: &[&str], parents: usize, rule: Rule| TypicalSet::new(&joint, &names(vars), parents, rule, eps, n);
            tables.push(Tables {
                decode: t(&[var::Q, &x1, &x2, &yh, &y], 4, Rule::Exact(conv))?,
                pre_x1: t(&[var::Q, &x1, &yh, &y], 3, Rule::Prefilter(conv))?,
                pre_x2: t(&[var::Q, &x2, &yh, &y], 3, Rule::Prefilter(conv))?,
                pre_yh: t(&[var::Q, &yh, &y], 2, Rule::Prefilter(conv))?,
                cover: t(&[var::Q, &yh, var::YR], 2, Rule::Exact(conv))?,
            });
        }
        let max_cells = tables
            .iter()
            .flat_map(|t| [&t.decode, &t.pre_x1, &t.pre_x2, &t.pre_yh, &t.cover])
            .map(|t| t.cells())
            .max()
            .unwrap_or(1);
        Ok(Self {
            channel,
            cfg: cfg.clone(),
            message_sizes,
            compression_sizes,
            bins,
            q_law,
            input_laws,
            compression_laws,
            kernel_laws,
            tables,
            max_cells,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn message_set_sizes(&self) -> &[usize] {
        &self.message_sizes
    }

    pub fn compression_set_sizes(&self) -> &[usize] {
        &self.compression_sizes
    }

    pub fn bin_counts(&self) -> &[usize] {
        &self.bins
    }

    /// The stream that [`simulate`] draws its codebook set from.
    pub fn codebook_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(CODEBOOK_STREAM);
        rng
    }

    /// q^n i.i.d. from p(q); message and compression codewords i.i.d. given
    /// q^n from p(x_i|q) and the marginal p(ŷ_k|q).
    pub fn build_codebooks<R: Rng>(&self, rng: &mut R) -> CodebookSet {
        let q: Vec<u16> = (0..self.cfg.n).map(|_| self.q_law.sample(rng) as u16).collect();
        let messages = self.message_sizes.iter().zip(&self.input_laws).map(|(&s, l)| Codebook::draw(s, &q, l, rng)).collect();
        let compressions =
            self.compression_sizes.iter().zip(&self.compression_laws).map(|(&s, l)| Codebook::draw(s, &q, l, rng)).collect();
        CodebookSet::new(q, messages, compressions, self.bins.clone()).expect("sizes are consistent by construction")
    }

    fn check_codebooks(&self, cb: &CodebookSet) -> Result<()> {
        let ok = cb.n() == self.cfg.n
            && cb.sources() == self.message_sizes.len()
            && (0..self.channel.m()).all(|i| cb.message_codebook(i).max_symbol() < self.channel.input_sizes()[i] as u16)
            && (0..self.tables.len()).all(|d| cb.bin_count(d) >= 1);
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch("codebook set does not match this simulator".into()))
        }
    }

    fn scratch(&self) -> Scratch {
        Scratch::with_cells(self.max_cells)
    }

    /// Smallest index l whose codeword is typical with (q^n, y_R^n), and its
    /// bin; `None` is a covering failure.
    pub fn relay_compress(&self, cb: &CodebookSet, destination: usize, y_r: &[u16]) -> Option<(usize, usize)> {
        self.compress_with(cb, destination, y_r, &mut self.scratch())
    }

    fn compress_with(&self, cb: &CodebookSet, d: usize, y_r: &[u16], s: &mut Scratch) -> Option<(usize, usize)> {
        let t = &self.tables[d].cover;
        let base = t.base(&[(0, cb.q()), (2, y_r)]);
        let book = cb.compression_codebook(d);
        (0..book.len()).find(|&l| t.contains(&base, &[(1, book.word(l))], s)).map(|l| (l, cb.bin_of(d, l)))
    }

    fn observe(&self, cb: &CodebookSet, d: usize, y: &[u16]) -> Observed {
        let t = &self.tables[d];
        let q = cb.q();
        Observed {
            decode: t.decode.base(&[(0, q), (4, y)]),
            x1: t.pre_x1.base(&[(0, q), (3, y)]),
            x2: t.pre_x2.base(&[(0, q), (3, y)]),
            yh: t.pre_yh.base(&[(0, q), (2, y)]),
        }
    }

    fn candidates(&self, cb: &CodebookSet, source: usize, cand: Cand, keep: impl FnMut(&[u16]) -> bool) -> Vec<usize> {
        let book = cb.message_codebook(source);
        let all = 0..book.len();
        let mut keep = keep;
        match cand {
            Cand::Only(w) => {
                if keep(book.word(w)) {
                    vec![w]
                } else {
                    vec![]
                }
            }
            Cand::AllBut(w) => all.filter(|&v| v != w && keep(book.word(v))).collect(),
            Cand::Any => all.filter(|&v| keep(book.word(v))).collect(),
        }
    }

    /// Visits typical tuples (w1, w2, l) until `visit` returns true.
    #[allow(clippy::too_many_arguments)]
    fn scan(
        &self,
        cb: &CodebookSet,
        d: usize,
        obs: &Observed,
        ls: Indices,
        c1: Cand,
        c2: Cand,
        s: &mut Scratch,
        mut visit: impl FnMut(usize, usize, usize) -> bool,
    ) -> bool {
        let t = &self.tables[d];
        let book = cb.compression_codebook(d);
        let ls: Vec<usize> = match ls {
            Indices::One(l) => vec![l],
            Indices::Bin { bin, except } => cb.bin_members(d, bin).filter(|&l| Some(l) != except).collect(),
        };
        let (b1, b2) = (cb.message_codebook(0), cb.message_codebook(1));
        for l in ls {
            let yh = book.word(l);
            if !t.pre_yh.contains(&obs.yh, &[(1, yh)], s) {
                continue;
            }
            let w1s = self.candidates(cb, 0, c1, |x| t.pre_x1.contains(&obs.x1, &[(1, x), (2, yh)], s));
            if w1s.is_empty() {
                continue;
            }
            let w2s = self.candidates(cb, 1, c2, |x| t.pre_x2.contains(&obs.x2, &[(1, x), (2, yh)], s));
            for &a in &w1s {
                for &b in &w2s {
                    if t.decode.contains(&obs.decode, &[(1, b1.word(a)), (2, b2.word(b)), (3, yh)], s) && visit(a, b, l) {
                        return true;
                    }
                }
            }
        }
        false
    }

    #[allow(clippy::too_many_arguments)]
    fn exists(&self, cb: &CodebookSet, d: usize, obs: &Observed, ls: Indices, c1: Cand, c2: Cand, s: &mut Scratch) -> bool {
        self.scan(cb, d, obs, ls, c1, c2, s, |_, _, _| true)
    }

    fn intended(&self, d: usize) -> [bool; 2] {
        match self.cfg.topology {
            Topology::Pmarc => [true, true],
            Topology::Pifrc => [d == 0, d == 1],
        }
    }

    /// Exhaustive joint typicality decoding over the messages and the
    /// compression indices in `bin`.
    pub fn joint_decode(&self, cb: &CodebookSet, destination: usize, y: &[u16], bin: usize) -> DecodeOutcome {
        let d = destination;
        let obs = self.observe(cb, d, y);
        let intended = self.intended(d);
        let mut found: Option<Vec<usize>> = None;
        let mut ambiguous = false;
        let bin = Indices::Bin { bin, except: None };
        self.scan(cb, d, &obs, bin, Cand::Any, Cand::Any, &mut self.scratch(), |a, b, _| {
            let key: Vec<usize> = [a, b].iter().zip(intended).filter(|(_, i)| *i).map(|(w, _)| *w).collect();
            match &found {
                None => {
                    found = Some(key);
                    false
                }
                Some(f) if *f == key => false,
                Some(_) => {
                    ambiguous = true;
                    true
                }
            }
        });
        match (ambiguous, found) {
            (true, _) => DecodeOutcome::Ambiguous,
            (false, Some(w)) => DecodeOutcome::Decoded(w),
            (false, None) => DecodeOutcome::NoneTypical,
        }
    }

    /// Earliest event for a failed destination, `None` on success.
    fn classify(&self, cb: &CodebookSet, d: usize, w: &[usize], y: &[u16], y_r: &[u16], s: &mut Scratch) -> Option<usize> {
        let Some((l, bin)) = self.compress_with(cb, d, y_r, s) else {
            return Some(0);
        };
        let obs = self.observe(cb, d, y);
        let (w1, w2) = (w[0], w[1]);
        let intended = self.intended(d);
        let true_typical = self.exists(cb, d, &obs, Indices::One(l), Cand::Only(w1), Cand::Only(w2), s);
        let rest = Indices::Bin { bin, except: Some(l) };
        let events: [(usize, Indices, Cand, Cand, [bool; 2]); 6] = [
            (2, Indices::One(l), Cand::AllBut(w1), Cand::Only(w2), [true, false]),
            (3, Indices::One(l), Cand::Only(w1), Cand::AllBut(w2), [false, true]),
            (4, Indices::One(l), Cand::AllBut(w1), Cand::AllBut(w2), [true, true]),
            (5, rest, Cand::AllBut(w1), Cand::Only(w2), [true, false]),
            (6, rest, Cand::Only(w1), Cand::AllBut(w2), [false, true]),
            (7, rest, Cand::AllBut(w1), Cand::AllBut(w2), [true, true]),
        ];
        let wrong = events
            .iter()
            .filter(|(_, _, _, _, wrong)| (wrong[0] && intended[0]) || (wrong[1] && intended[1]))
            .find(|&&(_, ls, c1, c2, _)| self.exists(cb, d, &obs, ls, c1, c2, s))
            .map(|e| e.0);
        if true_typical {
            return wrong;
        }
        if wrong.is_some() {
            return Some(1);
        }
        let cand = |i: usize| if intended[i] { Cand::Only(w[i]) } else { Cand::Any };
        let recovered = self.exists(cb, d, &obs, Indices::Bin { bin, except: None }, cand(0), cand(1), s);
        if recovered {
            None
        } else {
            Some(1)
        }
    }

    /// Messages, destination outputs and relay output of trial `t`.
    fn draw_trial(&self, cb: &CodebookSet, t: u64) -> (Vec<usize>, Vec<Vec<u16>>, Vec<u16>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ t);
        let w: Vec<usize> = self.message_sizes.iter().map(|&s| rng.random_range(0..s)).collect();
        let words: Vec<&[u16]> = w.iter().enumerate().map(|(i, &wi)| cb.message_codebook(i).word(wi)).collect();
        let n = self.cfg.n;
        let k = self.channel.k();
        let mut ys = vec![Vec::with_capacity(n); k];
        let mut y_r = Vec::with_capacity(n);
        let mut xs = vec![0usize; words.len()];
        let mut digits = vec![0usize; k];
        for j in 0..n {
            for (x, word) in xs.iter_mut().zip(&words) {
                *x = word[j] as usize;
            }
            let out = self.kernel_laws[self.channel.input_index(&xs)].sample(&mut rng);
            y_r.push(self.channel.decode_outputs(out, &mut digits) as u16);
            for (y, &v) in ys.iter_mut().zip(&digits) {
                y.push(v as u16);
            }
        }
        (w, ys, y_r)
    }

    fn trial(&self, cb: &CodebookSet, t: u64, s: &mut Scratch) -> Vec<Option<usize>> {
        let (w, ys, y_r) = self.draw_trial(cb, t);
        (0..self.channel.k()).map(|d| self.classify(cb, d, &w, &ys[d], &y_r, s)).collect()
    }

    /// Runs the configured trials on the given codebook set.
    pub fn run_with(&self, cb: &CodebookSet) -> Result<SimReport> {
        self.check_codebooks(cb)?;
        let k = self.channel.k();
        let tally = (0..self.cfg.trials)
            .into_par_iter()
            .map_init(|| self.scratch(), |s, t| self.trial(cb, t, s))
            .fold(|| Tally::new(k), |mut acc, o| {
                acc.add(&o);
                acc
            })
            .reduce(|| Tally::new(k), Tally::merge);
        Ok(self.report(cb, tally))
    }

    pub fn run(&self) -> Result<SimReport> {
        let cb = self.build_codebooks(&mut self.codebook_rng());
        self.run_with(&cb)
    }

    fn report(&self, cb: &CodebookSet, tally: Tally) -> SimReport {
        let trials = self.cfg.trials;
        let destinations = tally
            .events
            .iter()
            .zip(&tally.failures)
            .enumerate()
            .map(|(d, (events, &failures))| {
                let (error_rate, ci_half_width) = binomial(failures, trials);
                DestinationReport { destination: d + 1, events: *events, failures, error_rate, ci_half_width }
            })
            .collect();
        let (error_rate, ci_half_width) = binomial(tally.trial_failures, trials);
        SimReport {
            config: self.cfg.clone(),
            message_set_sizes: self.message_sizes.clone(),
            compression_set_sizes: self.compression_sizes.clone(),
            bin_counts: self.bins.clone(),
            bin_sizes: (0..self.bins.len()).map(|d| cb.bin_sizes(d)).map(|s| (min(&s), max(&s))).collect(),
            trials,
            failures: tally.trial_failures,
            error_rate,
            ci_half_width,
            destinations,
        }
    }
}

fn min(v: &[usize]) -> usize {
    v.iter().copied().min().unwrap_or(0)
}

fn max(v: &[usize]) -> usize {
    v.iter().copied().max().unwrap_or(0)
}

/// p(y_R | q) with the sources drawn from the policy.
fn relay_law(channel: &Channel, policy: &Policy) -> Vec<Vec<f64>> {
    let r = channel.relay_size();
    let mut xs = vec![0; channel.m()];
    (0..policy.q_size())
        .map(|q| {
            let mut acc = vec![0.0; r];
            for t in 0..channel.input_tuples() {
                channel.decode_inputs(t, &mut xs);
                let w: f64 = xs.iter().enumerate().map(|(i, &x)| policy.input_prob(i, q, x)).product();
                if w == 0.0 {
                    continue;
                }
                for (idx, &p) in channel.kernel_row(t).iter().enumerate() {
                    acc[idx % r] += w * p;
                }
            }
            acc
        })
        .collect()
}

fn binomial(failures: u64, trials: u64) -> (f64, f64) {
    let p = failures as f64 / trials as f64;
    (p, 1.96 * (p * (1.0 - p) / trials as f64).sqrt())
}

struct Tally {
    events: Vec<[u64; EVENTS]>,
    failures: Vec<u64>,
    trial_failures: u64,
}

impl Tally {
    fn new(k: usize) -> Self {
        Self { events: vec![[0; EVENTS]; k], failures: vec![0; k], trial_failures: 0 }
    }

    fn add(&mut self, outcome: &[Option<usize>]) {
        for (d, o) in outcome.iter().enumerate() {
            if let Some(e) = o {
                self.events[d][*e] += 1;
                self.failures[d] += 1;
            }
        }
        if outcome.iter().any(Option::is_some) {
            self.trial_failures += 1;
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.events.iter_mut().zip(&other.events) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.failures.iter_mut().zip(&other.failures) {
            *a += b;
        }
        self.trial_failures += other.trial_failures;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DestinationReport {
    /// 1-based destination index.
    pub destination: usize,
    pub events: [u64; EVENTS],
    pub failures: u64,
    pub error_rate: f64,
    pub ci_half_width: f64,
}

impl DestinationReport {
    /// The event with the most failures, earliest on ties.
    pub fn dominant_event(&self) -> Option<usize> {
        let best = (0..EVENTS).rev().max_by_key(|&e| self.events[e])?;
        (self.events[best] > 0).then_some(best)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub message_set_sizes: Vec<usize>,
    pub compression_set_sizes: Vec<usize>,
    pub bin_counts: Vec<usize>,
    /// Smallest and largest bin per destination.
    pub bin_sizes: Vec<(usize, usize)>,
    pub trials: u64,
    /// Trials in which some destination failed.
    pub failures: u64,
    pub error_rate: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub ci_half_width: f64,
    pub destinations: Vec<DestinationReport>,
}

pub const SIM_CSV_HEADER: &str =
    "topology,n,rates,rhat,epsilon,typicality,trials,seed,failures,error_rate,ci_half_width,E0,E1,E2,E3,E4,E5,E6,E7";

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

impl SimReport {
    /// Event counts summed over destinations.
    pub fn events_total(&self) -> [u64; EVENTS] {
        let mut out = [0; EVENTS];
        for d in &self.destinations {
            for (o, e) in out.iter_mut().zip(&d.events) {
                *o += e;
            }
        }
        out
    }

    pub fn to_json_value(&self) -> Value {
        let events = |e: &[u64; EVENTS]| {
            let mut map = serde_json::Map::new();
            for (i, c) in e.iter().enumerate() {
                map.insert(format!("E{i}"), json!(c));
            }
            Value::Object(map)
        };
        json!({
            "config": self.config,
            "message_set_sizes": self.message_set_sizes,
            "compression_set_sizes": self.compression_set_sizes,
            "bin_counts": self.bin_counts,
            "bin_sizes": self.bin_sizes.iter().map(|(a, b)| json!({"min": a, "max": b})).collect::<Vec<_>>(),
            "trials": self.trials,
            "failures": self.failures,
            "error_rate": self.error_rate,
            "ci_half_width": self.ci_half_width,
            "destinations": self.destinations.iter().map(|d| json!({
                "destination": d.destination,
                "events": events(&d.events),
                "failures": d.failures,
                "error_rate": d.error_rate,
                "ci_half_width": d.ci_half_width,
                "dominant_event": d.dominant_event().map(|e| format!("E{e}")),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("report serializes")
    }

    /// One row under [`SIM_CSV_HEADER`]; rates are `;`-separated and events
    /// are summed over destinations.
    pub fn to_csv_row(&self) -> String {
        let c = &self.config;
        let mut row = format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            c.topology.as_str(),
            c.n,
            join(&c.rates),
            join(&c.rhat),
            c.epsilon,
            c.typicality.as_str(),
            self.trials,
            c.seed,
            self.failures,
            self.error_rate,
            self.ci_half_width
        );
        for e in self.events_total() {
            row.push_str(&format!(",{e}"));
        }
        row
    }
}

pub fn build_codebooks<R: Rng>(channel: &Channel, policy: &Policy, cfg: &SimConfig, rng: &mut R) -> Result<CodebookSet> {
    Ok(GcfSimulator::new(channel, policy, cfg)?.build_codebooks(rng))
}

pub fn simulate(channel: &Channel, policy: &Policy, cfg: &SimConfig) -> Result<SimReport> {
    GcfSimulator::new(channel, policy, cfg)?.run()
}
