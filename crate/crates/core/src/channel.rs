//! Channels, input/compression policies and the Gaussian IFRC record.
//!
//! Kernel layout: the row index enumerates input tuples with source 1
//! slowest; inside a row, destination outputs vary in destination order and
//! the relay output `y_R` varies fastest. Files use the same flattening.
//!
//! Policy layout: `input_dists[i][q * |X_i| + x]` and
//! `compression_dists[k][(q * |Y_R| + y_R) * |YH_k| + yh]`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance applied when validating kernels and policies.
pub const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Pmarc,
    Marc,
    Pifrc,
    Multicast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Multicast,
    Unicast,
}

/// Discrete memoryless channel p(y_1..y_K, y_R | x_1..x_M) with digital
/// relay-to-destination links of capacities C_1..C_K bits per use.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    kind: ChannelKind,
    mode: Mode,
    input_sizes: Vec<usize>,
    output_sizes: Vec<usize>,
    relay_size: usize,
    link_capacities: Vec<f64>,
    kernel: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelDocument {
    kind: ChannelKind,
    mode: Mode,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "K")]
    k: usize,
    input_sizes: Vec<usize>,
    output_sizes: Vec<usize>,
    relay_size: usize,
    link_capacities: Vec<f64>,
    kernel: Vec<f64>,
}

fn product(sizes: &[usize], what: &str) -> Result<usize> {
    sizes.iter().try_fold(1usize, |acc, &s| {
        acc.checked_mul(s)
            .filter(|&t| t <= crate::dist::MAX_JOINT_SIZE)
            .ok_or_else(|| Error::ResourceCap(format!("{what} alphabet too large")))
    })
}

fn check_simplex(values: &[f64], what: impl Fn() -> String) -> Result<()> {
    if values.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::NotStochastic(format!("{} has a negative or non-finite entry", what())));
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::NotStochastic(format!("{} sums to {sum}", what())));
    }
    Ok(())
}

impl Channel {
    pub fn new(
        kind: ChannelKind,
        mode: Mode,
        input_sizes: Vec<usize>,
        output_sizes: Vec<usize>,
        relay_size: usize,
        link_capacities: Vec<f64>,
        kernel: Vec<f64>,
    ) -> Result<Self> {
        let ch = Self { kind, mode, input_sizes, output_sizes, relay_size, link_capacities, kernel };
        ch.validate()?;
        Ok(ch)
    }

    /// Builds a channel from a function giving p(y_1..y_K, y_R | x_1..x_M).
    pub fn from_kernel_fn(
        kind: ChannelKind,
        mode: Mode,
        input_sizes: Vec<usize>,
        output_sizes: Vec<usize>,
        relay_size: usize,
        link_capacities: Vec<f64>,
        f: impl Fn(&[usize], &[usize], usize) -> f64,
    ) -> Result<Self> {
        let nx = product(&input_sizes, "input")?;
        let ny = product(&output_sizes, "output")?;
        let mut kernel = Vec::with_capacity(nx * ny * relay_size);
        let mut xs = vec![0; input_sizes.len()];
        let mut ys = vec![0; output_sizes.len()];
        for xt in 0..nx {
            unflatten(xt, &input_sizes, &mut xs);
            for yt in 0..ny {
                unflatten(yt, &output_sizes, &mut ys);
                for r in 0..relay_size {
                    kernel.push(f(&xs, &ys, r));
                }
            }
        }
        Self::new(kind, mode, input_sizes, output_sizes, relay_size, link_capacities, kernel)
    }

    fn validate(&self) -> Result<()> {
        let m = self.input_sizes.len();
        let k = self.output_sizes.len();
        if m == 0 || k == 0 {
            return Err(Error::Schema("a channel needs at least one source and one destination".into()));
        }
        if self.input_sizes.iter().chain(&self.output_sizes).any(|&s| s == 0) || self.relay_size == 0 {
            return Err(Error::Schema("alphabet sizes must be at least 1".into()));
        }
        if self.link_capacities.len() != k {
            return Err(Error::Schema(format!(
                "{} link capacities given for {k} destinations",
                self.link_capacities.len()
            )));
        }
        if self.link_capacities.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Schema("link capacities must be finite and nonnegative".into()));
        }
        match self.kind {
            ChannelKind::Pmarc if (m, k) != (2, 1) => {
                return Err(Error::Schema(format!("pmarc needs M=2, K=1; got M={m}, K={k}")))
            }
            ChannelKind::Pifrc if (m, k) != (2, 2) => {
                return Err(Error::Schema(format!("pifrc needs M=2, K=2; got M={m}, K={k}")))
            }
            ChannelKind::Marc if k != 1 => return Err(Error::Schema(format!("marc needs K=1; got K={k}"))),
            _ => {}
        }
        if self.mode == Mode::Unicast && m != k {
            return Err(Error::Schema(format!("unicast mode needs M = K; got M={m}, K={k}")));
        }
        let nx = product(&self.input_sizes, "input")?;
        let nout = product(&self.output_sizes, "output")?
            .checked_mul(self.relay_size)
            .ok_or_else(|| Error::ResourceCap("output alphabet too large".into()))?;
        if self.kernel.len() != nx * nout {
            return Err(Error::Schema(format!(
                "kernel has {} entries, expected {}",
                self.kernel.len(),
                nx * nout
            )));
        }
        let mut xs = vec![0; m];
        for xt in 0..nx {
            unflatten(xt, &self.input_sizes, &mut xs);
            check_simplex(&self.kernel[xt * nout..(xt + 1) * nout], || format!("kernel row for inputs {xs:?}"))?;
        }
        Ok(())
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }
    pub fn mode(&self) -> Mode {
        self.mode
    }
    /// Source count M.
    pub fn m(&self) -> usize {
        self.input_sizes.len()
    }
    /// Destination count K.
    pub fn k(&self) -> usize {
        self.output_sizes.len()
    }
    pub fn input_sizes(&self) -> &[usize] {
        &self.input_sizes
    }
    pub fn output_sizes(&self) -> &[usize] {
        &self.output_sizes
    }
    pub fn relay_size(&self) -> usize {
        self.relay_size
    }
    pub fn link_capacities(&self) -> &[f64] {
        &self.link_capacities
    }
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// Number of input tuples (kernel rows).
    pub fn input_tuples(&self) -> usize {
        self.input_sizes.iter().product()
    }

    /// Number of (y_1..y_K, y_R) tuples per kernel row.
    pub fn output_tuples(&self) -> usize {
        self.output_sizes.iter().product::<usize>() * self.relay_size
    }

    pub fn input_index(&self, xs: &[usize]) -> usize {
        flatten(xs, &self.input_sizes)
    }

    pub fn decode_inputs(&self, index: usize, xs: &mut [usize]) {
        unflatten(index, &self.input_sizes, xs);
    }

    /// Splits a row-local output index into destination outputs and `y_R`.
    pub fn decode_outputs(&self, index: usize, ys: &mut [usize]) -> usize {
        unflatten(index / self.relay_size, &self.output_sizes, ys);
        index % self.relay_size
    }

    pub fn kernel_row(&self, input_index: usize) -> &[f64] {
        let n = self.output_tuples();
        &self.kernel[input_index * n..(input_index + 1) * n]
    }

    pub fn with_link_capacities(&self, caps: Vec<f64>) -> Result<Channel> {
        let mut ch = self.clone();
        ch.link_capacities = caps;
        ch.validate()?;
        Ok(ch)
    }

    /// The single-destination channel seen by destination `d`: the kernel
    /// marginal on (Y_d, Y_R) with link capacity C_d.
    pub fn destination_view(&self, d: usize) -> Result<Channel> {
        if d >= self.k() {
            return Err(Error::InvalidParameter(format!("destination {d} out of range")));
        }
        let nx = self.input_tuples();
        let yd = self.output_sizes[d];
        let r = self.relay_size;
        let mut kernel = vec![0.0; nx * yd * r];
        let mut ys = vec![0; self.k()];
        for xt in 0..nx {
            for (ot, &p) in self.kernel_row(xt).iter().enumerate() {
                let yr = self.decode_outputs(ot, &mut ys);
                kernel[(xt * yd + ys[d]) * r + yr] += p;
            }
        }
        let kind = if self.m() == 2 { ChannelKind::Pmarc } else { ChannelKind::Marc };
        Channel::new(
            kind,
            Mode::Multicast,
            self.input_sizes.clone(),
            vec![yd],
            r,
            vec![self.link_capacities[d]],
            kernel,
        )
    }

    pub fn to_json(&self) -> String {
        let doc = ChannelDocument {
            kind: self.kind,
            mode: self.mode,
            m: self.m(),
            k: self.k(),
            input_sizes: self.input_sizes.clone(),
            output_sizes: self.output_sizes.clone(),
            relay_size: self.relay_size,
            link_capacities: self.link_capacities.clone(),
            kernel: self.kernel.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("channel document serializes")
    }
}

/// Parses and validates a channel document. Kernel rows are never
/// renormalized.
pub fn load_channel(document: &str) -> Result<Channel> {
    let doc: ChannelDocument = serde_json::from_str(document)?;
    if doc.m != doc.input_sizes.len() {
        return Err(Error::Schema(format!("M={} but {} input sizes", doc.m, doc.input_sizes.len())));
    }
    if doc.k != doc.output_sizes.len() {
        return Err(Error::Schema(format!("K={} but {} output sizes", doc.k, doc.output_sizes.len())));
    }
    Channel::new(
        doc.kind,
        doc.mode,
        doc.input_sizes,
        doc.output_sizes,
        doc.relay_size,
        doc.link_capacities,
        doc.kernel,
    )
}

pub(crate) fn flatten(digits: &[usize], sizes: &[usize]) -> usize {
    digits.iter().zip(sizes).fold(0, |acc, (&d, &s)| acc * s + d)
}

pub(crate) fn unflatten(mut index: usize, sizes: &[usize], digits: &mut [usize]) {
    for i in (0..sizes.len()).rev() {
        digits[i] = index % sizes[i];
        index /= sizes[i];
    }
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn probability(params: &BTreeMap<String, f64>, key: &str, default: f64) -> Result<f64> {
    let p = param(params, key, default);
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::InvalidParameter(format!("`{key}` must lie in [0, 1], got {p}")))
    }
}

fn flip(bit: usize, target: usize, p: f64) -> f64 {
    if bit == target {
        1.0 - p
    } else {
        p
    }
}

/// Names accepted by [`builtin_channel`].
pub const FIXTURES: [&str; 5] = ["binary_adder_pmarc", "noiseless_pmarc", "bsc_pmarc", "xor_pifrc", "degenerate_relay"];

/// Test fixtures.
///
/// * `binary_adder_pmarc`: Y = X1 + X2 over {0,1,2}; Y_R = Y, or constant
///   when `constant_relay` = 1. Parameter `c` (default 1).
/// * `noiseless_pmarc`: Y = (X1, X2) encoded as 2·x1 + x2; constant relay.
/// * `bsc_pmarc`: Y = X1 ⊕ X2 ⊕ Z with Z ~ Bern(`p`), Y_R = X1 ⊕ Z_R with
///   Z_R ~ Bern(`p_relay`). Defaults p = p_relay = 0.11, c = 1.
/// * `xor_pifrc`: Y1 = Y2 = X1 ⊕ X2, constant relay, unicast; `c1`, `c2`.
/// * `degenerate_relay`: Y = (X1 ∨ X2) ⊕ Z with Z ~ Bern(`p`, default 0) and
///   |Y_R| = 1.
pub fn builtin_channel(name: &str, params: &BTreeMap<String, f64>) -> Result<Channel> {
    let c = param(params, "c", 1.0);
    match name {
        "binary_adder_pmarc" => {
            let constant = param(params, "constant_relay", 0.0) != 0.0;
            let relay = if constant { 1 } else { 3 };
            Channel::from_kernel_fn(ChannelKind::Pmarc, Mode::Multicast, vec![2, 2], vec![3], relay, vec![c], |x, y, r| {
                let s = x[0] + x[1];
                let relay_ok = constant || r == s;
                if y[0] == s && relay_ok {
                    1.0
                } else {
                    0.0
                }
            })
        }
        "noiseless_pmarc" => {
            Channel::from_kernel_fn(ChannelKind::Pmarc, Mode::Multicast, vec![2, 2], vec![4], 1, vec![c], |x, y, _| {
                if y[0] == 2 * x[0] + x[1] {
                    1.0
                } else {
                    0.0
                }
            })
        }
        "bsc_pmarc" => {
            let p = probability(params, "p", 0.11)?;
            let pr = probability(params, "p_relay", 0.11)?;
            Channel::from_kernel_fn(ChannelKind::Pmarc, Mode::Multicast, vec![2, 2], vec![2], 2, vec![c], |x, y, r| {
                flip(y[0], x[0] ^ x[1], p) * flip(r, x[0], pr)
            })
        }
        "xor_pifrc" => {
            let c1 = param(params, "c1", c);
            let c2 = param(params, "c2", c);
            Channel::from_kernel_fn(ChannelKind::Pifrc, Mode::Unicast, vec![2, 2], vec![2, 2], 1, vec![c1, c2], |x, y, _| {
                let s = x[0] ^ x[1];
                if y[0] == s && y[1] == s {
                    1.0
                } else {
                    0.0
                }
            })
        }
        "degenerate_relay" => {
            let p = probability(params, "p", 0.0)?;
            Channel::from_kernel_fn(ChannelKind::Pmarc, Mode::Multicast, vec![2, 2], vec![2], 1, vec![c], |x, y, _| {
                flip(y[0], x[0] | x[1], p)
            })
        }
        other => Err(Error::UnknownFixture(other.to_string())),
    }
}

/// Time-sharing law, source input laws and relay compression kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Policy {
    q_size: usize,
    q_dist: Vec<f64>,
    input_sizes: Vec<usize>,
    input_dists: Vec<Vec<f64>>,
    relay_size: usize,
    compression_sizes: Vec<usize>,
    compression_dists: Vec<Vec<f64>>,
}

impl Policy {
    pub fn new(
        q_dist: Vec<f64>,
        input_sizes: Vec<usize>,
        input_dists: Vec<Vec<f64>>,
        relay_size: usize,
        compression_sizes: Vec<usize>,
        compression_dists: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let p = Self { q_size: q_dist.len(), q_dist, input_sizes, input_dists, relay_size, compression_sizes, compression_dists };
        p.validate()?;
        Ok(p)
    }

    pub fn from_json(document: &str) -> Result<Self> {
        let p: Policy = serde_json::from_str(document)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }

    fn validate(&self) -> Result<()> {
        if self.q_size == 0 || self.q_dist.len() != self.q_size {
            return Err(Error::Schema(format!("q_size {} with {} q_dist entries", self.q_size, self.q_dist.len())));
        }
        check_simplex(&self.q_dist, || "q_dist".into())?;
        if self.input_dists.len() != self.input_sizes.len() {
            return Err(Error::Schema(format!(
                "{} input distributions for {} sources",
                self.input_dists.len(),
                self.input_sizes.len()
            )));
        }
        for (i, (dist, &s)) in self.input_dists.iter().zip(&self.input_sizes).enumerate() {
            if s == 0 || dist.len() != self.q_size * s {
                return Err(Error::Schema(format!(
                    "input distribution {} has {} entries, expected {}",
                    i + 1,
                    dist.len(),
                    self.q_size * s
                )));
            }
            for q in 0..self.q_size {
                check_simplex(&dist[q * s..(q + 1) * s], || format!("p(x{}|q={q})", i + 1))?;
            }
        }
        if self.relay_size == 0 {
            return Err(Error::Schema("relay_size must be at least 1".into()));
        }
        if self.compression_dists.len() != self.compression_sizes.len() {
            return Err(Error::Schema(format!(
                "{} compression kernels for {} compression sizes",
                self.compression_dists.len(),
                self.compression_sizes.len()
            )));
        }
        for (d, (dist, &s)) in self.compression_dists.iter().zip(&self.compression_sizes).enumerate() {
            if s == 0 || dist.len() != self.q_size * self.relay_size * s {
                return Err(Error::Schema(format!(
                    "compression kernel {} has {} entries, expected {}",
                    d + 1,
                    dist.len(),
                    self.q_size * self.relay_size * s
                )));
            }
            for col in 0..self.q_size * self.relay_size {
                check_simplex(&dist[col * s..(col + 1) * s], || {
                    format!("p(yh{}|y_R={}, q={})", d + 1, col % self.relay_size, col / self.relay_size)
                })?;
            }
        }
        Ok(())
    }

    /// Checks that this policy's alphabets fit `channel`.
    pub fn check_against(&self, channel: &Channel) -> Result<()> {
        if self.input_sizes != channel.input_sizes() {
            return Err(Error::DimensionMismatch(format!(
                "input distributions cover alphabets {:?}, channel inputs are {:?}",
                self.input_sizes,
                channel.input_sizes()
            )));
        }
        if self.relay_size != channel.relay_size() {
            return Err(Error::DimensionMismatch(format!(
                "compression kernels condition on |Y_R|={}, channel relay alphabet is {}",
                self.relay_size,
                channel.relay_size()
            )));
        }
        if self.compression_sizes.len() != channel.k() {
            return Err(Error::DimensionMismatch(format!(
                "policy has {} compression kernels, channel has {} destinations",
                self.compression_sizes.len(),
                channel.k()
            )));
        }
        Ok(())
    }

    pub fn q_size(&self) -> usize {
        self.q_size
    }
    pub fn q_dist(&self) -> &[f64] {
        &self.q_dist
    }
    pub fn input_sizes(&self) -> &[usize] {
        &self.input_sizes
    }
    pub fn relay_size(&self) -> usize {
        self.relay_size
    }
    pub fn compression_sizes(&self) -> &[usize] {
        &self.compression_sizes
    }

    /// p(x_i = x | q).
    pub fn input_prob(&self, i: usize, q: usize, x: usize) -> f64 {
        self.input_dists[i][q * self.input_sizes[i] + x]
    }

    pub fn input_dist(&self, i: usize, q: usize) -> &[f64] {
        let s = self.input_sizes[i];
        &self.input_dists[i][q * s..(q + 1) * s]
    }

    /// p(yh_d = h | y_R = r, q).
    pub fn compression_prob(&self, d: usize, q: usize, r: usize, h: usize) -> f64 {
        let s = self.compression_sizes[d];
        self.compression_dists[d][(q * self.relay_size + r) * s + h]
    }

    pub fn compression_column(&self, d: usize, q: usize, r: usize) -> &[f64] {
        let s = self.compression_sizes[d];
        let col = q * self.relay_size + r;
        &self.compression_dists[d][col * s..(col + 1) * s]
    }

    pub fn set_q_dist(&mut self, dist: Vec<f64>) -> Result<()> {
        if dist.len() != self.q_size {
            return Err(Error::DimensionMismatch(format!("q_dist needs {} entries", self.q_size)));
        }
        check_simplex(&dist, || "q_dist".into())?;
        self.q_dist = dist;
        Ok(())
    }

    pub fn set_input_dist(&mut self, i: usize, q: usize, dist: Vec<f64>) -> Result<()> {
        let s = *self
            .input_sizes
            .get(i)
            .ok_or_else(|| Error::InvalidParameter(format!("source {i} out of range")))?;
        if dist.len() != s || q >= self.q_size {
            return Err(Error::DimensionMismatch(format!("p(x{}|q) needs {s} entries", i + 1)));
        }
        check_simplex(&dist, || format!("p(x{}|q={q})", i + 1))?;
        self.input_dists[i][q * s..(q + 1) * s].copy_from_slice(&dist);
        Ok(())
    }

    pub fn set_compression_column(&mut self, d: usize, q: usize, r: usize, dist: Vec<f64>) -> Result<()> {
        let s = *self
            .compression_sizes
            .get(d)
            .ok_or_else(|| Error::InvalidParameter(format!("compression kernel {d} out of range")))?;
        if dist.len() != s || q >= self.q_size || r >= self.relay_size {
            return Err(Error::DimensionMismatch(format!("p(yh{}|y_R, q) column needs {s} entries", d + 1)));
        }
        check_simplex(&dist, || format!("p(yh{}|y_R={r}, q={q})", d + 1))?;
        let col = q * self.relay_size + r;
        self.compression_dists[d][col * s..(col + 1) * s].copy_from_slice(&dist);
        Ok(())
    }

    /// The policy restricted to compression kernel `d` (for destination views).
    pub fn single_destination(&self, d: usize) -> Result<Policy> {
        if d >= self.compression_sizes.len() {
            return Err(Error::InvalidParameter(format!("compression kernel {d} out of range")));
        }
        Policy::new(
            self.q_dist.clone(),
            self.input_sizes.clone(),
            self.input_dists.clone(),
            self.relay_size,
            vec![self.compression_sizes[d]],
            vec![self.compression_dists[d].clone()],
        )
    }

    /// Flat parameter vector: q_dist, input laws, compression kernels. Used as
    /// the lexicographic tie-break key.
    pub fn encoding(&self) -> Vec<f64> {
        let mut v = self.q_dist.clone();
        for d in &self.input_dists {
            v.extend_from_slice(d);
        }
        for d in &self.compression_dists {
            v.extend_from_slice(d);
        }
        v
    }
}

/// Uniform time sharing and inputs. A compression kernel is the map ŷ = y_R
/// when |YH| ≥ |Y_R|, and uniform otherwise.
pub fn uniform_policy(channel: &Channel, q_size: usize, compression_sizes: &[usize]) -> Result<Policy> {
    if q_size == 0 || compression_sizes.contains(&0) {
        return Err(Error::InvalidParameter("policy sizes must be at least 1".into()));
    }
    let r = channel.relay_size();
    let q_dist = vec![1.0 / q_size as f64; q_size];
    let input_dists = channel
        .input_sizes()
        .iter()
        .map(|&s| vec![1.0 / s as f64; q_size * s])
        .collect();
    let compression_dists = compression_sizes
        .iter()
        .map(|&s| {
            let mut v = vec![0.0; q_size * r * s];
            for q in 0..q_size {
                for y in 0..r {
                    let col = &mut v[(q * r + y) * s..(q * r + y + 1) * s];
                    if s >= r {
                        col[y] = 1.0;
                    } else {
                        col.fill(1.0 / s as f64);
                    }
                }
            }
            v
        })
        .collect();
    Policy::new(q_dist, channel.input_sizes().to_vec(), input_dists, r, compression_sizes.to_vec(), compression_dists)
}

/// Gaussian interference relay channel
/// Y_1 = h11 X_1 + h21 X_2 + Z_1, Y_2 = h12 X_1 + h22 X_2 + Z_2,
/// Y_R = h1R X_1 + h2R X_2 + Z_R with unit-variance noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianIfrc {
    pub h11: f64,
    pub h12: f64,
    pub h21: f64,
    pub h22: f64,
    pub h1r: f64,
    pub h2r: f64,
    pub p1: f64,
    pub p2: f64,
}

impl GaussianIfrc {
    pub fn validate(&self) -> Result<()> {
        let gains = [self.h11, self.h12, self.h21, self.h22, self.h1r, self.h2r];
        if gains.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter("channel gains must be finite".into()));
        }
        if !(self.p1 > 0.0 && self.p2 > 0.0) || !self.p1.is_finite() || !self.p2.is_finite() {
            return Err(Error::InvalidParameter("transmit powers must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::build_joint;

    fn none() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    #[test]
    fn adder_fixture_kernel() {
        let ch = builtin_channel("binary_adder_pmarc", &none()).unwrap();
        assert_eq!((ch.m(), ch.k()), (2, 1));
        let mut ys = [0];
        for xt in 0..4 {
            let mut xs = [0, 0];
            ch.decode_inputs(xt, &mut xs);
            let row = ch.kernel_row(xt);
            let (ot, _) = row.iter().enumerate().find(|(_, &p)| p == 1.0).unwrap();
            let r = ch.decode_outputs(ot, &mut ys);
            assert_eq!(ys[0], xs[0] + xs[1]);
            assert_eq!(r, ys[0]);
        }
    }

    #[test]
    fn every_fixture_is_valid_and_round_trips() {
        for name in FIXTURES {
            let ch = builtin_channel(name, &none()).unwrap();
            let back = load_channel(&ch.to_json()).unwrap();
            assert_eq!(back, ch, "{name}");
        }
        assert!(matches!(builtin_channel("nope", &none()), Err(Error::UnknownFixture(_))));
    }

    #[test]
    fn degenerate_relay_carries_nothing() {
        let ch = builtin_channel("degenerate_relay", &none()).unwrap();
        let pol = uniform_policy(&ch, 1, &[1]).unwrap();
        let j = build_joint(&ch, &pol).unwrap();
        assert_eq!(j.mutual_info(&["X1", "X2"], &["YR"]).unwrap(), 0.0);
    }

    #[test]
    fn noiseless_fixture_is_lossless() {
        let ch = builtin_channel("noiseless_pmarc", &none()).unwrap();
        let mut pol = uniform_policy(&ch, 1, &[1]).unwrap();
        pol.set_input_dist(0, 0, vec![0.3, 0.7]).unwrap();
        pol.set_input_dist(1, 0, vec![0.9, 0.1]).unwrap();
        let j = build_joint(&ch, &pol).unwrap();
        let lhs = j.mutual_info(&["X1", "X2"], &["Y1"]).unwrap();
        let rhs = j.entropy(&["X1"]).unwrap() + j.entropy(&["X2"]).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn off_stochastic_row_is_rejected() {
        let ch = builtin_channel("binary_adder_pmarc", &none()).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&ch.to_json()).unwrap();
        // first row: inputs (0,0) -> (y=0, y_R=0) carries all mass
        v["kernel"][0] = serde_json::json!(0.98);
        match load_channel(&v.to_string()) {
            Err(Error::NotStochastic(msg)) => assert!(msg.contains("[0, 0]"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unicast_needs_square_topology() {
        let ch = builtin_channel("binary_adder_pmarc", &none()).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&ch.to_json()).unwrap();
        v["mode"] = serde_json::json!("unicast");
        assert!(matches!(load_channel(&v.to_string()), Err(Error::Schema(_))));
    }

    #[test]
    fn rejects_inconsistent_counts() {
        let ch = builtin_channel("binary_adder_pmarc", &none()).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&ch.to_json()).unwrap();
        v["M"] = serde_json::json!(3);
        assert!(matches!(load_channel(&v.to_string()), Err(Error::Schema(_))));
        assert!(matches!(load_channel("{\"kind\": \"pmarc\"}"), Err(Error::Schema(_))));
    }

    #[test]
    fn uniform_policy_shapes() {
        let ch = builtin_channel("bsc_pmarc", &none()).unwrap();
        let pol = uniform_policy(&ch, 1, &[2]).unwrap();
        assert_eq!(pol.input_dist(0, 0), &[0.5, 0.5]);
        assert_eq!(pol.compression_column(0, 0, 0), &[1.0, 0.0]);
        assert_eq!(pol.compression_column(0, 0, 1), &[0.0, 1.0]);
        let pol = uniform_policy(&ch, 1, &[1]).unwrap();
        assert_eq!(pol.compression_column(0, 0, 1), &[1.0]);
        assert!(uniform_policy(&ch, 0, &[1]).is_err());
        let back = Policy::from_json(&pol.to_json()).unwrap();
        assert_eq!(back, pol);
    }

    #[test]
    fn destination_view_marginalizes() {
        let ch = builtin_channel("xor_pifrc", &none()).unwrap();
        let v = ch.destination_view(1).unwrap();
        assert_eq!(v.k(), 1);
        assert_eq!(v.output_sizes(), &[2]);
    }

    #[test]
    fn gaussian_validation() {
        let g = GaussianIfrc { h11: 1.0, h12: 1.5, h21: 1.5, h22: 1.0, h1r: 1.0, h2r: 1.0, p1: 1.0, p2: 1.0 };
        assert!(g.validate().is_ok());
        assert!(GaussianIfrc { p1: 0.0, ..g }.validate().is_err());
        assert!(GaussianIfrc { h12: f64::NAN, ..g }.validate().is_err());
    }
}
