#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;

use obliv_relay::channel::ChannelKind;
use obliv_relay::frontier::dirichlet_sample;
use obliv_relay::{builtin_channel, Channel, Mode, Policy};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str, params: &[(&str, f64)]) -> Channel {
    let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    builtin_channel(name, &p).unwrap()
}

/// Kernel rows drawn from Dirichlet(1) over the joint (outputs, y_R) alphabet.
pub fn random_channel(
    rng: &mut ChaCha8Rng,
    kind: ChannelKind,
    input_sizes: Vec<usize>,
    output_sizes: Vec<usize>,
    relay_size: usize,
    caps: Vec<f64>,
) -> Channel {
    let nx: usize = input_sizes.iter().product();
    let nout: usize = output_sizes.iter().product::<usize>() * relay_size;
    let kernel: Vec<f64> = (0..nx).flat_map(|_| dirichlet_sample(nout, rng)).collect();
    Channel::new(kind, Mode::Multicast, input_sizes, output_sizes, relay_size, caps, kernel).unwrap()
}

/// Binary or ternary alphabets chosen at random.
pub fn random_pmarc(rng: &mut ChaCha8Rng, relay_size: Option<usize>, c: f64) -> Channel {
    let mut size = || rng.random_range(2..=3usize);
    let sizes = vec![size(), size()];
    let out = size();
    let relay = relay_size.unwrap_or_else(size);
    random_channel(rng, ChannelKind::Pmarc, sizes, vec![out], relay, vec![c])
}

pub fn random_policy(channel: &Channel, q_size: usize, compression_sizes: &[usize], rng: &mut ChaCha8Rng) -> Policy {
    let r = channel.relay_size();
    let q_dist = dirichlet_sample(q_size, rng);
    let input_dists = channel
        .input_sizes()
        .iter()
        .map(|&s| (0..q_size).flat_map(|_| dirichlet_sample(s, rng)).collect())
        .collect();
    let compression_dists = compression_sizes
        .iter()
        .map(|&s| (0..q_size * r).flat_map(|_| dirichlet_sample(s, rng)).collect())
        .collect();
    Policy::new(q_dist, channel.input_sizes().to_vec(), input_dists, r, compression_sizes.to_vec(), compression_dists).unwrap()
}

/// p(outputs of destination `d` [and y_R] | x): marginal of the kernel.
fn observation_law(ch: &Channel, d: usize, with_relay: bool) -> (usize, Vec<Vec<f64>>) {
    let r = ch.relay_size();
    let obs = ch.output_sizes()[d] * if with_relay { r } else { 1 };
    let mut ys = vec![0; ch.k()];
    let law = (0..ch.input_tuples())
        .map(|t| {
            let mut row = vec![0.0; obs];
            for (idx, &p) in ch.kernel_row(t).iter().enumerate() {
                let yr = ch.decode_outputs(idx, &mut ys);
                let o = if with_relay { ys[d] * r + yr } else { ys[d] };
                row[o] += p;
            }
            row
        })
        .collect();
    (obs, law)
}

/// I(X_S; Y_d [Y_R] | X_Sc Q) summed straight from the kernel:
/// Σ p(q) ∏p(x_i|q) W(o|x) log2 W(o|x) / p(o | x_Sc, q).
pub fn info_oracle(ch: &Channel, pol: &Policy, s: &[usize], d: usize, with_relay: bool) -> f64 {
    let (obs, w) = observation_law(ch, d, with_relay);
    let m = ch.m();
    let mut xs = vec![0; m];
    let mut total = 0.0;
    for q in 0..pol.q_size() {
        let pq = pol.q_dist()[q];
        if pq == 0.0 {
            continue;
        }
        // p(o | x_Sc, q) keyed by the input tuple with x_S zeroed
        let mut given = BTreeMap::<Vec<usize>, Vec<f64>>::new();
        for t in 0..ch.input_tuples() {
            ch.decode_inputs(t, &mut xs);
            let ps: f64 = s.iter().map(|&i| pol.input_prob(i, q, xs[i])).product();
            let mut key = xs.clone();
            for &i in s {
                key[i] = 0;
            }
            let entry = given.entry(key).or_insert_with(|| vec![0.0; obs]);
            for (e, &p) in entry.iter_mut().zip(&w[t]) {
                *e += ps * p;
            }
        }
        for t in 0..ch.input_tuples() {
            ch.decode_inputs(t, &mut xs);
            let px: f64 = (0..m).map(|i| pol.input_prob(i, q, xs[i])).product();
            let mut key = xs.clone();
            for &i in s {
                key[i] = 0;
            }
            let marg = &given[&key];
            for o in 0..obs {
                let p = w[t][o];
                if p > 0.0 && px > 0.0 {
                    total += pq * px * p * (p / marg[o]).log2();
                }
            }
        }
    }
    total
}

/// H(Y_R | X Y_d Q) from the kernel.
pub fn relay_residual_oracle(ch: &Channel, pol: &Policy, d: usize) -> f64 {
    let (_, wy) = observation_law(ch, d, false);
    let (_, wyr) = observation_law(ch, d, true);
    let r = ch.relay_size();
    let mut xs = vec![0; ch.m()];
    let mut total = 0.0;
    for q in 0..pol.q_size() {
        for t in 0..ch.input_tuples() {
            ch.decode_inputs(t, &mut xs);
            let px: f64 = pol.q_dist()[q] * (0..ch.m()).map(|i| pol.input_prob(i, q, xs[i])).product::<f64>();
            for (o, &p) in wyr[t].iter().enumerate() {
                if p > 0.0 && px > 0.0 {
                    total += px * p * (wy[t][o / r] / p).log2();
                }
            }
        }
    }
    total
}

/// The two-user MAC region [R1, R2, R1+R2] for destination output Y alone.
pub fn mac_oracle(ch: &Channel, pol: &Policy) -> [f64; 3] {
    [info_oracle(ch, pol, &[0], 0, false), info_oracle(ch, pol, &[1], 0, false), info_oracle(ch, pol, &[0, 1], 0, false)]
}
