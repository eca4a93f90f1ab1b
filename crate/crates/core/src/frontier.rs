//! Policy-space search approximating the union over input distributions.
//!
//! Candidates are every point of a product of simplex grids (all masses are
//! multiples of `1/resolution`) followed by `samples` random policies drawn
//! from the flat Dirichlet law on each simplex. The winner maximizes the best
//! weighted rate λ·R inside its region; ties go to the lexicographically
//! smallest policy encoding, so the result does not depend on scheduling.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::channel::{Channel, Policy};
use crate::error::{Error, Result};
use crate::region::{
    cf_region_pmarc, gcf_region_marc_m, gcf_region_multicast, gcf_region_pifrc, gcf_region_pmarc, nnc_region_pmarc,
    RateRegion,
};

/// Largest number of grid points a search may enumerate.
pub const MAX_GRID_POINTS: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub resolution: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub grid: GridSpec,
    /// λ over rates.
    pub weights: Vec<f64>,
    pub q_size: usize,
    pub compression_sizes: Vec<usize>,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.resolution == 0 {
            return Err(Error::EmptySearch("grid resolution must be at least 1".into()));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || self.weights.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidParameter("weights must be nonnegative and not all zero".into()));
        }
        if self.q_size == 0 || self.compression_sizes.contains(&0) {
            return Err(Error::InvalidParameter("policy sizes must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    GcfPmarc,
    GcfMarc,
    GcfPifrc,
    GcfMulticast,
    CfPmarc,
    NncPmarc,
}

impl RegionKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "pmarc" | "gcf" => RegionKind::GcfPmarc,
            "marc" => RegionKind::GcfMarc,
            "pifrc" => RegionKind::GcfPifrc,
            "multicast" => RegionKind::GcfMulticast,
            "cf" => RegionKind::CfPmarc,
            "nnc" => RegionKind::NncPmarc,
            other => return Err(Error::InvalidParameter(format!("unknown region kind `{other}`"))),
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RegionKind::GcfPmarc => "pmarc",
            RegionKind::GcfMarc => "marc",
            RegionKind::GcfPifrc => "pifrc",
            RegionKind::GcfMulticast => "multicast",
            RegionKind::CfPmarc => "cf",
            RegionKind::NncPmarc => "nnc",
        }
    }

    pub fn evaluate(&self, channel: &Channel, policy: &Policy) -> Result<RateRegion> {
        match self {
            RegionKind::GcfPmarc => gcf_region_pmarc(channel, policy),
            RegionKind::GcfMarc => gcf_region_marc_m(channel, policy),
            RegionKind::GcfPifrc => gcf_region_pifrc(channel, policy, None),
            RegionKind::GcfMulticast => gcf_region_multicast(channel, policy),
            RegionKind::CfPmarc => cf_region_pmarc(channel, policy),
            RegionKind::NncPmarc => nnc_region_pmarc(channel, policy),
        }
    }
}

/// Every point of the `dim`-simplex whose coordinates are multiples of
/// `1/resolution`, in lexicographic order of the integer compositions.
pub fn simplex_grid(dim: usize, resolution: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, slots: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / r as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(left - c, slots - 1, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 || resolution == 0 {
        return out;
    }
    rec(resolution, dim, resolution, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// One draw from the flat Dirichlet law on the `dim`-simplex.
pub fn dirichlet_sample(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = v.iter().sum();
    for x in &mut v {
        *x /= s;
    }
    v
}

/// Layout of the simplices that make up a policy of a given shape.
#[derive(Debug, Clone)]
pub(crate) struct PolicySpace {
    input_sizes: Vec<usize>,
    relay_size: usize,
    q_size: usize,
    compression_sizes: Vec<usize>,
    /// Dimension of every simplex, in policy-encoding order.
    dims: Vec<usize>,
}

impl PolicySpace {
    pub(crate) fn new(channel: &Channel, q_size: usize, compression_sizes: &[usize]) -> Self {
        let mut dims = vec![q_size];
        for &s in channel.input_sizes() {
            dims.extend(std::iter::repeat_n(s, q_size));
        }
        for &s in compression_sizes {
            dims.extend(std::iter::repeat_n(s, q_size * channel.relay_size()));
        }
        Self {
            input_sizes: channel.input_sizes().to_vec(),
            relay_size: channel.relay_size(),
            q_size,
            compression_sizes: compression_sizes.to_vec(),
            dims,
        }
    }

    pub(crate) fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub(crate) fn assemble(&self, mut parts: impl Iterator<Item = Vec<f64>>) -> Result<Policy> {
        let q_dist = parts.next().expect("q simplex");
        let mut input_dists = Vec::new();
        for _ in &self.input_sizes {
            let mut d = Vec::new();
            for _ in 0..self.q_size {
                d.extend(parts.next().expect("input simplex"));
            }
            input_dists.push(d);
        }
        let mut compression = Vec::new();
        for _ in &self.compression_sizes {
            let mut d = Vec::new();
            for _ in 0..self.q_size * self.relay_size {
                d.extend(parts.next().expect("compression simplex"));
            }
            compression.push(d);
        }
        Policy::new(
            q_dist,
            self.input_sizes.clone(),
            input_dists,
            self.relay_size,
            self.compression_sizes.clone(),
            compression,
        )
    }
}

/// Product of per-simplex grids with mixed-radix indexing.
pub(crate) struct ProductGrid {
    grids: Vec<Vec<Vec<f64>>>,
    total: u64,
}

impl ProductGrid {
    pub(crate) fn new(dims: &[usize], resolution: usize) -> Result<Self> {
        let mut grids = Vec::with_capacity(dims.len());
        let mut total: u64 = 1;
        for &d in dims {
            let g = simplex_grid(d, resolution);
            total = total
                .checked_mul(g.len() as u64)
                .filter(|&t| t <= MAX_GRID_POINTS)
                .ok_or_else(|| Error::ResourceCap(format!("policy grid exceeds {MAX_GRID_POINTS} points")))?;
            grids.push(g);
        }
        Ok(Self { grids, total })
    }

    pub(crate) fn len(&self) -> u64 {
        self.total
    }

    pub(crate) fn point(&self, mut index: u64) -> impl Iterator<Item = Vec<f64>> + '_ {
        let mut digits = vec![0usize; self.grids.len()];
        for (i, g) in self.grids.iter().enumerate().rev() {
            digits[i] = (index % g.len() as u64) as usize;
            index /= g.len() as u64;
        }
        self.grids.iter().zip(digits).map(|(g, d)| g[d].clone())
    }
}

#[derive(Debug, Clone)]
pub struct FrontierResult {
    pub policy: Policy,
    pub region: RateRegion,
    /// Achieved λ·R.
    pub value: f64,
    /// Rate vector attaining `value`.
    pub point: Vec<f64>,
    pub grid_points: u64,
    pub random_samples: usize,
    pub feasible_candidates: u64,
}

struct Candidate {
    value: f64,
    encoding: Vec<f64>,
    policy: Policy,
    region: RateRegion,
    point: Vec<f64>,
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn better(a: Candidate, b: Candidate) -> Candidate {
    match a.value.total_cmp(&b.value) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => {
            if lex(&a.encoding, &b.encoding) != Ordering::Greater {
                a
            } else {
                b
            }
        }
    }
}

/// Searches the policy space for the policy whose region contains the best
/// weighted sum rate.
pub fn frontier_search(channel: &Channel, kind: RegionKind, config: &SearchConfig) -> Result<FrontierResult> {
    config.validate()?;
    let space = PolicySpace::new(channel, config.q_size, &config.compression_sizes);
    let grid = ProductGrid::new(space.dims(), config.grid.resolution)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.grid.seed);
    let sampled: Vec<Policy> = (0..config.grid.samples)
        .map(|_| {
            let parts: Vec<Vec<f64>> = space.dims().iter().map(|&d| dirichlet_sample(d, &mut rng)).collect();
            space.assemble(parts.into_iter())
        })
        .collect::<Result<_>>()?;

    let evaluate = |policy: Policy| -> Result<Option<Candidate>> {
        let region = kind.evaluate(channel, &policy)?;
        Ok(region.max_weighted(&config.weights)?.map(|(value, point)| Candidate {
            value,
            encoding: policy.encoding(),
            policy,
            region,
            point,
        }))
    };

    let total = grid.len() + sampled.len() as u64;
    let (feasible, best) = (0..total)
        .into_par_iter()
        .map(|i| {
            let policy = if i < grid.len() {
                space.assemble(grid.point(i))?
            } else {
                sampled[(i - grid.len()) as usize].clone()
            };
            let c = evaluate(policy)?;
            Ok::<_, Error>((c.is_some() as u64, c))
        })
        .try_reduce(
            || (0, None),
            |(na, a), (nb, b)| {
                let best = match (a, b) {
                    (Some(a), Some(b)) => Some(better(a, b)),
                    (a, b) => a.or(b),
                };
                Ok((na + nb, best))
            },
        )?;
    let best = best.ok_or_else(|| Error::EmptySearch("no searched policy yields a nonempty region".into()))?;
    Ok(FrontierResult {
        policy: best.policy,
        region: best.region,
        value: best.value,
        point: best.point,
        grid_points: grid.len(),
        random_samples: config.grid.samples,
        feasible_candidates: feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::builtin_channel;
    use crate::dist::build_joint;
    use std::collections::BTreeMap;

    fn config(resolution: usize, samples: usize, weights: Vec<f64>) -> SearchConfig {
        SearchConfig { grid: GridSpec { resolution, samples, seed: 11 }, weights, q_size: 1, compression_sizes: vec![1] }
    }

    #[test]
    fn grid_counts() {
        assert_eq!(simplex_grid(2, 4).len(), 5);
        assert_eq!(simplex_grid(3, 4).len(), 15);
        assert_eq!(simplex_grid(1, 7), vec![vec![1.0]]);
        for p in simplex_grid(3, 5) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_resolution_is_empty() {
        let ch = builtin_channel("degenerate_relay", &BTreeMap::new()).unwrap();
        assert!(matches!(
            frontier_search(&ch, RegionKind::GcfPmarc, &config(0, 0, vec![1.0, 1.0])),
            Err(Error::EmptySearch(_))
        ));
    }

    #[test]
    fn degenerate_relay_matches_exhaustive_mac_oracle() {
        let ch = builtin_channel("degenerate_relay", &BTreeMap::new()).unwrap();
        // independent oracle: sum-rate bound of the plain MAC on every grid pair
        let mut oracle = f64::MIN;
        for a in simplex_grid(2, 4) {
            for b in simplex_grid(2, 4) {
                let mut pol = crate::channel::uniform_policy(&ch, 1, &[1]).unwrap();
                pol.set_input_dist(0, 0, a.clone()).unwrap();
                pol.set_input_dist(1, 0, b.clone()).unwrap();
                let j = build_joint(&ch, &pol).unwrap();
                let i1 = j.cond_mutual_info(&["X1"], &["Y1"], &["X2"]).unwrap();
                let i2 = j.cond_mutual_info(&["X2"], &["Y1"], &["X1"]).unwrap();
                let s = j.mutual_info(&["X1", "X2"], &["Y1"]).unwrap();
                oracle = oracle.max(s.min(i1 + i2));
            }
        }
        let res = frontier_search(&ch, RegionKind::GcfPmarc, &config(4, 0, vec![1.0, 1.0])).unwrap();
        assert!((res.value - oracle).abs() < 1e-12, "{} vs {oracle}", res.value);
        // OR channel: best grid sum rate is one bit
        assert!((res.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_weight_maximizes_first_rate() {
        let ch = builtin_channel("bsc_pmarc", &BTreeMap::new()).unwrap();
        let res = frontier_search(&ch, RegionKind::GcfPmarc, &config(4, 0, vec![1.0, 0.0])).unwrap();
        let best_r1 = res.region.effective(&[0]).unwrap();
        assert!((res.value - best_r1).abs() < 1e-12);
    }

    #[test]
    fn refinement_never_hurts_and_is_deterministic() {
        let ch = builtin_channel("degenerate_relay", &[("p".to_string(), 0.1)].into_iter().collect()).unwrap();
        let coarse = frontier_search(&ch, RegionKind::GcfPmarc, &config(3, 5, vec![1.0, 2.0])).unwrap();
        let fine = frontier_search(&ch, RegionKind::GcfPmarc, &config(6, 5, vec![1.0, 2.0])).unwrap();
        assert!(fine.value >= coarse.value);
        let again = frontier_search(&ch, RegionKind::GcfPmarc, &config(6, 5, vec![1.0, 2.0])).unwrap();
        assert_eq!(again.policy, fine.policy);
        assert_eq!(again.value, fine.value);
    }

    #[test]
    fn rejects_bad_weights() {
        let ch = builtin_channel("degenerate_relay", &BTreeMap::new()).unwrap();
        assert!(frontier_search(&ch, RegionKind::GcfPmarc, &config(2, 0, vec![0.0, 0.0])).is_err());
        assert!(frontier_search(&ch, RegionKind::GcfPmarc, &config(2, 0, vec![-1.0, 1.0])).is_err());
    }
}
