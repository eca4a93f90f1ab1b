//! Dense joint distributions over named finite variables.
//!
//! Every information measure in the crate is evaluated on a
//! [`JointDistribution`]: a row-major probability table whose axes are named
//! variables. Logarithms are base 2.

use crate::channel::{Channel, Policy};
use crate::error::{Error, Result};

/// Largest admissible product of alphabet sizes.
pub const MAX_JOINT_SIZE: usize = 10_000_000;

/// Tolerance on the total mass of a joint table.
pub const MASS_TOL: f64 = 1e-12;

/// Negative information values above this are rounding noise and clamp to 0.
pub const NEG_INFO_TOL: f64 = 1e-12;

/// Canonical variable names used by [`build_joint`].
pub mod var {
    pub const Q: &str = "Q";
    pub const YR: &str = "YR";

    /// Input of source `i` (0-based), named `X1`, `X2`, ...
    pub fn x(i: usize) -> String {
        format!("X{}", i + 1)
    }

    /// Output at destination `k` (0-based), named `Y1`, `Y2`, ...
    pub fn y(k: usize) -> String {
        format!("Y{}", k + 1)
    }

    /// Relay compression variable intended for destination `k`.
    pub fn yh(k: usize) -> String {
        format!("YH{}", k + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    vars: Vec<Variable>,
    probs: Vec<f64>,
}

fn table_size(sizes: impl IntoIterator<Item = usize>) -> Result<usize> {
    let mut total: usize = 1;
    for s in sizes {
        total = total
            .checked_mul(s)
            .filter(|&t| t <= MAX_JOINT_SIZE)
            .ok_or_else(|| Error::ResourceCap(format!("joint table larger than {MAX_JOINT_SIZE} entries")))?;
    }
    Ok(total)
}

impl JointDistribution {
    pub fn new(vars: Vec<(String, usize)>, probs: Vec<f64>) -> Result<Self> {
        let vars: Vec<Variable> = vars.into_iter().map(|(name, size)| Variable { name, size }).collect();
        for (i, v) in vars.iter().enumerate() {
            if v.size == 0 {
                return Err(Error::DimensionMismatch(format!("variable `{}` has an empty alphabet", v.name)));
            }
            if vars[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::DimensionMismatch(format!("variable `{}` listed twice", v.name)));
            }
        }
        let len = table_size(vars.iter().map(|v| v.size))?;
        if probs.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "table has {} entries, alphabets require {len}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::NotStochastic(format!("entry {p} is not a finite nonnegative number")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::NotStochastic(format!("entries sum to {total}")));
        }
        Ok(Self { vars, probs })
    }

    pub(crate) fn from_parts(vars: Vec<Variable>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(vars.iter().map(|v| v.size).product::<usize>(), probs.len());
        Self { vars, probs }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn names(&self) -> Vec<&str> {
        self.vars.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn size_of(&self, name: &str) -> Result<usize> {
        Ok(self.vars[self.position(name)?].size)
    }

    /// Probability of a full assignment given in variable order.
    pub fn prob(&self, assignment: &[usize]) -> f64 {
        let mut idx = 0;
        for (v, &a) in self.vars.iter().zip(assignment) {
            idx = idx * v.size + a;
        }
        self.probs[idx]
    }

    fn positions<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let mut pos = Vec::with_capacity(names.len());
        for n in names {
            let p = self.position(n.as_ref())?;
            if !pos.contains(&p) {
                pos.push(p);
            }
        }
        pos.sort_unstable();
        Ok(pos)
    }

    /// For every cell of this table, the index of the cell it maps to after
    /// keeping only the variables at `keep` (sorted positions).
    fn projection(&self, keep: &[usize]) -> (Vec<Variable>, Vec<usize>) {
        let n = self.vars.len();
        let kept: Vec<Variable> = keep.iter().map(|&p| self.vars[p].clone()).collect();
        let mut ostride = vec![0usize; n];
        let mut s = 1;
        for &p in keep.iter().rev() {
            ostride[p] = s;
            s *= self.vars[p].size;
        }
        let sizes: Vec<usize> = self.vars.iter().map(|v| v.size).collect();
        let mut digits = vec![0usize; n];
        let mut out = 0usize;
        let mut map = Vec::with_capacity(self.probs.len());
        for _ in 0..self.probs.len() {
            map.push(out);
            for i in (0..n).rev() {
                digits[i] += 1;
                out += ostride[i];
                if digits[i] < sizes[i] {
                    break;
                }
                out -= ostride[i] * sizes[i];
                digits[i] = 0;
            }
        }
        (kept, map)
    }

    fn marginalize_positions(&self, keep: &[usize]) -> JointDistribution {
        if keep.len() == self.vars.len() {
            return self.clone();
        }
        let (kept, map) = self.projection(keep);
        let len = kept.iter().map(|v| v.size).product();
        let mut probs = vec![0.0; len];
        for (&p, &o) in self.probs.iter().zip(&map) {
            probs[o] += p;
        }
        JointDistribution::from_parts(kept, probs)
    }

    /// Sums out every variable not in `keep`. The result keeps this table's
    /// variable order.
    pub fn marginalize<S: AsRef<str>>(&self, keep: &[S]) -> Result<JointDistribution> {
        let pos = self.positions(keep)?;
        Ok(self.marginalize_positions(&pos))
    }

    /// Shannon entropy of the listed variables, in bits.
    pub fn entropy<S: AsRef<str>>(&self, set: &[S]) -> Result<f64> {
        let m = self.marginalize(set)?;
        Ok(m.probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum())
    }

    pub fn mutual_info<S: AsRef<str>>(&self, a: &[S], b: &[S]) -> Result<f64> {
        self.cond_mutual_info(a, b, &[] as &[&str])
    }

    /// Conditional mutual information I(A;B|C) in bits.
    ///
    /// `A` and `B` must be nonempty and the three sets pairwise disjoint.
    pub fn cond_mutual_info<S: AsRef<str>, T: AsRef<str>, U: AsRef<str>>(
        &self,
        a: &[S],
        b: &[T],
        c: &[U],
    ) -> Result<f64> {
        let pa = self.positions(a)?;
        let pb = self.positions(b)?;
        let pc = self.positions(c)?;
        if pa.is_empty() || pb.is_empty() {
            return Err(Error::InvalidParameter("mutual information needs nonempty A and B".into()));
        }
        for (x, y) in [(&pa, &pb), (&pa, &pc), (&pb, &pc)] {
            if let Some(&p) = x.iter().find(|p| y.contains(p)) {
                return Err(Error::OverlappingSets(self.vars[p].name.clone()));
            }
        }
        let mut all: Vec<usize> = pa.iter().chain(&pb).chain(&pc).copied().collect();
        all.sort_unstable();
        let abc = self.marginalize_positions(&all);

        // positions of each set inside the (A,B,C) marginal
        let local = |set: &[usize]| -> Vec<usize> {
            let mut v: Vec<usize> = set.iter().map(|p| all.iter().position(|q| q == p).unwrap()).collect();
            v.sort_unstable();
            v
        };
        let mut ac_pos = local(&pa);
        ac_pos.extend(local(&pc));
        ac_pos.sort_unstable();
        let mut bc_pos = local(&pb);
        bc_pos.extend(local(&pc));
        bc_pos.sort_unstable();
        let c_pos = local(&pc);

        let (_, ac_map) = abc.projection(&ac_pos);
        let (_, bc_map) = abc.projection(&bc_pos);
        let (_, c_map) = abc.projection(&c_pos);
        let p_ac = abc.marginalize_positions(&ac_pos).probs;
        let p_bc = abc.marginalize_positions(&bc_pos).probs;
        let p_c = abc.marginalize_positions(&c_pos).probs;

        let mut info = 0.0;
        for (i, &p) in abc.probs.iter().enumerate() {
            if p > 0.0 {
                info += p * ((p * p_c[c_map[i]]) / (p_ac[ac_map[i]] * p_bc[bc_map[i]])).log2();
            }
        }
        clamp_info(info)
    }
}

pub(crate) fn clamp_info(info: f64) -> Result<f64> {
    if info >= 0.0 {
        Ok(info)
    } else if info > -NEG_INFO_TOL {
        Ok(0.0)
    } else {
        Err(Error::Internal(format!("negative information value {info}")))
    }
}

/// Full joint law of (Q, X_1..X_M, Y_1..Y_K, Y_R, YH_1..YH_K) induced by a
/// channel and a policy:
///
/// p(q) ∏_i p(x_i|q) p(y_1..y_K, y_R | x_1..x_M) ∏_k p(yh_k | y_R, q).
///
/// Compression variables are conditionally independent given (Y_R, Q) and the
/// sources are independent given Q.
pub fn build_joint(channel: &Channel, policy: &Policy) -> Result<JointDistribution> {
    policy.check_against(channel)?;
    let m = channel.m();
    let k = channel.k();
    let qn = policy.q_size();
    let yr = channel.relay_size();

    let mut vars = vec![Variable { name: var::Q.into(), size: qn }];
    for (i, &s) in channel.input_sizes().iter().enumerate() {
        vars.push(Variable { name: var::x(i), size: s });
    }
    for (d, &s) in channel.output_sizes().iter().enumerate() {
        vars.push(Variable { name: var::y(d), size: s });
    }
    vars.push(Variable { name: var::YR.into(), size: yr });
    for (d, &s) in policy.compression_sizes().iter().enumerate() {
        vars.push(Variable { name: var::yh(d), size: s });
    }
    let len = table_size(vars.iter().map(|v| v.size))?;

    let nx = channel.input_tuples();
    let nout = channel.output_tuples();
    let nh: usize = policy.compression_sizes().iter().product();
    let hsizes = policy.compression_sizes();

    let mut probs = vec![0.0; len];
    let mut xs = vec![0usize; m];
    let mut hs = vec![0usize; k];
    for q in 0..qn {
        let pq = policy.q_dist()[q];
        for xt in 0..nx {
            channel.decode_inputs(xt, &mut xs);
            let px: f64 = pq * (0..m).map(|i| policy.input_prob(i, q, xs[i])).product::<f64>();
            if px == 0.0 {
                continue;
            }
            let row = channel.kernel_row(xt);
            for (ot, &pout) in row.iter().enumerate() {
                if pout == 0.0 {
                    continue;
                }
                let r = ot % yr;
                let base = ((q * nx + xt) * nout + ot) * nh;
                for ht in 0..nh {
                    let mut rem = ht;
                    for d in (0..k).rev() {
                        hs[d] = rem % hsizes[d];
                        rem /= hsizes[d];
                    }
                    let ph: f64 = (0..k).map(|d| policy.compression_prob(d, q, r, hs[d])).product();
                    probs[base + ht] = px * pout * ph;
                }
            }
        }
    }
    Ok(JointDistribution::from_parts(vars, probs))
}
