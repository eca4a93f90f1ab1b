//! Letter-typicality tests over small joint alphabets.
//!
//! A test is built for an ordered list of variables. Each position of the
//! block maps to one cell of their product alphabet, and only per-cell counts
//! are inspected.

use serde::{Deserialize, Serialize};

use crate::dist::JointDistribution;
use crate::error::{Error, Result};

/// Counts at `n·p·(1 ± ε)` are accepted up to this float slack.
const COUNT_SLACK: f64 = 1e-9;
/// Wider slack for necessary-condition prefilters.
const PREFILTER_SLACK: f64 = 1e-6;
const MAX_CELLS: usize = 1 << 24;

/// Typical-set convention used by the relay and the decoders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Typicality {
    /// Robust joint typicality: every cell count N satisfies
    /// |N/n − p| ≤ ε·p, and N = 0 wherever p = 0.
    #[default]
    Joint,
    /// Robust typicality of the observed sequences given the codeword
    /// sequences: for every codeword symbol combination a with N(a) > 0,
    /// |N(a,b) − N(a)·p(b|a)| ≤ ε·N(a)·p(b|a), and N = 0 wherever p = 0.
    /// The empirical law of the codewords themselves is unconstrained.
    Conditional,
}

impl Typicality {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(Self::Joint),
            "conditional" => Ok(Self::Conditional),
            other => Err(Error::InvalidParameter(format!("unknown typicality convention '{other}' (joint|conditional)"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Joint => "joint",
            Self::Conditional => "conditional",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Rule {
    /// The test itself.
    Exact(Typicality),
    /// A necessary condition for `Exact` on a superset of these variables.
    Prefilter(Typicality),
}

#[derive(Debug, Clone)]
enum Check {
    Joint { lo: Vec<u32>, hi: Vec<u32>, required: Vec<u32> },
    Conditional { children: usize, p_child: Vec<f64>, eps: f64 },
    Support,
}

/// Reusable per-thread counters.
#[derive(Debug, Default)]
pub(crate) struct Scratch {
    counts: Vec<u32>,
    parents: Vec<u32>,
    touched: Vec<u32>,
}

impl Scratch {
    /// Counters large enough for any table with at most `cells` cells.
    pub(crate) fn with_cells(cells: usize) -> Self {
        Self { counts: vec![0; cells], parents: vec![0; cells], touched: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct TypicalSet {
    n: usize,
    cells: usize,
    strides: Vec<u32>,
    possible: Vec<bool>,
    check: Check,
}

impl TypicalSet {
    /// `vars` lists codeword variables first; the last `vars.len() − parents`
    /// are the observed ones (used by the conditional convention).
    pub(crate) fn new(joint: &JointDistribution, vars: &[String], parents: usize, rule: Rule, eps: f64, n: usize) -> Result<Self> {
        let m = joint.marginalize(vars)?;
        let table_sizes: Vec<usize> = m.variables().iter().map(|v| v.size).collect();
        let mut table_strides = vec![1usize; table_sizes.len()];
        for i in (0..table_sizes.len().saturating_sub(1)).rev() {
            table_strides[i] = table_strides[i + 1] * table_sizes[i + 1];
        }
        let pos: Vec<usize> = vars.iter().map(|v| m.position(v)).collect::<Result<_>>()?;
        let sizes: Vec<usize> = pos.iter().map(|&p| table_sizes[p]).collect();
        let cells: usize = sizes.iter().product();
        if cells > MAX_CELLS {
            return Err(Error::ResourceCap(format!("typicality table over {vars:?} has {cells} cells")));
        }
        let mut strides = vec![1u32; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1] as u32;
        }
        let mut p = vec![0.0; cells];
        let mut digits = vec![0usize; sizes.len()];
        for (c, slot) in p.iter_mut().enumerate() {
            crate::channel::unflatten(c, &sizes, &mut digits);
            let t: usize = digits.iter().zip(&pos).map(|(d, &q)| d * table_strides[q]).sum();
            *slot = m.probs()[t];
        }
        let possible: Vec<bool> = p.iter().map(|&x| x > 0.0).collect();
        let conv = match rule {
            Rule::Exact(t) | Rule::Prefilter(t) => t,
        };
        let slack = match rule {
            Rule::Exact(_) => COUNT_SLACK,
            Rule::Prefilter(_) => PREFILTER_SLACK,
        };
        let check = match (rule, conv) {
            (_, Typicality::Joint) => {
                let nf = n as f64;
                let lo: Vec<u32> = p.iter().map(|&x| (nf * x * (1.0 - eps) - slack).ceil().max(0.0) as u32).collect();
                let hi: Vec<u32> = p.iter().map(|&x| (nf * x * (1.0 + eps) + slack).floor().max(0.0) as u32).collect();
                let required = (0..cells as u32).filter(|&c| possible[c as usize] && lo[c as usize] > 0).collect();
                Check::Joint { lo, hi, required }
            }
            (Rule::Prefilter(_), Typicality::Conditional) => Check::Support,
            (Rule::Exact(_), Typicality::Conditional) => {
                let children: usize = sizes[parents..].iter().product();
                let mut p_child = vec![0.0; cells];
                for a in 0..cells / children {
                    let block = &p[a * children..(a + 1) * children];
                    let pa: f64 = block.iter().sum();
                    if pa > 0.0 {
                        for (b, &x) in block.iter().enumerate() {
                            p_child[a * children + b] = x / pa;
                        }
                    }
                }
                Check::Conditional { children, p_child, eps }
            }
        };
        Ok(Self { n, cells, strides, possible, check })
    }

    pub(crate) fn cells(&self) -> usize {
        self.cells
    }

    #[cfg(test)]
    pub(crate) fn scratch(&self) -> Scratch {
        Scratch::with_cells(self.cells)
    }

    /// Partial cell index of every position from the fixed sequences.
    pub(crate) fn base(&self, fixed: &[(usize, &[u16])]) -> Vec<u32> {
        (0..self.n).map(|j| fixed.iter().map(|&(v, s)| self.strides[v] * s[j] as u32).sum()).collect()
    }

    /// Whether the sequences in `base` together with `parts` form a member.
    pub(crate) fn contains(&self, base: &[u32], parts: &[(usize, &[u16])], s: &mut Scratch) -> bool {
        debug_assert!(s.counts.len() >= self.cells);
        let mut ok = true;
        for (j, &b) in base.iter().enumerate() {
            let c = parts.iter().fold(b, |acc, &(v, seq)| acc + self.strides[v] * seq[j] as u32) as usize;
            if !self.possible[c] {
                ok = false;
                break;
            }
            let cnt = &mut s.counts[c];
            if *cnt == 0 {
                s.touched.push(c as u32);
            }
            *cnt += 1;
            if let Check::Joint { hi, .. } = &self.check {
                if *cnt > hi[c] {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            ok = match &self.check {
                Check::Joint { lo, required, .. } => required.iter().all(|&c| s.counts[c as usize] >= lo[c as usize]),
                Check::Support => true,
                Check::Conditional { children, p_child, eps } => self.conditional_ok(*children, p_child, *eps, s),
            };
        }
        for &c in &s.touched {
            s.counts[c as usize] = 0;
        }
        s.touched.clear();
        ok
    }

    fn conditional_ok(&self, children: usize, p_child: &[f64], eps: f64, s: &mut Scratch) -> bool {
        for &c in &s.touched {
            s.parents[c as usize / children] += s.counts[c as usize];
        }
        let mut ok = true;
        for &c in &s.touched {
            let a = c as usize / children;
            let na = s.parents[a];
            if na == 0 {
                continue;
            }
            if ok {
                for cell in a * children..(a + 1) * children {
                    let e = na as f64 * p_child[cell];
                    let lo = (e * (1.0 - eps) - COUNT_SLACK).ceil().max(0.0) as u32;
                    let hi = (e * (1.0 + eps) + COUNT_SLACK).floor().max(0.0) as u32;
                    let cnt = s.counts[cell];
                    if cnt < lo || cnt > hi {
                        ok = false;
                        break;
                    }
                }
            }
            s.parents[a] = 0;
        }
        ok
    }
}
