//! Strong-interference certification for the two-pair interference relay
//! channel.
//!
//! The discrete check searches product inputs p(x1)p(x2) for a violation of
//!
//! I(X1; Y1 Y_R | X2) ≤ I(X1; Y2 | X2) and I(X2; Y2 Y_R | X1) ≤ I(X2; Y1 | X1).
//!
//! A negative gap certifies a violation. A nonnegative minimum only says that
//! no searched input violates the conditions; it is not a proof.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::channel::{Channel, GaussianIfrc, Policy};
use crate::dist::build_joint;
use crate::error::{Error, Result};
use crate::frontier::{dirichlet_sample, GridSpec, ProductGrid};

/// Gaps at or above `-GAP_TOL` count as satisfied.
pub const GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    /// Some input violates a condition.
    Violation,
    /// No searched input violates the conditions.
    EvidenceOnly,
    /// Closed-form verdict (Gaussian model).
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub p_x1: Vec<f64>,
    pub p_x2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub holds: bool,
    /// Minimum of RHS − LHS for each of the two conditions.
    pub min_gaps: [f64; 2],
    /// Input achieving each minimum (DMC search only).
    pub witnesses: [Option<Witness>; 2],
    pub certified: Certification,
    pub units: &'static str,
    pub resolution: usize,
    pub samples: usize,
    pub seed: u64,
    pub evaluated: u64,
}

impl ConditionReport {
    pub fn to_json_value(&self) -> Value {
        let witness = |w: &Option<Witness>| match w {
            Some(w) => json!({"p_x1": w.p_x1, "p_x2": w.p_x2}),
            None => Value::Null,
        };
        json!({
            "holds": self.holds,
            "certified": self.certified,
            "units": self.units,
            "gaps": [
                {"condition": 1, "min_gap": self.min_gaps[0], "witness": witness(&self.witnesses[0])},
                {"condition": 2, "min_gap": self.min_gaps[1], "witness": witness(&self.witnesses[1])},
            ],
            "search": {"resolution": self.resolution, "samples": self.samples, "seed": self.seed, "evaluated": self.evaluated},
            "note": match self.certified {
                Certification::EvidenceOnly => "no searched input violates the conditions; not a proof",
                Certification::Violation => "violation certified by the witness input",
                Certification::Exact => "closed-form condition on channel gains",
            },
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("report serializes")
    }
}

fn require_two_pair(channel: &Channel) -> Result<()> {
    if channel.m() != 2 || channel.k() != 2 {
        return Err(Error::Topology(format!(
            "strong-interference check needs M=2, K=2; got M={}, K={}",
            channel.m(),
            channel.k()
        )));
    }
    Ok(())
}

/// The two gaps at one product input; exposed so witnesses can be rechecked.
pub fn interference_gaps(channel: &Channel, p_x1: &[f64], p_x2: &[f64]) -> Result<[f64; 2]> {
    require_two_pair(channel)?;
    let r = channel.relay_size();
    let policy = Policy::new(
        vec![1.0],
        channel.input_sizes().to_vec(),
        vec![p_x1.to_vec(), p_x2.to_vec()],
        r,
        vec![1, 1],
        vec![vec![1.0; r], vec![1.0; r]],
    )?;
    let j = build_joint(channel, &policy)?;
    let gap1 = j.cond_mutual_info(&["X1"], &["Y2"], &["X2"])? - j.cond_mutual_info(&["X1"], &["Y1", "YR"], &["X2"])?;
    let gap2 = j.cond_mutual_info(&["X2"], &["Y1"], &["X1"])? - j.cond_mutual_info(&["X2"], &["Y2", "YR"], &["X1"])?;
    Ok([gap1, gap2])
}

#[derive(Clone)]
struct MinGap {
    gap: f64,
    index: u64,
    p_x1: Vec<f64>,
    p_x2: Vec<f64>,
}

fn lower(a: MinGap, b: MinGap) -> MinGap {
    match a.gap.total_cmp(&b.gap) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => {
            if a.index <= b.index {
                a
            } else {
                b
            }
        }
    }
}

/// Searches product inputs on a simplex grid followed by random draws.
/// Ties in each minimum go to the earliest candidate.
pub fn strong_interference_dmc(channel: &Channel, search: &GridSpec) -> Result<ConditionReport> {
    require_two_pair(channel)?;
    if search.resolution == 0 {
        return Err(Error::EmptySearch("grid resolution must be at least 1".into()));
    }
    let sizes = channel.input_sizes();
    let grid = ProductGrid::new(sizes, search.resolution)?;
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let sampled: Vec<(Vec<f64>, Vec<f64>)> = (0..search.samples)
        .map(|_| (dirichlet_sample(sizes[0], &mut rng), dirichlet_sample(sizes[1], &mut rng)))
        .collect();
    let total = grid.len() + sampled.len() as u64;

    let (m1, m2) = (0..total)
        .into_par_iter()
        .map(|i| {
            let (a, b) = if i < grid.len() {
                let mut it = grid.point(i);
                (it.next().unwrap(), it.next().unwrap())
            } else {
                sampled[(i - grid.len()) as usize].clone()
            };
            let [g1, g2] = interference_gaps(channel, &a, &b)?;
            Ok::<_, Error>((
                MinGap { gap: g1, index: i, p_x1: a.clone(), p_x2: b.clone() },
                MinGap { gap: g2, index: i, p_x1: a, p_x2: b },
            ))
        })
        .try_reduce_with(|(a1, a2), (b1, b2)| Ok((lower(a1, b1), lower(a2, b2))))
        .expect("grid is never empty")?;

    let holds = m1.gap >= -GAP_TOL && m2.gap >= -GAP_TOL;
    Ok(ConditionReport {
        holds,
        min_gaps: [m1.gap, m2.gap],
        witnesses: [
            Some(Witness { p_x1: m1.p_x1, p_x2: m1.p_x2 }),
            Some(Witness { p_x1: m2.p_x1, p_x2: m2.p_x2 }),
        ],
        certified: if holds { Certification::EvidenceOnly } else { Certification::Violation },
        units: "bits",
        resolution: search.resolution,
        samples: search.samples,
        seed: search.seed,
        evaluated: total,
    })
}

/// Closed-form Gaussian check: h12² ≥ h11² + h1R² and h21² ≥ h22² + h2R²,
/// boundary inclusive. Gaps are in gain-squared units.
pub fn strong_interference_gaussian(g: &GaussianIfrc) -> Result<ConditionReport> {
    g.validate()?;
    let gap1 = g.h12 * g.h12 - (g.h11 * g.h11 + g.h1r * g.h1r);
    let gap2 = g.h21 * g.h21 - (g.h22 * g.h22 + g.h2r * g.h2r);
    let holds = gap1 >= 0.0 && gap2 >= 0.0;
    Ok(ConditionReport {
        holds,
        min_gaps: [gap1, gap2],
        witnesses: [None, None],
        certified: if holds { Certification::Exact } else { Certification::Violation },
        units: "gain_squared",
        resolution: 0,
        samples: 0,
        seed: 0,
        evaluated: 1,
    })
}

/// Left side of one condition computed two ways, and its right side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideBySide {
    /// ½ log2(1 + (a² + b²) P): the rotated single-observation form.
    pub lhs_scalar: f64,
    /// ½ log2 det(I + P h hᵀ) for the two-observation vector channel.
    pub lhs_vector: f64,
    /// ½ log2(1 + c² P) for the interfering link.
    pub rhs: f64,
    pub agree: bool,
}

/// Gaussian-input mutual information values for both conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianEquivalence {
    pub condition1: SideBySide,
    pub condition2: SideBySide,
}

/// Tolerance for the scalar/vector agreement.
pub const ROTATION_TOL: f64 = 1e-10;

fn side_by_side(direct: f64, relay: f64, cross: f64, power: f64) -> SideBySide {
    let lhs_scalar = 0.5 * (1.0 + (direct * direct + relay * relay) * power).log2();
    // covariance of (h_direct X + Z, h_relay X + Z') with unit noise
    let s11 = 1.0 + power * direct * direct;
    let s22 = 1.0 + power * relay * relay;
    let s12 = power * direct * relay;
    let lhs_vector = 0.5 * (s11 * s22 - s12 * s12).log2();
    let rhs = 0.5 * (1.0 + cross * cross * power).log2();
    SideBySide { lhs_scalar, lhs_vector, rhs, agree: (lhs_scalar - lhs_vector).abs() <= ROTATION_TOL }
}

/// Evaluates both conditions with Gaussian inputs at the record's powers.
pub fn gaussian_equivalence_check(g: &GaussianIfrc) -> Result<GaussianEquivalence> {
    g.validate()?;
    Ok(GaussianEquivalence {
        condition1: side_by_side(g.h11, g.h1r, g.h12, g.p1),
        condition2: side_by_side(g.h22, g.h2r, g.h21, g.p2),
    })
}

/// [`gaussian_equivalence_check`] at each power, used for P1 = P2 sweeps.
pub fn gaussian_power_sweep(g: &GaussianIfrc, powers: &[f64]) -> Result<Vec<(f64, GaussianEquivalence)>> {
    powers
        .iter()
        .map(|&p| gaussian_equivalence_check(&GaussianIfrc { p1: p, p2: p, ..*g }).map(|e| (p, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{builtin_channel, ChannelKind, Mode};
    use crate::frontier::simplex_grid;
    use std::collections::BTreeMap;

    fn search(resolution: usize) -> GridSpec {
        GridSpec { resolution, samples: 8, seed: 3 }
    }

    #[test]
    fn destination_two_sees_everything() {
        // Y2 = (Y1, Y_R) with Y1 = X1 ^ X2 and Y_R = X1
        let ch = Channel::from_kernel_fn(ChannelKind::Pifrc, Mode::Unicast, vec![2, 2], vec![2, 4], 2, vec![1.0, 1.0], |x, y, r| {
            let y1 = x[0] ^ x[1];
            let yr = x[0];
            if y[0] == y1 && r == yr && y[1] == 2 * y1 + yr {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let report = strong_interference_dmc(&ch, &search(6)).unwrap();
        assert!(report.min_gaps[0].abs() < 1e-12);
        for a in simplex_grid(2, 6) {
            for b in simplex_grid(2, 6) {
                assert!(interference_gaps(&ch, &a, &b).unwrap()[0] > -1e-12);
            }
        }
    }

    #[test]
    fn forced_violation_has_a_witness() {
        // Y1 = X1, Y2 constant
        let ch = Channel::from_kernel_fn(ChannelKind::Pifrc, Mode::Unicast, vec![2, 2], vec![2, 1], 1, vec![1.0, 1.0], |x, y, _| {
            if y[0] == x[0] {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let uniform = interference_gaps(&ch, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert!((uniform[0] + 1.0).abs() < 1e-12);
        let report = strong_interference_dmc(&ch, &search(4)).unwrap();
        assert!(!report.holds);
        assert_eq!(report.certified, Certification::Violation);
        let w = report.witnesses[0].as_ref().unwrap();
        let again = interference_gaps(&ch, &w.p_x1, &w.p_x2).unwrap();
        assert_eq!(again[0], report.min_gaps[0]);
    }

    #[test]
    fn xor_pifrc_full_grid() {
        let ch = builtin_channel("xor_pifrc", &BTreeMap::new()).unwrap();
        let report = strong_interference_dmc(&ch, &GridSpec { resolution: 16, samples: 0, seed: 0 }).unwrap();
        // Y1 = Y2 and the relay is constant: both gaps vanish identically
        let mut oracle = f64::INFINITY;
        for a in simplex_grid(2, 16) {
            for b in simplex_grid(2, 16) {
                oracle = oracle.min(interference_gaps(&ch, &a, &b).unwrap()[0]);
            }
        }
        assert_eq!(report.min_gaps[0], oracle);
        assert!(report.holds);
        assert_eq!(report.certified, Certification::EvidenceOnly);
        assert_eq!(report.evaluated, 17 * 17);
    }

    #[test]
    fn topology_is_checked() {
        let ch = builtin_channel("binary_adder_pmarc", &BTreeMap::new()).unwrap();
        assert!(matches!(strong_interference_dmc(&ch, &search(2)), Err(Error::Topology(_))));
    }

    fn sym(h11: f64, h1r: f64, h12: f64) -> GaussianIfrc {
        GaussianIfrc { h11, h12, h21: h12, h22: h11, h1r, h2r: h1r, p1: 1.0, p2: 1.0 }
    }

    #[test]
    fn gaussian_condition_arithmetic() {
        let r = strong_interference_gaussian(&sym(1.0, 1.0, 1.5)).unwrap();
        assert!(r.holds);
        assert!((r.min_gaps[0] - 0.25).abs() < 1e-15);
        let boundary = strong_interference_gaussian(&sym(3.0, 4.0, 5.0)).unwrap();
        assert_eq!(boundary.min_gaps[0], 0.0);
        assert!(boundary.holds);
        let fail = strong_interference_gaussian(&sym(1.0, 0.0, 0.0)).unwrap();
        assert!(!fail.holds && fail.min_gaps[0] < 0.0);
    }

    #[test]
    fn gaussian_rotation_numbers() {
        let e = gaussian_equivalence_check(&sym(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(e.condition1.lhs_scalar, 0.0);
        assert_eq!(e.condition1.lhs_vector, 0.0);
        let e = gaussian_equivalence_check(&sym(3.0, 4.0, 1.0)).unwrap();
        let expect = 0.5 * 26f64.log2();
        assert!((e.condition1.lhs_scalar - expect).abs() < 1e-14);
        assert!((e.condition1.lhs_vector - expect).abs() < 1e-12);
        assert!(e.condition1.agree);
    }

    #[test]
    fn sweep_respects_verdict() {
        let powers = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
        let holds = sym(3.0, 4.0, 5.0);
        for (_, e) in gaussian_power_sweep(&holds, &powers).unwrap() {
            assert!(e.condition1.lhs_scalar <= e.condition1.rhs + 1e-9);
        }
        let fails = sym(1.0, 1.0, 1.2);
        assert!(gaussian_power_sweep(&fails, &powers)
            .unwrap()
            .iter()
            .any(|(_, e)| e.condition1.lhs_scalar > e.condition1.rhs));
    }
}
