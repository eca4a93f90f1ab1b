//! Rate regions stored as subset-sum bound tables.
//!
//! A region is a list of constraint classes `R_S ≤ b` where `S` is a nonempty
//! set of sources and `b` is the minimum of all bounds listed for the class.
//! Bound names follow the numbering used in the literature for the
//! corresponding regions (`eq10` .. `eq15` for the two-source PMARC, and so
//! on) so that outputs can be cross-referenced.

use serde_json::{json, Value};

use crate::channel::{Channel, Mode, Policy};
use crate::conditions::ConditionReport;
use crate::dist::{build_joint, var, JointDistribution, Variable, MAX_JOINT_SIZE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Gcf,
    Cf,
    Nnc,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Gcf => "gcf",
            Scheme::Cf => "cf",
            Scheme::Nnc => "nnc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bound {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintClass {
    /// 0-based source indices, ascending.
    pub subset: Vec<usize>,
    pub bounds: Vec<Bound>,
}

impl ConstraintClass {
    fn new(subset: Vec<usize>) -> Self {
        Self { subset, bounds: Vec::new() }
    }

    fn push(&mut self, name: impl Into<String>, value: f64) {
        self.bounds.push(Bound { name: name.into(), value });
    }

    pub fn label(&self, m: usize) -> String {
        class_label(&self.subset, m)
    }

    /// Smallest listed bound, before clamping.
    pub fn raw_min(&self) -> f64 {
        self.bounds.iter().map(|b| b.value).fold(f64::INFINITY, f64::min)
    }

    /// The binding bound, clamped at zero.
    pub fn effective(&self) -> f64 {
        self.raw_min().max(0.0)
    }

    /// True when the minimum bound was negative and got clamped.
    pub fn clamped(&self) -> bool {
        self.raw_min() < 0.0
    }

    pub fn bound(&self, name: &str) -> Option<f64> {
        self.bounds.iter().find(|b| b.name == name).map(|b| b.value)
    }
}

pub fn class_label(subset: &[usize], m: usize) -> String {
    if m >= 2 && subset.len() == m {
        "sum".to_string()
    } else {
        subset.iter().map(|i| format!("R{}", i + 1)).collect::<Vec<_>>().join("+")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRegion {
    pub m: usize,
    pub scheme: Scheme,
    pub topology: &'static str,
    pub label: String,
    /// False when the scheme cannot operate with this policy (empty region).
    pub feasible: bool,
    pub classes: Vec<ConstraintClass>,
    pub notes: Vec<String>,
}

impl RateRegion {
    fn new(m: usize, scheme: Scheme, topology: &'static str, label: impl Into<String>) -> Self {
        Self { m, scheme, topology, label: label.into(), feasible: true, classes: Vec::new(), notes: Vec::new() }
    }

    pub fn class(&self, subset: &[usize]) -> Option<&ConstraintClass> {
        self.classes.iter().find(|c| c.subset == subset)
    }

    pub fn class_by_label(&self, label: &str) -> Option<&ConstraintClass> {
        self.classes.iter().find(|c| c.label(self.m) == label)
    }

    /// Effective bound of every class, in class order.
    pub fn effective_bounds(&self) -> Vec<f64> {
        self.classes.iter().map(|c| c.effective()).collect()
    }

    /// Effective bound of the class `subset`, if present.
    pub fn effective(&self, subset: &[usize]) -> Option<f64> {
        self.class(subset).map(|c| c.effective())
    }

    pub fn any_clamped(&self) -> bool {
        self.classes.iter().any(|c| c.clamped())
    }

    /// Whether the rate vector satisfies every constraint (within `tol`).
    pub fn contains(&self, rates: &[f64], tol: f64) -> bool {
        self.feasible
            && rates.len() == self.m
            && rates.iter().all(|&r| r >= -tol)
            && self
                .classes
                .iter()
                .all(|c| c.subset.iter().map(|&i| rates[i]).sum::<f64>() <= c.effective() + tol)
    }

    /// Maximizes λ·R over the region by enumerating its vertices. Returns
    /// `None` for an empty region.
    pub fn max_weighted(&self, weights: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
        if weights.len() != self.m {
            return Err(Error::DimensionMismatch(format!("{} weights for {} rates", weights.len(), self.m)));
        }
        if !self.feasible {
            return Ok(None);
        }
        if self.m > 6 {
            return Err(Error::ResourceCap("vertex enumeration supports at most 6 sources".into()));
        }
        let m = self.m;
        let mut rows: Vec<(Vec<f64>, f64)> = (0..m)
            .map(|i| {
                let mut a = vec![0.0; m];
                a[i] = -1.0;
                (a, 0.0)
            })
            .collect();
        for c in &self.classes {
            let mut a = vec![0.0; m];
            for &i in &c.subset {
                a[i] = 1.0;
            }
            rows.push((a, c.effective()));
        }
        let feasible = |r: &[f64]| {
            rows.iter().all(|(a, b)| a.iter().zip(r).map(|(x, y)| x * y).sum::<f64>() <= b + 1e-9)
        };
        let mut best = (0.0, vec![0.0; m]);
        let mut pick: Vec<usize> = (0..m).collect();
        loop {
            let a: Vec<Vec<f64>> = pick.iter().map(|&i| rows[i].0.clone()).collect();
            let b: Vec<f64> = pick.iter().map(|&i| rows[i].1).collect();
            if let Some(r) = solve(a, b) {
                if feasible(&r) {
                    let v: f64 = r.iter().zip(weights).map(|(x, w)| x * w).sum();
                    if v > best.0 {
                        best = (v, r.iter().map(|x| x.max(0.0)).collect());
                    }
                }
            }
            if !next_combination(&mut pick, rows.len()) {
                break;
            }
        }
        Ok(Some(best))
    }

    pub fn to_json_value(&self) -> Value {
        let classes: Vec<Value> = self
            .classes
            .iter()
            .map(|c| {
                json!({
                    "class": c.label(self.m),
                    "subset": c.subset.iter().map(|i| i + 1).collect::<Vec<_>>(),
                    "bounds": c.bounds.iter().map(|b| json!({"name": b.name, "value_bits": b.value})).collect::<Vec<_>>(),
                    "effective_bits": c.effective(),
                    "clamped": c.clamped(),
                })
            })
            .collect();
        json!({
            "scheme": self.scheme.as_str(),
            "topology": self.topology,
            "label": self.label,
            "M": self.m,
            "feasible": self.feasible,
            "classes": classes,
            "notes": self.notes,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("region serializes")
    }

    /// `class,bound_name,value_bits` rows; each class ends with an
    /// `effective` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,bound_name,value_bits\n");
        for c in &self.classes {
            let label = c.label(self.m);
            for b in &c.bounds {
                out.push_str(&format!("{label},{},{}\n", b.name, b.value));
            }
            out.push_str(&format!("{label},effective,{}\n", c.effective()));
        }
        out
    }
}

fn next_combination(pick: &mut [usize], n: usize) -> bool {
    let k = pick.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if pick[i] < n - k + i {
            pick[i] += 1;
            for j in i + 1..k {
                pick[j] = pick[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn subsets(m: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..(1u32 << m)).map(move |mask| (0..m).filter(|i| mask & (1 << i) != 0).collect())
}

fn x_names(set: impl IntoIterator<Item = usize>) -> Vec<String> {
    set.into_iter().map(var::x).collect()
}

fn with_q(mut names: Vec<String>) -> Vec<String> {
    names.push(var::Q.to_string());
    names
}

/// The two bounds shared by every GCF-type region for source set `s` at a
/// destination observing `y`, compression `yh` and link capacity `c`:
/// I(X_S; YH Y | X_Sc Q) and I(X_S; Y | X_Sc Q) + C − I(Y_R; YH | X_M Y Q).
fn gcf_pair(j: &JointDistribution, m: usize, s: &[usize], y: &str, yh: &str, c: f64) -> Result<(f64, f64)> {
    let xs = x_names(s.iter().copied());
    let cond = with_q(x_names((0..m).filter(|i| !s.contains(i))));
    let relay_aided = j.cond_mutual_info(&xs, &[yh, y], &cond)?;
    let direct = j.cond_mutual_info(&xs, &[y], &cond)?;
    let mut resid_cond = with_q(x_names(0..m));
    resid_cond.push(y.to_string());
    let residual = j.cond_mutual_info(&[var::YR], &[yh], &resid_cond)?;
    Ok((relay_aided, direct + c - residual))
}

fn require_pmarc(channel: &Channel, policy: &Policy) -> Result<()> {
    if channel.m() != 2 || channel.k() != 1 {
        return Err(Error::Topology(format!(
            "two-source single-destination region requested for M={}, K={}",
            channel.m(),
            channel.k()
        )));
    }
    if policy.compression_sizes().len() != 1 {
        return Err(Error::Topology("PMARC policies carry exactly one compression kernel".into()));
    }
    Ok(())
}

fn clamp_notes(region: &mut RateRegion) {
    for c in &region.classes {
        if c.clamped() {
            region.notes.push(format!("class {} had a negative bound, clamped to 0", c.label(region.m)));
        }
    }
}

/// GCF capacity region of the two-source PMARC for a fixed policy.
pub fn gcf_region_pmarc(channel: &Channel, policy: &Policy) -> Result<RateRegion> {
    require_pmarc(channel, policy)?;
    let j = build_joint(channel, policy)?;
    let c = channel.link_capacities()[0];
    let (y, yh) = (var::y(0), var::yh(0));
    let mut region = RateRegion::new(2, Scheme::Gcf, "pmarc", "capacity");
    for (s, names) in [(vec![0], ["eq10", "eq11"]), (vec![1], ["eq12", "eq13"]), (vec![0, 1], ["eq14", "eq15"])] {
        let (a, b) = gcf_pair(&j, 2, &s, &y, &yh, c)?;
        let mut class = ConstraintClass::new(s);
        class.push(names[0], a);
        class.push(names[1], b);
        region.classes.push(class);
    }
    clamp_notes(&mut region);
    Ok(region)
}

/// GCF capacity region of the M-source single-destination MARC.
pub fn gcf_region_marc_m(channel: &Channel, policy: &Policy) -> Result<RateRegion> {
    if channel.k() != 1 {
        return Err(Error::Topology(format!("M-user MARC region needs K=1, got K={}", channel.k())));
    }
    let m = channel.m();
    let j = build_joint(channel, policy)?;
    let c = channel.link_capacities()[0];
    let (y, yh) = (var::y(0), var::yh(0));
    let mut region = RateRegion::new(m, Scheme::Gcf, "marc", "capacity");
    for s in subsets(m) {
        let (a, b) = gcf_pair(&j, m, &s, &y, &yh, c)?;
        let mut class = ConstraintClass::new(s);
        class.push("eq39", a);
        class.push("eq40", b);
        region.classes.push(class);
    }
    clamp_notes(&mut region);
    Ok(region)
}

/// GCF region of the two-pair PIFRC with interference-aware destinations.
///
/// The region is always computed; it is labelled a capacity region only when
/// `condition` reports that the strong-interference conditions hold.
pub fn gcf_region_pifrc(channel: &Channel, policy: &Policy, condition: Option<&ConditionReport>) -> Result<RateRegion> {
    if channel.m() != 2 || channel.k() != 2 || channel.mode() != Mode::Unicast {
        return Err(Error::Topology(format!(
            "PIFRC region needs M=2, K=2 unicast; got M={}, K={}, {:?}",
            channel.m(),
            channel.k(),
            channel.mode()
        )));
    }
    let j = build_joint(channel, policy)?;
    let caps = channel.link_capacities();
    let label = match condition {
        Some(r) if r.holds => "capacity (strong interference: evidence only)",
        _ => "achievable (GCF)",
    };
    let mut region = RateRegion::new(2, Scheme::Gcf, "pifrc", label);
    let (r1_a, r1_b) = gcf_pair(&j, 2, &[0], &var::y(0), &var::yh(0), caps[0])?;
    let (r2_a, r2_b) = gcf_pair(&j, 2, &[1], &var::y(1), &var::yh(1), caps[1])?;
    let (s1_a, s1_b) = gcf_pair(&j, 2, &[0, 1], &var::y(0), &var::yh(0), caps[0])?;
    let (s2_a, s2_b) = gcf_pair(&j, 2, &[0, 1], &var::y(1), &var::yh(1), caps[1])?;
    let mut r1 = ConstraintClass::new(vec![0]);
    r1.push("eq42", r1_a);
    r1.push("eq43", r1_b);
    let mut r2 = ConstraintClass::new(vec![1]);
    r2.push("eq44", r2_a);
    r2.push("eq45", r2_b);
    let mut sum = ConstraintClass::new(vec![0, 1]);
    sum.push("eq46", s1_a);
    sum.push("eq47", s1_b);
    sum.push("eq48", s2_a);
    sum.push("eq49", s2_b);
    region.classes = vec![r1, r2, sum];
    clamp_notes(&mut region);
    Ok(region)
}

/// GCF capacity region of the M-source K-destination multicast network: each
/// class is bounded by both GCF expressions at every destination.
pub fn gcf_region_multicast(channel: &Channel, policy: &Policy) -> Result<RateRegion> {
    if channel.mode() != Mode::Multicast {
        return Err(Error::Topology("multicast region requested for a unicast channel".into()));
    }
    let m = channel.m();
    let j = build_joint(channel, policy)?;
    let mut region = RateRegion::new(m, Scheme::Gcf, "multicast", "capacity");
    for s in subsets(m) {
        let mut class = ConstraintClass::new(s.clone());
        for d in 0..channel.k() {
            let (a, b) = gcf_pair(&j, m, &s, &var::y(d), &var::yh(d), channel.link_capacities()[d])?;
            class.push(format!("eq88_d{}", d + 1), a);
            class.push(format!("eq89_d{}", d + 1), b);
        }
        region.classes.push(class);
    }
    clamp_notes(&mut region);
    Ok(region)
}

/// Conventional CF with sequential decoding: the bin must first resolve the
/// compression index, which requires I(Y_R; YH | Y Q) ≤ C. When that holds
/// the region keeps only the relay-aided bounds; otherwise it is empty.
pub fn cf_region_pmarc(channel: &Channel, policy: &Policy) -> Result<RateRegion> {
    require_pmarc(channel, policy)?;
    let j = build_joint(channel, policy)?;
    let c = channel.link_capacities()[0];
    let (y, yh) = (var::y(0), var::yh(0));
    let mut region = RateRegion::new(2, Scheme::Cf, "pmarc", "achievable (CF, sequential decoding model)");
    let needed = j.cond_mutual_info(&[var::YR], &[yh.as_str()], &[y.as_str(), var::Q])?;
    region.feasible = needed <= c + 1e-12;
    if !region.feasible {
        region.notes.push(format!("compression needs {needed} bits of link, capacity is {c}; region is empty"));
    }
    for (s, name) in [(vec![0], "eq10"), (vec![1], "eq12"), (vec![0, 1], "eq14")] {
        let (a, _) = gcf_pair(&j, 2, &s, &y, &yh, c)?;
        let mut class = ConstraintClass::new(s);
        class.push(name, a);
        region.classes.push(class);
    }
    Ok(region)
}

/// A law on ⌈2^C⌉ symbols whose entropy is exactly `c` bits: a mixture of
/// the uniform laws on m−1 and m symbols, found by bisection.
pub(crate) fn entropy_law(c: f64) -> Result<Vec<f64>> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::InvalidParameter(format!("link capacity {c}")));
    }
    if c == 0.0 {
        return Ok(vec![1.0]);
    }
    let size = 2f64.powf(c).ceil();
    if size * size > MAX_JOINT_SIZE as f64 {
        return Err(Error::ResourceCap(format!("link alphabet for C={c} too large")));
    }
    let m = (size as usize).max(2);
    if (m as f64).log2() == c {
        return Ok(vec![1.0 / m as f64; m]);
    }
    let law = |t: f64| -> Vec<f64> {
        let mut v = vec![(1.0 - t) / (m - 1) as f64 + t / m as f64; m];
        v[m - 1] = t / m as f64;
        v
    };
    let h = |v: &[f64]| -> f64 { v.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum() };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(&law(mid)) < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(law(0.5 * (lo + hi)))
}

/// NNC region of the PMARC, evaluated on the general MARC expressions after
/// replacing the destination observation by (Y', Y''): Y' is the channel
/// output and Y'' = X_R is a noiseless digital link whose input X_R carries
/// exactly C bits and is independent of everything else.
pub fn nnc_region_pmarc(channel: &Channel, policy: &Policy) -> Result<RateRegion> {
    require_pmarc(channel, policy)?;
    let base = build_joint(channel, policy)?;
    let c = channel.link_capacities()[0];
    let law = entropy_law(c)?;
    let n = law.len();
    if base.probs().len() * n * n > MAX_JOINT_SIZE {
        return Err(Error::ResourceCap(format!("NNC link augmentation for C={c} exceeds the joint size cap")));
    }
    let mut vars: Vec<Variable> = base.variables().to_vec();
    vars.push(Variable { name: "XR".into(), size: n });
    vars.push(Variable { name: "YL".into(), size: n });
    let mut probs = vec![0.0; base.probs().len() * n * n];
    for (i, &p) in base.probs().iter().enumerate() {
        for (xr, &pl) in law.iter().enumerate() {
            probs[(i * n + xr) * n + xr] = p * pl;
        }
    }
    let j = JointDistribution::from_parts(vars, probs);

    let (y, yh) = (var::y(0), var::yh(0));
    let (x1, x2, q) = (var::x(0), var::x(1), var::Q);
    let obs = [y.as_str(), "YL"];
    let mut everything = vec![x1.as_str(), x2.as_str(), "XR"];
    everything.extend(obs);
    everything.push(q);
    let residual = j.cond_mutual_info(&[var::YR], &[yh.as_str()], &everything)?;

    let aided = |a: &[&str], cond: &[&str]| -> Result<f64> {
        j.cond_mutual_info(a, &[yh.as_str(), y.as_str(), "YL"], cond)
    };
    let b141 = aided(&[&x1], &[&x2, "XR", q])?;
    let b142 = j.cond_mutual_info(&[x1.as_str(), "XR"], &obs, &[x2.as_str(), q])? - residual;
    let b143 = aided(&[&x2], &[&x1, "XR", q])?;
    let b144 = j.cond_mutual_info(&[x2.as_str(), "XR"], &obs, &[x1.as_str(), q])? - residual;
    let b145 = aided(&[&x1, &x2], &["XR", q])?;
    let b146 = j.cond_mutual_info(&[x1.as_str(), x2.as_str(), "XR"], &obs, &[q])? - residual;

    let mut region = RateRegion::new(2, Scheme::Nnc, "pmarc", "achievable (NNC)");
    let mut r1 = ConstraintClass::new(vec![0]);
    r1.push("eq141", b141);
    r1.push("eq142", b142);
    let mut r2 = ConstraintClass::new(vec![1]);
    r2.push("eq143", b143);
    r2.push("eq144", b144);
    let mut sum = ConstraintClass::new(vec![0, 1]);
    sum.push("eq145", b145);
    sum.push("eq146", b146);
    region.classes = vec![r1, r2, sum];
    clamp_notes(&mut region);
    Ok(region)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Equal,
    ASubsetB,
    BSubsetA,
    Incomparable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Equal => "equal",
            Verdict::ASubsetB => "a_subset_b",
            Verdict::BSubsetA => "b_subset_a",
            Verdict::Incomparable => "incomparable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub verdict: Verdict,
    /// Class with the largest difference, when the regions differ.
    pub witness: Option<String>,
    /// Effective bound of `a` minus that of `b` at the witness.
    pub difference: f64,
}

/// Compares two regions class by class on effective bounds.
pub fn region_compare(a: &RateRegion, b: &RateRegion, tol: f64) -> Result<Comparison> {
    if a.m != b.m {
        return Err(Error::DimensionMismatch(format!("regions of dimension {} and {}", a.m, b.m)));
    }
    match (a.feasible, b.feasible) {
        (false, false) => return Ok(Comparison { verdict: Verdict::Equal, witness: None, difference: 0.0 }),
        (false, true) => {
            return Ok(Comparison { verdict: Verdict::ASubsetB, witness: Some("empty".into()), difference: 0.0 })
        }
        (true, false) => {
            return Ok(Comparison { verdict: Verdict::BSubsetA, witness: Some("empty".into()), difference: 0.0 })
        }
        _ => {}
    }
    if a.classes.len() != b.classes.len() {
        return Err(Error::DimensionMismatch("regions have different constraint classes".into()));
    }
    let mut lower: Option<(f64, String)> = None;
    let mut higher: Option<(f64, String)> = None;
    for ca in &a.classes {
        let cb = b
            .class(&ca.subset)
            .ok_or_else(|| Error::DimensionMismatch(format!("class {} missing", ca.label(a.m))))?;
        let d = ca.effective() - cb.effective();
        let label = ca.label(a.m);
        if d < -tol && lower.as_ref().is_none_or(|(v, _)| d < *v) {
            lower = Some((d, label.clone()));
        }
        if d > tol && higher.as_ref().is_none_or(|(v, _)| d > *v) {
            higher = Some((d, label));
        }
    }
    Ok(match (lower, higher) {
        (None, None) => Comparison { verdict: Verdict::Equal, witness: None, difference: 0.0 },
        (Some((d, w)), None) => Comparison { verdict: Verdict::ASubsetB, witness: Some(w), difference: d },
        (None, Some((d, w))) => Comparison { verdict: Verdict::BSubsetA, witness: Some(w), difference: d },
        (Some((dl, wl)), Some((dh, wh))) => {
            let (d, w) = if dh >= -dl { (dh, wh) } else { (dl, wl) };
            Comparison { verdict: Verdict::Incomparable, witness: Some(w), difference: d }
        }
    })
}
