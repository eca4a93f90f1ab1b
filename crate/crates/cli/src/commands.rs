use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use obliv_relay::channel::ChannelKind;
use obliv_relay::conditions::gaussian_power_sweep;
use obliv_relay::sim::{Typicality, SIM_CSV_HEADER};
use obliv_relay::{
    builtin_channel, cf_region_pmarc, frontier_search, gaussian_equivalence_check, gcf_region_marc_m,
    gcf_region_multicast, gcf_region_pifrc, gcf_region_pmarc, load_channel, nnc_region_pmarc, region_compare,
    simulate, strong_interference_dmc, strong_interference_gaussian, uniform_policy, verify_lemma1, Channel,
    GaussianIfrc, GridSpec, Lemma1Config, Policy, RateRegion, RegionKind, SearchConfig, SimConfig,
};
use serde_json::{json, Value};

use crate::args::*;
use crate::manifest::{display, Artifact, FileDigest};

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<obliv_relay::Error> for CliError {
    fn from(e: obliv_relay::Error) -> Self {
        Self { code: if e.is_resource_cap() { 2 } else { 1 }, message: e.to_string() }
    }
}

/// Result of one command before anything is written.
pub struct Run {
    pub command: &'static str,
    pub inputs: Vec<FileDigest>,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub artifacts: Vec<Artifact>,
}

type CliResult<T> = Result<T, CliError>;

struct Ctx {
    inputs: Vec<FileDigest>,
    artifacts: Vec<Artifact>,
}

impl Ctx {
    fn new() -> Self {
        Self { inputs: Vec::new(), artifacts: Vec::new() }
    }

    fn read(&mut self, path: &Path) -> CliResult<String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read {}: {e}", display(path))))?;
        self.inputs.push(FileDigest::of(&display(path), text.as_bytes()));
        Ok(text)
    }

    fn channel(&mut self, path: &Path) -> CliResult<Channel> {
        let text = self.read(path)?;
        load_channel(&text).map_err(|e| with_file(e, path))
    }

    fn policy(&mut self, path: &Path) -> CliResult<Policy> {
        let text = self.read(path)?;
        Policy::from_json(&text).map_err(|e| with_file(e, path))
    }

    fn emit_json(&mut self, dest: &Option<PathBuf>, value: &Value) {
        let mut s = serde_json::to_string_pretty(value).expect("output serializes");
        s.push('\n');
        self.artifacts.push(Artifact { dest: dest.clone(), bytes: s.into_bytes() });
    }

    fn emit_text(&mut self, dest: &Option<PathBuf>, text: String) {
        self.artifacts.push(Artifact { dest: dest.clone(), bytes: text.into_bytes() });
    }

    fn emit(&mut self, outputs: &Outputs, value: &Value, csv: impl FnOnce() -> String) {
        self.emit_json(&outputs.out, value);
        if outputs.csv.is_some() {
            self.emit_text(&outputs.csv, csv());
        }
    }

    fn finish(self, command: &'static str, parameters: Value, seed: Option<u64>) -> Run {
        Run { command, inputs: self.inputs, parameters, seed, artifacts: self.artifacts }
    }
}

fn with_file(e: obliv_relay::Error, path: &Path) -> CliError {
    let mut err = CliError::from(e);
    err.message = format!("{}: {}", display(path), err.message);
    err
}

pub fn execute(command: &Command) -> CliResult<Run> {
    match command {
        Command::Region(a) => region(a),
        Command::Compare(a) => compare(a),
        Command::Frontier(a) => frontier(a),
        Command::Check(CheckCommand::SiDmc(a)) => si_dmc(a),
        Command::Check(CheckCommand::SiGaussian(a)) => si_gaussian(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Lemma1(a) => lemma1(a),
        Command::Fixture(a) => fixture(a),
        Command::PolicyUniform(a) => policy_uniform(a),
        Command::Replay(_) => Err(CliError::validation("replay is handled by the driver")),
    }
}

fn region(a: &RegionArgs) -> CliResult<Run> {
    let mut ctx = Ctx::new();
    let channel = ctx.channel(&a.inputs.channel)?;
    let policy = ctx.policy(&a.inputs.policy)?;
    if a.si_resolution.is_some() && a.topology != Topology::Pifrc {
        return Err(CliError::validation("--si-resolution applies to pifrc only"));
    }
    let mut condition = None;
    let region = match a.topology {
        Topology::Pmarc => gcf_region_pmarc(&channel, &policy)?,
        Topology::Marc => gcf_region_marc_m(&channel, &policy)?,
        Topology::Multicast => gcf_region_multicast(&channel, &policy)?,
        Topology::Pifrc => {
            if let Some(resolution) = a.si_resolution {
                condition = Some(strong_interference_dmc(&channel, &GridSpec { resolution, samples: 0, seed: 0 })?);
            }
            gcf_region_pifrc(&channel, &policy, condition.as_ref())?
        }
    };
    let mut doc = region.to_json_value();
    if let Some(c) = &condition {
        doc["strong_interference"] = c.to_json_value();
    }
    ctx.emit(&a.outputs, &doc, || region.to_csv());
    let topology = format!("{:?}", a.topology).to_lowercase();
    Ok(ctx.finish("region", json!({"topology": topology, "si_resolution": a.si_resolution}), None))
}

fn scheme_region(scheme: &str, channel: &Channel, policy: &Policy) -> CliResult<RateRegion> {
    Ok(match scheme {
        "gcf" => gcf_region_pmarc(channel, policy)?,
        "cf" => cf_region_pmarc(channel, policy)?,
        "nnc" => nnc_region_pmarc(channel, policy)?,
        other => return Err(CliError::validation(format!("unknown scheme `{other}` (gcf|cf|nnc)"))),
    })
}

fn compare(a: &CompareArgs) -> CliResult<Run> {
    if a.schemes.len() < 2 {
        return Err(CliError::validation("--schemes needs at least two entries"));
    }
    let mut ctx = Ctx::new();
    let channel = ctx.channel(&a.inputs.channel)?;
    let policy = ctx.policy(&a.inputs.policy)?;
    let regions: Vec<(String, RateRegion)> =
        a.schemes.iter().map(|s| Ok((s.clone(), scheme_region(s, &channel, &policy)?))).collect::<CliResult<_>>()?;
    let mut comparisons = Vec::new();
    for (i, (na, ra)) in regions.iter().enumerate() {
        for (nb, rb) in &regions[i + 1..] {
            let c = region_compare(ra, rb, a.tol)?;
            comparisons.push(json!({
                "a": na,
                "b": nb,
                "verdict": c.verdict.as_str(),
                "witness": c.witness,
                "difference_bits": c.difference,
            }));
        }
    }
    let doc = json!({
        "regions": regions.iter().map(|(n, r)| (n.clone(), r.to_json_value())).collect::<serde_json::Map<_, _>>(),
        "comparisons": comparisons,
        "tolerance": a.tol,
    });
    let csv = || {
        let mut out = format!("class,{}\n", a.schemes.join(","));
        let first = &regions[0].1;
        for class in &first.classes {
            let row: Vec<String> = regions
                .iter()
                .map(|(_, r)| r.class(&class.subset).map_or_else(String::new, |c| c.effective().to_string()))
                .collect();
            out.push_str(&format!("{},{}\n", class.label(first.m), row.join(",")));
        }
        out
    };
    ctx.emit(&a.outputs, &doc, csv);
    Ok(ctx.finish("compare", json!({"schemes": a.schemes, "tol": a.tol}), None))
}

fn default_compression_sizes(channel: &Channel, given: &Option<Vec<usize>>) -> Vec<usize> {
    given.clone().unwrap_or_else(|| vec![channel.relay_size(); channel.k()])
}

fn frontier(a: &FrontierArgs) -> CliResult<Run> {
    let mut ctx = Ctx::new();
    let channel = ctx.channel(&a.channel)?;
    let kind = RegionKind::parse(&a.kind)?;
    let config = SearchConfig {
        grid: GridSpec { resolution: a.resolution, samples: a.samples, seed: a.seed },
        weights: a.weights.clone(),
        q_size: a.q_size,
        compression_sizes: default_compression_sizes(&channel, &a.compression_sizes),
    };
    let result = frontier_search(&channel, kind, &config)?;
    let doc = json!({
        "kind": kind.as_str(),
        "weights": config.weights,
        "value_bits": result.value,
        "point": result.point,
        "policy": serde_json::to_value(&result.policy).expect("policy serializes"),
        "region": result.region.to_json_value(),
        "search": {
            "resolution": a.resolution,
            "samples": a.samples,
            "seed": a.seed,
            "grid_points": result.grid_points,
            "random_samples": result.random_samples,
            "feasible_candidates": result.feasible_candidates,
        },
    });
    ctx.emit(&a.outputs, &doc, || result.region.to_csv());
    let params = json!({
        "kind": kind.as_str(),
        "weights": config.weights,
        "resolution": a.resolution,
        "samples": a.samples,
        "q_size": a.q_size,
        "compression_sizes": config.compression_sizes,
    });
    Ok(ctx.finish("frontier", params, Some(a.seed)))
}

fn gaps_csv(gaps: [f64; 2]) -> String {
    format!("condition,min_gap\n1,{}\n2,{}\n", gaps[0], gaps[1])
}

fn si_dmc(a: &SiDmcArgs) -> CliResult<Run> {
    let mut ctx = Ctx::new();
    let channel = ctx.channel(&a.channel)?;
    let report = strong_interference_dmc(&channel, &GridSpec { resolution: a.resolution, samples: a.samples, seed: a.seed })?;
    ctx.emit(&a.outputs, &report.to_json_value(), || gaps_csv(report.min_gaps));
    Ok(ctx.finish("check si-dmc", json!({"resolution": a.resolution, "samples": a.samples}), Some(a.seed)))
}

fn si_gaussian(a: &SiGaussianArgs) -> CliResult<Run> {
    let mut ctx = Ctx::new();
    let g = GaussianIfrc { h11: a.h11, h12: a.h12, h21: a.h21, h22: a.h22, h1r: a.h1r, h2r: a.h2r, p1: a.p1, p2: a.p2 };
    let report = strong_interference_gaussian(&g)?;
    let mut doc = report.to_json_value();
    doc["gaussian_inputs"] = serde_json::to_value(gaussian_equivalence_check(&g)?).expect("serializes");
    if !a.sweep.is_empty() {
        let sweep = gaussian_power_sweep(&g, &a.sweep)?;
        doc["sweep"] = sweep.iter().map(|(p, e)| json!({"power": p, "conditions": e})).collect();
    }
    ctx.emit(&a.outputs, &doc, || gaps_csv(report.min_gaps));
    let params = serde_json::to_value(g).expect("serializes");
    let params = json!({"channel": params, "sweep": a.sweep});
    Ok(ctx.finish("check si-gaussian", params, None))
}

fn simulate_cmd(a: &SimulateArgs) -> CliResult<Run> {
    let mut ctx = Ctx::new();
    let channel = ctx.channel(&a.inputs.channel)?;
    let policy = ctx.policy(&a.inputs.policy)?;
    let topology = match channel.kind() {
        ChannelKind::Pifrc => obliv_relay::Topology::Pifrc,
        _ => obliv_relay::Topology::Pmarc,
    };
    let cfg = SimConfig {
        epsilon: a.eps,
        trials: a.trials,
        seed: a.seed,
        typicality: Typicality::parse(&a.typicality)?,
        ..SimConfig::new(topology, a.n, a.rates.clone(), a.rhat.clone())
    };
    let report = simulate(&channel, &policy, &cfg)?;
    ctx.emit(&a.outputs, &report.to_json_value(), || format!("{SIM_CSV_HEADER}\n{}\n", report.to_csv_row()));
    let params = serde_json::to_value(&cfg).expect("config serializes");
    Ok(ctx.finish("simulate", params, Some(a.seed)))
}

fn lemma1(a: &Lemma1Args) -> CliResult<Run> {
    let mut ctx = Ctx::new();
    let channel = ctx.channel(&a.inputs.channel)?;
    let policy = ctx.policy(&a.inputs.policy)?;
    let cfg = Lemma1Config { n: a.n, samples: a.samples, seed: a.seed, rate: a.rate };
    let report = verify_lemma1(&channel, &policy, &cfg)?;
    let csv = || {
        let mut out = String::from("sequence,index,tv\n");
        for (i, t) in report.input_tv.iter().enumerate() {
            out.push_str(&format!("x,{},{t}\n", i + 1));
        }
        for (d, t) in report.output_tv.iter().enumerate() {
            out.push_str(&format!("y,{},{t}\n", d + 1));
        }
        out.push_str(&format!("y_r,1,{}\n", report.relay_tv));
        out
    };
    let mut doc = serde_json::to_value(&report).expect("report serializes");
    doc["max_tv"] = json!(report.max_tv());
    ctx.emit(&a.outputs, &doc, csv);
    Ok(ctx.finish("lemma1", serde_json::to_value(cfg).expect("serializes"), Some(a.seed)))
}

fn parse_params(raw: &[String]) -> CliResult<BTreeMap<String, f64>> {
    raw.iter()
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::validation(format!("`{kv}` is not key=value")))?;
            let v: f64 = v.parse().map_err(|_| CliError::validation(format!("`{v}` is not a number")))?;
            Ok((k.to_string(), v))
        })
        .collect()
}

fn fixture(a: &FixtureArgs) -> CliResult<Run> {
    let params = parse_params(&a.params)?;
    let channel = builtin_channel(&a.name, &params)?;
    let mut ctx = Ctx::new();
    ctx.emit_text(&a.out, format!("{}\n", channel.to_json()));
    Ok(ctx.finish("fixture", json!({"name": a.name, "params": params}), None))
}

fn policy_uniform(a: &PolicyUniformArgs) -> CliResult<Run> {
    let mut ctx = Ctx::new();
    let channel = ctx.channel(&a.channel)?;
    let sizes = default_compression_sizes(&channel, &a.compression_sizes);
    let policy = uniform_policy(&channel, a.q_size, &sizes)?;
    ctx.emit_text(&a.out, format!("{}\n", policy.to_json()));
    Ok(ctx.finish("policy-uniform", json!({"q_size": a.q_size, "compression_sizes": sizes}), None))
}
