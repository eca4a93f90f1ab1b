use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_obliv-relay");
const PMARC_FIXTURES: [&str; 4] = ["binary_adder_pmarc", "noiseless_pmarc", "bsc_pmarc", "degenerate_relay"];

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(BIN).args(args).current_dir(self.dir.path()).env_remove("OBLIV_RELAY_THREADS").output().unwrap()
    }

    fn ok(&self, args: &[&str]) -> Output {
        let out = self.run(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    }

    fn json(&self, args: &[&str]) -> Value {
        serde_json::from_slice(&self.ok(args).stdout).unwrap()
    }

    /// Writes `<name>.json` and `<name>_uniform.json` (|Q|=1, |Ŷ|=|Y_R|).
    fn fixture(&self, name: &str, params: &[&str]) -> (String, String) {
        let channel = format!("{name}.json");
        let policy = format!("{name}_uniform.json");
        let mut args = vec!["fixture", name, "--out", &channel, "--manifest", "fixture.manifest.json"];
        for p in params {
            args.extend(["--param", p]);
        }
        self.ok(&args);
        self.ok(&["policy-uniform", "--channel", &channel, "--out", &policy, "--manifest", "policy.manifest.json"]);
        (channel, policy)
    }
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&doc).unwrap()
}

fn assert_valid(validator: &jsonschema::Validator, doc: &Value) {
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}\n{doc:#}");
}

fn manifest_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

#[test]
fn pmarc_region_lists_six_named_bounds() {
    let ws = Workspace::new();
    let (ch, pol) = ws.fixture("binary_adder_pmarc", &[]);
    let doc = ws.json(&["region", "pmarc", "--channel", &ch, "--policy", &pol]);
    let mut names: Vec<String> = doc["classes"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|c| c["bounds"].as_array().unwrap().iter().map(|b| b["name"].as_str().unwrap().to_string()))
        .collect();
    names.sort();
    assert_eq!(names, ["eq10", "eq11", "eq12", "eq13", "eq14", "eq15"]);
    assert_eq!(doc["scheme"], "gcf");
}

#[test]
fn gcf_and_nnc_agree_on_every_pmarc_fixture() {
    let ws = Workspace::new();
    for name in PMARC_FIXTURES {
        let (ch, pol) = ws.fixture(name, &[]);
        let doc = ws.json(&["compare", "--channel", &ch, "--policy", &pol, "--schemes", "gcf,nnc"]);
        let cmp = doc["comparisons"].as_array().unwrap();
        assert_eq!(cmp.len(), 1);
        assert_eq!(cmp[0]["verdict"], "equal", "{name}: {doc:#}");
    }
}

#[test]
fn compare_all_schemes_emits_three_verdicts_and_csv() {
    let ws = Workspace::new();
    let (ch, pol) = ws.fixture("bsc_pmarc", &[]);
    let doc = ws.json(&["compare", "--channel", &ch, "--policy", &pol, "--csv", "cmp.csv"]);
    assert_eq!(doc["comparisons"].as_array().unwrap().len(), 3);
    let csv = std::fs::read_to_string(ws.path("cmp.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "class,gcf,cf,nnc");
    assert_eq!(lines.len(), 4);
}

#[test]
fn gaussian_example_holds_for_condition_one() {
    let ws = Workspace::new();
    let doc = ws.json(&["check", "si-gaussian", "--h11", "1", "--h1r", "1", "--h12", "1.5", "--p1", "2"]);
    assert_eq!(doc["gaps"][0]["min_gap"], 0.25);
    assert!(doc["gaps"][0]["min_gap"].as_f64().unwrap() >= 0.0);
    assert_valid(&schema("condition"), &doc);
    let side = &doc["gaussian_inputs"]["condition1"];
    assert!(side["lhs_scalar"].as_f64().unwrap() <= side["rhs"].as_f64().unwrap());
}

#[test]
fn gaussian_check_accepts_negative_gains_and_sweeps() {
    let ws = Workspace::new();
    let doc = ws.json(&[
        "check", "si-gaussian", "--h11", "-1", "--h12", "2", "--h21", "-3", "--h22", "1", "--h1r", "0.5", "--h2r", "-1",
        "--sweep", "0.1,1,10",
    ]);
    assert_eq!(doc["holds"], true);
    assert_eq!(doc["certified"], "exact");
    assert_eq!(doc["sweep"].as_array().unwrap().len(), 3);
}

#[test]
fn dmc_check_and_region_with_condition() {
    let ws = Workspace::new();
    let (ch, _) = ws.fixture("xor_pifrc", &[]);
    let pol = "xor_policy.json";
    ws.ok(&["policy-uniform", "--channel", &ch, "--compression-sizes", "1,1", "--out", pol]);
    let report = ws.json(&["check", "si-dmc", "--channel", &ch, "--resolution", "8"]);
    assert_valid(&schema("condition"), &report);
    assert_eq!(report["holds"], true);
    assert_eq!(report["certified"], "evidence_only");
    let region = ws.json(&["region", "pifrc", "--channel", &ch, "--policy", pol, "--si-resolution", "4"]);
    assert_valid(&schema("region"), &region);
    assert_eq!(region["strong_interference"]["holds"], true);
    assert!(region["label"].as_str().unwrap().starts_with("capacity"));
}

#[test]
fn every_region_output_matches_its_schema() {
    let ws = Workspace::new();
    let region = schema("region");
    for name in PMARC_FIXTURES {
        let (ch, pol) = ws.fixture(name, &[]);
        for topology in ["pmarc", "marc", "multicast"] {
            let doc = ws.json(&["region", topology, "--channel", &ch, "--policy", &pol]);
            assert_valid(&region, &doc);
        }
        for scheme in ["cf", "nnc"] {
            let doc = ws.json(&["compare", "--channel", &ch, "--policy", &pol, "--schemes", &format!("gcf,{scheme}")]);
            assert_valid(&region, &doc["regions"][scheme]);
        }
    }
}

#[test]
fn simulation_lemma_and_frontier_outputs() {
    let ws = Workspace::new();
    let (ch, pol) = ws.fixture("bsc_pmarc", &[]);
    let sim = ws.json(&[
        "simulate", "--channel", &ch, "--policy", &pol, "--n", "4", "--rates", "0.25,0.25", "--rhat", "0.6", "--trials", "50",
        "--seed", "3", "--csv", "sim.csv",
    ]);
    assert_valid(&schema("simulation"), &sim);
    let csv = std::fs::read_to_string(ws.path("sim.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(csv.lines().next().unwrap(), obliv_relay_header());

    let lemma = ws.json(&["lemma1", "--channel", &ch, "--policy", &pol, "--samples", "2000", "--seed", "1"]);
    assert_valid(&schema("lemma1"), &lemma);

    let front = ws.json(&[
        "frontier", "--channel", &ch, "--kind", "pmarc", "--weights", "1,1", "--resolution", "2", "--samples", "3", "--seed", "5",
    ]);
    assert_valid(&schema("region"), &front["region"]);
    assert!(front["value_bits"].as_f64().unwrap() > 0.0);
}

fn obliv_relay_header() -> &'static str {
    "topology,n,rates,rhat,epsilon,typicality,trials,seed,failures,error_rate,ci_half_width,E0,E1,E2,E3,E4,E5,E6,E7"
}

#[test]
fn exit_codes() {
    let ws = Workspace::new();
    let (ch, pol) = ws.fixture("binary_adder_pmarc", &[]);
    assert_eq!(ws.run(&["bogus"]).status.code(), Some(1));
    assert_eq!(ws.run(&["region", "pmarc", "--channel", "missing.json", "--policy", &pol]).status.code(), Some(1));
    std::fs::write(ws.path("broken.json"), "{\"kind\": \"pmarc\"").unwrap();
    let out = ws.run(&["region", "pmarc", "--channel", "broken.json", "--policy", &pol]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema violation"));
    let sim = ["simulate", "--channel", &ch, "--policy", &pol, "--n", "50", "--rates", "1,1", "--rhat", "1"];
    let out = ws.run(&sim);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resource cap"));
    assert_eq!(ws.run(&["check", "si-dmc", "--channel", &ch]).status.code(), Some(1));
    assert_eq!(ws.run(&["--help"]).status.code(), Some(0));
    assert_eq!(ws.run(&["--threads", "0", "fixture", "bsc_pmarc"]).status.code(), Some(1));
}

#[test]
fn each_run_emits_one_manifest() {
    let ws = Workspace::new();
    let (ch, pol) = ws.fixture("bsc_pmarc", &[]);
    let out = ws.ok(&["region", "pmarc", "--channel", &ch, "--policy", &pol, "--out", "r.json", "--csv", "r.csv"]);
    assert!(out.stdout.is_empty());
    let m = manifest_of(&out);
    assert_valid(&schema("manifest"), &m);
    assert_eq!(m["command"], "region");
    assert_eq!(m["inputs"].as_array().unwrap().len(), 2);
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap()).collect();
    assert_eq!(outputs, ["r.json", "r.csv"]);
    assert_valid(&schema("manifest"), &serde_json::from_slice(&std::fs::read(ws.path("fixture.manifest.json")).unwrap()).unwrap());
}

#[test]
fn manifests_replay_byte_identically() {
    let ws = Workspace::new();
    let (ch, pol) = ws.fixture("binary_adder_pmarc", &["c=0.5"]);
    let args = [
        "simulate", "--channel", &ch, "--policy", &pol, "--n", "6", "--rates", "0.3,0.3", "--rhat", "0.5", "--trials", "200",
        "--seed", "11", "--typicality", "conditional", "--eps", "0.3", "--out", "sim.json", "--manifest", "sim.manifest.json",
    ];
    ws.ok(&args);
    let first = std::fs::read(ws.path("sim.json")).unwrap();
    let manifest = std::fs::read(ws.path("sim.manifest.json")).unwrap();
    ws.ok(&args);
    assert_eq!(std::fs::read(ws.path("sim.json")).unwrap(), first);
    assert_eq!(std::fs::read(ws.path("sim.manifest.json")).unwrap(), manifest);

    let report = ws.json(&["replay", "sim.manifest.json", "--manifest", "replay.manifest.json"]);
    assert_eq!(report["reproduced"], true);
    assert_eq!(std::fs::read(ws.path("sim.manifest.json")).unwrap(), manifest);

    // a changed input is detected
    let mut channel: Value = serde_json::from_slice(&std::fs::read(ws.path(&ch)).unwrap()).unwrap();
    channel["link_capacities"] = serde_json::json!([0.75]);
    std::fs::write(ws.path(&ch), serde_json::to_vec_pretty(&channel).unwrap()).unwrap();
    let out = ws.run(&["replay", "sim.manifest.json"]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["inputs_match"], false);
}

#[test]
fn thread_count_does_not_change_results() {
    let ws = Workspace::new();
    let (ch, pol) = ws.fixture("bsc_pmarc", &[]);
    let sim = |threads: Option<&str>, env: Option<&str>| {
        let mut cmd = Command::new(BIN);
        cmd.current_dir(ws.dir.path()).env_remove("OBLIV_RELAY_THREADS");
        if let Some(t) = threads {
            cmd.args(["--threads", t]);
        }
        if let Some(e) = env {
            cmd.env("OBLIV_RELAY_THREADS", e);
        }
        cmd.args(["simulate", "--channel", &ch, "--policy", &pol, "--n", "5", "--rates", "0.3,0.3", "--rhat", "0.7"]);
        cmd.args(["--trials", "300", "--seed", "2"]);
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let one = sim(Some("1"), None);
    assert_eq!(one, sim(Some("4"), None));
    assert_eq!(one, sim(None, Some("3")));
    assert_eq!(one, sim(None, None));
    let frontier = |t: &str| {
        ws.ok(&["--threads", t, "frontier", "--channel", &ch, "--kind", "nnc", "--weights", "2,1", "--resolution", "2", "--samples", "8"])
            .stdout
    };
    assert_eq!(frontier("1"), frontier("3"));
}
