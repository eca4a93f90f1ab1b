//! `obliv-relay` command-line driver. Exit codes: 0 success, 1 validation
//! error, 2 resource-cap abort.

mod args;
mod commands;
mod manifest;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command};
use commands::{execute, CliError, Run};
use manifest::{display, Artifact, FileDigest, RunManifest};

const THREADS_ENV: &str = "OBLIV_RELAY_THREADS";

fn main() {
    std::process::exit(run(std::env::args_os().collect()));
}

fn run(argv: Vec<OsString>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return e.code;
    }
    let recorded: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let result = match &cli.command {
        Command::Replay(r) => replay(&r.recorded),
        command => execute(command),
    };
    match result.and_then(|run| write_run(run, recorded, cli.manifest.as_deref())) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse().map_err(|_| CliError::validation(format!("{THREADS_ENV}=`{v}` is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::validation("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::validation(format!("cannot configure threads: {e}")))?;
    }
    Ok(())
}

fn write_artifact(a: &Artifact) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::validation(format!("cannot write {}: {e}", a.label()));
    match &a.dest {
        Some(path) => std::fs::write(path, &a.bytes).map_err(io),
        None => std::io::stdout().lock().write_all(&a.bytes).map_err(io),
    }
}

fn write_run(run: Run, argv: Vec<String>, manifest_path: Option<&Path>) -> Result<(), CliError> {
    for a in &run.artifacts {
        write_artifact(a)?;
    }
    let manifest = RunManifest {
        tool: "obliv-relay".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: run.command.into(),
        argv,
        inputs: run.inputs,
        parameters: run.parameters,
        seed: run.seed,
        outputs: run.artifacts.iter().map(|a| FileDigest::of(&a.label(), &a.bytes)).collect(),
    };
    let text = manifest.to_json();
    match manifest_path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::validation(format!("cannot write {}: {e}", display(p)))),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

/// Re-executes a manifest's command in memory and reports whether every
/// input and output checksum matches. The replayed command writes nothing.
fn replay(path: &Path) -> Result<Run, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", display(path))))?;
    let recorded: RunManifest =
        serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", display(path))))?;
    let argv = std::iter::once("obliv-relay".to_string()).chain(recorded.argv.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::validation(format!("manifest argv does not parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::validation("a replay manifest cannot be replayed"));
    }
    let rerun = execute(&cli.command)?;
    let fresh: Vec<FileDigest> = rerun.artifacts.iter().map(|a| FileDigest::of(&a.label(), &a.bytes)).collect();
    let inputs_match = rerun.inputs == recorded.inputs;
    let outputs_match = fresh == recorded.outputs;
    let report = json!({
        "manifest": display(path),
        "command": recorded.command,
        "version_recorded": recorded.version,
        "version_running": env!("CARGO_PKG_VERSION"),
        "inputs_match": inputs_match,
        "outputs_match": outputs_match,
        "reproduced": inputs_match && outputs_match,
        "outputs": recorded.outputs.iter().zip(&fresh).map(|(r, f)| json!({
            "path": r.path,
            "recorded_sha256": r.sha256,
            "replayed_sha256": f.sha256,
        })).collect::<Vec<_>>(),
    });
    let mut bytes = serde_json::to_string_pretty(&report).expect("report serializes");
    bytes.push('\n');
    if !(inputs_match && outputs_match) {
        print!("{bytes}");
        return Err(CliError::validation("replay did not reproduce the recorded checksums"));
    }
    Ok(Run {
        command: "replay",
        inputs: vec![FileDigest::of(&display(path), text.as_bytes())],
        parameters: json!({"manifest": display(path)}),
        seed: recorded.seed,
        artifacts: vec![Artifact { dest: None, bytes: bytes.into_bytes() }],
    })
}
