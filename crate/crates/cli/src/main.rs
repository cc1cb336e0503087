//! Writes the figure, table and validation data as CSV, with a JSON sidecar
//! `<out>.meta.json` holding the resolved parameters.
//!
//! Exit status: 0 on success, 1 when a validation check fails or a computation
//! errors, 2 on bad usage or invalid parameters.

mod commands;
mod params;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{Map, Value as Json};

use commands::{CmdError, Command};

/// Directory used when `--out` is not given.
const OUT_DIR_ENV: &str = "CVQI_OUT_DIR";
const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Parser)]
#[command(name = "cvqi", version, about = "Reproduce the interferometry data sets as CSV")]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// Output CSV path [default: $CVQI_OUT_DIR/<command>.csv, else ./<command>.csv]
    #[arg(long)]
    out: Option<PathBuf>,

    /// RNG seed for sampling commands
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Override a parameter, e.g. `--set epsilon=0.1`; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Print the resolved parameters and exit
    #[arg(long)]
    show_params: bool,
}

fn output_path(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| {
        let dir = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
        dir.join(format!("{}.csv", cli.command.name()))
    })
}

fn sidecar_path(out: &std::path::Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut params = commands::defaults(cli.command);
    if let Err(e) = params.apply(&cli.set) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if cli.show_params {
        println!(
            "{}",
            serde_json::to_string_pretty(&params.to_json()).expect("serializable")
        );
        return ExitCode::SUCCESS;
    }

    let output = match commands::run(cli.command, &params, cli.seed) {
        Ok(o) => o,
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(CmdError::Library(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let out = output_path(&cli);
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        if let Err(e) = std::fs::create_dir_all(dir) {
            eprintln!("error: cannot create {}: {e}", dir.display());
            return ExitCode::from(1);
        }
    }
    if let Err(e) = output.table.write_csv(&out) {
        eprintln!("error: cannot write {}: {e}", out.display());
        return ExitCode::from(1);
    }

    let mut meta = Map::new();
    meta.insert("command".into(), Json::String(cli.command.name()));
    meta.insert("version".into(), Json::String(env!("CARGO_PKG_VERSION").into()));
    meta.insert("seed".into(), Json::from(cli.seed));
    meta.insert("parameters".into(), params.to_json());
    meta.insert("rows".into(), Json::from(output.table.len()));
    if !output.results.is_empty() {
        meta.insert("results".into(), Json::Object(output.results));
    }
    let text = serde_json::to_string_pretty(&Json::Object(meta)).expect("serializable") + "\n";
    if let Err(e) = std::fs::write(sidecar_path(&out), text) {
        eprintln!("error: cannot write sidecar: {e}");
        return ExitCode::from(1);
    }

    println!("wrote {} ({} rows)", out.display(), output.table.len());
    if output.checks.is_empty() {
        return ExitCode::SUCCESS;
    }
    let failed: Vec<_> = output.checks.iter().filter(|c| !c.pass).collect();
    println!("{} passed, {} failed", output.checks.len() - failed.len(), failed.len());
    match failed.first() {
        None => ExitCode::SUCCESS,
        Some(c) => {
            eprintln!("first failure: {} = {} (limit {})", c.name, c.value, c.limit);
            ExitCode::from(1)
        }
    }
}
