//! `boostlet` command-line runner.
//!
//! Exit codes: 0 success, 1 run failed/cancelled or regressions found,
//! 2 usage or configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use boostlet_core::harness;
use boostlet_core::host::{Environment, Registry, FILE_HOST_MARKER, FILE_HOST_OUTPUT_MARKER};
use boostlet_core::interaction::{Rect, ScriptedSource, SeedPoint};
use boostlet_core::plugin::{self, Catalog, Category, PluginManifest, RunOptions};
use clap::{Parser, Subcommand};

const TIMEOUT_ENV: &str = "BOOSTLET_HTTP_TIMEOUT";

#[derive(Parser)]
#[command(name = "boostlet", version, about = "Run image plugins headlessly")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one plugin against a PNG and write the result.
    Run {
        #[arg(long)]
        input: PathBuf,
        /// Builtin plugin id or path to a manifest (.json).
        #[arg(long)]
        plugin: String,
        #[arg(long)]
        output: PathBuf,
        /// Scripted box selection, `x,y,w,h`. Repeatable.
        #[arg(long = "box", value_name = "X,Y,W,H")]
        boxes: Vec<Rect>,
        /// Scripted seed point, `x,y`. Repeatable.
        #[arg(long = "seed", value_name = "X,Y")]
        seeds: Vec<SeedPoint>,
        /// Write the run report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the histogram sidecar here when the plugin produces one.
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// Run a regression suite directory.
    Test {
        #[arg(long)]
        suite: PathBuf,
        /// Also write the suite report to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// List builtin plugins.
    List {
        #[arg(long)]
        category: Option<Category>,
        #[arg(long)]
        search: Option<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let options = match run_options() {
        Ok(o) => o,
        Err(msg) => return fail(2, &msg),
    };
    let code = match cli.command {
        Command::Run {
            input,
            plugin,
            output,
            boxes,
            seeds,
            report,
            histogram,
        } => run(&input, &plugin, &output, boxes, seeds, report, histogram, &options),
        Command::Test { suite, json } => test(&suite, json, &options),
        Command::List { category, search } => list(category, search.as_deref()),
    };
    ExitCode::from(code)
}

fn fail(code: u8, msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn run_options() -> Result<RunOptions, String> {
    let mut options = RunOptions::default();
    if let Ok(raw) = std::env::var(TIMEOUT_ENV) {
        let secs: f64 = raw
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite() && *s > 0.0)
            .ok_or_else(|| format!("{TIMEOUT_ENV}: expected positive seconds, got `{raw}`"))?;
        options.http_timeout = Duration::from_secs_f64(secs);
    }
    Ok(options)
}

fn load_plugin(spec: &str) -> Result<PluginManifest, String> {
    let path = Path::new(spec);
    if spec.ends_with(".json") || path.is_file() {
        let bytes = std::fs::read(path).map_err(|e| format!("{spec}: {e}"))?;
        return plugin::load_manifest(&bytes).map_err(|e| format!("{spec}: {e}"));
    }
    plugin::builtin_manifest(spec).ok_or_else(|| {
        let known: Vec<_> = plugin::builtin_ids().collect();
        format!("unknown plugin `{spec}` (builtins: {})", known.join(", "))
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, format!("{text}\n")).map_err(|e| format!("{}: {e}", path.display()))
}

#[allow(clippy::too_many_arguments)]
fn run(
    input: &Path,
    plugin_spec: &str,
    output: &Path,
    boxes: Vec<Rect>,
    seeds: Vec<SeedPoint>,
    report_path: Option<PathBuf>,
    histogram_path: Option<PathBuf>,
    options: &RunOptions,
) -> u8 {
    let manifest = match load_plugin(plugin_spec) {
        Ok(m) => m,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let env = Environment::new()
        .with_marker(FILE_HOST_MARKER, input.to_string_lossy())
        .with_marker(FILE_HOST_OUTPUT_MARKER, output.to_string_lossy());
    let mut session = match Registry::with_builtin_adapters().init(&env, Some(FILE_HOST_MARKER)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", input.display());
            return 2;
        }
    };
    let mut source = ScriptedSource::new(boxes, seeds);
    let report = plugin::run_plugin_with(&manifest, &mut session, &mut source, options);

    let json = report.to_json();
    match &report_path {
        Some(p) => {
            if let Err(msg) = write_text(p, &json) {
                eprintln!("error: {msg}");
                return 2;
            }
        }
        None => println!("{json}"),
    }
    if let (Some(p), Some(sidecar)) = (&histogram_path, report.histogram_sidecar()) {
        if let Err(msg) = write_text(p, &sidecar) {
            eprintln!("error: {msg}");
            return 2;
        }
    }
    match &report.outcome {
        plugin::Outcome::Committed { .. } => 0,
        plugin::Outcome::Cancelled { reason } => {
            eprintln!("cancelled: {reason}");
            1
        }
        plugin::Outcome::Failed { reason } => {
            eprintln!("failed: {reason}");
            1
        }
    }
}

fn test(suite: &Path, json: Option<PathBuf>, options: &RunOptions) -> u8 {
    let report = match harness::run_suite_with(suite, options) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    for case in &report.cases {
        let status = match case.status {
            harness::CaseStatus::Pass => "PASS",
            harness::CaseStatus::Fail => "FAIL",
            harness::CaseStatus::ConfigError => "ERROR",
        };
        match &case.reason {
            Some(r) => eprintln!("{status} {}: {r}", case.name),
            None => eprintln!("{status} {}", case.name),
        }
    }
    eprintln!(
        "{} passed, {} failed, {} misconfigured",
        report.passed, report.failed, report.config_errors
    );
    let text = report.to_json();
    println!("{text}");
    if let Some(p) = json {
        if let Err(msg) = write_text(&p, &text) {
            eprintln!("error: {msg}");
            return 2;
        }
    }
    report.exit_code() as u8
}

fn list(category: Option<Category>, search: Option<&str>) -> u8 {
    let catalog = Catalog::builtin();
    let entries = catalog.search(search.unwrap_or(""), category);
    for m in entries {
        println!("{}\t{}\t{}", m.id, m.category, m.name);
    }
    0
}
