//! Golden-image regression pipeline.
//!
//! A case runs one plugin against a PNG through the file host, captures the
//! committed image, and diffs it against a ground-truth PNG. A suite is a
//! directory of `*.case.json` descriptors:
//!
//! ```json
//! {
//!   "name": "sobel-phantom",
//!   "input": "inputs/phantom.png",
//!   "manifest": "sobel-edge",
//!   "interactions": [{ "box": [0, 0, 64, 64] }, { "seed": [3, 4] }],
//!   "ground_truth": "truth/sobel-phantom.png",
//!   "threshold": 0.05
//! }
//! ```
//!
//! `manifest` is a path when it ends in `.json` and a builtin id otherwise.
//! Relative paths resolve against the descriptor's directory.

mod diff;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use diff::{diff, diff_with_threshold, DiffReport, Verdict, DEFAULT_THRESHOLD};

use crate::codec;
use crate::host::{Environment, Registry, FILE_HOST_MARKER, FILE_HOST_OUTPUT_MARKER};
use crate::interaction::{Rect, ScriptedSource, SeedPoint};
use crate::plugin::{self, Outcome, PluginManifest, RunOptions, RunReport};

pub const CASE_SUFFIX: &str = ".case.json";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
}

fn config(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedInteraction {
    Box([u32; 4]),
    Seed([u32; 2]),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseDescriptor {
    name: String,
    input: String,
    manifest: String,
    #[serde(default)]
    interactions: Vec<ScriptedInteraction>,
    ground_truth: String,
    #[serde(default)]
    threshold: Option<f64>,
    #[serde(default)]
    tolerance: Option<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PluginRef {
    Builtin(String),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionCase {
    pub name: String,
    pub input: PathBuf,
    pub plugin: PluginRef,
    pub interactions: Vec<ScriptedInteraction>,
    pub ground_truth: PathBuf,
    pub threshold: Option<f64>,
    pub tolerance: u8,
}

impl RegressionCase {
    /// Reads a descriptor, resolving paths against its directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let bytes = fs::read(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
        let desc: CaseDescriptor = serde_json::from_slice(&bytes)
            .map_err(|e| config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(t) = desc.threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(config(format!("{}: threshold {t} outside [0, 1]", path.display())));
            }
        }
        let plugin = if desc.manifest.ends_with(".json") {
            PluginRef::File(base.join(&desc.manifest))
        } else {
            PluginRef::Builtin(desc.manifest)
        };
        Ok(Self {
            name: desc.name,
            input: base.join(desc.input),
            plugin,
            interactions: desc.interactions,
            ground_truth: base.join(desc.ground_truth),
            threshold: desc.threshold,
            tolerance: desc.tolerance.unwrap_or(0),
        })
    }

    pub fn scripted_source(&self) -> ScriptedSource {
        let mut src = ScriptedSource::default();
        for i in &self.interactions {
            match *i {
                ScriptedInteraction::Box([x, y, w, h]) => src.push_box(Rect::new(x, y, w, h)),
                ScriptedInteraction::Seed([x, y]) => src.push_seed(SeedPoint::new(x, y)),
            }
        }
        src
    }
}

/// Resolves a builtin id or manifest path.
pub fn resolve_plugin(plugin: &PluginRef) -> Result<PluginManifest, HarnessError> {
    match plugin {
        PluginRef::Builtin(id) => plugin::builtin_manifest(id)
            .ok_or_else(|| config(format!("unknown builtin plugin `{id}`"))),
        PluginRef::File(path) => {
            let bytes = fs::read(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
            plugin::load_manifest(&bytes).map_err(|e| config(format!("{}: {e}", path.display())))
        }
    }
}

/// Result of one executed case. `diff` is absent when the plugin did not commit.
#[derive(Debug, Clone)]
pub struct CaseRun {
    pub run: RunReport,
    pub diff: Option<DiffReport>,
}

impl CaseRun {
    pub fn passed(&self) -> bool {
        self.run.outcome.is_committed() && self.diff.as_ref().is_some_and(DiffReport::passed)
    }
}

pub fn run_case(case: &RegressionCase) -> Result<CaseRun, HarnessError> {
    run_case_with(case, &RunOptions::default())
}

pub fn run_case_with(case: &RegressionCase, options: &RunOptions) -> Result<CaseRun, HarnessError> {
    for (what, path) in [("input", &case.input), ("ground truth", &case.ground_truth)] {
        if !path.is_file() {
            return Err(config(format!("{what} {} not found", path.display())));
        }
    }
    let manifest = resolve_plugin(&case.plugin)?;
    let truth_bytes = fs::read(&case.ground_truth)
        .map_err(|e| config(format!("{}: {e}", case.ground_truth.display())))?;
    let truth = codec::decode_png_bytes(&truth_bytes)
        .map_err(|e| config(format!("{}: {e}", case.ground_truth.display())))?;

    let scratch = tempfile::tempdir().map_err(|e| config(format!("scratch directory: {e}")))?;
    let captured_path = scratch.path().join("captured.png");
    let env = Environment::new()
        .with_marker(FILE_HOST_MARKER, case.input.to_string_lossy())
        .with_marker(FILE_HOST_OUTPUT_MARKER, captured_path.to_string_lossy());
    let mut session = Registry::with_builtin_adapters()
        .detect(&env)
        .map_err(|e| config(format!("{}: {e}", case.input.display())))?;

    let mut source = case.scripted_source();
    let run = plugin::run_plugin_with(&manifest, &mut session, &mut source, options);
    if !run.outcome.is_committed() {
        return Ok(CaseRun { run, diff: None });
    }

    let captured = if captured_path.is_file() {
        let bytes = fs::read(&captured_path).map_err(|e| config(format!("capture: {e}")))?;
        codec::decode_png_bytes(&bytes).map_err(|e| config(format!("capture: {e}")))?
    } else {
        session
            .get_image()
            .map_err(|e| config(format!("capture: {e}")))?
    };
    let report = diff_with_threshold(
        &captured,
        &truth,
        case.tolerance,
        case.threshold.unwrap_or(DEFAULT_THRESHOLD),
    );
    Ok(CaseRun {
        run,
        diff: Some(report),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    Pass,
    Fail,
    ConfigError,
}

/// Deterministic per-case summary (no timings).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub descriptor: String,
    pub status: CaseStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diff: Option<DiffReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub cases: Vec<CaseResult>,
    pub passed: usize,
    pub failed: usize,
    pub config_errors: usize,
    pub success: bool,
}

impl SuiteReport {
    /// 0 when every case passes, 2 when any case is misconfigured, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.config_errors > 0 {
            2
        } else if self.failed > 0 {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite report serializes")
    }
}

fn case_result(descriptor: &Path, options: &RunOptions) -> CaseResult {
    let file_name = descriptor
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let fallback_name = file_name.trim_end_matches(CASE_SUFFIX).to_string();
    let case = match RegressionCase::load(descriptor) {
        Ok(c) => c,
        Err(e) => {
            return CaseResult {
                name: fallback_name,
                descriptor: file_name,
                status: CaseStatus::ConfigError,
                reason: Some(e.to_string()),
                outcome: None,
                diff: None,
            }
        }
    };
    match run_case_with(&case, options) {
        Err(e) => CaseResult {
            name: case.name,
            descriptor: file_name,
            status: CaseStatus::ConfigError,
            reason: Some(e.to_string()),
            outcome: None,
            diff: None,
        },
        Ok(run) => {
            let status = if run.passed() {
                CaseStatus::Pass
            } else {
                CaseStatus::Fail
            };
            let reason = match (&run.run.outcome, &run.diff) {
                (Outcome::Failed { reason } | Outcome::Cancelled { reason }, _) => {
                    Some(reason.clone())
                }
                (_, Some(d)) if !d.passed() => Some(if d.shape_mismatch {
                    "captured image and ground truth differ in shape".to_string()
                } else {
                    format!(
                        "{} of {} pixels differ ({:.4}% > {:.4}%)",
                        d.differing_pixels,
                        d.total_pixels,
                        d.fraction * 100.0,
                        d.threshold * 100.0
                    )
                }),
                _ => None,
            };
            CaseResult {
                name: case.name,
                descriptor: file_name,
                status,
                reason,
                outcome: Some(run.run.outcome),
                diff: run.diff,
            }
        }
    }
}

/// Case descriptors in `dir`, sorted by file name.
pub fn discover_cases(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let entries = fs::read_dir(dir).map_err(|e| config(format!("{}: {e}", dir.display())))?;
    let mut found = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| config(format!("{}: {e}", dir.display())))?;
        let path = entry.path();
        let is_case = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.ends_with(CASE_SUFFIX));
        if is_case && path.is_file() {
            found.push(path);
        }
    }
    found.sort();
    Ok(found)
}

pub fn run_suite(dir: &Path) -> Result<SuiteReport, HarnessError> {
    run_suite_with(dir, &RunOptions::default())
}

/// Runs every case (in parallel) and reports them sorted by case name.
pub fn run_suite_with(dir: &Path, options: &RunOptions) -> Result<SuiteReport, HarnessError> {
    let descriptors = discover_cases(dir)?;
    let mut cases: Vec<CaseResult> = descriptors
        .par_iter()
        .map(|d| case_result(d, options))
        .collect();
    cases.sort_by(|a, b| (&a.name, &a.descriptor).cmp(&(&b.name, &b.descriptor)));
    let count = |s: CaseStatus| cases.iter().filter(|c| c.status == s).count();
    let (passed, failed, config_errors) = (
        count(CaseStatus::Pass),
        count(CaseStatus::Fail),
        count(CaseStatus::ConfigError),
    );
    Ok(SuiteReport {
        success: failed == 0 && config_errors == 0,
        cases,
        passed,
        failed,
        config_errors,
    })
}
