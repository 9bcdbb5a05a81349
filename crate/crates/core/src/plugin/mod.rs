//! Plugin definitions, the run lifecycle, and the remote-processing client.

mod catalog;
pub mod http;
mod manifest;
mod runtime;

pub use catalog::{builtin_ids, builtin_manifest, Catalog, CatalogError};
pub use http::{send_http_post, HttpError, HttpExchange};
pub use manifest::{
    load_manifest, Category, Hint, HttpInferParams, InferResponse, InteractionNeed,
    ManifestError, PluginManifest, Step, StepSpec, DEFAULT_HTTP_TIMEOUT, DEFAULT_OVERLAY_COLOR,
    DEFAULT_OVERLAY_OPACITY,
};
pub use runtime::{
    histogram_sidecar, run_plugin, run_plugin_with, CommitKind, HintLog, Outcome, RunOptions,
    RunReport, StepError, StepRecord,
};
