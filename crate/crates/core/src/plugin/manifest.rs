//! Declarative plugin definitions.
//!
//! A manifest is a JSON document:
//!
//! ```json
//! {
//!   "id": "sobel-edge",
//!   "name": "Sobel Edge",
//!   "category": "filters",
//!   "description": "Horizontal gradient",
//!   "pipeline": [
//!     { "op": "filter", "params": { "size": 3, "weights": [-1, 0, 1, -2, 0, 2, -1, 0, 1] } }
//!   ],
//!   "interactions": ["box", { "seeds": 2 }]
//! }
//! ```
//!
//! Unknown fields are rejected at every level. A step may carry a
//! `"hint": { "message": "...", "duration_ms": 1500 }` emitted before it runs.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::codec::PNG_MEDIA_TYPE;
use crate::interaction::Rect;
use crate::pixel::{Kernel, DEFAULT_MASK_THRESHOLD};

pub const DEFAULT_HTTP_TIMEOUT: Duration = Duration::from_secs(30);
pub const DEFAULT_OVERLAY_COLOR: [u8; 3] = [255, 0, 0];
pub const DEFAULT_OVERLAY_OPACITY: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManifestError {
    #[error("manifest is not valid JSON: {0}")]
    Parse(String),
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("step {index}: unknown op `{op}`")]
    UnknownOp { index: usize, op: String },
    #[error("step {index} ({op}): {message}")]
    InvalidParams {
        index: usize,
        op: &'static str,
        message: String,
    },
    #[error("{0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    DataVisualization,
    Filters,
    Llms,
    MachineLearning,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::DataVisualization,
        Category::Filters,
        Category::Llms,
        Category::MachineLearning,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::DataVisualization => "data-visualization",
            Category::Filters => "filters",
            Category::Llms => "llms",
            Category::MachineLearning => "machine-learning",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = ManifestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| ManifestError::UnknownCategory(s.to_string()))
    }
}

/// Interaction a plugin needs before it can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionNeed {
    Box,
    Seeds(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hint {
    pub message: String,
    pub duration_ms: u64,
}

impl Hint {
    pub fn new(message: impl Into<String>, duration: Duration) -> Self {
        Self {
            message: message.into(),
            duration_ms: duration.as_millis() as u64,
        }
    }
}

/// How an `http_infer` step interprets the response body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferResponse {
    /// A PNG replacing the working image.
    Image,
    /// A PNG or raw one-byte-per-pixel mask over the working image.
    Mask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpInferParams {
    pub url: String,
    pub response: InferResponse,
    pub content_type: String,
    /// `None` defers to the runner's default.
    pub timeout: Option<Duration>,
    pub threshold: u8,
    pub color: [u8; 3],
    pub opacity: f64,
}

/// One pipeline operation with validated parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Filter(Kernel),
    RgbaToGrayscale,
    GrayscaleToRgba,
    HardenMask { threshold: u8 },
    ApplyMask { color: [u8; 3], opacity: f64 },
    ComputeHistogram,
    /// Crops to `rect`, or to the interactively selected box when absent.
    Crop { rect: Option<Rect> },
    HttpInfer(HttpInferParams),
    Invert,
}

impl Step {
    pub const OPS: [&'static str; 9] = [
        "filter",
        "rgba_to_grayscale",
        "grayscale_to_rgba",
        "harden_mask",
        "apply_mask",
        "compute_histogram",
        "crop",
        "http_infer",
        "invert",
    ];

    pub fn op_name(&self) -> &'static str {
        match self {
            Step::Filter(_) => "filter",
            Step::RgbaToGrayscale => "rgba_to_grayscale",
            Step::GrayscaleToRgba => "grayscale_to_rgba",
            Step::HardenMask { .. } => "harden_mask",
            Step::ApplyMask { .. } => "apply_mask",
            Step::ComputeHistogram => "compute_histogram",
            Step::Crop { .. } => "crop",
            Step::HttpInfer(_) => "http_infer",
            Step::Invert => "invert",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSpec {
    pub step: Step,
    pub hint: Option<Hint>,
}

impl From<Step> for StepSpec {
    fn from(step: Step) -> Self {
        Self { step, hint: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PluginManifest {
    pub id: String,
    pub name: String,
    pub category: Category,
    pub description: String,
    pub pipeline: Vec<StepSpec>,
    pub interactions: Vec<InteractionNeed>,
}

impl PluginManifest {
    pub fn needs_box(&self) -> bool {
        self.interactions.contains(&InteractionNeed::Box)
    }

    /// Checks the invariants that parsing alone cannot express.
    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.id.trim().is_empty() {
            return Err(ManifestError::Validation("id must not be empty".into()));
        }
        if self.pipeline.is_empty() {
            return Err(ManifestError::Validation("pipeline must not be empty".into()));
        }
        let boxes = self
            .interactions
            .iter()
            .filter(|i| **i == InteractionNeed::Box)
            .count();
        if boxes > 1 {
            return Err(ManifestError::Validation("at most one box interaction is supported".into()));
        }
        if self
            .interactions.contains(&InteractionNeed::Seeds(0))
        {
            return Err(ManifestError::Validation("seed interactions need at least one seed".into()));
        }
        for (index, spec) in self.pipeline.iter().enumerate() {
            if let Step::Crop { rect: None } = spec.step {
                if boxes == 0 {
                    return Err(ManifestError::InvalidParams {
                        index,
                        op: "crop",
                        message: "no rect given and the manifest declares no box interaction"
                            .into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(RawManifest::from(self)).expect("manifest serializes")
    }
}

pub fn load_manifest(bytes: &[u8]) -> Result<PluginManifest, ManifestError> {
    let raw: RawManifest =
        serde_json::from_slice(bytes).map_err(|e| ManifestError::Parse(e.to_string()))?;
    let manifest = raw.into_manifest()?;
    manifest.validate()?;
    Ok(manifest)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<String>,
    #[serde(default)]
    description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pipeline: Option<Vec<RawStep>>,
    #[serde(default)]
    interactions: Vec<InteractionNeed>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    op: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hint: Option<Hint>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterParams {
    size: usize,
    weights: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HardenParams {
    #[serde(default = "default_threshold")]
    threshold: u8,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ApplyParams {
    #[serde(default = "default_color")]
    color: [u8; 3],
    #[serde(default = "default_opacity")]
    opacity: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CropParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rect: Option<Rect>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HttpParams {
    url: String,
    response: InferResponse,
    #[serde(default = "default_content_type")]
    content_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timeout_secs: Option<f64>,
    #[serde(default = "default_threshold")]
    threshold: u8,
    #[serde(default = "default_color")]
    color: [u8; 3],
    #[serde(default = "default_opacity")]
    opacity: f64,
}

fn default_threshold() -> u8 {
    DEFAULT_MASK_THRESHOLD
}

fn default_color() -> [u8; 3] {
    DEFAULT_OVERLAY_COLOR
}

fn default_opacity() -> f64 {
    DEFAULT_OVERLAY_OPACITY
}

fn default_content_type() -> String {
    PNG_MEDIA_TYPE.to_string()
}

fn check_opacity(index: usize, op: &'static str, opacity: f64) -> Result<(), ManifestError> {
    if (0.0..=1.0).contains(&opacity) {
        Ok(())
    } else {
        Err(ManifestError::InvalidParams {
            index,
            op,
            message: format!("opacity {opacity} outside [0, 1]"),
        })
    }
}

impl RawStep {
    fn params<T: DeserializeOwned>(&self, index: usize, op: &'static str) -> Result<T, ManifestError> {
        let value = if self.params.is_null() {
            Value::Object(Default::default())
        } else {
            self.params.clone()
        };
        serde_json::from_value(value).map_err(|e| ManifestError::InvalidParams {
            index,
            op,
            message: e.to_string(),
        })
    }

    fn into_spec(self, index: usize) -> Result<StepSpec, ManifestError> {
        let op = Step::OPS
            .into_iter()
            .find(|o| *o == self.op)
            .ok_or_else(|| ManifestError::UnknownOp {
                index,
                op: self.op.clone(),
            })?;
        let step = match op {
            "filter" => {
                let p: FilterParams = self.params(index, op)?;
                let kernel =
                    Kernel::new(p.size, p.weights).map_err(|e| ManifestError::InvalidParams {
                        index,
                        op,
                        message: e.to_string(),
                    })?;
                Step::Filter(kernel)
            }
            "harden_mask" => {
                let p: HardenParams = self.params(index, op)?;
                Step::HardenMask {
                    threshold: p.threshold,
                }
            }
            "apply_mask" => {
                let p: ApplyParams = self.params(index, op)?;
                check_opacity(index, op, p.opacity)?;
                Step::ApplyMask {
                    color: p.color,
                    opacity: p.opacity,
                }
            }
            "crop" => {
                let p: CropParams = self.params(index, op)?;
                if let Some(r) = p.rect {
                    if r.w == 0 || r.h == 0 {
                        return Err(ManifestError::InvalidParams {
                            index,
                            op,
                            message: "rect extent must be at least 1x1".into(),
                        });
                    }
                }
                Step::Crop { rect: p.rect }
            }
            "http_infer" => {
                let p: HttpParams = self.params(index, op)?;
                let invalid = |message: String| ManifestError::InvalidParams { index, op, message };
                super::http::validate_url(&p.url).map_err(|e| invalid(e.to_string()))?;
                let timeout = match p.timeout_secs {
                    Some(t) if t.is_finite() && t > 0.0 => Some(Duration::from_secs_f64(t)),
                    Some(t) => return Err(invalid(format!("timeout_secs must be > 0, got {t}"))),
                    None => None,
                };
                check_opacity(index, op, p.opacity)?;
                Step::HttpInfer(HttpInferParams {
                    url: p.url,
                    response: p.response,
                    content_type: p.content_type,
                    timeout,
                    threshold: p.threshold,
                    color: p.color,
                    opacity: p.opacity,
                })
            }
            simple => {
                let _: NoParams = self.params(index, simple)?;
                match simple {
                    "rgba_to_grayscale" => Step::RgbaToGrayscale,
                    "grayscale_to_rgba" => Step::GrayscaleToRgba,
                    "compute_histogram" => Step::ComputeHistogram,
                    _ => Step::Invert,
                }
            }
        };
        Ok(StepSpec {
            step,
            hint: self.hint,
        })
    }
}

impl RawManifest {
    fn into_manifest(self) -> Result<PluginManifest, ManifestError> {
        let id = self.id.ok_or(ManifestError::MissingField("id"))?;
        let name = self.name.ok_or(ManifestError::MissingField("name"))?;
        let category: Category = self
            .category
            .ok_or(ManifestError::MissingField("category"))?
            .parse()?;
        let pipeline = self
            .pipeline
            .ok_or(ManifestError::MissingField("pipeline"))?
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.into_spec(i))
            .collect::<Result<_, _>>()?;
        Ok(PluginManifest {
            id,
            name,
            category,
            description: self.description,
            pipeline,
            interactions: self.interactions,
        })
    }
}

fn to<T: Serialize>(params: &T) -> Value {
    serde_json::to_value(params).expect("params serialize")
}

impl From<&StepSpec> for RawStep {
    fn from(spec: &StepSpec) -> Self {
        let params = match &spec.step {
            Step::Filter(k) => to(&FilterParams {
                size: k.size(),
                weights: k.weights().to_vec(),
            }),
            Step::HardenMask { threshold } => to(&HardenParams {
                threshold: *threshold,
            }),
            Step::ApplyMask { color, opacity } => to(&ApplyParams {
                color: *color,
                opacity: *opacity,
            }),
            Step::Crop { rect } => to(&CropParams { rect: *rect }),
            Step::HttpInfer(p) => to(&HttpParams {
                url: p.url.clone(),
                response: p.response,
                content_type: p.content_type.clone(),
                timeout_secs: p.timeout.map(|t| t.as_secs_f64()),
                threshold: p.threshold,
                color: p.color,
                opacity: p.opacity,
            }),
            _ => Value::Null,
        };
        RawStep {
            op: spec.step.op_name().to_string(),
            params,
            hint: spec.hint.clone(),
        }
    }
}

impl From<&PluginManifest> for RawManifest {
    fn from(m: &PluginManifest) -> Self {
        RawManifest {
            id: Some(m.id.clone()),
            name: Some(m.name.clone()),
            category: Some(m.category.as_str().to_string()),
            description: m.description.clone(),
            pipeline: Some(m.pipeline.iter().map(RawStep::from).collect()),
            interactions: m.interactions.clone(),
        }
    }
}
