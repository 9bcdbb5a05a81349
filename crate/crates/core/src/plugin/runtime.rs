//! The acquire → process → commit lifecycle.
//!
//! Interactions are requested first, then the host image is read once and
//! threaded through the pipeline. Only the final commit touches the host, so
//! a run that fails or is cancelled at any earlier point leaves it exactly
//! as it was.

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use super::http::{self, HttpError};
use super::manifest::{
    HttpInferParams, Hint, InferResponse, InteractionNeed, PluginManifest, Step,
    DEFAULT_HTTP_TIMEOUT, DEFAULT_OVERLAY_COLOR, DEFAULT_OVERLAY_OPACITY,
};
use crate::codec::{self, CodecError, PNG_SIGNATURE};
use crate::host::{HostError, HostSession};
use crate::interaction::{self, InteractionError, InteractionSource, Rect, SeedPoint};
use crate::pixel::{self, Channels, Histogram, Mask, PixelBuffer, PixelError};

#[derive(Debug, Error)]
pub enum StepError {
    #[error(transparent)]
    Pixel(#[from] PixelError),
    #[error(transparent)]
    Interaction(#[from] InteractionError),
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("remote response: {0}")]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Host(#[from] HostError),
    #[error("{0}")]
    Pipeline(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitKind {
    Image,
    Mask,
    /// Data product only (a histogram); the host is not written.
    Artifact,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Committed { commit: CommitKind },
    Cancelled { reason: String },
    Failed { reason: String },
}

impl Outcome {
    pub fn is_committed(&self) -> bool {
        matches!(self, Outcome::Committed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub op: &'static str,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub plugin_id: String,
    pub adapter: String,
    pub steps: Vec<StepRecord>,
    pub hints: Vec<Hint>,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roi: Option<Rect>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<SeedPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub http: Vec<http::HttpExchange>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The 256-bin sidecar document, when the run produced a histogram.
    pub fn histogram_sidecar(&self) -> Option<String> {
        self.histogram
            .as_ref()
            .map(|bins| serde_json::to_string(bins).expect("bins serialize"))
    }
}

pub fn histogram_sidecar(histogram: &Histogram) -> String {
    serde_json::to_string(&histogram.bins().to_vec()).expect("bins serialize")
}

/// Ordered transient messages for the user. Headless runs only log them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HintLog(Vec<Hint>);

impl HintLog {
    pub fn hint(&mut self, message: impl Into<String>, duration: Duration) {
        let hint = Hint::new(message, duration);
        log::info!("hint ({} ms): {}", hint.duration_ms, hint.message);
        self.0.push(hint);
    }

    pub fn push(&mut self, hint: Hint) {
        log::info!("hint ({} ms): {}", hint.duration_ms, hint.message);
        self.0.push(hint);
    }

    pub fn into_vec(self) -> Vec<Hint> {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Used by `http_infer` steps that give no timeout of their own.
    pub http_timeout: Duration,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            http_timeout: DEFAULT_HTTP_TIMEOUT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Product {
    Image,
    Mask,
    Histogram,
}

struct Work {
    /// RGBA pixels as acquired from the host.
    acquired: PixelBuffer,
    /// Region of `acquired` the working buffer covers.
    region: Rect,
    image: PixelBuffer,
    mask: Option<Mask>,
    overlay: ([u8; 3], f64),
    histogram: Option<Histogram>,
    product: Product,
}

impl Work {
    fn acquired_region(&self) -> PixelBuffer {
        interaction::crop(&self.acquired, &self.region).expect("region inside acquired image")
    }
}

struct Interactions {
    roi: Option<Rect>,
    seeds: Vec<SeedPoint>,
}

/// Runs `manifest` against the active host.
pub fn run_plugin(
    manifest: &PluginManifest,
    host: &mut HostSession,
    source: &mut dyn InteractionSource,
) -> RunReport {
    run_plugin_with(manifest, host, source, &RunOptions::default())
}

pub fn run_plugin_with(
    manifest: &PluginManifest,
    host: &mut HostSession,
    source: &mut dyn InteractionSource,
    options: &RunOptions,
) -> RunReport {
    let mut report = RunReport {
        plugin_id: manifest.id.clone(),
        adapter: host.adapter_name().to_string(),
        steps: Vec::new(),
        hints: Vec::new(),
        outcome: Outcome::Failed {
            reason: String::new(),
        },
        roi: None,
        seeds: Vec::new(),
        histogram: None,
        http: Vec::new(),
    };
    let mut hints = HintLog::default();
    let result = execute(manifest, host, source, options, &mut report, &mut hints);
    report.hints = hints.into_vec();
    report.outcome = match result {
        Ok(commit) => Outcome::Committed { commit },
        Err(StepError::Interaction(InteractionError::Cancelled(reason))) => {
            Outcome::Cancelled { reason }
        }
        Err(e) => Outcome::Failed {
            reason: e.to_string(),
        },
    };
    log::debug!("{}: {:?}", manifest.id, report.outcome);
    report
}

fn gather(
    manifest: &PluginManifest,
    host: &HostSession,
    source: &mut dyn InteractionSource,
) -> Result<Interactions, StepError> {
    let bounds = host.surface();
    let mut out = Interactions {
        roi: None,
        seeds: Vec::new(),
    };
    for need in &manifest.interactions {
        match *need {
            InteractionNeed::Box => out.roi = Some(source.request_box(&bounds)?),
            InteractionNeed::Seeds(n) => out.seeds.extend(source.request_seeds(n, &bounds)?),
        }
    }
    Ok(out)
}

fn execute(
    manifest: &PluginManifest,
    host: &mut HostSession,
    source: &mut dyn InteractionSource,
    options: &RunOptions,
    report: &mut RunReport,
    hints: &mut HintLog,
) -> Result<CommitKind, StepError> {
    let picked = gather(manifest, host, source)?;
    report.roi = picked.roi;
    report.seeds = picked.seeds.clone();

    let acquired = host.get_image()?;
    let mut work = Work {
        region: Rect::new(0, 0, acquired.width(), acquired.height()),
        image: acquired.clone(),
        acquired,
        mask: None,
        overlay: (DEFAULT_OVERLAY_COLOR, DEFAULT_OVERLAY_OPACITY),
        histogram: None,
        product: Product::Image,
    };

    for (index, spec) in manifest.pipeline.iter().enumerate() {
        if let Some(h) = &spec.hint {
            hints.push(h.clone());
        }
        let started = Instant::now();
        apply_step(&spec.step, &mut work, picked.roi, options, report).map_err(|e| match e {
            StepError::Interaction(InteractionError::Cancelled(_)) => e,
            other => StepError::Pipeline(format!(
                "step {index} ({}): {other}",
                spec.step.op_name()
            )),
        })?;
        report.steps.push(StepRecord {
            op: spec.step.op_name(),
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }

    commit(work, host, report)
}

fn apply_step(
    step: &Step,
    work: &mut Work,
    roi: Option<Rect>,
    options: &RunOptions,
    report: &mut RunReport,
) -> Result<(), StepError> {
    match step {
        Step::Filter(kernel) => set_image(work, pixel::filter(&work.image, kernel)),
        Step::RgbaToGrayscale => set_image(work, pixel::rgba_to_grayscale(&work.image)?),
        Step::GrayscaleToRgba => set_image(work, pixel::grayscale_to_rgba(&work.image)?),
        Step::Invert => set_image(work, pixel::invert(&work.image)),
        Step::HardenMask { threshold } => {
            if work.image.channels() != Channels::Gray {
                return Err(StepError::Pipeline(
                    "harden_mask needs a grayscale working image".into(),
                ));
            }
            work.mask = Some(pixel::harden_mask(&Mask::from_gray(&work.image)?, *threshold));
            work.product = Product::Mask;
        }
        Step::ApplyMask { color, opacity } => {
            let mask = work
                .mask
                .as_ref()
                .ok_or_else(|| StepError::Pipeline("apply_mask before any mask exists".into()))?;
            let composited = pixel::apply_mask(&work.acquired_region(), mask, *color, *opacity)?;
            set_image(work, composited);
        }
        Step::ComputeHistogram => {
            let hist = pixel::compute_histogram(&work.image)?;
            report.histogram = Some(hist.bins().to_vec());
            work.histogram = Some(hist);
            work.product = Product::Histogram;
        }
        Step::Crop { rect } => {
            let rect = rect
                .or(roi)
                .ok_or_else(|| StepError::Pipeline("crop without a rect or selected box".into()))?;
            work.image = interaction::crop(&work.image, &rect)?;
            work.mask = None;
            work.region = Rect::new(work.region.x + rect.x, work.region.y + rect.y, rect.w, rect.h);
            work.product = Product::Image;
        }
        Step::HttpInfer(params) => http_infer(params, work, options, report)?,
    }
    Ok(())
}

fn set_image(work: &mut Work, image: PixelBuffer) {
    work.image = image;
    work.product = Product::Image;
}

fn http_infer(
    params: &HttpInferParams,
    work: &mut Work,
    options: &RunOptions,
    report: &mut RunReport,
) -> Result<(), StepError> {
    let timeout = params.timeout.unwrap_or(options.http_timeout);
    let body = codec::encode_png(&work.image);
    let exchange = http::send_http_post(&params.url, body.as_bytes(), &params.content_type, timeout)?;
    let response = exchange.response_body.clone();
    report.http.push(exchange);

    let (w, h) = (work.image.width(), work.image.height());
    match params.response {
        InferResponse::Image => {
            let image = codec::decode_png_bytes(&response)?;
            if image.width() != w || image.height() != h {
                return Err(StepError::Pipeline(format!(
                    "remote image is {}x{}, expected {w}x{h}",
                    image.width(),
                    image.height()
                )));
            }
            set_image(work, image);
        }
        InferResponse::Mask => {
            let raw = if response.starts_with(&PNG_SIGNATURE) {
                let decoded = codec::decode_png_bytes(&response)?;
                if decoded.width() != w || decoded.height() != h {
                    return Err(StepError::Pipeline(format!(
                        "remote mask is {}x{}, expected {w}x{h}",
                        decoded.width(),
                        decoded.height()
                    )));
                }
                match decoded.channels() {
                    Channels::Gray => decoded,
                    Channels::Rgba => pixel::rgba_to_grayscale(&decoded)?,
                }
                .into_data()
            } else {
                response
            };
            let mask = Mask::new(w, h, raw)?;
            work.mask = Some(pixel::harden_mask(&mask, params.threshold));
            work.overlay = (params.color, params.opacity);
            work.product = Product::Mask;
        }
    }
    Ok(())
}

fn commit(work: Work, host: &mut HostSession, report: &RunReport) -> Result<CommitKind, StepError> {
    let full_frame = work.region.x == 0
        && work.region.y == 0
        && work.region.w == work.acquired.width()
        && work.region.h == work.acquired.height();
    match work.product {
        Product::Histogram => {
            debug_assert!(report.histogram.is_some());
            Ok(CommitKind::Artifact)
        }
        Product::Image => {
            let image = if full_frame {
                work.image
            } else {
                let patch = match work.image.channels() {
                    Channels::Rgba => work.image,
                    Channels::Gray => pixel::grayscale_to_rgba(&work.image)?,
                };
                interaction::paste(&work.acquired, &patch, work.region.x, work.region.y)?
            };
            host.set_image(&image)?;
            Ok(CommitKind::Image)
        }
        Product::Mask => {
            let mask = work.mask.expect("mask product has a mask");
            let mask = if full_frame {
                mask
            } else {
                let zeros = PixelBuffer::filled(
                    work.acquired.width(),
                    work.acquired.height(),
                    Channels::Gray,
                    0,
                )?;
                let patch = PixelBuffer::new(mask.width(), mask.height(), Channels::Gray, mask.data().to_vec())?;
                Mask::from_gray(&interaction::paste(&zeros, &patch, work.region.x, work.region.y)?)?
            };
            let (color, opacity) = work.overlay;
            host.set_mask(&mask, color, opacity)?;
            Ok(CommitKind::Mask)
        }
    }
}
