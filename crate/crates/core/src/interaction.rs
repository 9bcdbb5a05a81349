//! Region-of-interest acquisition: rectangles and seed points.
//!
//! Plugins ask an [`InteractionSource`] for input and block until it answers
//! or gives up. [`ScriptedSource`] answers from a queue for headless runs;
//! [`ChannelSource`] waits on responses pushed from another thread (a UI
//! widget) and honors a cancellation flag while it waits.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::host::SurfaceInfo;
use crate::pixel::PixelBuffer;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InteractionError {
    #[error("{0}")]
    Validation(String),
    #[error("interaction cancelled: {0}")]
    Cancelled(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn check_within(&self, width: u32, height: u32) -> Result<(), InteractionError> {
        let fits = self.w >= 1
            && self.h >= 1
            && u64::from(self.x) + u64::from(self.w) <= u64::from(width)
            && u64::from(self.y) + u64::from(self.h) <= u64::from(height);
        if fits {
            Ok(())
        } else {
            Err(InteractionError::Validation(format!(
                "box {self} does not fit a {width}x{height} surface"
            )))
        }
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.x, self.y, self.w, self.h)
    }
}

fn parse_fields<const N: usize>(s: &str, what: &str) -> Result<[u32; N], InteractionError> {
    let parts: Vec<_> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(InteractionError::Validation(format!(
            "{what} `{s}` needs {N} comma-separated integers"
        )));
    }
    let mut out = [0u32; N];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part.parse().map_err(|_| {
            InteractionError::Validation(format!("{what} `{s}`: `{part}` is not a non-negative integer"))
        })?;
    }
    Ok(out)
}

/// Parses `x,y,w,h`.
impl FromStr for Rect {
    type Err = InteractionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let [x, y, w, h] = parse_fields(s, "box")?;
        Ok(Self { x, y, w, h })
    }
}

/// Image pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedPoint {
    pub x: u32,
    pub y: u32,
}

impl SeedPoint {
    pub fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    pub fn check_within(&self, width: u32, height: u32) -> Result<(), InteractionError> {
        if self.x < width && self.y < height {
            Ok(())
        } else {
            Err(InteractionError::Validation(format!(
                "seed ({},{}) outside a {width}x{height} surface",
                self.x, self.y
            )))
        }
    }
}

/// Parses `x,y`.
impl FromStr for SeedPoint {
    type Err = InteractionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let [x, y] = parse_fields(s, "seed")?;
        Ok(Self { x, y })
    }
}

pub trait InteractionSource {
    fn request_box(&mut self, bounds: &SurfaceInfo) -> Result<Rect, InteractionError>;

    fn request_seeds(
        &mut self,
        howmany: usize,
        bounds: &SurfaceInfo,
    ) -> Result<Vec<SeedPoint>, InteractionError>;
}

/// Answers requests from FIFO queues.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScriptedSource {
    boxes: VecDeque<Rect>,
    seeds: VecDeque<SeedPoint>,
}

impl ScriptedSource {
    pub fn new(
        boxes: impl IntoIterator<Item = Rect>,
        seeds: impl IntoIterator<Item = SeedPoint>,
    ) -> Self {
        Self {
            boxes: boxes.into_iter().collect(),
            seeds: seeds.into_iter().collect(),
        }
    }

    pub fn push_box(&mut self, rect: Rect) {
        self.boxes.push_back(rect);
    }

    pub fn push_seed(&mut self, seed: SeedPoint) {
        self.seeds.push_back(seed);
    }

    pub fn pending_boxes(&self) -> usize {
        self.boxes.len()
    }

    pub fn pending_seeds(&self) -> usize {
        self.seeds.len()
    }
}

impl InteractionSource for ScriptedSource {
    fn request_box(&mut self, bounds: &SurfaceInfo) -> Result<Rect, InteractionError> {
        let rect = self
            .boxes
            .pop_front()
            .ok_or_else(|| InteractionError::Cancelled("no scripted box left".into()))?;
        rect.check_within(bounds.width, bounds.height)?;
        Ok(rect)
    }

    fn request_seeds(
        &mut self,
        howmany: usize,
        bounds: &SurfaceInfo,
    ) -> Result<Vec<SeedPoint>, InteractionError> {
        if howmany == 0 {
            return Err(InteractionError::Validation("at least one seed must be requested".into()));
        }
        if self.seeds.len() < howmany {
            let have = self.seeds.len();
            self.seeds.clear();
            return Err(InteractionError::Cancelled(format!(
                "{howmany} seeds requested, {have} scripted"
            )));
        }
        let picked: Vec<_> = self.seeds.drain(..howmany).collect();
        for s in &picked {
            s.check_within(bounds.width, bounds.height)?;
        }
        Ok(picked)
    }
}

/// A response delivered to a [`ChannelSource`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    Box(Rect),
    Seed(SeedPoint),
    Cancel,
}

/// Shared flag that aborts a pending interaction.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

/// Interactive source fed from another thread.
#[derive(Debug)]
pub struct ChannelSource {
    rx: Receiver<Response>,
    cancel: CancelToken,
    poll: Duration,
}

impl ChannelSource {
    pub fn new() -> (Self, Sender<Response>, CancelToken) {
        let (tx, rx) = mpsc::channel();
        let cancel = CancelToken::default();
        (
            Self {
                rx,
                cancel: cancel.clone(),
                poll: Duration::from_millis(20),
            },
            tx,
            cancel,
        )
    }

    fn next(&self) -> Result<Response, InteractionError> {
        loop {
            if self.cancel.is_cancelled() {
                return Err(InteractionError::Cancelled("cancelled by user".into()));
            }
            match self.rx.recv_timeout(self.poll) {
                Ok(Response::Cancel) => {
                    return Err(InteractionError::Cancelled("cancelled by user".into()))
                }
                Ok(r) => return Ok(r),
                Err(RecvTimeoutError::Timeout) => continue,
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(InteractionError::Cancelled("interaction source closed".into()))
                }
            }
        }
    }
}

impl InteractionSource for ChannelSource {
    fn request_box(&mut self, bounds: &SurfaceInfo) -> Result<Rect, InteractionError> {
        match self.next()? {
            Response::Box(rect) => {
                rect.check_within(bounds.width, bounds.height)?;
                Ok(rect)
            }
            other => Err(InteractionError::Validation(format!(
                "expected a box, got {other:?}"
            ))),
        }
    }

    fn request_seeds(
        &mut self,
        howmany: usize,
        bounds: &SurfaceInfo,
    ) -> Result<Vec<SeedPoint>, InteractionError> {
        if howmany == 0 {
            return Err(InteractionError::Validation("at least one seed must be requested".into()));
        }
        let mut seeds = Vec::with_capacity(howmany);
        while seeds.len() < howmany {
            match self.next()? {
                Response::Seed(s) => {
                    s.check_within(bounds.width, bounds.height)?;
                    seeds.push(s);
                }
                other => {
                    return Err(InteractionError::Validation(format!(
                        "expected a seed, got {other:?}"
                    )))
                }
            }
        }
        Ok(seeds)
    }
}

/// Copies the pixels under `roi` into a new buffer.
pub fn crop(buffer: &PixelBuffer, roi: &Rect) -> Result<PixelBuffer, InteractionError> {
    roi.check_within(buffer.width(), buffer.height())?;
    let c = buffer.channels().count() as usize;
    let stride = buffer.width() as usize * c;
    let row_len = roi.w as usize * c;
    let mut data = Vec::with_capacity(row_len * roi.h as usize);
    for y in roi.y as usize..(roi.y + roi.h) as usize {
        let start = y * stride + roi.x as usize * c;
        data.extend_from_slice(&buffer.data()[start..start + row_len]);
    }
    Ok(PixelBuffer::new(roi.w, roi.h, buffer.channels(), data).expect("cropped size matches"))
}

/// Writes `patch` into a copy of `base` with its top-left corner at `(x, y)`.
pub fn paste(base: &PixelBuffer, patch: &PixelBuffer, x: u32, y: u32) -> Result<PixelBuffer, InteractionError> {
    if base.channels() != patch.channels() {
        return Err(InteractionError::Validation("paste needs matching channel layouts".into()));
    }
    Rect::new(x, y, patch.width(), patch.height()).check_within(base.width(), base.height())?;
    let c = base.channels().count() as usize;
    let stride = base.width() as usize * c;
    let row_len = patch.width() as usize * c;
    let mut data = base.data().to_vec();
    for (row, src) in patch.data().chunks_exact(row_len).enumerate() {
        let start = (y as usize + row) * stride + x as usize * c;
        data[start..start + row_len].copy_from_slice(src);
    }
    Ok(PixelBuffer::new(base.width(), base.height(), base.channels(), data).expect("same shape"))
}
