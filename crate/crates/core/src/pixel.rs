//! Pixel buffers and the pure operations defined over them.
//!
//! Every operation here takes its inputs by reference and returns a fresh
//! value, so buffers can be shared freely between threads.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PixelError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyDimensions { width: u32, height: u32 },
    #[error("unsupported channel count {0} (expected 1 or 4)")]
    UnsupportedChannels(u8),
    #[error("sample buffer has {actual} bytes, expected {expected}")]
    DataLength { expected: usize, actual: usize },
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("expected a {expected}-channel buffer, got {actual} channels")]
    ChannelMismatch { expected: u8, actual: u8 },
    #[error("mask is {mask_width}x{mask_height} but image is {width}x{height}")]
    MaskDimensions {
        mask_width: u32,
        mask_height: u32,
        width: u32,
        height: u32,
    },
    #[error("mask contains value {0}; harden it before compositing")]
    MaskNotHardened(u8),
    #[error("opacity {0} outside [0, 1]")]
    InvalidOpacity(f64),
}

/// Sample layout of a [`PixelBuffer`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channels {
    Gray,
    /// Byte order R, G, B, A.
    Rgba,
}

impl Channels {
    pub fn from_count(count: u8) -> Result<Self, PixelError> {
        match count {
            1 => Ok(Channels::Gray),
            4 => Ok(Channels::Rgba),
            other => Err(PixelError::UnsupportedChannels(other)),
        }
    }

    pub const fn count(self) -> u8 {
        match self {
            Channels::Gray => 1,
            Channels::Rgba => 4,
        }
    }
}

/// Rectangular raster of 8-bit samples, row-major with a top-left origin.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PixelBuffer {
    width: u32,
    height: u32,
    channels: Channels,
    data: Vec<u8>,
}

fn check_dims(width: u32, height: u32) -> Result<(), PixelError> {
    if width == 0 || height == 0 {
        return Err(PixelError::EmptyDimensions { width, height });
    }
    Ok(())
}

impl PixelBuffer {
    pub fn new(
        width: u32,
        height: u32,
        channels: Channels,
        data: Vec<u8>,
    ) -> Result<Self, PixelError> {
        check_dims(width, height)?;
        let expected = width as usize * height as usize * channels.count() as usize;
        if data.len() != expected {
            return Err(PixelError::DataLength {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Buffer with every sample set to `value`.
    pub fn filled(
        width: u32,
        height: u32,
        channels: Channels,
        value: u8,
    ) -> Result<Self, PixelError> {
        check_dims(width, height)?;
        let len = width as usize * height as usize * channels.count() as usize;
        Self::new(width, height, channels, vec![value; len])
    }

    /// Opaque RGBA buffer where every pixel is `rgb`.
    pub fn solid_rgba(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, PixelError> {
        check_dims(width, height)?;
        let data = [rgb[0], rgb[1], rgb[2], 255].repeat(width as usize * height as usize);
        Self::new(width, height, Channels::Rgba, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> Channels {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Samples of the pixel at `(x, y)`; panics when out of range.
    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) out of range");
        let c = self.channels.count() as usize;
        let start = (y as usize * self.width as usize + x as usize) * c;
        &self.data[start..start + c]
    }

    pub fn same_shape(&self, other: &PixelBuffer) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }
}

impl fmt::Debug for PixelBuffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PixelBuffer")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .field("bytes", &self.data.len())
            .finish()
    }
}

/// Odd-sided square weight matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self, PixelError> {
        if size == 0 || size.is_multiple_of(2) {
            return Err(PixelError::InvalidKernel(format!(
                "size must be odd and at least 1, got {size}"
            )));
        }
        if weights.len() != size * size {
            return Err(PixelError::InvalidKernel(format!(
                "{} weights given for a {size}x{size} kernel",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(PixelError::InvalidKernel(format!("non-finite weight {w}")));
        }
        Ok(Self { size, weights })
    }

    /// Infers the size from a square weight count.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, PixelError> {
        let size = (weights.len() as f64).sqrt().round() as usize;
        if size * size != weights.len() {
            return Err(PixelError::InvalidKernel(format!(
                "{} weights do not form a square",
                weights.len()
            )));
        }
        Self::new(size, weights)
    }

    pub fn identity(size: usize) -> Result<Self, PixelError> {
        let mut weights = vec![0.0; size * size];
        if size % 2 == 1 {
            weights[size * size / 2] = 1.0;
        }
        Self::new(size, weights)
    }

    /// Horizontal-gradient Sobel kernel.
    pub fn sobel_x() -> Self {
        Self {
            size: 3,
            weights: vec![-1.0, 0.0, 1.0, -2.0, 0.0, 2.0, -1.0, 0.0, 1.0],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn radius(&self) -> usize {
        (self.size - 1) / 2
    }
}

/// Per-pixel coverage, 0 = outside and 255 = fully inside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl Mask {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, PixelError> {
        check_dims(width, height)?;
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(PixelError::DataLength {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Reinterprets a grayscale buffer as a mask.
    pub fn from_gray(buffer: &PixelBuffer) -> Result<Self, PixelError> {
        expect_channels(buffer, Channels::Gray)?;
        Self::new(buffer.width, buffer.height, buffer.data.clone())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn is_hardened(&self) -> bool {
        self.data.iter().all(|&v| v == 0 || v == 255)
    }
}

/// 256-bin sample-value histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    bins: [u64; 256],
}

impl Histogram {
    pub fn bins(&self) -> &[u64; 256] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }
}

fn expect_channels(buffer: &PixelBuffer, expected: Channels) -> Result<(), PixelError> {
    if buffer.channels != expected {
        return Err(PixelError::ChannelMismatch {
            expected: expected.count(),
            actual: buffer.channels.count(),
        });
    }
    Ok(())
}

#[inline]
fn to_byte(value: f64) -> u8 {
    // f64::round rounds half away from zero; the cast saturates, NaN maps to 0.
    value.round().clamp(0.0, 255.0) as u8
}

/// Correlates `input` with `kernel` using replicated borders.
///
/// Grayscale buffers are filtered directly. For RGBA the color channels are
/// filtered independently and alpha is copied through.
pub fn filter(input: &PixelBuffer, kernel: &Kernel) -> PixelBuffer {
    let w = input.width as usize;
    let h = input.height as usize;
    let c = input.channels.count() as usize;
    let color_channels = if c == 4 { 3 } else { 1 };
    let size = kernel.size;
    let r = kernel.radius() as isize;
    let src = &input.data;
    let mut out = src.clone();

    // Column indices for each kernel tap are shared by every row.
    let mut cols = vec![0usize; w * size];
    for x in 0..w {
        for i in 0..size {
            let sx = (x as isize + i as isize - r).clamp(0, w as isize - 1);
            cols[x * size + i] = sx as usize;
        }
    }

    let mut rows = vec![0usize; size];
    for y in 0..h {
        for (j, row) in rows.iter_mut().enumerate() {
            *row = (y as isize + j as isize - r).clamp(0, h as isize - 1) as usize * w;
        }
        for x in 0..w {
            let taps = &cols[x * size..(x + 1) * size];
            for ch in 0..color_channels {
                let mut acc = 0.0f64;
                for (j, &row) in rows.iter().enumerate() {
                    let wrow = &kernel.weights[j * size..(j + 1) * size];
                    for (&weight, &sx) in wrow.iter().zip(taps) {
                        acc += weight * f64::from(src[(row + sx) * c + ch]);
                    }
                }
                out[(y * w + x) * c + ch] = to_byte(acc);
            }
        }
    }

    PixelBuffer {
        width: input.width,
        height: input.height,
        channels: input.channels,
        data: out,
    }
}

pub fn grayscale_to_rgba(input: &PixelBuffer) -> Result<PixelBuffer, PixelError> {
    expect_channels(input, Channels::Gray)?;
    let data = input.data.iter().flat_map(|&g| [g, g, g, 255]).collect();
    Ok(PixelBuffer {
        width: input.width,
        height: input.height,
        channels: Channels::Rgba,
        data,
    })
}

/// Rec. 709 luma; alpha is ignored.
pub fn rgba_to_grayscale(input: &PixelBuffer) -> Result<PixelBuffer, PixelError> {
    expect_channels(input, Channels::Rgba)?;
    let data = input
        .data
        .chunks_exact(4)
        .map(|p| {
            to_byte(0.2126 * f64::from(p[0]) + 0.7152 * f64::from(p[1]) + 0.0722 * f64::from(p[2]))
        })
        .collect();
    Ok(PixelBuffer {
        width: input.width,
        height: input.height,
        channels: Channels::Gray,
        data,
    })
}

pub const DEFAULT_MASK_THRESHOLD: u8 = 128;

/// Values at or above `threshold` become 255, everything else 0.
pub fn harden_mask(mask: &Mask, threshold: u8) -> Mask {
    Mask {
        width: mask.width,
        height: mask.height,
        data: mask
            .data
            .iter()
            .map(|&v| if v >= threshold { 255 } else { 0 })
            .collect(),
    }
}

/// Blends `color` over the pixels selected by a hardened mask.
pub fn apply_mask(
    image: &PixelBuffer,
    mask: &Mask,
    color: [u8; 3],
    opacity: f64,
) -> Result<PixelBuffer, PixelError> {
    expect_channels(image, Channels::Rgba)?;
    if mask.width != image.width || mask.height != image.height {
        return Err(PixelError::MaskDimensions {
            mask_width: mask.width,
            mask_height: mask.height,
            width: image.width,
            height: image.height,
        });
    }
    if let Some(&v) = mask.data.iter().find(|&&v| v != 0 && v != 255) {
        return Err(PixelError::MaskNotHardened(v));
    }
    if !(0.0..=1.0).contains(&opacity) {
        return Err(PixelError::InvalidOpacity(opacity));
    }

    let mut data = image.data.clone();
    for (px, &m) in data.chunks_exact_mut(4).zip(&mask.data) {
        if m == 0 {
            continue;
        }
        for (sample, &tint) in px[..3].iter_mut().zip(&color) {
            *sample = to_byte(opacity * f64::from(tint) + (1.0 - opacity) * f64::from(*sample));
        }
        px[3] = 255;
    }
    Ok(PixelBuffer {
        data,
        ..image.clone()
    })
}

pub fn compute_histogram(input: &PixelBuffer) -> Result<Histogram, PixelError> {
    expect_channels(input, Channels::Gray)?;
    let mut bins = [0u64; 256];
    for &v in &input.data {
        bins[v as usize] += 1;
    }
    Ok(Histogram { bins })
}

/// Photographic negative: color samples become `255 - v`, alpha is kept.
pub fn invert(input: &PixelBuffer) -> PixelBuffer {
    let mut data = input.data.clone();
    match input.channels {
        Channels::Gray => data.iter_mut().for_each(|v| *v = 255 - *v),
        Channels::Rgba => data.chunks_exact_mut(4).for_each(|px| {
            px[..3].iter_mut().for_each(|v| *v = 255 - *v);
        }),
    }
    PixelBuffer {
        data,
        ..input.clone()
    }
}
