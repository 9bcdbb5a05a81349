use serde::{Deserialize, Serialize};

use crate::pixel::PixelBuffer;

/// Largest passing fraction of differing pixels.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub total_pixels: u64,
    pub differing_pixels: u64,
    pub fraction: f64,
    pub per_channel_tolerance: u8,
    pub threshold: f64,
    /// Set when the two images differ in size or channel layout.
    pub shape_mismatch: bool,
    pub verdict: Verdict,
}

impl DiffReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

pub fn diff(a: &PixelBuffer, b: &PixelBuffer, tolerance: u8) -> DiffReport {
    diff_with_threshold(a, b, tolerance, DEFAULT_THRESHOLD)
}

/// Counts pixels where any channel differs by more than `tolerance`. The
/// comparison fails when the differing fraction is strictly above
/// `threshold`. Images of different shape fail with every pixel counted.
pub fn diff_with_threshold(
    a: &PixelBuffer,
    b: &PixelBuffer,
    tolerance: u8,
    threshold: f64,
) -> DiffReport {
    if !a.same_shape(b) {
        let total = a.pixel_count().max(b.pixel_count()) as u64;
        return DiffReport {
            total_pixels: total,
            differing_pixels: total,
            fraction: 1.0,
            per_channel_tolerance: tolerance,
            threshold,
            shape_mismatch: true,
            verdict: Verdict::Fail,
        };
    }
    let c = a.channels().count() as usize;
    let differing = a
        .data()
        .chunks_exact(c)
        .zip(b.data().chunks_exact(c))
        .filter(|(pa, pb)| pa.iter().zip(*pb).any(|(x, y)| x.abs_diff(*y) > tolerance))
        .count() as u64;
    let total = a.pixel_count() as u64;
    let fraction = differing as f64 / total as f64;
    DiffReport {
        total_pixels: total,
        differing_pixels: differing,
        fraction,
        per_channel_tolerance: tolerance,
        threshold,
        shape_mismatch: false,
        verdict: if fraction > threshold {
            Verdict::Fail
        } else {
            Verdict::Pass
        },
    }
}
