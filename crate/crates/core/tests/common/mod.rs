#![allow(dead_code)]

pub mod oracle;
pub mod server;

use std::path::PathBuf;

use boostlet_core::pixel::{Channels, PixelBuffer};

pub fn to_raw(buf: &PixelBuffer) -> oracle::Raw {
    oracle::Raw::new(
        buf.width() as usize,
        buf.height() as usize,
        buf.channels().count() as usize,
        buf.data().to_vec(),
    )
}

pub fn from_raw(raw: &oracle::Raw) -> PixelBuffer {
    let channels = Channels::from_count(raw.channels as u8).unwrap();
    PixelBuffer::new(raw.width as u32, raw.height as u32, channels, raw.data.clone()).unwrap()
}

pub fn suite_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/suite")
}

/// Small deterministic RGBA image with varied content.
pub fn pattern(width: u32, height: u32) -> PixelBuffer {
    let mut data = Vec::new();
    for y in 0..height {
        for x in 0..width {
            data.extend_from_slice(&[
                (x * 37 + y * 11) as u8,
                (x * x + y * 3) as u8,
                (200u32.wrapping_sub(x * y)) as u8,
                255,
            ]);
        }
    }
    PixelBuffer::new(width, height, Channels::Rgba, data).unwrap()
}
