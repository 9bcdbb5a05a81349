//! Reference implementations used to check the engine from the outside.
//!
//! Nothing here calls into the library: images are plain `(width, height,
//! channels, bytes)` tuples and PNG files are written/read by hand on top
//! of `miniz_oxide`.

#![allow(dead_code)]

use std::fs;
use std::path::Path;

/// Raw image: width, height, channels (1 or 4), samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raw {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl Raw {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width * height * channels);
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn at(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }
}

fn round_clamp(v: f64) -> u8 {
    let r = if v >= 0.0 { (v + 0.5).floor() } else { (v - 0.5).ceil() };
    if r < 0.0 {
        0
    } else if r > 255.0 {
        255
    } else {
        r as u8
    }
}

/// Correlation with replicated borders; alpha (4th channel) copied through.
pub fn convolve(img: &Raw, size: usize, weights: &[f64]) -> Raw {
    assert!(size % 2 == 1 && weights.len() == size * size);
    let r = (size / 2) as i64;
    let mut out = img.data.clone();
    let color = if img.channels == 4 { 3 } else { 1 };
    for y in 0..img.height as i64 {
        for x in 0..img.width as i64 {
            for c in 0..color {
                let mut acc = 0.0;
                for j in 0..size as i64 {
                    for i in 0..size as i64 {
                        let sx = (x + i - r).clamp(0, img.width as i64 - 1) as usize;
                        let sy = (y + j - r).clamp(0, img.height as i64 - 1) as usize;
                        acc += weights[(j as usize) * size + i as usize] * img.at(sx, sy, c) as f64;
                    }
                }
                out[(y as usize * img.width + x as usize) * img.channels + c] = round_clamp(acc);
            }
        }
    }
    Raw { data: out, ..img.clone() }
}

pub const SOBEL_X: [f64; 9] = [-1.0, 0.0, 1.0, -2.0, 0.0, 2.0, -1.0, 0.0, 1.0];

pub fn gray_to_rgba(img: &Raw) -> Raw {
    assert_eq!(img.channels, 1);
    let mut data = Vec::with_capacity(img.data.len() * 4);
    for &g in &img.data {
        data.extend_from_slice(&[g, g, g, 255]);
    }
    Raw::new(img.width, img.height, 4, data)
}

pub fn luma(img: &Raw) -> Raw {
    assert_eq!(img.channels, 4);
    let data = img
        .data
        .chunks(4)
        .map(|p| round_clamp(0.2126 * p[0] as f64 + 0.7152 * p[1] as f64 + 0.0722 * p[2] as f64))
        .collect();
    Raw::new(img.width, img.height, 1, data)
}

pub fn invert(img: &Raw) -> Raw {
    let mut data = img.data.clone();
    for (i, v) in data.iter_mut().enumerate() {
        if img.channels == 1 || i % 4 != 3 {
            *v = 255 - *v;
        }
    }
    Raw { data, ..img.clone() }
}

/// Blends `color` wherever `mask` is non-zero; alpha forced opaque there.
pub fn overlay(img: &Raw, mask: &[bool], color: [u8; 3], opacity: f64) -> Raw {
    assert_eq!(img.channels, 4);
    let mut out = img.clone();
    for (p, &m) in mask.iter().enumerate() {
        if m {
            for c in 0..3 {
                let v = opacity * color[c] as f64 + (1.0 - opacity) * img.data[p * 4 + c] as f64;
                out.data[p * 4 + c] = round_clamp(v);
            }
            out.data[p * 4 + 3] = 255;
        }
    }
    out
}

pub fn crop(img: &Raw, x: usize, y: usize, w: usize, h: usize) -> Raw {
    let mut data = Vec::new();
    for yy in y..y + h {
        for xx in x..x + w {
            for c in 0..img.channels {
                data.push(img.at(xx, yy, c));
            }
        }
    }
    Raw::new(w, h, img.channels, data)
}

pub fn paste(base: &Raw, patch: &Raw, x: usize, y: usize) -> Raw {
    let mut out = base.clone();
    for yy in 0..patch.height {
        for xx in 0..patch.width {
            for c in 0..base.channels {
                out.data[((y + yy) * base.width + x + xx) * base.channels + c] = patch.at(xx, yy, c);
            }
        }
    }
    out
}

pub fn histogram(img: &Raw) -> Vec<u64> {
    let mut bins = vec![0u64; 256];
    for &v in &img.data {
        bins[v as usize] += 1;
    }
    bins
}

/// Count of pixels with any channel differing.
pub fn differing_pixels(a: &Raw, b: &Raw) -> usize {
    a.data
        .chunks(a.channels)
        .zip(b.data.chunks(b.channels))
        .filter(|(x, y)| x != y)
        .count()
}

/// Deterministic 256x256 RGB test image: a head-like phantom with a bright
/// rim, inner structures of varying intensity, and mild texture.
pub fn phantom(width: usize, height: usize) -> Vec<u8> {
    let mut rng = 0x2545_f491_4f6c_dd1du64;
    let mut next = move || {
        rng ^= rng << 13;
        rng ^= rng >> 7;
        rng ^= rng << 17;
        rng
    };
    let mut out = Vec::with_capacity(width * height * 3);
    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = (x as f64 - cx, y as f64 - cy);
            let e = |ax: f64, ay: f64, ox: f64, oy: f64| {
                ((fx - ox) / ax).powi(2) + ((fy - oy) / ay).powi(2)
            };
            let outer = e(0.45 * width as f64, 0.48 * height as f64, 0.0, 0.0);
            let inner = e(0.40 * width as f64, 0.43 * height as f64, 0.0, 0.0);
            let mut v: f64 = 12.0 + 20.0 * (x as f64 / width as f64);
            if outer <= 1.0 {
                v = if inner > 1.0 { 235.0 } else { 96.0 };
                if e(0.10 * width as f64, 0.22 * height as f64, -0.14 * width as f64, 0.0) <= 1.0 {
                    v = 40.0;
                }
                if e(0.10 * width as f64, 0.22 * height as f64, 0.14 * width as f64, 0.0) <= 1.0 {
                    v = 40.0;
                }
                if e(0.05 * width as f64, 0.05 * height as f64, 0.0, 0.25 * height as f64) <= 1.0 {
                    v = 180.0;
                }
                if e(0.03 * width as f64, 0.03 * height as f64, 0.0, -0.30 * height as f64) <= 1.0 {
                    v = 255.0;
                }
            }
            let noise = (next() % 9) as f64 - 4.0;
            let g = (v + noise).clamp(0.0, 255.0) as u8;
            // Slight warm tint so color channels differ.
            out.push(g);
            out.push(g.saturating_sub(6));
            out.push(g.saturating_sub(14));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// PNG

fn crc32(bytes: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &b in bytes {
        crc ^= b as u32;
        for _ in 0..8 {
            crc = if crc & 1 == 1 { (crc >> 1) ^ 0xEDB8_8320 } else { crc >> 1 };
        }
    }
    !crc
}

fn chunk(out: &mut Vec<u8>, kind: &[u8; 4], payload: &[u8]) {
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    let mut body = kind.to_vec();
    body.extend_from_slice(payload);
    out.extend_from_slice(&body);
    out.extend_from_slice(&crc32(&body).to_be_bytes());
}

/// Encodes 8-bit samples of PNG color type `color_type` (0 gray, 2 RGB,
/// 4 gray+alpha, 6 RGBA) with filter 0 on every row.
pub fn png_bytes(width: usize, height: usize, color_type: u8, samples: &[u8]) -> Vec<u8> {
    let per_px = match color_type {
        0 => 1,
        2 => 3,
        4 => 2,
        6 => 4,
        other => panic!("unsupported color type {other}"),
    };
    assert_eq!(samples.len(), width * height * per_px);
    let mut raw = Vec::with_capacity(samples.len() + height);
    for row in samples.chunks(width * per_px) {
        raw.push(0);
        raw.extend_from_slice(row);
    }
    let z = miniz_oxide::deflate::compress_to_vec_zlib(&raw, 9);

    let mut out = vec![0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];
    let mut ihdr = Vec::new();
    ihdr.extend_from_slice(&(width as u32).to_be_bytes());
    ihdr.extend_from_slice(&(height as u32).to_be_bytes());
    ihdr.extend_from_slice(&[8, color_type, 0, 0, 0]);
    chunk(&mut out, b"IHDR", &ihdr);
    chunk(&mut out, b"IDAT", &z);
    chunk(&mut out, b"IEND", &[]);
    out
}

pub fn raw_to_png(img: &Raw) -> Vec<u8> {
    let ct = if img.channels == 1 { 0 } else { 6 };
    png_bytes(img.width, img.height, ct, &img.data)
}

pub fn write_png(path: &Path, img: &Raw) {
    fs::write(path, raw_to_png(img)).unwrap();
}

fn paeth(a: u8, b: u8, c: u8) -> u8 {
    let p = a as i16 + b as i16 - c as i16;
    let (pa, pb, pc) = ((p - a as i16).abs(), (p - b as i16).abs(), (p - c as i16).abs());
    if pa <= pb && pa <= pc {
        a
    } else if pb <= pc {
        b
    } else {
        c
    }
}

/// Decodes non-interlaced 8-bit gray/RGB/gray-alpha/RGBA PNGs into
/// `(width, height, color_type, samples)`.
pub fn read_png(bytes: &[u8]) -> (usize, usize, u8, Vec<u8>) {
    assert_eq!(&bytes[..8], &[0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A]);
    let mut pos = 8;
    let (mut w, mut h, mut ct) = (0, 0, 0);
    let mut idat = Vec::new();
    while pos < bytes.len() {
        let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        let kind = &bytes[pos + 4..pos + 8];
        let body = &bytes[pos + 8..pos + 8 + len];
        let crc = u32::from_be_bytes(bytes[pos + 8 + len..pos + 12 + len].try_into().unwrap());
        assert_eq!(crc, crc32(&bytes[pos + 4..pos + 8 + len]), "bad CRC");
        match kind {
            b"IHDR" => {
                w = u32::from_be_bytes(body[0..4].try_into().unwrap()) as usize;
                h = u32::from_be_bytes(body[4..8].try_into().unwrap()) as usize;
                assert_eq!(body[8], 8, "8-bit only");
                ct = body[9];
                assert_eq!(body[12], 0, "non-interlaced only");
            }
            b"IDAT" => idat.extend_from_slice(body),
            b"IEND" => break,
            _ => {}
        }
        pos += 12 + len;
    }
    let raw = miniz_oxide::inflate::decompress_to_vec_zlib(&idat).expect("zlib stream");
    let bpp = match ct {
        0 => 1,
        2 => 3,
        4 => 2,
        6 => 4,
        other => panic!("unsupported color type {other}"),
    };
    let stride = w * bpp;
    let mut out = vec![0u8; stride * h];
    for y in 0..h {
        let filter = raw[y * (stride + 1)];
        let line = &raw[y * (stride + 1) + 1..(y + 1) * (stride + 1)];
        for x in 0..stride {
            let a = if x >= bpp { out[y * stride + x - bpp] } else { 0 };
            let b = if y > 0 { out[(y - 1) * stride + x] } else { 0 };
            let c = if x >= bpp && y > 0 { out[(y - 1) * stride + x - bpp] } else { 0 };
            let pred = match filter {
                0 => 0,
                1 => a,
                2 => b,
                3 => ((a as u16 + b as u16) / 2) as u8,
                4 => paeth(a, b, c),
                f => panic!("bad filter {f}"),
            };
            out[y * stride + x] = line[x].wrapping_add(pred);
        }
    }
    (w, h, ct, out)
}

/// Reads a PNG into RGBA (or gray for color type 0).
pub fn read_raw(bytes: &[u8]) -> Raw {
    let (w, h, ct, s) = read_png(bytes);
    match ct {
        0 => Raw::new(w, h, 1, s),
        2 => Raw::new(w, h, 4, s.chunks(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect()),
        4 => Raw::new(w, h, 4, s.chunks(2).flat_map(|p| [p[0], p[0], p[0], p[1]]).collect()),
        _ => Raw::new(w, h, 4, s),
    }
}
