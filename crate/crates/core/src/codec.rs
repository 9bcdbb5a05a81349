//! PNG interchange for pixel buffers.

use thiserror::Error;

use crate::pixel::{Channels, PixelBuffer, PixelError};

pub const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];
pub const PNG_MEDIA_TYPE: &str = "image/png";

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("malformed PNG: {0}")]
    Decode(String),
    #[error("unsupported PNG format: {0}")]
    Unsupported(String),
    #[error("PNG encoding failed: {0}")]
    Encode(String),
    #[error(transparent)]
    Pixel(#[from] PixelError),
}

/// PNG bytes. Always begins with the PNG signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedImage(Vec<u8>);

impl EncodedImage {
    /// Wraps raw bytes, checking only the signature.
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self, CodecError> {
        if !bytes.starts_with(&PNG_SIGNATURE) {
            return Err(CodecError::Decode("missing PNG signature".into()));
        }
        Ok(Self(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }
}

pub fn encode_png(input: &PixelBuffer) -> EncodedImage {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, input.width(), input.height());
        encoder.set_color(match input.channels() {
            Channels::Gray => png::ColorType::Grayscale,
            Channels::Rgba => png::ColorType::Rgba,
        });
        encoder.set_depth(png::BitDepth::Eight);
        encoder.set_compression(png::Compression::Default);
        encoder.set_filter(png::FilterType::Paeth);
        encoder.set_adaptive_filter(png::AdaptiveFilterType::NonAdaptive);
        // Writing into a Vec with validated dimensions cannot fail.
        let mut writer = encoder
            .write_header()
            .expect("PNG header for a valid buffer");
        writer
            .write_image_data(input.data())
            .expect("PNG data for a valid buffer");
    }
    EncodedImage(out)
}

/// Decodes 8-bit (or lower) PNGs. Plain grayscale stays single-channel,
/// every other color type is widened to RGBA.
pub fn decode_png(input: &EncodedImage) -> Result<PixelBuffer, CodecError> {
    decode_png_bytes(input.as_bytes())
}

pub fn decode_png_bytes(bytes: &[u8]) -> Result<PixelBuffer, CodecError> {
    let mut decoder = png::Decoder::new(bytes);
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(decode_err)?;
    if reader.info().bit_depth == png::BitDepth::Sixteen {
        return Err(CodecError::Unsupported("16-bit samples".into()));
    }
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader.next_frame(&mut buf).map_err(decode_err)?;
    if frame.bit_depth != png::BitDepth::Eight {
        return Err(CodecError::Unsupported(format!(
            "{:?} bit depth after expansion",
            frame.bit_depth
        )));
    }
    buf.truncate(frame.buffer_size());
    let (w, h) = (frame.width, frame.height);
    let (channels, data) = match frame.color_type {
        png::ColorType::Grayscale => (Channels::Gray, buf),
        png::ColorType::GrayscaleAlpha => (
            Channels::Rgba,
            buf.chunks_exact(2)
                .flat_map(|p| [p[0], p[0], p[0], p[1]])
                .collect(),
        ),
        png::ColorType::Rgb => (
            Channels::Rgba,
            buf.chunks_exact(3)
                .flat_map(|p| [p[0], p[1], p[2], 255])
                .collect(),
        ),
        png::ColorType::Rgba => (Channels::Rgba, buf),
        png::ColorType::Indexed => {
            return Err(CodecError::Unsupported("unexpanded palette".into()))
        }
    };
    Ok(PixelBuffer::new(w, h, channels, data)?)
}

fn decode_err(err: png::DecodingError) -> CodecError {
    match err {
        png::DecodingError::Format(e) => CodecError::Decode(e.to_string()),
        png::DecodingError::IoError(e) => CodecError::Decode(e.to_string()),
        png::DecodingError::Parameter(e) => CodecError::Decode(e.to_string()),
        png::DecodingError::LimitsExceeded => CodecError::Unsupported("image too large".into()),
    }
}
