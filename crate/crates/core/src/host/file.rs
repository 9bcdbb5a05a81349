use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{image_caps, AdapterProvider, Capability, Environment, HostAdapter, HostError, SurfaceInfo};
use crate::codec;
use crate::pixel::{self, Channels, PixelBuffer};

/// Environment key holding the PNG path a file host displays.
pub const FILE_HOST_MARKER: &str = "file-host";
/// Optional key redirecting commits to another path.
pub const FILE_HOST_OUTPUT_MARKER: &str = "file-host-output";

/// Headless host backed by a PNG on disk. Loads on attach and rewrites the
/// target file on every commit.
#[derive(Debug)]
pub struct FileHost {
    input: PathBuf,
    output: PathBuf,
    current: PixelBuffer,
}

impl FileHost {
    /// Commits overwrite `input` unless `output` is given.
    pub fn open(input: impl AsRef<Path>, output: Option<&Path>) -> Result<Self, HostError> {
        let input = input.as_ref().to_path_buf();
        let bytes = fs::read(&input)
            .map_err(|e| HostError::Acquisition(format!("{}: {e}", input.display())))?;
        let decoded = codec::decode_png_bytes(&bytes)?;
        let current = match decoded.channels() {
            Channels::Rgba => decoded,
            Channels::Gray => pixel::grayscale_to_rgba(&decoded)?,
        };
        Ok(Self {
            output: output.map(Path::to_path_buf).unwrap_or_else(|| input.clone()),
            input,
            current,
        })
    }

    pub fn input_path(&self) -> &Path {
        &self.input
    }

    pub fn output_path(&self) -> &Path {
        &self.output
    }

    fn write_atomically(&self, png: &[u8]) -> std::io::Result<()> {
        let dir = match self.output.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(png)?;
        tmp.persist(&self.output).map_err(|e| e.error)?;
        Ok(())
    }
}

impl HostAdapter for FileHost {
    fn name(&self) -> &str {
        FILE_HOST_MARKER
    }

    fn surface(&self) -> SurfaceInfo {
        SurfaceInfo {
            id: self.output.display().to_string(),
            width: self.current.width(),
            height: self.current.height(),
        }
    }

    fn get_image(&self) -> Result<PixelBuffer, HostError> {
        Ok(self.current.clone())
    }

    fn commit(&mut self, rgba: PixelBuffer) -> Result<(), HostError> {
        if !rgba.same_shape(&self.current) {
            return Err(HostError::DimensionMismatch {
                expected_width: self.current.width(),
                expected_height: self.current.height(),
                width: rgba.width(),
                height: rgba.height(),
            });
        }
        let png = codec::encode_png(&rgba);
        self.write_atomically(png.as_bytes())
            .map_err(|e| HostError::Commit(format!("{}: {e}", self.output.display())))?;
        self.current = rgba;
        Ok(())
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct FileHostProvider;

impl AdapterProvider for FileHostProvider {
    fn name(&self) -> &str {
        FILE_HOST_MARKER
    }

    fn capabilities(&self) -> BTreeSet<Capability> {
        image_caps()
    }

    fn probe(&self, env: &Environment) -> bool {
        env.marker(FILE_HOST_MARKER).is_some()
    }

    fn attach(&self, env: &Environment) -> Result<Box<dyn HostAdapter>, HostError> {
        let input = env.marker(FILE_HOST_MARKER).ok_or(HostError::NoSurface)?;
        let output = env.marker(FILE_HOST_OUTPUT_MARKER).map(Path::new);
        Ok(Box::new(FileHost::open(input, output)?))
    }
}
