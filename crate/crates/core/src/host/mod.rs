//! The adapter contract between the engine and a visualization host.
//!
//! A host is anything that displays pixels: a viewer in a web page, a PNG
//! on disk, or a plain in-memory surface. Plugins never talk to a host
//! directly; they go through a [`HostAdapter`] obtained from a [`Registry`]
//! by [`Registry::detect`], which probes the [`Environment`] and falls back
//! to the largest drawing surface when no registered adapter recognizes it.

mod file;
mod surface;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::CodecError;
use crate::pixel::{self, Channels, Mask, PixelBuffer, PixelError};

pub use file::{FileHost, FileHostProvider, FILE_HOST_MARKER, FILE_HOST_OUTPUT_MARKER};
pub use surface::{
    CanvasFallback, MemoryHostProvider, Surface, SurfaceHost, CANVAS_FALLBACK_NAME,
    MEMORY_HOST_MARKER,
};

#[derive(Debug, Error)]
pub enum HostError {
    #[error("no drawing surface available")]
    NoSurface,
    #[error("surface override {index} out of range ({count} surfaces)")]
    SurfaceOverride { index: usize, count: usize },
    #[error("adapter `{0}` is already registered")]
    DuplicateAdapter(String),
    #[error("adapter `{name}` lacks required capabilities (image-read and image-write)")]
    MissingCapabilities { name: String },
    #[error("no adapter named `{0}` is registered")]
    UnknownAdapter(String),
    #[error("cannot read host pixels: {0}")]
    Acquisition(String),
    #[error("cannot commit to host: {0}")]
    Commit(String),
    #[error("surface is {expected_width}x{expected_height}, got {width}x{height}")]
    DimensionMismatch {
        expected_width: u32,
        expected_height: u32,
        width: u32,
        height: u32,
    },
    #[error(transparent)]
    Pixel(#[from] PixelError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Capability {
    ImageRead,
    ImageWrite,
    MaskOverlay,
    BoxSelect,
    SeedSelect,
}

/// Identity and extent of a drawing surface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceInfo {
    pub id: String,
    pub width: u32,
    pub height: u32,
}

impl SurfaceInfo {
    pub fn area(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }
}

/// Index of the surface with the largest area, first one on ties.
/// `force` bypasses the comparison entirely.
pub fn select_largest_surface(
    surfaces: &[SurfaceInfo],
    force: Option<usize>,
) -> Result<usize, HostError> {
    if surfaces.is_empty() {
        return Err(HostError::NoSurface);
    }
    if let Some(index) = force {
        if index >= surfaces.len() {
            return Err(HostError::SurfaceOverride {
                index,
                count: surfaces.len(),
            });
        }
        return Ok(index);
    }
    let mut best = 0;
    for (i, s) in surfaces.iter().enumerate().skip(1) {
        if s.area() > surfaces[best].area() {
            best = i;
        }
    }
    Ok(best)
}

/// A connected host. Reads always produce RGBA with a top-left origin.
pub trait HostAdapter: Send {
    fn name(&self) -> &str;

    fn surface(&self) -> SurfaceInfo;

    fn get_image(&self) -> Result<PixelBuffer, HostError>;

    /// Replaces the displayed pixels with an RGBA buffer of the surface's size.
    fn commit(&mut self, rgba: PixelBuffer) -> Result<(), HostError>;

    /// Validates shape, expands grayscale, then commits.
    fn set_image(&mut self, pixels: &PixelBuffer) -> Result<(), HostError> {
        let info = self.surface();
        if pixels.width() != info.width || pixels.height() != info.height {
            return Err(HostError::DimensionMismatch {
                expected_width: info.width,
                expected_height: info.height,
                width: pixels.width(),
                height: pixels.height(),
            });
        }
        let rgba = match pixels.channels() {
            Channels::Rgba => pixels.clone(),
            Channels::Gray => pixel::grayscale_to_rgba(pixels)?,
        };
        self.commit(rgba)
    }

    /// Composites a hardened mask over the current image. Hosts with a
    /// native overlay may override this, but `get_image` must afterwards
    /// return the composited pixels.
    fn set_mask(&mut self, mask: &Mask, color: [u8; 3], opacity: f64) -> Result<(), HostError> {
        let base = self.get_image()?;
        let composited = pixel::apply_mask(&base, mask, color, opacity)?;
        self.commit(composited)
    }
}

/// What a page (or its headless stand-in) exposes to detection.
#[derive(Debug, Clone, Default)]
pub struct Environment {
    markers: BTreeMap<String, String>,
    surfaces: Vec<Surface>,
    surface_override: Option<usize>,
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_marker(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.markers.insert(key.into(), value.into());
        self
    }

    pub fn with_surface(mut self, surface: Surface) -> Self {
        self.surfaces.push(surface);
        self
    }

    /// Forces the fallback onto a specific surface instead of the largest.
    pub fn with_surface_override(mut self, index: Option<usize>) -> Self {
        self.surface_override = index;
        self
    }

    pub fn marker(&self, key: &str) -> Option<&str> {
        self.markers.get(key).map(String::as_str)
    }

    pub fn surfaces(&self) -> &[Surface] {
        &self.surfaces
    }

    pub fn surface_override(&self) -> Option<usize> {
        self.surface_override
    }
}

/// Factory side of an adapter: recognizes an environment and connects to it.
pub trait AdapterProvider: Send + Sync {
    fn name(&self) -> &str;

    fn capabilities(&self) -> BTreeSet<Capability>;

    fn probe(&self, env: &Environment) -> bool;

    fn attach(&self, env: &Environment) -> Result<Box<dyn HostAdapter>, HostError>;
}

struct Entry {
    priority: i32,
    provider: Arc<dyn AdapterProvider>,
}

/// Ordered set of adapter providers plus the surface fallback.
pub struct Registry {
    // Kept sorted by descending priority; stable sort preserves registration order on ties.
    entries: Vec<Entry>,
    fallback: Arc<dyn AdapterProvider>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("adapters", &self.adapter_names())
            .finish()
    }
}

impl Registry {
    /// Registry holding only the canvas fallback.
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
            fallback: Arc::new(CanvasFallback),
        }
    }

    /// File host and memory host on top of the fallback.
    pub fn with_builtin_adapters() -> Self {
        let mut reg = Self::new();
        reg.register(Arc::new(FileHostProvider), 100)
            .expect("builtin adapters have distinct names");
        reg.register(Arc::new(MemoryHostProvider), 50)
            .expect("builtin adapters have distinct names");
        reg
    }

    pub fn register(
        &mut self,
        provider: Arc<dyn AdapterProvider>,
        priority: i32,
    ) -> Result<(), HostError> {
        let name = provider.name().to_string();
        if name == self.fallback.name() || self.entries.iter().any(|e| e.provider.name() == name) {
            return Err(HostError::DuplicateAdapter(name));
        }
        let caps = provider.capabilities();
        if !caps.contains(&Capability::ImageRead) || !caps.contains(&Capability::ImageWrite) {
            return Err(HostError::MissingCapabilities { name });
        }
        self.entries.push(Entry { priority, provider });
        self.entries.sort_by_key(|e| std::cmp::Reverse(e.priority));
        Ok(())
    }

    /// Names in detection order, fallback last.
    pub fn adapter_names(&self) -> Vec<&str> {
        self.entries
            .iter()
            .map(|e| e.provider.name())
            .chain(std::iter::once(self.fallback.name()))
            .collect()
    }

    /// Connects to the highest-priority adapter whose probe succeeds, or the
    /// fallback when none does.
    pub fn detect(&self, env: &Environment) -> Result<HostSession, HostError> {
        for entry in &self.entries {
            if entry.provider.probe(env) {
                return self.connect(entry.provider.as_ref(), env);
            }
        }
        if self.fallback.probe(env) {
            return self.connect(self.fallback.as_ref(), env);
        }
        Err(HostError::NoSurface)
    }

    /// Like [`Registry::detect`], but an explicitly named adapter wins over
    /// probing. The named adapter is attached without consulting its probe.
    pub fn init(&self, env: &Environment, explicit: Option<&str>) -> Result<HostSession, HostError> {
        let Some(name) = explicit else {
            return self.detect(env);
        };
        let provider = self
            .entries
            .iter()
            .map(|e| &e.provider)
            .chain(std::iter::once(&self.fallback))
            .find(|p| p.name() == name)
            .ok_or_else(|| HostError::UnknownAdapter(name.to_string()))?;
        self.connect(provider.as_ref(), env)
    }

    fn connect(
        &self,
        provider: &dyn AdapterProvider,
        env: &Environment,
    ) -> Result<HostSession, HostError> {
        let host = provider.attach(env)?;
        log::debug!("active host: {}", provider.name());
        Ok(HostSession {
            adapter: provider.name().to_string(),
            capabilities: provider.capabilities(),
            host,
        })
    }
}

/// The active host chosen by detection.
pub struct HostSession {
    adapter: String,
    capabilities: BTreeSet<Capability>,
    host: Box<dyn HostAdapter>,
}

impl fmt::Debug for HostSession {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HostSession")
            .field("adapter", &self.adapter)
            .field("surface", &self.host.surface())
            .finish()
    }
}

impl HostSession {
    /// Wraps an already-connected adapter.
    pub fn from_adapter(host: Box<dyn HostAdapter>, capabilities: BTreeSet<Capability>) -> Self {
        Self {
            adapter: host.name().to_string(),
            capabilities,
            host,
        }
    }

    pub fn adapter_name(&self) -> &str {
        &self.adapter
    }

    pub fn capabilities(&self) -> &BTreeSet<Capability> {
        &self.capabilities
    }

    pub fn host(&self) -> &dyn HostAdapter {
        self.host.as_ref()
    }

    pub fn host_mut(&mut self) -> &mut dyn HostAdapter {
        self.host.as_mut()
    }

    pub fn surface(&self) -> SurfaceInfo {
        self.host.surface()
    }

    pub fn get_image(&self) -> Result<PixelBuffer, HostError> {
        self.host.get_image()
    }

    pub fn set_image(&mut self, pixels: &PixelBuffer) -> Result<(), HostError> {
        self.host.set_image(pixels)
    }

    pub fn set_mask(&mut self, mask: &Mask, color: [u8; 3], opacity: f64) -> Result<(), HostError> {
        self.host.set_mask(mask, color, opacity)
    }
}

pub(crate) fn image_caps() -> BTreeSet<Capability> {
    [Capability::ImageRead, Capability::ImageWrite].into()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fake {
        name: &'static str,
        hit: bool,
        caps: BTreeSet<Capability>,
    }

    impl Fake {
        fn new(name: &'static str, hit: bool) -> Arc<Self> {
            Arc::new(Self {
                name,
                hit,
                caps: image_caps(),
            })
        }
    }

    impl AdapterProvider for Fake {
        fn name(&self) -> &str {
            self.name
        }
        fn capabilities(&self) -> BTreeSet<Capability> {
            self.caps.clone()
        }
        fn probe(&self, _: &Environment) -> bool {
            self.hit
        }
        fn attach(&self, env: &Environment) -> Result<Box<dyn HostAdapter>, HostError> {
            let surface = env.surfaces().first().ok_or(HostError::NoSurface)?;
            Ok(Box::new(SurfaceHost::canvas(surface.clone()).renamed(self.name)))
        }
    }

    fn one_surface_env() -> Environment {
        Environment::new().with_surface(Surface::new(
            "canvas0",
            PixelBuffer::solid_rgba(4, 4, [0, 0, 0]).unwrap(),
        ))
    }

    fn info(areas: &[(u32, u32)]) -> Vec<SurfaceInfo> {
        areas
            .iter()
            .enumerate()
            .map(|(i, &(w, h))| SurfaceInfo {
                id: format!("s{i}"),
                width: w,
                height: h,
            })
            .collect()
    }

    #[test]
    fn priority_then_registration_order() {
        let env = one_surface_env();
        let mut reg = Registry::new();
        reg.register(Fake::new("b", true), 5).unwrap();
        reg.register(Fake::new("a", true), 10).unwrap();
        assert_eq!(reg.detect(&env).unwrap().adapter_name(), "a");

        let mut reg = Registry::new();
        reg.register(Fake::new("first", true), 7).unwrap();
        reg.register(Fake::new("second", true), 7).unwrap();
        assert_eq!(reg.detect(&env).unwrap().adapter_name(), "first");
        assert_eq!(reg.adapter_names(), ["first", "second", CANVAS_FALLBACK_NAME]);
    }

    #[test]
    fn registration_errors() {
        let mut reg = Registry::new();
        reg.register(Fake::new("x", true), 1).unwrap();
        assert!(matches!(
            reg.register(Fake::new("x", false), 2),
            Err(HostError::DuplicateAdapter(_))
        ));
        assert!(matches!(
            reg.register(Fake::new(CANVAS_FALLBACK_NAME, false), 2),
            Err(HostError::DuplicateAdapter(_))
        ));
        let read_only = Arc::new(Fake {
            name: "ro",
            hit: true,
            caps: [Capability::ImageRead].into(),
        });
        assert!(matches!(
            reg.register(read_only, 3),
            Err(HostError::MissingCapabilities { .. })
        ));
    }

    #[test]
    fn failed_probes_fall_back() {
        let mut reg = Registry::new();
        reg.register(Fake::new("never", false), 99).unwrap();
        let session = reg.detect(&one_surface_env()).unwrap();
        assert_eq!(session.adapter_name(), CANVAS_FALLBACK_NAME);
        assert!(matches!(reg.detect(&Environment::new()), Err(HostError::NoSurface)));
    }

    #[test]
    fn explicit_adapter_wins() {
        let mut reg = Registry::new();
        reg.register(Fake::new("auto", true), 10).unwrap();
        reg.register(Fake::new("manual", false), 1).unwrap();
        let env = one_surface_env();
        assert_eq!(reg.init(&env, None).unwrap().adapter_name(), "auto");
        assert_eq!(reg.init(&env, Some("manual")).unwrap().adapter_name(), "manual");
        assert!(matches!(
            reg.init(&env, Some("nope")),
            Err(HostError::UnknownAdapter(_))
        ));
    }

    #[test]
    fn largest_surface_rules() {
        assert_eq!(select_largest_surface(&info(&[(10, 10), (10, 30), (10, 20)]), None).unwrap(), 1);
        assert_eq!(select_largest_surface(&info(&[(10, 10), (5, 20)]), None).unwrap(), 0);
        assert_eq!(
            select_largest_surface(&info(&[(10, 10), (10, 30), (10, 20)]), Some(2)).unwrap(),
            2
        );
        assert!(matches!(select_largest_surface(&[], None), Err(HostError::NoSurface)));
        assert!(matches!(
            select_largest_surface(&info(&[(1, 1)]), Some(1)),
            Err(HostError::SurfaceOverride { .. })
        ));
    }

    #[test]
    fn set_image_expands_gray_and_checks_shape() {
        let env = one_surface_env();
        let mut session = Registry::new().detect(&env).unwrap();
        let gray = PixelBuffer::filled(4, 4, Channels::Gray, 9).unwrap();
        session.set_image(&gray).unwrap();
        assert_eq!(session.get_image().unwrap(), PixelBuffer::solid_rgba(4, 4, [9, 9, 9]).unwrap());

        let before = session.get_image().unwrap();
        let wrong = PixelBuffer::solid_rgba(3, 4, [1, 1, 1]).unwrap();
        assert!(matches!(
            session.set_image(&wrong),
            Err(HostError::DimensionMismatch { .. })
        ));
        assert_eq!(session.get_image().unwrap(), before);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn largest_is_member_and_maximal(dims in proptest::collection::vec((1u32..50, 1u32..50), 1..12)) {
                let surfaces = info(&dims);
                let idx = select_largest_surface(&surfaces, None).unwrap();
                prop_assert!(idx < surfaces.len());
                for (i, s) in surfaces.iter().enumerate() {
                    prop_assert!(s.area() <= surfaces[idx].area());
                    if i < idx {
                        prop_assert!(s.area() < surfaces[idx].area());
                    }
                }
            }
        }
    }
}
