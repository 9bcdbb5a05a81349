use std::collections::BTreeSet;
use std::sync::{Arc, Mutex, MutexGuard};

use super::{
    image_caps, select_largest_surface, AdapterProvider, Capability, Environment, HostAdapter,
    HostError, SurfaceInfo,
};
use crate::pixel::{self, Channels, Mask, PixelBuffer};

pub const CANVAS_FALLBACK_NAME: &str = "canvas-fallback";
pub const MEMORY_HOST_MARKER: &str = "memory-host";

/// A drawing surface owned by the environment. Clones share the pixels,
/// the way every script on a page sees the same canvas.
#[derive(Debug, Clone)]
pub struct Surface {
    id: String,
    pixels: Arc<Mutex<PixelBuffer>>,
}

impl Surface {
    /// Grayscale content is stored expanded to RGBA.
    pub fn new(id: impl Into<String>, pixels: PixelBuffer) -> Self {
        let pixels = match pixels.channels() {
            Channels::Rgba => pixels,
            Channels::Gray => pixel::grayscale_to_rgba(&pixels).expect("gray input"),
        };
        Self {
            id: id.into(),
            pixels: Arc::new(Mutex::new(pixels)),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn info(&self) -> SurfaceInfo {
        let px = self.lock();
        SurfaceInfo {
            id: self.id.clone(),
            width: px.width(),
            height: px.height(),
        }
    }

    pub fn snapshot(&self) -> PixelBuffer {
        self.lock().clone()
    }

    fn lock(&self) -> MutexGuard<'_, PixelBuffer> {
        // A poisoned lock still holds a complete buffer; writes replace it wholesale.
        self.pixels.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug, Clone)]
struct Overlay {
    mask: Mask,
    color: [u8; 3],
    opacity: f64,
}

/// Adapter over a shared [`Surface`].
///
/// The memory flavour keeps mask overlays separate from the base pixels;
/// the canvas flavour burns them in.
#[derive(Debug)]
pub struct SurfaceHost {
    name: String,
    surface: Surface,
    native_overlay: bool,
    overlays: Vec<Overlay>,
}

impl SurfaceHost {
    pub fn memory(surface: Surface) -> Self {
        Self {
            name: MEMORY_HOST_MARKER.to_string(),
            surface,
            native_overlay: true,
            overlays: Vec::new(),
        }
    }

    pub fn canvas(surface: Surface) -> Self {
        Self {
            name: CANVAS_FALLBACK_NAME.to_string(),
            surface,
            native_overlay: false,
            overlays: Vec::new(),
        }
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Pixels without any overlay.
    pub fn base_image(&self) -> PixelBuffer {
        self.surface.snapshot()
    }
}

impl HostAdapter for SurfaceHost {
    fn name(&self) -> &str {
        &self.name
    }

    fn surface(&self) -> SurfaceInfo {
        self.surface.info()
    }

    fn get_image(&self) -> Result<PixelBuffer, HostError> {
        let mut img = self.surface.snapshot();
        for o in &self.overlays {
            img = pixel::apply_mask(&img, &o.mask, o.color, o.opacity)?;
        }
        Ok(img)
    }

    fn commit(&mut self, rgba: PixelBuffer) -> Result<(), HostError> {
        let mut px = self.surface.lock();
        if !rgba.same_shape(&px) {
            return Err(HostError::DimensionMismatch {
                expected_width: px.width(),
                expected_height: px.height(),
                width: rgba.width(),
                height: rgba.height(),
            });
        }
        *px = rgba;
        self.overlays.clear();
        Ok(())
    }

    fn set_mask(&mut self, mask: &Mask, color: [u8; 3], opacity: f64) -> Result<(), HostError> {
        let composited = pixel::apply_mask(&self.get_image()?, mask, color, opacity)?;
        if self.native_overlay {
            self.overlays.push(Overlay {
                mask: mask.clone(),
                color,
                opacity,
            });
            Ok(())
        } else {
            self.commit(composited)
        }
    }
}

/// Lowest-priority adapter: binds to the largest surface, or to the one the
/// environment forces.
#[derive(Debug, Default, Clone, Copy)]
pub struct CanvasFallback;

impl AdapterProvider for CanvasFallback {
    fn name(&self) -> &str {
        CANVAS_FALLBACK_NAME
    }

    fn capabilities(&self) -> BTreeSet<Capability> {
        image_caps()
    }

    fn probe(&self, env: &Environment) -> bool {
        !env.surfaces().is_empty()
    }

    fn attach(&self, env: &Environment) -> Result<Box<dyn HostAdapter>, HostError> {
        let infos: Vec<_> = env.surfaces().iter().map(Surface::info).collect();
        let index = select_largest_surface(&infos, env.surface_override())?;
        Ok(Box::new(SurfaceHost::canvas(env.surfaces()[index].clone())))
    }
}

/// Recognizes environments whose `memory-host` marker names one of its surfaces.
#[derive(Debug, Default, Clone, Copy)]
pub struct MemoryHostProvider;

impl MemoryHostProvider {
    fn find(env: &Environment) -> Option<&Surface> {
        let id = env.marker(MEMORY_HOST_MARKER)?;
        env.surfaces().iter().find(|s| s.id() == id)
    }
}

impl AdapterProvider for MemoryHostProvider {
    fn name(&self) -> &str {
        MEMORY_HOST_MARKER
    }

    fn capabilities(&self) -> BTreeSet<Capability> {
        let mut caps = image_caps();
        caps.insert(Capability::MaskOverlay);
        caps
    }

    fn probe(&self, env: &Environment) -> bool {
        Self::find(env).is_some()
    }

    fn attach(&self, env: &Environment) -> Result<Box<dyn HostAdapter>, HostError> {
        let surface = Self::find(env).ok_or(HostError::NoSurface)?;
        Ok(Box::new(SurfaceHost::memory(surface.clone())))
    }
}
