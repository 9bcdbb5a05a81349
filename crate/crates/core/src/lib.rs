//! Host-agnostic image-processing plugin engine.
//!
//! Plugins ("boostlets") acquire pixels from a visualization host through a
//! uniform adapter, run a declarative pipeline of pixel operations, and
//! commit the result back. A pixel-diff harness replays plugins against
//! golden images.

pub mod codec;
pub mod harness;
pub mod host;
pub mod interaction;
pub mod pixel;
pub mod plugin;
