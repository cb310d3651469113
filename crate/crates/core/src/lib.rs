//! Line co-occurrence statistics of curvilinear structures, direction-process
//! kernels on the projective line bundle, kernel fitting and spectral grouping.

pub mod cooccurrence;
pub mod error;
mod fft;
pub mod fp_kernel;
pub mod grouping;
pub mod kernel;
pub mod kernel_fit;
pub mod orientation;
pub mod phantom;
pub mod pipeline;
pub mod raster_io;

pub use error::{Error, Result};
pub use kernel::{KernelKind, KernelVolume, RotationMode};
