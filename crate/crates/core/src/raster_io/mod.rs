//! Raster ingestion and persistence: Netpbm codecs, thinning, dataset
//! manifests and the kernel file format.

mod kernel_file;
mod manifest;
mod raster;
mod thin;

pub use kernel_file::{decode_kernel, encode_kernel, read_kernel, write_kernel, KernelHeader};
pub use manifest::{read_manifest, DatasetManifest, ManifestEntry};
pub use raster::{
    decode_ppm_channel, decode_raster, encode_pgm, encode_pgm_levels, load_ppm_channel,
    load_raster, write_pgm, write_pgm_levels, Channel, Raster2D, RasterKind,
};
pub use thin::{count_components, thin};

pub(crate) use raster::write_bytes;
