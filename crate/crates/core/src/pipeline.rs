//! End-to-end workflows: K^stat training from a manifest and patch clustering.

use std::path::Path;

use crate::cooccurrence::{accumulate_normalize, cooccurrence_histogram, interest_set, InterestPointSet};
use crate::error::{Error, Result};
use crate::grouping::{
    build_affinity, normalize_intensity, prune_small, self_tuning_cluster_with, ClusterLabels, SelfTuningOptions,
    DEFAULT_SIGMA_INT, DEFAULT_WINDOW,
};
use crate::kernel::{KernelVolume, RotationMode};
use crate::orientation::{build_cake_wavelets, dominant_orientations, orientation_score, CakeWaveletParams, Polarity};
use crate::raster_io::{load_ppm_channel, load_raster, thin, Channel, DatasetManifest, Raster2D, RasterKind};

pub const DEFAULT_STATS_D: usize = 65;

/// Loads a gray image; colour PPMs contribute the selected plane.
pub fn load_intensity(path: impl AsRef<Path>, channel: Channel) -> Result<Raster2D> {
    let path = path.as_ref();
    let head = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if head.starts_with(b"P6") {
        load_ppm_channel(path, channel)
    } else {
        load_raster(path, RasterKind::Gray)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsOptions {
    pub d: usize,
    pub n_theta: usize,
    pub mode: RotationMode,
    pub use_av: bool,
    pub polarity: Polarity,
    pub channel: Channel,
}

impl Default for StatsOptions {
    fn default() -> Self {
        Self {
            d: DEFAULT_STATS_D,
            n_theta: 16,
            mode: RotationMode::Group,
            use_av: false,
            polarity: Polarity::Dark,
            channel: Channel::Green,
        }
    }
}

/// Interest points of one image: thinned mask, dominant orientations, optional parts.
pub fn image_interest_set(
    image: &Raster2D,
    mask: &Raster2D,
    parts: Option<&Raster2D>,
    n_theta: usize,
    polarity: Polarity,
) -> Result<InterestPointSet> {
    if !image.same_shape(mask) {
        return Err(Error::domain(format!(
            "image is {}x{} but mask is {}x{}",
            image.width(),
            image.height(),
            mask.width(),
            mask.height()
        )));
    }
    let centerline = thin(mask)?;
    let wavelets = build_cake_wavelets(&CakeWaveletParams {
        n_theta,
        ..CakeWaveletParams::default()
    })?;
    let omap = dominant_orientations(&orientation_score(image, &wavelets)?, polarity);
    interest_set(&centerline, &omap, parts)
}

/// Unnormalized co-occurrence histogram of one image.
pub fn image_histogram(
    image: &Raster2D,
    mask: &Raster2D,
    parts: Option<&Raster2D>,
    opts: &StatsOptions,
) -> Result<KernelVolume> {
    let set = image_interest_set(image, mask, parts, opts.n_theta, opts.polarity)?;
    cooccurrence_histogram(&set, opts.d, opts.mode)
}

/// K^stat over every manifest entry: per-image histograms summed and l1-normalized.
pub fn stats_from_manifest(manifest: &DatasetManifest, opts: &StatsOptions) -> Result<KernelVolume> {
    if manifest.entries.is_empty() {
        return Err(Error::domain("manifest has no entries"));
    }
    let mut histograms = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let image = load_intensity(&e.image, opts.channel)?;
        let mask = load_raster(&e.mask, RasterKind::Mask)?;
        let parts = match (&e.av_labels, opts.use_av) {
            (Some(p), true) => Some(load_raster(p, RasterKind::Labels)?),
            (None, true) => {
                return Err(Error::domain(format!(
                    "AV labels requested but {} has none",
                    e.image.display()
                )))
            }
            (_, false) => None,
        };
        histograms.push(image_histogram(&image, &mask, parts.as_ref(), opts)?);
    }
    accumulate_normalize(&histograms)
}

/// Default noise threshold: 10 px for patches up to 51 px, 20 px above.
pub fn default_min_size(width: usize, height: usize) -> usize {
    if width.max(height) <= 51 {
        10
    } else {
        20
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterOptions {
    pub sigma_int: f64,
    pub window: usize,
    /// `None` picks [`default_min_size`].
    pub min_size: Option<usize>,
    pub polarity: Polarity,
    pub tuning: SelfTuningOptions,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        Self {
            sigma_int: DEFAULT_SIGMA_INT,
            window: DEFAULT_WINDOW,
            min_size: None,
            polarity: Polarity::Dark,
            tuning: SelfTuningOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClusterOutcome {
    pub points: InterestPointSet,
    pub labels: ClusterLabels,
    pub costs: Vec<(usize, f64)>,
}

impl ClusterOutcome {
    /// Label map with `label + 1` on clustered points and 0 elsewhere.
    pub fn label_levels(&self, width: usize, height: usize) -> Vec<u16> {
        let mut levels = vec![0u16; width * height];
        for (p, &l) in self.points.points().iter().zip(self.labels.labels()) {
            let (x, y) = (p.x.round() as usize, p.y.round() as usize);
            levels[y * width + x] = (l + 1) as u16;
        }
        levels
    }

    /// `x;y;label` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x;y;label\n");
        for (p, l) in self.points.points().iter().zip(self.labels.labels()) {
            s.push_str(&format!("{};{};{}\n", p.x, p.y, l));
        }
        s
    }
}

/// Groups the centerline pixels of `segmentation` into individual structures.
pub fn cluster_patch(
    image: &Raster2D,
    segmentation: &Raster2D,
    kernel: &KernelVolume,
    opts: &ClusterOptions,
) -> Result<ClusterOutcome> {
    if !kernel.is_normalized() {
        return Err(Error::Normalization("affinity kernel must be l1-normalized".into()));
    }
    let set = image_interest_set(image, segmentation, None, kernel.n_theta(), opts.polarity)?;
    if set.len() < 2 {
        return Err(Error::domain(format!("segmentation has {} centerline points", set.len())));
    }
    let normalized = normalize_intensity(image, opts.window, Some(segmentation))?;
    let set = set.with_intensities(&normalized)?;
    let affinity = build_affinity(&set, kernel, opts.sigma_int)?;
    let report = self_tuning_cluster_with(&affinity, &opts.tuning)?;
    let min_size = opts
        .min_size
        .unwrap_or_else(|| default_min_size(image.width(), image.height()));
    let labels = prune_small(&report.labels, min_size)?;
    Ok(ClusterOutcome {
        points: set,
        labels,
        costs: report.costs,
    })
}
