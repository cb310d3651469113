//! Line co-occurrence histograms over centerline interest points.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{wrap_bin_difference, KernelVolume, RotationMode};
use crate::orientation::OrientationMap;
use crate::raster_io::Raster2D;

/// Part label of AV pixels whose class is unknown; such pixels are dropped.
pub const AV_UNKNOWN: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterestPoint {
    pub x: f64,
    pub y: f64,
    pub theta_bin: usize,
    /// 0 = unpartitioned.
    pub part: u32,
    pub intensity: Option<f64>,
}

impl InterestPoint {
    pub fn new(x: f64, y: f64, theta_bin: usize) -> Self {
        Self {
            x,
            y,
            theta_bin,
            part: 0,
            intensity: None,
        }
    }

    pub fn with_part(mut self, part: u32) -> Self {
        self.part = part;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterestPointSet {
    points: Vec<InterestPoint>,
    n_theta: usize,
}

impl InterestPointSet {
    pub fn new(points: Vec<InterestPoint>, n_theta: usize) -> Result<Self> {
        if n_theta == 0 {
            return Err(Error::domain("n_theta must be positive"));
        }
        let mut seen = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::domain(format!("point {i} has a non-finite position")));
            }
            if p.theta_bin >= n_theta {
                return Err(Error::domain(format!(
                    "point {i} has bin {} outside [0, {n_theta})",
                    p.theta_bin
                )));
            }
            if let Some(v) = p.intensity {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::domain(format!("point {i} intensity {v} outside [0, 1]")));
                }
            }
            if seen.insert((p.x.to_bits(), p.y.to_bits()), i).is_some() {
                return Err(Error::domain(format!(
                    "duplicate interest point at ({}, {})",
                    p.x, p.y
                )));
            }
        }
        Ok(Self { points, n_theta })
    }

    pub fn points(&self) -> &[InterestPoint] {
        &self.points
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Point counts per part label, ascending by label.
    pub fn part_sizes(&self) -> Vec<(u32, usize)> {
        let mut m = std::collections::BTreeMap::new();
        for p in &self.points {
            *m.entry(p.part).or_insert(0) += 1;
        }
        m.into_iter().collect()
    }

    /// Attaches the value of `image` at every point.
    pub fn with_intensities(mut self, image: &Raster2D) -> Result<Self> {
        for p in &mut self.points {
            let (x, y) = (p.x.round(), p.y.round());
            if x < 0.0 || y < 0.0 || x >= image.width() as f64 || y >= image.height() as f64 {
                return Err(Error::domain(format!(
                    "point ({}, {}) lies outside the intensity image",
                    p.x, p.y
                )));
            }
            let v = image.get(x as usize, y as usize);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("intensity {v} outside [0, 1]")));
            }
            p.intensity = Some(v);
        }
        Ok(self)
    }
}

/// Centerline pixels with their dominant orientation bin and optional part
/// label; AV-unknown pixels are dropped when `parts` is given.
pub fn interest_set(
    centerline: &Raster2D,
    omap: &OrientationMap,
    parts: Option<&Raster2D>,
) -> Result<InterestPointSet> {
    let (w, h) = (centerline.width(), centerline.height());
    if !centerline.is_binary() {
        return Err(Error::domain("centerline must be a binary mask"));
    }
    if omap.width() != w || omap.height() != h {
        return Err(Error::domain(format!(
            "centerline is {w}x{h} but orientation map is {}x{}",
            omap.width(),
            omap.height()
        )));
    }
    if let Some(p) = parts {
        if !p.same_shape(centerline) {
            return Err(Error::domain(format!(
                "centerline is {w}x{h} but part labels are {}x{}",
                p.width(),
                p.height()
            )));
        }
    }
    let mut points = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if centerline.get(x, y) != 1.0 {
                continue;
            }
            let part = match parts {
                None => 0,
                Some(r) => {
                    let v = r.get(x, y);
                    if v < 0.0 || v.fract() != 0.0 {
                        return Err(Error::domain(format!(
                            "part label {v} at ({x}, {y}) is not a nonnegative integer"
                        )));
                    }
                    v as u32
                }
            };
            if parts.is_some() && part == AV_UNKNOWN {
                continue;
            }
            points.push(InterestPoint::new(x as f64, y as f64, omap.bin(x, y)).with_part(part));
        }
    }
    InterestPointSet::new(points, omap.n_theta())
}

/// Relative coordinates of `p` seen from reference `q`, before spatial binning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOffset {
    pub x: f64,
    pub y: f64,
    /// Bin difference `θ_p - θ_q` wrapped to `[-n/2, n/2)`.
    pub dtheta: i64,
}

struct Trig {
    bin: Vec<(f64, f64)>,
    diff: Vec<(f64, f64)>,
}

impl Trig {
    fn new(n: usize) -> Self {
        let step = PI / n as f64;
        let bin = (0..n)
            .map(|k| {
                let t = -PI / 2.0 + k as f64 * step;
                (t.cos(), t.sin())
            })
            .collect();
        let diff = (0..n)
            .map(|j| {
                let t = (j as f64 - (n / 2) as f64) * step;
                (t.cos(), t.sin())
            })
            .collect();
        Self { bin, diff }
    }

    #[inline]
    fn offset(&self, p: &InterestPoint, q: &InterestPoint, n: usize, mode: RotationMode) -> PairOffset {
        let (dx, dy) = (p.x - q.x, p.y - q.y);
        let dtheta = wrap_bin_difference(p.theta_bin as i64 - q.theta_bin as i64, n);
        let (c, s) = match mode {
            RotationMode::Group => self.bin[q.theta_bin],
            RotationMode::Literal => self.diff[(dtheta + (n / 2) as i64) as usize],
        };
        PairOffset {
            x: c * dx + s * dy,
            y: -s * dx + c * dy,
            dtheta,
        }
    }
}

/// Offset of the ordered pair `(p, q)` under the given rotation mode.
pub fn pair_offset(p: &InterestPoint, q: &InterestPoint, n_theta: usize, mode: RotationMode) -> PairOffset {
    Trig::new(n_theta).offset(p, q, n_theta, mode)
}

/// Spatial hash of points into square cells of side `d`.
struct Buckets {
    cells: HashMap<(i64, i64), Vec<usize>>,
    d: f64,
}

impl Buckets {
    fn new(points: &[InterestPoint], d: f64) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, d)).or_default().push(i);
        }
        Self { cells, d }
    }

    fn key(p: &InterestPoint, d: f64) -> (i64, i64) {
        ((p.x / d).floor() as i64, (p.y / d).floor() as i64)
    }

    fn near(&self, p: &InterestPoint) -> impl Iterator<Item = usize> + '_ {
        let (cx, cy) = Self::key(p, self.d);
        (-1..=1)
            .flat_map(move |oy| (-1..=1).map(move |ox| (cx + ox, cy + oy)))
            .filter_map(move |k| self.cells.get(&k))
            .flatten()
            .copied()
    }
}

/// Calls `f(p, q, offset)` for every ordered pair `p ≠ q` in the same part
/// within Euclidean distance `d`, with `q` ranging over `refs`.
fn visit_pairs(
    set: &InterestPointSet,
    buckets: &Buckets,
    trig: &Trig,
    d: f64,
    mode: RotationMode,
    refs: std::ops::Range<usize>,
    mut f: impl FnMut(usize, usize, PairOffset),
) {
    let pts = set.points();
    let d2 = d * d;
    for qi in refs {
        let q = &pts[qi];
        for pi in buckets.near(q) {
            if pi == qi {
                continue;
            }
            let p = &pts[pi];
            if p.part != q.part {
                continue;
            }
            let (dx, dy) = (p.x - q.x, p.y - q.y);
            if dx * dx + dy * dy > d2 {
                continue;
            }
            f(pi, qi, trig.offset(p, q, set.n_theta(), mode));
        }
    }
}

/// All in-range ordered-pair offsets, unbinned, ordered by reference then
/// neighbour index.
pub fn pair_offsets(set: &InterestPointSet, d: usize, mode: RotationMode) -> Vec<(usize, usize, PairOffset)> {
    let trig = Trig::new(set.n_theta());
    let buckets = Buckets::new(set.points(), d.max(1) as f64);
    let mut out = Vec::new();
    visit_pairs(set, &buckets, &trig, d as f64, mode, 0..set.len(), |p, q, o| {
        out.push((p, q, o))
    });
    out.sort_by_key(|&(p, q, _)| (q, p));
    out
}

const CHUNK: usize = 256;

/// Unnormalized ordered-pair histogram over `(Δθ-bin, y, x)`, `x, y ∈ [-d, d]`.
pub fn cooccurrence_histogram(set: &InterestPointSet, d: usize, mode: RotationMode) -> Result<KernelVolume> {
    if d < 1 {
        return Err(Error::domain("d must be at least 1"));
    }
    let n = set.n_theta();
    let side = 2 * d + 1;
    let trig = Trig::new(n);
    let buckets = Buckets::new(set.points(), d as f64);
    let di = d as i64;
    let n_chunks = set.len().div_ceil(CHUNK);
    let counts = (0..n_chunks)
        .into_par_iter()
        .fold(
            || vec![0u64; side * side * n],
            |mut acc, c| {
                let range = c * CHUNK..((c + 1) * CHUNK).min(set.len());
                visit_pairs(set, &buckets, &trig, d as f64, mode, range, |_, _, o| {
                    let (bx, by) = (o.x.round() as i64, o.y.round() as i64);
                    debug_assert!(bx.abs() <= di && by.abs() <= di);
                    let k = (o.dtheta + (n / 2) as i64) as usize;
                    acc[(k * side + (by + di) as usize) * side + (bx + di) as usize] += 1;
                });
                acc
            },
        )
        .reduce(
            || vec![0u64; side * side * n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                a
            },
        );
    KernelVolume::from_values(d, n, counts.into_iter().map(|c| c as f64).collect())
}

/// Elementwise sum of the kernels divided by its l1 norm.
pub fn accumulate_normalize(kernels: &[KernelVolume]) -> Result<KernelVolume> {
    let first = kernels
        .first()
        .ok_or_else(|| Error::Normalization("no kernels to accumulate".into()))?;
    let mut total = KernelVolume::zeros(first.d(), first.n_theta());
    for k in kernels {
        total.accumulate(k)?;
    }
    total.normalized_l1()
}

/// Cell reached from `(dtheta, x, y)` by the group inversion
/// `(X, θ) ↦ (-R_{-θ} X, -θ)`, or `None` if it rounds outside the box.
pub fn inverse_cell(k: &KernelVolume, slice: usize, x: i64, y: i64) -> Option<(usize, i64, i64)> {
    let n = k.n_theta();
    let dtheta = slice as i64 - (n / 2) as i64;
    let t = dtheta as f64 * PI / n as f64;
    let (c, s) = (t.cos(), t.sin());
    // R_{-θ} (x, y) = (c x + s y, -s x + c y)
    let ix = -(c * x as f64 + s * y as f64);
    let iy = -(-s * x as f64 + c * y as f64);
    let (rx, ry) = (ix.round() as i64, iy.round() as i64);
    let d = k.d() as i64;
    if rx.abs() > d || ry.abs() > d {
        return None;
    }
    Some((k.slice_of_bin_difference(-dtheta), rx, ry))
}

/// Fraction of mass that violates inversion symmetry after binning:
/// `½ Σ_c |K(c) - K(inv(c))| / Σ K`.
pub fn inversion_asymmetry(k: &KernelVolume) -> f64 {
    let d = k.d() as i64;
    let total: f64 = k.values().iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut diff = 0.0;
    for slice in 0..k.n_theta() {
        for y in -d..=d {
            for x in -d..=d {
                let v = k.get(slice, x, y);
                let w = inverse_cell(k, slice, x, y)
                    .map(|(s, ix, iy)| k.get(s, ix, iy))
                    .unwrap_or(0.0);
                diff += (v - w).abs();
            }
        }
    }
    0.5 * diff / total
}
