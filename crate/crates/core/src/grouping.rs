//! Co-occurrence × intensity affinities and self-tuning spectral clustering.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::cooccurrence::{pair_offsets, InterestPointSet};
use crate::error::{Error, Result};
use crate::kernel::{KernelVolume, RotationMode};
use crate::raster_io::Raster2D;

pub const DEFAULT_SIGMA_INT: f64 = 0.2;
pub const DEFAULT_C_MAX: usize = 8;
pub const DEFAULT_WINDOW: usize = 31;
const NORMALIZE_EPS: f64 = 1e-6;
const SPREAD_EPS: f64 = 1e-6;

/// Local contrast normalization.
///
/// Every pixel becomes `(v − μ) / (σ + ε)`, with `μ, σ` taken over the
/// background pixels of the `window × window` neighbourhood (all pixels of
/// the neighbourhood when it has no background, or when `foreground` is
/// `None`). The result is rescaled affinely so the foreground spans `[0, 1]`
/// and clamped there; a spread below 1e-6 maps everything to 0.5.
pub fn normalize_intensity(image: &Raster2D, window: usize, foreground: Option<&Raster2D>) -> Result<Raster2D> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::domain(format!("window must be odd and at least 3, got {window}")));
    }
    if let Some(f) = foreground {
        if !f.same_shape(image) {
            return Err(Error::domain("foreground mask and image differ in size"));
        }
    }
    let (w, h) = (image.width(), image.height());
    let is_fg = |x: usize, y: usize| foreground.is_some_and(|f| f.get(x, y) != 0.0);
    let r = window / 2;
    let stats = |x: usize, y: usize, background_only: bool| {
        let (x0, y0) = (x.saturating_sub(r), y.saturating_sub(r));
        let (x1, y1) = ((x + r + 1).min(w), (y + r + 1).min(h));
        let cells = || (y0..y1).flat_map(move |v| (x0..x1).map(move |u| (u, v)));
        let keep = |&(u, v): &(usize, usize)| !background_only || !is_fg(u, v);
        let (n, sum) = cells()
            .filter(keep)
            .fold((0usize, 0.0), |(n, s), (u, v)| (n + 1, s + image.get(u, v)));
        if n == 0 {
            return None;
        }
        let mean = sum / n as f64;
        let ss: f64 = cells().filter(keep).map(|(u, v)| (image.get(u, v) - mean).powi(2)).sum();
        Some((mean, (ss / n as f64).sqrt()))
    };
    let z: Vec<f64> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let (mean, std) = stats(x, y, true).or_else(|| stats(x, y, false)).expect("window is non-empty");
            (image.get(x, y) - mean) / (std + NORMALIZE_EPS)
        })
        .collect();
    let z = Raster2D::new(w, h, z)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for y in 0..h {
        for x in 0..w {
            if foreground.is_none() || is_fg(x, y) {
                lo = lo.min(z.get(x, y));
                hi = hi.max(z.get(x, y));
            }
        }
    }
    let spread = hi - lo;
    Ok(Raster2D::from_fn(w, h, |x, y| {
        if spread.is_nan() || spread <= SPREAD_EPS {
            0.5
        } else {
            ((z.get(x, y) - lo) / spread).clamp(0.0, 1.0)
        }
    }))
}

/// Dense symmetric affinity over the points of an interest set.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    m: usize,
    values: Vec<f64>,
    point_index: Vec<usize>,
}

impl AffinityMatrix {
    pub fn from_values(m: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != m * m {
            return Err(Error::DimensionMismatch(format!("{m}×{m} affinity needs {} values", m * m)));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain("affinities must be finite and nonnegative"));
        }
        for i in 0..m {
            for j in 0..i {
                let (a, b) = (values[i * m + j], values[j * m + i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::domain(format!("affinity is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            m,
            values,
            point_index: (0..m).collect(),
        })
    }

    /// Row `i` refers to entry `point_index()[i]` of the interest set.
    pub fn with_point_index(mut self, point_index: Vec<usize>) -> Result<Self> {
        if point_index.len() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "{} rows but {} point indices",
                self.m,
                point_index.len()
            )));
        }
        self.point_index = point_index;
        Ok(self)
    }

    pub fn point_index(&self) -> &[usize] {
        &self.point_index
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn gaussian(delta: f64, sigma: f64) -> f64 {
    (-0.5 * delta * delta / (sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// `A(i, j) = K(group-mode offset of j seen from i) · G_σ(I_i − I_j)`,
/// symmetrized as `(A + Aᵀ)/2`.
pub fn build_affinity(set: &InterestPointSet, k: &KernelVolume, sigma_int: f64) -> Result<AffinityMatrix> {
    if !(sigma_int.is_finite() && sigma_int > 0.0) {
        return Err(Error::domain(format!("sigma_int must be positive, got {sigma_int}")));
    }
    if k.n_theta() != set.n_theta() {
        return Err(Error::DimensionMismatch(format!(
            "kernel has {} orientations, points use {}",
            k.n_theta(),
            set.n_theta()
        )));
    }
    let intensity: Vec<f64> = set
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| p.intensity.ok_or_else(|| Error::domain(format!("point {i} has no intensity"))))
        .collect::<Result<_>>()?;
    let m = set.len();
    let centre = k.get(k.n_theta() / 2, 0, 0) * gaussian(0.0, sigma_int);
    let mut a = vec![0.0; m * m];
    for i in 0..m {
        a[i * m + i] = centre;
    }
    let half = (k.n_theta() / 2) as i64;
    for (p, q, o) in pair_offsets(set, k.d(), RotationMode::Group) {
        let slice = (o.dtheta + half) as usize;
        let kv = k.get_or_zero(slice, o.x.round() as i64, o.y.round() as i64);
        a[q * m + p] = kv * gaussian(intensity[p] - intensity[q], sigma_int);
    }
    let sym: Vec<f64> = (0..m * m)
        .into_par_iter()
        .map(|ij| {
            let (i, j) = (ij / m, ij % m);
            0.5 * (a[i * m + j] + a[j * m + i])
        })
        .collect();
    AffinityMatrix::from_values(m, sym)
}

/// Cluster label per point; `-1` marks noise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    labels: Vec<i64>,
    n_clusters: usize,
}

impl ClusterLabels {
    pub fn new(labels: Vec<i64>) -> Result<Self> {
        let n_clusters = labels.iter().cloned().max().map_or(0, |v| (v + 1).max(0) as usize);
        if labels.iter().any(|&l| l < -1) {
            return Err(Error::domain("labels must be -1 or nonnegative"));
        }
        let mut used = vec![false; n_clusters];
        for &l in &labels {
            if l >= 0 {
                used[l as usize] = true;
            }
        }
        if used.iter().any(|u| !u) {
            return Err(Error::domain("every cluster label below the maximum must be used"));
        }
        Ok(Self { labels, n_clusters })
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_clusters];
        for &l in &self.labels {
            if l >= 0 {
                s[l as usize] += 1;
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfTuningOptions {
    pub c_min: usize,
    pub c_max: usize,
    /// Largest `C` whose cost is within `tol` of the minimum wins.
    pub tol: f64,
    pub step: f64,
    pub max_iter: usize,
    pub min_improvement: f64,
}

impl Default for SelfTuningOptions {
    fn default() -> Self {
        Self {
            c_min: 1,
            c_max: DEFAULT_C_MAX,
            tol: 0.02,
            step: 0.1,
            max_iter: 200,
            min_improvement: 1e-7,
        }
    }
}

/// Outcome of the cluster-count search.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    pub labels: ClusterLabels,
    /// `(C, cost)` for every candidate count, cost `(J/m − 1)/C ∈ [0, 1)`.
    pub costs: Vec<(usize, f64)>,
    pub chosen: usize,
}

/// Givens rotation that aligns eigenvectors with the coordinate axes.
struct Rotation {
    pairs: Vec<(usize, usize)>,
    c: usize,
}

impl Rotation {
    fn new(c: usize) -> Self {
        let pairs = (0..c).flat_map(|i| (i + 1..c).map(move |j| (i, j))).collect();
        Self { pairs, c }
    }

    fn givens(&self, k: usize, angle: f64, derivative: bool) -> DMatrix<f64> {
        let (i, j) = self.pairs[k];
        let (s, co) = angle.sin_cos();
        let mut g = if derivative {
            DMatrix::zeros(self.c, self.c)
        } else {
            DMatrix::identity(self.c, self.c)
        };
        if derivative {
            g[(i, i)] = -s;
            g[(j, j)] = -s;
            g[(i, j)] = -co;
            g[(j, i)] = co;
        } else {
            g[(i, i)] = co;
            g[(j, j)] = co;
            g[(i, j)] = -s;
            g[(j, i)] = s;
        }
        g
    }

    fn matrix(&self, angles: &[f64]) -> DMatrix<f64> {
        let mut r = DMatrix::identity(self.c, self.c);
        for (k, &a) in angles.iter().enumerate() {
            r *= self.givens(k, a, false);
        }
        r
    }

    /// `∂R/∂θ_k` for every `k`.
    fn derivatives(&self, angles: &[f64]) -> Vec<DMatrix<f64>> {
        let n = angles.len();
        let mut prefix: Vec<DMatrix<f64>> = vec![DMatrix::identity(self.c, self.c)];
        for k in 0..n {
            let next = &prefix[k] * self.givens(k, angles[k], false);
            prefix.push(next);
        }
        let mut suffix: Vec<DMatrix<f64>> = vec![DMatrix::identity(self.c, self.c); n + 1];
        for k in (0..n).rev() {
            suffix[k] = self.givens(k, angles[k], false) * &suffix[k + 1];
        }
        (0..n)
            .map(|k| &prefix[k] * self.givens(k, angles[k], true) * &suffix[k + 1])
            .collect()
    }
}

/// Normalized alignment cost `(J/m − 1)/C` and the row maxima used by it.
fn alignment_cost(z: &DMatrix<f64>) -> (f64, Vec<usize>) {
    let (m, c) = z.shape();
    let mut j = 0.0;
    let mut argmax = Vec::with_capacity(m);
    for i in 0..m {
        let mut best = 0;
        for col in 1..c {
            if z[(i, col)].powi(2) > z[(i, best)].powi(2) {
                best = col;
            }
        }
        let mx = z[(i, best)].powi(2);
        argmax.push(best);
        if mx > 0.0 {
            j += (0..c).map(|col| z[(i, col)].powi(2)).sum::<f64>() / mx;
        } else {
            j += 1.0;
        }
    }
    ((j / m as f64 - 1.0) / c as f64, argmax)
}

fn cost_gradient(x: &DMatrix<f64>, z: &DMatrix<f64>, argmax: &[usize], dr: &[DMatrix<f64>]) -> Vec<f64> {
    let (m, c) = z.shape();
    let scale = 1.0 / (m as f64 * c as f64);
    dr.iter()
        .map(|d| {
            let dz = x * d;
            let mut g = 0.0;
            for i in 0..m {
                let mi = argmax[i];
                let mx = z[(i, mi)].powi(2);
                if mx == 0.0 {
                    continue;
                }
                let dmx = 2.0 * z[(i, mi)] * dz[(i, mi)];
                for col in 0..c {
                    let zz = z[(i, col)];
                    g += 2.0 * zz * dz[(i, col)] / mx - zz * zz * dmx / (mx * mx);
                }
            }
            g * scale
        })
        .collect()
}

/// Gradient descent on the Givens angles; returns the rotated vectors and cost.
fn align(x: &DMatrix<f64>, opts: &SelfTuningOptions) -> (DMatrix<f64>, f64) {
    let c = x.ncols();
    if c == 1 {
        let (cost, _) = alignment_cost(x);
        return (x.clone(), cost);
    }
    let rot = Rotation::new(c);
    let mut angles = vec![0.0; rot.pairs.len()];
    let mut z = x.clone();
    let (mut cost, mut argmax) = alignment_cost(&z);
    for _ in 0..opts.max_iter {
        let grad = cost_gradient(x, &z, &argmax, &rot.derivatives(&angles));
        let trial: Vec<f64> = angles.iter().zip(&grad).map(|(a, g)| a - opts.step * g).collect();
        let zt = x * rot.matrix(&trial);
        let (ct, at) = alignment_cost(&zt);
        if ct >= cost {
            break;
        }
        let gain = cost - ct;
        angles = trial;
        z = zt;
        cost = ct;
        argmax = at;
        if gain < opts.min_improvement {
            break;
        }
    }
    (z, cost)
}

/// Self-tuning spectral clustering with the default options and `c_max`.
pub fn self_tuning_cluster(a: &AffinityMatrix, c_max: usize) -> Result<ClusterLabels> {
    let opts = SelfTuningOptions {
        c_max,
        ..SelfTuningOptions::default()
    };
    Ok(self_tuning_cluster_with(a, &opts)?.labels)
}

pub fn self_tuning_cluster_with(a: &AffinityMatrix, opts: &SelfTuningOptions) -> Result<ClusterReport> {
    let m = a.m();
    if m < 2 {
        return Err(Error::domain(format!("clustering needs at least 2 points, got {m}")));
    }
    if opts.c_max < 2 || opts.c_min < 1 || opts.c_min > opts.c_max {
        return Err(Error::domain(format!(
            "cluster range {}..={} is invalid",
            opts.c_min, opts.c_max
        )));
    }
    let degree: Vec<f64> = (0..m).map(|i| (0..m).map(|j| a.get(i, j)).sum()).collect();
    let active: Vec<usize> = (0..m).filter(|&i| degree[i] > 0.0).collect();
    let mut labels = vec![-1i64; m];
    if active.is_empty() {
        return Ok(ClusterReport {
            labels: ClusterLabels::new(labels)?,
            costs: Vec::new(),
            chosen: 0,
        });
    }
    let ma = active.len();
    let inv_sqrt: Vec<f64> = active.iter().map(|&i| 1.0 / degree[i].sqrt()).collect();
    let n = DMatrix::from_fn(ma, ma, |r, c| inv_sqrt[r] * a.get(active[r], active[c]) * inv_sqrt[c]);
    let eig = SymmetricEigen::try_new(n, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric("eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..ma).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[q].total_cmp(&eig.eigenvalues[p]).then(p.cmp(&q)));
    let lead = eig.eigenvalues[order[0]];
    let rank = order
        .iter()
        .take_while(|&&k| eig.eigenvalues[k] > 1e-6 * lead)
        .count()
        .max(1);
    let c_hi = opts.c_max.min(rank).min(ma);
    let c_lo = opts.c_min.min(c_hi);

    let mut costs = Vec::new();
    let mut rotated: Vec<DMatrix<f64>> = Vec::new();
    let mut prev: Option<DMatrix<f64>> = None;
    for c in 1..=c_hi {
        let next = eig.eigenvectors.column(order[c - 1]).into_owned();
        let x = match &prev {
            None => DMatrix::from_column_slice(ma, 1, next.as_slice()),
            Some(p) => {
                let mut x = p.clone().resize_horizontally(c, 0.0);
                x.set_column(c - 1, &next);
                x
            }
        };
        let (z, cost) = align(&x, opts);
        prev = Some(z.clone());
        if c >= c_lo {
            costs.push((c, cost));
            rotated.push(z);
        }
    }
    let best = costs.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    let pick = costs
        .iter()
        .rposition(|&(_, v)| v <= best + opts.tol)
        .expect("at least one candidate");
    let chosen = costs[pick].0;
    let (_, argmax) = alignment_cost(&rotated[pick]);
    // compact column indices in order of first appearance
    let mut remap = vec![-1i64; chosen];
    let mut next_label = 0;
    for (r, &col) in argmax.iter().enumerate() {
        if remap[col] < 0 {
            remap[col] = next_label;
            next_label += 1;
        }
        labels[active[r]] = remap[col];
    }
    Ok(ClusterReport {
        labels: ClusterLabels::new(labels)?,
        costs,
        chosen,
    })
}

/// Clusters smaller than `min_size` become noise; the rest are relabelled
/// by decreasing size (ties by old label).
pub fn prune_small(labels: &ClusterLabels, min_size: usize) -> Result<ClusterLabels> {
    if min_size < 1 {
        return Err(Error::domain("min_size must be at least 1"));
    }
    let sizes = labels.sizes();
    let mut keep: Vec<usize> = (0..sizes.len()).filter(|&c| sizes[c] >= min_size).collect();
    keep.sort_by(|&p, &q| sizes[q].cmp(&sizes[p]).then(p.cmp(&q)));
    let mut remap = vec![-1i64; sizes.len()];
    for (new, &old) in keep.iter().enumerate() {
        remap[old] = new as i64;
    }
    ClusterLabels::new(
        labels
            .labels()
            .iter()
            .map(|&l| if l < 0 { -1 } else { remap[l as usize] })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooccurrence::InterestPoint;

    fn blocks(sizes: &[usize], cross: f64) -> AffinityMatrix {
        let m: usize = sizes.iter().sum();
        let mut owner = Vec::new();
        for (b, &s) in sizes.iter().enumerate() {
            owner.extend(std::iter::repeat_n(b, s));
        }
        let v = (0..m * m)
            .map(|ij| if owner[ij / m] == owner[ij % m] { 1.0 } else { cross })
            .collect();
        AffinityMatrix::from_values(m, v).unwrap()
    }

    fn same_partition(a: &[i64], b: &[i64]) -> bool {
        (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
    }

    #[test]
    fn two_ideal_blocks() {
        let l = self_tuning_cluster(&blocks(&[6, 9], 0.0), 8).unwrap();
        assert_eq!(l.n_clusters(), 2);
        let want: Vec<i64> = (0..15).map(|i| if i < 6 { 0 } else { 1 }).collect();
        assert!(same_partition(l.labels(), &want));
    }

    #[test]
    fn three_blocks_with_cross_talk() {
        let l = self_tuning_cluster(&blocks(&[5, 7, 6], 1e-6), 8).unwrap();
        assert_eq!(l.n_clusters(), 3);
        let want: Vec<i64> = (0..18).map(|i| if i < 5 { 0 } else if i < 12 { 1 } else { 2 }).collect();
        assert!(same_partition(l.labels(), &want));
    }

    #[test]
    fn uniform_affinity_is_one_group() {
        let r = self_tuning_cluster_with(&blocks(&[10], 0.0), &SelfTuningOptions::default()).unwrap();
        assert_eq!(r.chosen, 1);
        assert!(r.labels.labels().iter().all(|&l| l == 0));
        // rank one: no larger count is a candidate, whatever c_min says
        let opts = SelfTuningOptions {
            c_min: 2,
            ..SelfTuningOptions::default()
        };
        let r = self_tuning_cluster_with(&blocks(&[10], 0.0), &opts).unwrap();
        assert_eq!(r.costs, vec![(1, 0.0)]);
    }

    #[test]
    fn isolated_points_are_noise() {
        let mut v = blocks(&[4, 4], 0.0).values().to_vec();
        let m = 9;
        let mut w = vec![0.0; m * m];
        for i in 0..8 {
            for j in 0..8 {
                w[i * m + j] = v[i * 8 + j];
            }
        }
        v.clear();
        let l = self_tuning_cluster(&AffinityMatrix::from_values(m, w).unwrap(), 4).unwrap();
        assert_eq!(l.labels()[8], -1);
        assert_eq!(l.n_clusters(), 2);
    }

    #[test]
    fn pruning_orders_by_size() {
        let mut raw = vec![0i64; 3];
        raw.extend(vec![1i64; 40]);
        let l = ClusterLabels::new(raw).unwrap();
        let p = prune_small(&l, 5).unwrap();
        assert_eq!(p.n_clusters(), 1);
        assert_eq!(p.labels()[..3], [-1, -1, -1]);
        assert!(p.labels()[3..].iter().all(|&v| v == 0));
        let all_small = prune_small(&l, 100).unwrap();
        assert_eq!(all_small.n_clusters(), 0);
        assert!(all_small.labels().iter().all(|&v| v == -1));
    }

    #[test]
    fn flat_image_normalizes_to_mid_gray() {
        let img = Raster2D::from_fn(9, 7, |_, _| 0.4);
        let n = normalize_intensity(&img, 3, None).unwrap();
        assert!(n.values().iter().all(|&v| v == 0.5));
        assert!(normalize_intensity(&img, 4, None).is_err());
    }

    #[test]
    fn affinity_rejects_asymmetry_and_missing_intensity() {
        assert!(AffinityMatrix::from_values(2, vec![1.0, 0.5, 0.4, 1.0]).is_err());
        let set = InterestPointSet::new(vec![InterestPoint::new(0.0, 0.0, 0)], 2).unwrap();
        let k = KernelVolume::from_values(1, 2, vec![1.0 / 18.0; 18]).unwrap();
        assert!(build_affinity(&set, &k, 0.2).is_err());
    }

    #[test]
    fn bar_contrast_survives_a_gradient() {
        let img = Raster2D::from_fn(120, 60, |x, y| 0.2 + 0.005 * x as f64 - if y == 30 { 0.15 } else { 0.0 });
        let n = normalize_intensity(&img, 15, None).unwrap();
        let contrast: Vec<f64> = (8..112).map(|x| n.get(x, 36) - n.get(x, 30)).collect();
        let (lo, hi) = contrast.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &c| (l.min(c), h.max(c)));
        assert!(lo > 0.0 && hi / lo < 1.1, "{lo} .. {hi}");
    }

    #[test]
    fn masked_statistics_keep_bar_levels_apart() {
        let fg = Raster2D::from_fn(40, 40, |x, y| if y == 10 || x == 25 { 1.0 } else { 0.0 });
        let img = Raster2D::from_fn(40, 40, |x, y| if y == 10 { 0.3 } else if x == 25 { 0.7 } else { 1.0 });
        let n = normalize_intensity(&img, 11, Some(&fg)).unwrap();
        assert_eq!(n.get(3, 10), 0.0);
        assert_eq!(n.get(25, 30), 1.0);
    }

    fn two_point_affinity(b: (f64, f64, usize), ib: f64) -> (AffinityMatrix, KernelVolume) {
        let side = 17;
        let raw: Vec<f64> = (0..side * side * 16).map(|i| 1.0 + ((i * 37) % 101) as f64).collect();
        let k = KernelVolume::from_values(8, 16, raw).unwrap().normalized_l1().unwrap();
        let pts = vec![
            InterestPoint::new(10.0, 10.0, 8),
            InterestPoint::new(b.0, b.1, b.2),
        ];
        let img = Raster2D::from_fn(40, 40, |x, _| if x == 10 { 0.4 } else { ib });
        let set = InterestPointSet::new(pts, 16).unwrap().with_intensities(&img).unwrap();
        (build_affinity(&set, &k, 0.2).unwrap(), k)
    }

    #[test]
    fn collinear_pair_reads_the_kernel() {
        let (a, k) = two_point_affinity((15.0, 10.0, 8), 0.4);
        let g0 = 1.0 / (0.2 * (2.0 * std::f64::consts::PI).sqrt());
        let want = 0.5 * (k.get(8, 5, 0) + k.get(8, -5, 0)) * g0;
        assert!((a.get(0, 1) - want).abs() <= 1e-15 * want);
        assert_eq!(a.get(0, 1), a.get(1, 0));
        assert_eq!(a.get(0, 0), k.get(8, 0, 0) * g0);
        assert_eq!(a.point_index(), &[0, 1]);
    }

    #[test]
    fn intensity_difference_and_distance_damp_affinity() {
        let (near, _) = two_point_affinity((15.0, 10.0, 8), 0.4);
        let (dim, _) = two_point_affinity((15.0, 10.0, 8), 0.6);
        let ratio = dim.get(0, 1) / near.get(0, 1);
        assert!((ratio - (-0.5f64).exp()).abs() < 1e-12);
        let (far, _) = two_point_affinity((19.0, 10.0, 8), 0.4);
        assert_eq!(far.get(0, 1), 0.0);
    }
}
