//! Orientation scores: lifting an image to positions × π-periodic
//! orientations with rotated bi-directional cake wavelets, and extracting the
//! dominant orientation per pixel.
//!
//! Geometry is in pixel coordinates (`x` = column, `y` = row, pointing
//! down). A line with orientation `θ` runs along `(cos θ, sin θ)`; the
//! `n_θ` orientations are `θ_k = -π/2 + kπ/n_θ`.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{signed_index, Fft2};
use crate::raster_io::Raster2D;

/// Order of the Gaussian-decayed polynomial used as radial window.
const RADIAL_ORDER: usize = 8;
/// Width of the Gaussian taper applied after cropping, relative to `size`.
const TAPER_WIDTH: f64 = 0.25;
/// Width of the Gaussian profile subtracted to remove the mean, relative to `size`.
const MEAN_CORRECTION_WIDTH: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CakeWaveletParams {
    pub n_theta: usize,
    pub size: usize,
    pub spline_order: usize,
    /// Inflection point of the radial window as a fraction of Nyquist.
    pub inflection: f64,
}

impl Default for CakeWaveletParams {
    fn default() -> Self {
        Self {
            n_theta: 16,
            size: 21,
            spline_order: 3,
            inflection: 0.8,
        }
    }
}

/// `n_θ` real, even, zero-mean `size × size` filters stored as complex
/// values (the imaginary part is identically zero for bi-directional wavelets).
#[derive(Debug, Clone)]
pub struct CakeWaveletStack {
    n_theta: usize,
    size: usize,
    filters: Vec<Vec<Complex64>>,
}

impl CakeWaveletStack {
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Row-major `size × size` filter for orientation `k`, centred.
    pub fn filter(&self, k: usize) -> &[Complex64] {
        &self.filters[k]
    }

    pub fn theta(&self, k: usize) -> f64 {
        theta_of_bin(k, self.n_theta)
    }

    pub fn theta_values(&self) -> Vec<f64> {
        (0..self.n_theta).map(|k| self.theta(k)).collect()
    }
}

#[inline]
pub fn theta_of_bin(k: usize, n_theta: usize) -> f64 {
    -PI / 2.0 + k as f64 * PI / n_theta as f64
}

/// Nearest orientation bin of an angle (π-periodic).
pub fn bin_of_angle(theta: f64, n_theta: usize) -> usize {
    let step = PI / n_theta as f64;
    ((theta + PI / 2.0) / step).round().rem_euclid(n_theta as f64) as usize % n_theta
}

/// Centred cardinal B-spline of the given order (0 = box, 3 = cubic).
pub fn bspline(order: usize, x: f64) -> f64 {
    let n = order as i32;
    let half = (n + 1) as f64 / 2.0;
    if x.abs() >= half {
        return 0.0;
    }
    let mut fact = 1.0;
    for i in 2..=order {
        fact *= i as f64;
    }
    let mut sum = 0.0;
    let mut binom = 1.0;
    for k in 0..=(n + 1) {
        let t = x + half - k as f64;
        if t > 0.0 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * binom * t.powi(n);
        }
        binom = binom * (n + 1 - k) as f64 / (k + 1) as f64;
    }
    sum / fact
}

fn radial_window(rho: f64, inflection: f64) -> f64 {
    // e^{-q} Σ_{k≤N} q^k/k! has its inflection (in ρ) at ρ² = t²(2N+1)/2
    let t2 = inflection * inflection * 2.0 / (2 * RADIAL_ORDER + 1) as f64;
    let q = rho * rho / t2;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=RADIAL_ORDER {
        term *= q / k as f64;
        sum += term;
    }
    (-q).exp() * sum
}

/// Fourier-domain value of orientation `k`'s wavelet at frequency
/// `(u, v)` in cycles per pixel.
pub(crate) fn cake_spectrum(params: &CakeWaveletParams, k: usize, u: f64, v: f64) -> f64 {
    if u == 0.0 && v == 0.0 {
        return 0.0;
    }
    let rho = (u * u + v * v).sqrt() / 0.5;
    let phi = v.atan2(u);
    let step = PI / params.n_theta as f64;
    // a line along θ puts its energy on the normal direction θ + π/2
    let centre = theta_of_bin(k, params.n_theta) + PI / 2.0;
    let wrap = |a: f64| (a + PI).rem_euclid(2.0 * PI) - PI;
    let ang = bspline(params.spline_order, wrap(phi - centre) / step)
        + bspline(params.spline_order, wrap(phi - centre - PI) / step);
    ang * radial_window(rho, params.inflection)
}

pub fn build_cake_wavelets(params: &CakeWaveletParams) -> Result<CakeWaveletStack> {
    let CakeWaveletParams {
        n_theta,
        size,
        spline_order: _,
        inflection,
    } = *params;
    if n_theta < 4 || n_theta % 2 != 0 {
        return Err(Error::domain(format!(
            "n_theta must be even and >= 4, got {n_theta}"
        )));
    }
    if size < 9 || size % 2 == 0 {
        return Err(Error::domain(format!(
            "wavelet size must be odd and >= 9, got {size}"
        )));
    }
    if !(inflection > 0.0 && inflection <= 1.0) {
        return Err(Error::domain("inflection must lie in (0, 1]"));
    }
    let m = 4 * size + 1;
    let r = size / 2;
    let inverse = Fft2::new(m, m, true);
    let filters = (0..n_theta)
        .into_par_iter()
        .map(|k| {
            let mut spec: Vec<Complex64> = (0..m * m)
                .map(|i| {
                    let u = signed_index(i % m, m) as f64 / m as f64;
                    let v = signed_index(i / m, m) as f64 / m as f64;
                    Complex64::new(cake_spectrum(params, k, u, v), 0.0)
                })
                .collect();
            inverse.process(&mut spec);
            let norm = 1.0 / (m * m) as f64;
            let at = |x: i64, y: i64| {
                spec[(y.rem_euclid(m as i64) as usize) * m + x.rem_euclid(m as i64) as usize].re
                    * norm
            };
            let taper_w = TAPER_WIDTH * size as f64;
            let corr_w = MEAN_CORRECTION_WIDTH * size as f64;
            let mut f: Vec<f64> = Vec::with_capacity(size * size);
            let mut g: Vec<f64> = Vec::with_capacity(size * size);
            for y in -(r as i64)..=(r as i64) {
                for x in -(r as i64)..=(r as i64) {
                    let rr = (x * x + y * y) as f64;
                    let taper = (-rr / (2.0 * taper_w * taper_w)).exp();
                    // exact point symmetry ψ(-x) = ψ(x)
                    f.push(taper * 0.5 * (at(x, y) + at(-x, -y)));
                    g.push((-rr / (2.0 * corr_w * corr_w)).exp());
                }
            }
            let c = f.iter().sum::<f64>() / g.iter().sum::<f64>();
            f.iter()
                .zip(&g)
                .map(|(v, gv)| Complex64::new(v - c * gv, 0.0))
                .collect()
        })
        .collect();
    Ok(CakeWaveletStack {
        n_theta,
        size,
        filters,
    })
}

/// Relative spread `(max - min) / mean` of `Σ_k |ψ̂_k(ω)|` over the frequencies
/// of a `grid × grid` DFT whose radius lies in `[lo, hi]` (fractions of Nyquist).
pub fn partition_deviation(stack: &CakeWaveletStack, grid: usize, lo: f64, hi: f64) -> f64 {
    let size = stack.size();
    let r = size / 2;
    let forward = Fft2::new(grid, grid, false);
    let mut total = vec![0.0; grid * grid];
    for k in 0..stack.n_theta() {
        let mut buf = vec![Complex64::default(); grid * grid];
        for fy in 0..size {
            for fx in 0..size {
                let x = (fx as i64 - r as i64).rem_euclid(grid as i64) as usize;
                let y = (fy as i64 - r as i64).rem_euclid(grid as i64) as usize;
                buf[y * grid + x] = stack.filter(k)[fy * size + fx];
            }
        }
        forward.process(&mut buf);
        for (t, v) in total.iter_mut().zip(&buf) {
            *t += v.norm();
        }
    }
    let (mut min, mut max, mut sum, mut n) = (f64::INFINITY, 0.0f64, 0.0, 0usize);
    for i in 0..grid * grid {
        let u = signed_index(i % grid, grid) as f64 / grid as f64;
        let v = signed_index(i / grid, grid) as f64 / grid as f64;
        let rho = (u * u + v * v).sqrt() / 0.5;
        if rho >= lo && rho <= hi {
            min = min.min(total[i]);
            max = max.max(total[i]);
            sum += total[i];
            n += 1;
        }
    }
    (max - min) / (sum / n as f64)
}

/// Complex score `U(x, y, θ_k)`, θ-major storage.
#[derive(Debug, Clone)]
pub struct OrientationVolume {
    width: usize,
    height: usize,
    n_theta: usize,
    values: Vec<Complex64>,
}

impl OrientationVolume {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, k: usize) -> Complex64 {
        self.values[(k * self.height + y) * self.width + x]
    }

    pub fn slice(&self, k: usize) -> &[Complex64] {
        let n = self.width * self.height;
        &self.values[k * n..(k + 1) * n]
    }

    pub fn from_values(
        width: usize,
        height: usize,
        n_theta: usize,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        if values.len() != width * height * n_theta {
            return Err(Error::domain("orientation volume size mismatch"));
        }
        Ok(Self {
            width,
            height,
            n_theta,
            values,
        })
    }
}

/// Half-sample symmetric reflection of an index into `[0, n)`.
#[inline]
pub(crate) fn mirror(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Correlates the image with every wavelet, `U(x, θ_k) = Σ_y conj(ψ_k(y - x)) f(y)`,
/// using mirrored boundary extension.
pub fn orientation_score(image: &Raster2D, wavelets: &CakeWaveletStack) -> Result<OrientationVolume> {
    let (w, h) = (image.width(), image.height());
    let size = wavelets.size();
    if w < size || h < size {
        return Err(Error::domain(format!(
            "image {w}x{h} is smaller than the {size}x{size} wavelet"
        )));
    }
    let r = size / 2;
    let (pw, ph) = (w + 2 * r, h + 2 * r);
    let forward = Fft2::new(pw, ph, false);
    let inverse = Fft2::new(pw, ph, true);

    let mut padded: Vec<Complex64> = (0..pw * ph)
        .map(|i| {
            let x = mirror((i % pw) as i64 - r as i64, w);
            let y = mirror((i / pw) as i64 - r as i64, h);
            Complex64::new(image.get(x, y), 0.0)
        })
        .collect();
    forward.process(&mut padded);
    let image_hat = padded;
    let norm = 1.0 / (pw * ph) as f64;

    let slices: Vec<Vec<Complex64>> = (0..wavelets.n_theta())
        .into_par_iter()
        .map(|k| {
            let mut kern = vec![Complex64::default(); pw * ph];
            let f = wavelets.filter(k);
            for fy in 0..size {
                for fx in 0..size {
                    let x = (fx as i64 - r as i64).rem_euclid(pw as i64) as usize;
                    let y = (fy as i64 - r as i64).rem_euclid(ph as i64) as usize;
                    kern[y * pw + x] = f[fy * size + fx];
                }
            }
            forward.process(&mut kern);
            for (kv, iv) in kern.iter_mut().zip(&image_hat) {
                *kv = kv.conj() * iv;
            }
            inverse.process(&mut kern);
            let mut out = Vec::with_capacity(w * h);
            for y in 0..h {
                for x in 0..w {
                    out.push(kern[(y + r) * pw + x + r] * norm);
                }
            }
            out
        })
        .collect();

    Ok(OrientationVolume {
        width: w,
        height: h,
        n_theta: wavelets.n_theta(),
        values: slices.concat(),
    })
}

/// Contrast polarity of the structures of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Polarity {
    /// Dark structures on a bright background: maximize `Re(-U)`.
    #[default]
    Dark,
    /// Bright structures on a dark background: maximize `Re(U)`.
    Bright,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientationMap {
    width: usize,
    height: usize,
    n_theta: usize,
    bins: Vec<u16>,
}

impl OrientationMap {
    pub fn new(width: usize, height: usize, n_theta: usize, bins: Vec<u16>) -> Result<Self> {
        if bins.len() != width * height {
            return Err(Error::domain("orientation map size mismatch"));
        }
        if bins.iter().any(|&b| b as usize >= n_theta) {
            return Err(Error::domain("orientation bin out of range"));
        }
        Ok(Self {
            width,
            height,
            n_theta,
            bins,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    #[inline]
    pub fn bin(&self, x: usize, y: usize) -> usize {
        self.bins[y * self.width + x] as usize
    }

    pub fn bins(&self) -> &[u16] {
        &self.bins
    }
}

/// Per-pixel argmax over θ of the real part of the (polarity-adjusted)
/// score; ties go to the smallest bin.
pub fn dominant_orientations(volume: &OrientationVolume, polarity: Polarity) -> OrientationMap {
    let sign = match polarity {
        Polarity::Dark => -1.0,
        Polarity::Bright => 1.0,
    };
    let n = volume.width * volume.height;
    let bins = (0..n)
        .map(|i| {
            let mut best = 0usize;
            let mut best_v = sign * volume.values[i].re;
            for k in 1..volume.n_theta {
                let v = sign * volume.values[k * n + i].re;
                if v > best_v {
                    best_v = v;
                    best = k;
                }
            }
            best as u16
        })
        .collect();
    OrientationMap {
        width: volume.width,
        height: volume.height,
        n_theta: volume.n_theta,
        bins,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack() -> CakeWaveletStack {
        build_cake_wavelets(&CakeWaveletParams::default()).unwrap()
    }

    #[test]
    fn bspline_partition_of_unity() {
        for order in 0..=4 {
            for i in 0..50 {
                let x = -1.0 + i as f64 * 0.0437;
                let s: f64 = (-6..=6).map(|j| bspline(order, x - j as f64)).sum();
                assert!((s - 1.0).abs() < 1e-12, "order {order} x {x}: {s}");
            }
        }
        assert!((bspline(3, 0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((bspline(3, 1.0) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = CakeWaveletParams {
            size: 20,
            ..Default::default()
        };
        assert!(build_cake_wavelets(&p).is_err());
        let p = CakeWaveletParams {
            n_theta: 2,
            ..Default::default()
        };
        assert!(build_cake_wavelets(&p).is_err());
        let p = CakeWaveletParams {
            n_theta: 7,
            ..Default::default()
        };
        assert!(build_cake_wavelets(&p).is_err());
    }

    #[test]
    fn filters_are_point_symmetric_and_zero_mean() {
        let s = stack();
        assert_eq!(s.n_theta(), 16);
        let n = s.size() * s.size();
        for k in 0..16 {
            let f = s.filter(k);
            for i in 0..n {
                assert_eq!(f[i], f[n - 1 - i]);
            }
            let mean: f64 = f.iter().map(|c| c.re).sum::<f64>() / n as f64;
            assert!(mean.abs() < 1e-15);
        }
    }

    #[test]
    fn mid_band_partition_is_flat() {
        let dev = partition_deviation(&stack(), 64, 0.2, 0.5);
        assert!(dev < 0.05, "{dev}");
    }

    #[test]
    fn constant_image_gives_no_response() {
        let img = Raster2D::from_fn(40, 33, |_, _| 0.7);
        let u = orientation_score(&img, &stack()).unwrap();
        for k in 0..16 {
            assert!(u.slice(k).iter().all(|c| c.norm() < 1e-8));
        }
    }

    #[test]
    fn tie_breaks_to_smallest_bin() {
        let vals = vec![Complex64::new(-0.5, 0.0); 4];
        let v = OrientationVolume::from_values(1, 1, 4, vals).unwrap();
        assert_eq!(dominant_orientations(&v, Polarity::Dark).bin(0, 0), 0);
        let vals = [-0.1, -0.9, -0.3, -0.2]
            .iter()
            .map(|&r| Complex64::new(r, 0.0))
            .collect();
        let v = OrientationVolume::from_values(1, 1, 4, vals).unwrap();
        assert_eq!(dominant_orientations(&v, Polarity::Dark).bin(0, 0), 1);
        assert_eq!(dominant_orientations(&v, Polarity::Bright).bin(0, 0), 0);
    }

    #[test]
    fn image_smaller_than_filter_rejected() {
        let img = Raster2D::zeros(10, 30);
        assert!(orientation_score(&img, &stack()).is_err());
    }

    #[test]
    fn bin_of_angle_wraps() {
        assert_eq!(bin_of_angle(0.0, 16), 8);
        assert_eq!(bin_of_angle(PI / 2.0, 16), 0);
        assert_eq!(bin_of_angle(-PI / 2.0, 16), 0);
        assert_eq!(bin_of_angle(PI / 4.0, 16), 12);
    }
}
