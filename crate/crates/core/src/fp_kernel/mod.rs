//! Time-integrated Fokker–Planck resolvent of the direction process on
//! `ℝ² × S¹` and its symmetrized projection to `ℝ² × P¹`.
//!
//! The forward generator moves at unit speed along `(cos θ, sin θ)` while `θ`
//! diffuses with coefficient `D33`; the resolvent `R = α ∫ K_t e^{-αt} dt` solves
//! `(cos θ ∂x + sin θ ∂y − D33 ∂²θ + α) R = α δ`.

mod fourier;
mod montecarlo;
mod symmetrize;

pub use fourier::{default_pad, frequency_response, solve_resolvent_fourier, FourierOptions, MAX_DEFAULT_GRID};
pub use montecarlo::{sample_resolvent_montecarlo, MonteCarloOptions};
pub use symmetrize::{symmetrize, GammaConvention, SymmetricKernel};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::KernelVolume;

/// Default number of solver orientations on `[0, 2π)`.
pub const DEFAULT_N_THETA_SOLVER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FPParams {
    alpha: f64,
    d33: f64,
    blur_s: f64,
}

impl FPParams {
    pub fn new(alpha: f64, d33: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
        }
        if !(d33.is_finite() && d33 > 0.0) {
            return Err(Error::domain(format!("D33 must be positive, got {d33}")));
        }
        Ok(Self {
            alpha,
            d33,
            blur_s: 0.0,
        })
    }

    /// Spatial Gaussian blur (standard deviation in pixels) applied to every θ-slice.
    pub fn with_blur(mut self, blur_s: f64) -> Result<Self> {
        if !(blur_s.is_finite() && blur_s >= 0.0) {
            return Err(Error::domain(format!("blur must be nonnegative, got {blur_s}")));
        }
        self.blur_s = blur_s;
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn d33(&self) -> f64 {
        self.d33
    }

    /// `σ = √(2·D33)`.
    pub fn sigma(&self) -> f64 {
        (2.0 * self.d33).sqrt()
    }

    pub fn blur_s(&self) -> f64 {
        self.blur_s
    }

    pub fn expected_lifetime(&self) -> f64 {
        1.0 / self.alpha
    }
}

/// Resolvent density on `(θ_j, y, x)`, `θ_j = 2πj/n_θ`, `x, y ∈ [-d, d]`.
///
/// Values are densities per unit area and radian; the same θ-major, `y`,
/// `x` layout as [`KernelVolume`].
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventVolume {
    d: usize,
    n_theta: usize,
    values: Vec<f64>,
}

impl ResolventVolume {
    pub fn from_values(d: usize, n_theta: usize, values: Vec<f64>) -> Result<Self> {
        let side = 2 * d + 1;
        if values.len() != side * side * n_theta {
            return Err(Error::DimensionMismatch(format!(
                "resolvent d={d}, n_theta={n_theta} needs {} values, got {}",
                side * side * n_theta,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain("resolvent values must be finite and nonnegative"));
        }
        Ok(Self { d, n_theta, values })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn side(&self) -> usize {
        2 * self.d + 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn theta_step(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn theta_of(&self, j: usize) -> f64 {
        j as f64 * self.theta_step()
    }

    #[inline]
    pub fn get(&self, j: usize, x: i64, y: i64) -> f64 {
        let d = self.d as i64;
        if x.abs() > d || y.abs() > d {
            return 0.0;
        }
        let side = self.side();
        self.values[(j * side + (y + d) as usize) * side + (x + d) as usize]
    }

    pub fn slice(&self, j: usize) -> &[f64] {
        let n = self.side() * self.side();
        &self.values[j * n..(j + 1) * n]
    }

    /// Bilinear interpolation in slice `j`, zero outside the box.
    pub fn bilinear(&self, j: usize, x: f64, y: f64) -> f64 {
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let (x0, y0) = (x0 as i64, y0 as i64);
        let v00 = self.get(j, x0, y0);
        let v10 = self.get(j, x0 + 1, y0);
        let v01 = self.get(j, x0, y0 + 1);
        let v11 = self.get(j, x0 + 1, y0 + 1);
        (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11)
    }

    /// `Σ values · Δθ`, the probability mass inside the box.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.theta_step()
    }

    /// Copy as a kernel volume over the solver's `[0, 2π)` orientations.
    pub fn to_kernel_volume(&self) -> KernelVolume {
        KernelVolume::from_values(self.d, self.n_theta, self.values.clone())
            .expect("resolvent values are finite and nonnegative")
    }

    /// Same volume restricted to a smaller box.
    pub fn cropped(&self, d: usize) -> Result<Self> {
        if d > self.d {
            return Err(Error::domain(format!("cannot crop d={} to larger d={d}", self.d)));
        }
        let side = 2 * d + 1;
        let mut values = Vec::with_capacity(side * side * self.n_theta);
        let di = d as i64;
        for j in 0..self.n_theta {
            for y in -di..=di {
                for x in -di..=di {
                    values.push(self.get(j, x, y));
                }
            }
        }
        Ok(Self {
            d,
            n_theta: self.n_theta,
            values,
        })
    }

    /// Averages over orientation cells of width `2π/n_out` centred on the
    /// coarse angles (trapezoid rule on the fine grid), matching the
    /// nearest-angle binning of the sampler.
    pub fn theta_cell_average(&self, n_out: usize) -> Result<Self> {
        if n_out == 0 || self.n_theta % n_out != 0 {
            return Err(Error::domain(format!(
                "{} orientations cannot be averaged onto {n_out}",
                self.n_theta
            )));
        }
        let f = self.n_theta / n_out;
        if f > 1 && f % 2 != 0 {
            return Err(Error::domain("orientation refinement factor must be even"));
        }
        let cell = self.side() * self.side();
        let h = (f / 2) as i64;
        let n = self.n_theta as i64;
        let mut values = vec![0.0; cell * n_out];
        for (k, out) in values.chunks_mut(cell).enumerate() {
            for o in -h..=h {
                let w = if f > 1 && o.abs() == h { 0.5 } else { 1.0 } / f as f64;
                let src = self.slice(((k * f) as i64 + o).rem_euclid(n) as usize);
                for (v, s) in out.iter_mut().zip(src) {
                    *v += w * s;
                }
            }
        }
        Ok(Self {
            d: self.d,
            n_theta: n_out,
            values,
        })
    }
}

/// Symmetrized kernel `K^prob` on the statistical grid: spectral solve on
/// the box `d + 1` (so rotated lookups near the rim stay inside), then
/// [`symmetrize`] onto `n_theta_out` bins and the box `d`.
pub fn probabilistic_kernel(
    p: &FPParams,
    d: usize,
    n_theta_out: usize,
    opts: &FourierOptions,
    convention: GammaConvention,
) -> Result<KernelVolume> {
    let r = solve_resolvent_fourier(p, d + 1, opts)?;
    symmetrize(&r, n_theta_out, d, convention)
}

/// Relative l2 distance `‖a − b‖ / max(‖a‖, ‖b‖)` of two volumes after
/// l1-normalizing each.
pub fn relative_l2_normalized(a: &ResolventVolume, b: &ResolventVolume) -> Result<f64> {
    if a.d != b.d || a.n_theta != b.n_theta {
        return Err(Error::DimensionMismatch("resolvent shapes differ".into()));
    }
    let sa: f64 = a.values.iter().sum();
    let sb: f64 = b.values.iter().sum();
    if sa == 0.0 || sb == 0.0 {
        return Err(Error::Normalization("resolvent has zero mass in the box".into()));
    }
    let (mut diff, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.values.iter().zip(&b.values) {
        let (x, y) = (x / sa, y / sb);
        diff += (x - y) * (x - y);
        na += x * x;
        nb += y * y;
    }
    Ok(diff.sqrt() / na.max(nb).sqrt())
}
