//! Spectral solve on a periodic `N × N` grid with `θ` discretized on
//! `n_θ` points: every spatial frequency gives one cyclic tridiagonal system.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{FPParams, ResolventVolume};
use crate::error::{Error, Result};
use crate::fft::signed_index;

/// Largest grid side used by [`default_pad`].
pub const MAX_DEFAULT_GRID: usize = 2187;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FourierOptions {
    pub n_theta: usize,
    /// Padding around the `[-d, d]²` box; the grid side is `2(d + pad) + 1`.
    pub pad: usize,
}

/// Smallest `pad ≥ d` whose grid side is 3-, 5- and 7-smooth and at least
/// `2(d + 3/α) + 1`, capped at [`MAX_DEFAULT_GRID`].
pub fn default_pad(alpha: f64, d: usize) -> usize {
    let want = (3.0 / alpha).ceil().min(1e7) as usize;
    let min_side = 2 * (d + want.max(d)) + 1;
    let floor_side = 4 * d + 1;
    let side = smooth_odd_at_least(min_side.min(MAX_DEFAULT_GRID).max(floor_side));
    let side = if side > MAX_DEFAULT_GRID && floor_side <= MAX_DEFAULT_GRID {
        MAX_DEFAULT_GRID
    } else {
        side
    };
    (side - 1) / 2 - d
}

fn smooth_odd_at_least(n: usize) -> usize {
    let mut m = if n % 2 == 0 { n + 1 } else { n };
    loop {
        let mut r = m;
        for p in [3, 5, 7] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 2;
    }
}

/// Solves `A x = rhs` for the cyclic tridiagonal `A` with diagonal `diag`
/// and constant off-diagonals `off` (including the corners).
pub(crate) fn solve_cyclic(diag: &[Complex64], off: f64, rhs: &[Complex64], out: &mut [Complex64], work: &mut [Complex64]) {
    let n = diag.len();
    debug_assert!(n >= 3);
    // Sherman–Morrison with u = (γ, 0, …, 0, off), v = (1, 0, …, 0, off/γ)
    let gamma = -diag[0];
    let b = Complex64::new(off, 0.0);
    let (cp, rest) = work.split_at_mut(n);
    let (y, z) = rest.split_at_mut(n);
    let d_at = |i: usize| {
        if i == 0 {
            diag[0] - gamma
        } else if i == n - 1 {
            diag[n - 1] - b * b / gamma
        } else {
            diag[i]
        }
    };
    // forward sweep shared by both right-hand sides
    let mut denom = d_at(0);
    cp[0] = b / denom;
    y[0] = rhs[0] / denom;
    z[0] = gamma / denom;
    for i in 1..n {
        denom = d_at(i) - b * cp[i - 1];
        cp[i] = b / denom;
        let u_i = if i == n - 1 { b } else { Complex64::new(0.0, 0.0) };
        y[i] = (rhs[i] - b * y[i - 1]) / denom;
        z[i] = (u_i - b * z[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        y[i] -= cp[i] * y[i + 1];
        z[i] -= cp[i] * z[i + 1];
    }
    let vy = y[0] + b / gamma * y[n - 1];
    let vz = z[0] + b / gamma * z[n - 1];
    let f = vy / (Complex64::new(1.0, 0.0) + vz);
    for i in 0..n {
        out[i] = y[i] - f * z[i];
    }
}

/// `R̂(ω, θ_j)` for one spatial frequency `ω` in radians per pixel.
pub fn frequency_response(p: &FPParams, n_theta: usize, wx: f64, wy: f64) -> Vec<Complex64> {
    let dtheta = 2.0 * PI / n_theta as f64;
    let diffusion = p.d33() / (dtheta * dtheta);
    let diag: Vec<Complex64> = (0..n_theta)
        .map(|j| {
            let t = j as f64 * dtheta;
            Complex64::new(p.alpha() + 2.0 * diffusion, wx * t.cos() + wy * t.sin())
        })
        .collect();
    let mut rhs = vec![Complex64::default(); n_theta];
    rhs[0] = Complex64::new(p.alpha() / dtheta, 0.0);
    let mut out = vec![Complex64::default(); n_theta];
    let mut work = vec![Complex64::default(); 3 * n_theta];
    solve_cyclic(&diag, -diffusion, &rhs, &mut out, &mut work);
    out
}

/// Paths that never leave the `θ = 0` node travel straight along `+x`, giving
/// the singular line density `(α/Δθ) e^{-cx} H(x) δ(y)` with
/// `c = α + 2 D33/Δθ²`. It is removed from the spectrum and added back in
/// closed form, so neither its jump at the origin nor its periodic images
/// ring through the grid.
struct BallisticAtom {
    weight: f64,
    rate: f64,
}

impl BallisticAtom {
    fn new(p: &FPParams, n_theta: usize) -> Self {
        let dtheta = 2.0 * PI / n_theta as f64;
        Self {
            weight: p.alpha() / dtheta,
            rate: p.alpha() + 2.0 * p.d33() / (dtheta * dtheta),
        }
    }

    fn spectrum(&self, wx: f64) -> Complex64 {
        self.weight / Complex64::new(self.rate, wx)
    }

    /// Point value, blurred by an isotropic Gaussian of width `s`; the jump
    /// at `x = 0` takes its midpoint value when `s = 0`.
    fn density(&self, x: f64, y: f64, s: f64) -> f64 {
        let c = self.rate;
        if s == 0.0 {
            if y != 0.0 || x < 0.0 {
                return 0.0;
            }
            let v = self.weight * (-c * x).exp();
            return if x == 0.0 { 0.5 * v } else { v };
        }
        let gy = (-0.5 * y * y / (s * s)).exp() / (s * (2.0 * PI).sqrt());
        // ∫₀^∞ e^{-ct} g_s(x - t) dt = ½ exp(c²s²/2 - cx) erfc(z)
        let z = (c * s * s - x) / (s * std::f64::consts::SQRT_2);
        let hx = if z < 5.0 {
            0.5 * (0.5 * c * c * s * s - c * x).exp() * libm::erfc(z)
        } else {
            // asymptotic erfc, combined with the exponential to avoid overflow
            let z2 = z * z;
            let series = 1.0 - 0.5 / z2 + 0.75 / (z2 * z2) - 1.875 / (z2 * z2 * z2);
            0.5 * (-0.5 * x * x / (s * s)).exp() / (z * PI.sqrt()) * series
        };
        self.weight * gy * hx
    }
}

/// Resolvent on the box `[-d, d]²` from the periodic spectral solve.
///
/// Negative values from Gibbs ringing are clamped to zero.
pub fn solve_resolvent_fourier(p: &FPParams, d: usize, opts: &FourierOptions) -> Result<ResolventVolume> {
    let n = opts.n_theta;
    if n < 32 || n % 2 != 0 {
        return Err(Error::domain(format!("n_theta_solver must be even and >= 32, got {n}")));
    }
    if opts.pad < d {
        return Err(Error::domain(format!("pad {} must be at least d = {d}", opts.pad)));
    }
    let grid = 2 * (d + opts.pad) + 1;
    let side = 2 * d + 1;
    let dtheta = 2.0 * PI / n as f64;
    let diffusion = p.d33() / (dtheta * dtheta);
    let base = p.alpha() + 2.0 * diffusion;
    let trig: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let t = j as f64 * dtheta;
            (t.cos(), t.sin())
        })
        .collect();
    let omega = |k: usize| 2.0 * PI * signed_index(k, grid) as f64 / grid as f64;
    let blur2 = p.blur_s() * p.blur_s();

    let atom = BallisticAtom::new(p, n);

    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(grid);
    let kx_count = grid / 2 + 1;

    // partial[kx][j][y]: inverse transform along ky, rows |y| ≤ d kept
    let partial: Vec<Result<Vec<Complex64>>> = (0..kx_count)
        .into_par_iter()
        .map(|kx| {
            let wx = omega(kx);
            let mut cols = vec![Complex64::default(); n * grid];
            let mut diag = vec![Complex64::default(); n];
            let mut rhs = vec![Complex64::default(); n];
            rhs[0] = Complex64::new(p.alpha() / dtheta, 0.0);
            let mut out = vec![Complex64::default(); n];
            let mut work = vec![Complex64::default(); 3 * n];
            // reflection y → -y, θ → -θ: only ky ≤ grid/2 needs a solve
            for ky in 0..=grid / 2 {
                let wy = omega(ky);
                for j in 0..n {
                    diag[j] = Complex64::new(base, wx * trig[j].0 + wy * trig[j].1);
                }
                solve_cyclic(&diag, -diffusion, &rhs, &mut out, &mut work);
                out[0] -= atom.spectrum(wx);
                let damp = if blur2 > 0.0 {
                    (-0.5 * blur2 * (wx * wx + wy * wy)).exp()
                } else {
                    1.0
                };
                for j in 0..n {
                    let v = out[j] * damp;
                    if !v.re.is_finite() || !v.im.is_finite() {
                        return Err(Error::Numeric(format!(
                            "singular system at frequency ({kx}, {ky})"
                        )));
                    }
                    cols[j * grid + ky] = v;
                    if ky > 0 {
                        cols[((n - j) % n) * grid + grid - ky] = v;
                    }
                }
            }
            let mut scratch = vec![Complex64::default(); ifft.get_inplace_scratch_len()];
            let mut kept = Vec::with_capacity(n * side);
            for j in 0..n {
                let col = &mut cols[j * grid..(j + 1) * grid];
                ifft.process_with_scratch(col, &mut scratch);
                for y in -(d as i64)..=(d as i64) {
                    kept.push(col[y.rem_euclid(grid as i64) as usize]);
                }
            }
            Ok(kept)
        })
        .collect();
    let partial: Vec<Vec<Complex64>> = partial.into_iter().collect::<Result<_>>()?;

    let norm = 1.0 / (grid as f64 * grid as f64);
    let rows: Vec<Vec<f64>> = (0..n * side)
        .into_par_iter()
        .map(|jy| {
            let mut line = vec![Complex64::default(); grid];
            for kx in 0..kx_count {
                line[kx] = partial[kx][jy];
                if kx > 0 {
                    // real output: column -kx is the conjugate of column kx
                    line[grid - kx] = partial[kx][jy].conj();
                }
            }
            let mut scratch = vec![Complex64::default(); ifft.get_inplace_scratch_len()];
            ifft.process_with_scratch(&mut line, &mut scratch);
            let (j, y) = (jy / side, jy % side);
            let yf = y as f64 - d as f64;
            (-(d as i64)..=(d as i64))
                .map(|x| {
                    let mut v = line[x.rem_euclid(grid as i64) as usize].re * norm;
                    if j == 0 {
                        v += atom.density(x as f64, yf, p.blur_s());
                    }
                    v.max(0.0)
                })
                .collect()
        })
        .collect();
    ResolventVolume::from_values(d, n, rows.concat())
}
