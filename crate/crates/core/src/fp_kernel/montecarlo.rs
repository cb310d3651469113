//! Endpoint sampling of the direction process stopped at an exponential time.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;

use super::{FPParams, ResolventVolume};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloOptions {
    pub n_theta: usize,
    pub n_samples: u64,
    pub seed: u64,
    pub dt: f64,
}

const BATCH: u64 = 1 << 14;
/// Gaussian splats are truncated at this many standard deviations.
const SPLAT_RADIUS: f64 = 4.0;

/// Endpoint `(θ index, x, y)` of one path, or `None` once it can no longer
/// end within `reach` of the origin in the max norm.
fn sample_endpoint(p: &FPParams, reach: f64, n_theta: usize, dt: f64, rng: &mut ChaCha8Rng) -> Option<(usize, f64, f64)> {
    let lifetime = Exp::new(p.alpha()).expect("alpha validated").sample(rng);
    let step_sd = p.sigma() * dt.sqrt();
    let (mut x, mut y, mut theta) = (0.0f64, 0.0f64, 0.0f64);
    let (mut c, mut s) = (1.0f64, 0.0f64);
    let mut t = 0.0;
    while t < lifetime {
        let h = dt.min(lifetime - t);
        x += c * h;
        y += s * h;
        let z: f64 = rng.sample(StandardNormal);
        let dth = if h < dt { p.sigma() * h.sqrt() * z } else { step_sd * z };
        theta += dth;
        // rotate (c, s) by dth with a fifth-order expansion, then renormalize
        let d2 = dth * dth;
        let cd = 1.0 - d2 * (0.5 - d2 / 24.0);
        let sd = dth * (1.0 - d2 * (1.0 / 6.0 - d2 / 120.0));
        let (nc, ns) = (c * cd - s * sd, s * cd + c * sd);
        let inv = 1.0 / (nc * nc + ns * ns).sqrt();
        c = nc * inv;
        s = ns * inv;
        t += h;
        // the box cannot be re-entered once it is farther than the remaining time
        let gx = (x.abs() - reach).max(0.0);
        let gy = (y.abs() - reach).max(0.0);
        let gap2 = gx * gx + gy * gy;
        let left = lifetime - t;
        if gap2 > 0.0 && gap2 > left * left {
            return None;
        }
    }
    if x.abs() >= reach || y.abs() >= reach {
        return None;
    }
    let step = 2.0 * PI / n_theta as f64;
    let j = (theta / step).round().rem_euclid(n_theta as f64) as usize % n_theta;
    Some((j, x, y))
}

/// Monte Carlo estimate of the resolvent density on `[-d, d]²`.
///
/// With `blur_s = 0` endpoints are binned to the nearest pixel, which gives
/// pixel-cell integrals. With `blur_s > 0` every endpoint is spread with a
/// Gaussian of that width, which estimates the blurred density at pixel
/// centres, the quantity the spectral solver returns.
///
/// Sample `i` draws from a ChaCha8 stream `i` keyed by `seed` and endpoints
/// are accumulated in sample order, so the result does not depend on the
/// thread count.
pub fn sample_resolvent_montecarlo(p: &FPParams, d: usize, opts: &MonteCarloOptions) -> Result<ResolventVolume> {
    let n = opts.n_theta;
    if n < 4 || n % 2 != 0 {
        return Err(Error::domain(format!("n_theta_solver must be even and >= 4, got {n}")));
    }
    if opts.n_samples == 0 {
        return Err(Error::domain("n_samples must be at least 1"));
    }
    if !(opts.dt > 0.0 && opts.dt <= 0.5) {
        return Err(Error::domain(format!("dt must lie in (0, 0.5], got {}", opts.dt)));
    }
    let s = p.blur_s();
    let support = (SPLAT_RADIUS * s).ceil() as i64;
    let reach = d as f64 + 0.5 + support as f64;
    let batches = opts.n_samples.div_ceil(BATCH);
    let endpoints: Vec<Vec<(usize, f64, f64)>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let end = ((b + 1) * BATCH).min(opts.n_samples);
            let mut out = Vec::new();
            for i in b * BATCH..end {
                rng.set_stream(i);
                rng.set_word_pos(0);
                if let Some(e) = sample_endpoint(p, reach, n, opts.dt, &mut rng) {
                    out.push(e);
                }
            }
            out
        })
        .collect();
    let mut per_theta: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    for (j, x, y) in endpoints.into_iter().flatten() {
        per_theta[j].push((x, y));
    }
    let side = 2 * d + 1;
    let di = d as i64;
    let scale = 1.0 / (opts.n_samples as f64 * 2.0 * PI / n as f64);
    let slices: Vec<Vec<f64>> = per_theta
        .par_iter()
        .map(|pts| {
            let mut slice = vec![0.0f64; side * side];
            if s == 0.0 {
                let mut counts = vec![0u64; side * side];
                for &(x, y) in pts {
                    let (bx, by) = (x.round() as i64, y.round() as i64);
                    if bx.abs() <= di && by.abs() <= di {
                        counts[(by + di) as usize * side + (bx + di) as usize] += 1;
                    }
                }
                for (v, c) in slice.iter_mut().zip(counts) {
                    *v = c as f64 * scale;
                }
            } else {
                let norm = scale / (2.0 * PI * s * s);
                let inv2 = 0.5 / (s * s);
                let mut wx = Vec::with_capacity(2 * support as usize + 1);
                let mut wy = Vec::with_capacity(2 * support as usize + 1);
                for &(x, y) in pts {
                    let (cx, cy) = (x.round() as i64, y.round() as i64);
                    wx.clear();
                    wy.clear();
                    for o in -support..=support {
                        let gx = (cx + o) as f64 - x;
                        let gy = (cy + o) as f64 - y;
                        wx.push((-gx * gx * inv2).exp());
                        wy.push((-gy * gy * inv2).exp());
                    }
                    for (oy, wyv) in wy.iter().enumerate() {
                        let py = cy + oy as i64 - support;
                        if py.abs() > di {
                            continue;
                        }
                        let row = (py + di) as usize * side;
                        for (ox, wxv) in wx.iter().enumerate() {
                            let px = cx + ox as i64 - support;
                            if px.abs() <= di {
                                slice[row + (px + di) as usize] += norm * wxv * wyv;
                            }
                        }
                    }
                }
            }
            slice
        })
        .collect();
    ResolventVolume::from_values(d, n, slices.concat())
}
