//! Kernel distances and grid-search fitting of `(α, D33)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fp_kernel::{
    default_pad, probabilistic_kernel, sample_resolvent_montecarlo, symmetrize, FPParams, FourierOptions,
    GammaConvention, MonteCarloOptions, DEFAULT_N_THETA_SOLVER,
};
use crate::kernel::KernelVolume;

/// Parameter ranges and counts of the full search grid.
pub const ALPHA_RANGE: (f64, f64) = (1e-5, 1e-2);
pub const D33_RANGE: (f64, f64) = (1e-6, 5e-3);
pub const ALPHA_COUNT: usize = 50;
pub const D33_COUNT: usize = 100;
pub const COARSE_COUNT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    /// `100 · ‖a − b‖₂`
    AbsL2,
    /// `100 · ‖a − b‖₂ / max(‖a‖₂, ‖b‖₂)`
    #[default]
    RelL2,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::AbsL2 => "abs_l2",
            Metric::RelL2 => "rel_l2",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs_l2" => Ok(Metric::AbsL2),
            "rel_l2" => Ok(Metric::RelL2),
            _ => Err(Error::domain(format!("unknown metric {s:?}"))),
        }
    }
}

/// Distance between two l1-normalized kernels of the same shape, in percent.
pub fn kernel_error(a: &KernelVolume, b: &KernelVolume, metric: Metric) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch(format!(
            "kernels differ in shape: d={}, n_theta={} vs d={}, n_theta={}",
            a.d(),
            a.n_theta(),
            b.d(),
            b.n_theta()
        )));
    }
    if !a.is_normalized() || !b.is_normalized() {
        return Err(Error::Normalization("kernel_error needs l1-normalized kernels".into()));
    }
    let diff = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    Ok(match metric {
        Metric::AbsL2 => 100.0 * diff,
        Metric::RelL2 => {
            let scale = a.l2_norm().max(b.l2_norm());
            if scale == 0.0 {
                0.0
            } else {
                100.0 * diff / scale
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

/// `n` points from `lo` to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, n: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if n == 0 || !(lo > 0.0 && hi >= lo && hi.is_finite()) || (n > 1 && hi == lo) {
        return Err(Error::domain(format!("invalid grid [{lo}, {hi}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let t = |i: usize| i as f64 / (n - 1) as f64;
    Ok((0..n)
        .map(|i| match spacing {
            Spacing::Log => (lo.ln() + t(i) * (hi.ln() - lo.ln())).exp(),
            Spacing::Linear => lo + t(i) * (hi - lo),
        })
        .collect())
}

/// The search grids; `coarse` keeps 10 evenly spread nodes of each axis.
pub fn search_grids(spacing: Spacing, coarse: bool) -> (Vec<f64>, Vec<f64>) {
    let full = |(lo, hi): (f64, f64), n| grid(lo, hi, n, spacing).expect("constant ranges are valid");
    let alphas = full(ALPHA_RANGE, ALPHA_COUNT);
    let d33s = full(D33_RANGE, D33_COUNT);
    if !coarse {
        return (alphas, d33s);
    }
    let pick = |v: &[f64]| {
        (0..COARSE_COUNT)
            .map(|i| v[(i * (v.len() - 1) + (COARSE_COUNT - 1) / 2) / (COARSE_COUNT - 1)])
            .collect::<Vec<_>>()
    };
    (pick(&alphas), pick(&d33s))
}

fn check_axis(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::domain(format!("{name} grid is empty")));
    }
    if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain(format!("{name} grid must be positive and strictly increasing")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solver {
    Fourier,
    MonteCarlo { n_samples: u64, seed: u64, dt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub solver: Solver,
    pub n_theta_solver: usize,
    /// Spectral padding; `None` uses [`default_pad`] per `α`.
    pub pad: Option<usize>,
    pub blur_s: f64,
    pub convention: GammaConvention,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            solver: Solver::Fourier,
            n_theta_solver: DEFAULT_N_THETA_SOLVER,
            pad: None,
            blur_s: 0.0,
            convention: GammaConvention::ReferenceFrame,
        }
    }
}

/// `K^prob` at one parameter point on the statistical grid `(d, n_theta)`.
pub fn prob_kernel(alpha: f64, d33: f64, d: usize, n_theta: usize, opts: &FitOptions) -> Result<KernelVolume> {
    let p = FPParams::new(alpha, d33)?.with_blur(opts.blur_s)?;
    match opts.solver {
        Solver::Fourier => {
            let fo = FourierOptions {
                n_theta: opts.n_theta_solver,
                pad: opts.pad.unwrap_or_else(|| default_pad(alpha, d + 1)),
            };
            probabilistic_kernel(&p, d, n_theta, &fo, opts.convention)
        }
        Solver::MonteCarlo { n_samples, seed, dt } => {
            let mo = MonteCarloOptions {
                n_theta: opts.n_theta_solver,
                n_samples,
                seed,
                dt,
            };
            let r = sample_resolvent_montecarlo(&p, d + 1, &mo)?;
            symmetrize(&r, n_theta, d, opts.convention)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub alpha: f64,
    pub d33: f64,
    pub sigma: f64,
    pub error_pct: f64,
    /// Node indices into the α and D33 grids.
    pub index: (usize, usize),
    pub grid_shape: (usize, usize),
}

/// Errors over the grid, α-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMatrix {
    pub alphas: Vec<f64>,
    pub d33s: Vec<f64>,
    pub values: Vec<f64>,
}

impl ErrorMatrix {
    pub fn get(&self, ia: usize, id: usize) -> f64 {
        self.values[ia * self.d33s.len() + id]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `alpha;d33;error` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha;d33;error_pct\n");
        for (ia, a) in self.alphas.iter().enumerate() {
            for (id, d) in self.d33s.iter().enumerate() {
                s.push_str(&format!("{a:e};{d:e};{:.6}\n", self.get(ia, id)));
            }
        }
        s
    }
}

/// Probabilistic kernels on every grid node, built once and reused for
/// several targets.
pub struct KernelGrid {
    alphas: Vec<f64>,
    d33s: Vec<f64>,
    kernels: Vec<KernelVolume>,
}

impl KernelGrid {
    pub fn build(alphas: &[f64], d33s: &[f64], d: usize, n_theta: usize, opts: &FitOptions) -> Result<Self> {
        check_axis("alpha", alphas)?;
        check_axis("D33", d33s)?;
        let mut kernels = Vec::with_capacity(alphas.len() * d33s.len());
        for &a in alphas {
            for &d33 in d33s {
                kernels.push(prob_kernel(a, d33, d, n_theta, opts)?);
            }
        }
        Ok(Self {
            alphas: alphas.to_vec(),
            d33s: d33s.to_vec(),
            kernels,
        })
    }

    pub fn kernel(&self, ia: usize, id: usize) -> &KernelVolume {
        &self.kernels[ia * self.d33s.len() + id]
    }

    /// Exhaustive search; ties go to the smallest `(α, D33)`.
    pub fn fit(&self, target: &KernelVolume, metric: Metric) -> Result<(FitResult, ErrorMatrix)> {
        let values = self
            .kernels
            .iter()
            .map(|k| kernel_error(target, k, metric))
            .collect::<Result<Vec<_>>>()?;
        let mut best = 0;
        for (i, v) in values.iter().enumerate() {
            if *v < values[best] {
                best = i;
            }
        }
        let nd = self.d33s.len();
        let (ia, id) = (best / nd, best % nd);
        let d33 = self.d33s[id];
        let result = FitResult {
            alpha: self.alphas[ia],
            d33,
            sigma: (2.0 * d33).sqrt(),
            error_pct: values[best],
            index: (ia, id),
            grid_shape: (self.alphas.len(), nd),
        };
        let matrix = ErrorMatrix {
            alphas: self.alphas.clone(),
            d33s: self.d33s.clone(),
            values,
        };
        Ok((result, matrix))
    }
}

/// Grid point whose `K^prob` is closest to `target`.
pub fn fit_parameters(
    target: &KernelVolume,
    alphas: &[f64],
    d33s: &[f64],
    metric: Metric,
    opts: &FitOptions,
) -> Result<(FitResult, ErrorMatrix)> {
    KernelGrid::build(alphas, d33s, target.d(), target.n_theta(), opts)?.fit(target, metric)
}

/// Multiplies every entry by `1 + amplitude · U(-1, 1)` and re-normalizes.
pub fn with_relative_noise(k: &KernelVolume, amplitude: f64, seed: u64) -> Result<KernelVolume> {
    if !(0.0..1.0).contains(&amplitude) {
        return Err(Error::domain(format!("noise amplitude must lie in [0, 1), got {amplitude}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = k
        .values()
        .iter()
        .map(|v| v * (1.0 + amplitude * rng.gen_range(-1.0..1.0)))
        .collect();
    KernelVolume::from_values(k.d(), k.n_theta(), values)?.normalized_l1()
}
