//! The `(2d+1) × (2d+1) × n_θ` kernel volume shared by statistical and
//! probabilistic kernels.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How relative positions of a pair are brought into a common frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RotationMode {
    /// Rotate the offset by the reference point's orientation (`h⁻¹g`).
    #[default]
    Group,
    /// Rotate the offset by the relative orientation of the pair.
    Literal,
}

impl fmt::Display for RotationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RotationMode::Group => "group",
            RotationMode::Literal => "literal",
        })
    }
}

impl FromStr for RotationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "group" => Ok(RotationMode::Group),
            "literal" => Ok(RotationMode::Literal),
            _ => Err(Error::domain(format!("unknown rotation mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Stat,
    Prob,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::Stat => "stat",
            KernelKind::Prob => "prob",
        })
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stat" => Ok(KernelKind::Stat),
            "prob" => Ok(KernelKind::Prob),
            _ => Err(Error::domain(format!("unknown kernel kind {s:?}"))),
        }
    }
}

/// Wraps an orientation-bin difference into `[-n/2, n/2)`.
#[inline]
pub fn wrap_bin_difference(diff: i64, n_theta: usize) -> i64 {
    let n = n_theta as i64;
    (diff + n / 2).rem_euclid(n) - n / 2
}

/// Real-valued volume over `θ ∈ {-π/2 + kπ/n_θ}`, `y, x ∈ [-d, d]`.
///
/// Storage is θ-major, then `y` (top to bottom), then `x` (left to right); the
/// spatial origin sits at `(d, d)` of every slice and `θ = 0` at slice `n_θ/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelVolume {
    d: usize,
    n_theta: usize,
    values: Vec<f64>,
    normalized: bool,
}

impl KernelVolume {
    pub fn zeros(d: usize, n_theta: usize) -> Self {
        let side = 2 * d + 1;
        Self {
            d,
            n_theta,
            values: vec![0.0; side * side * n_theta],
            normalized: false,
        }
    }

    pub fn from_values(d: usize, n_theta: usize, values: Vec<f64>) -> Result<Self> {
        let side = 2 * d + 1;
        if values.len() != side * side * n_theta {
            return Err(Error::DimensionMismatch(format!(
                "d={d}, n_theta={n_theta} needs {} values, got {}",
                side * side * n_theta,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain(format!(
                "kernel value {} at index {i} is negative or non-finite",
                values[i]
            )));
        }
        let normalized = (values.iter().sum::<f64>() - 1.0).abs() <= 1e-12;
        Ok(Self {
            d,
            n_theta,
            values,
            normalized,
        })
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    #[inline]
    pub fn side(&self) -> usize {
        2 * self.d + 1
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn same_shape(&self, other: &KernelVolume) -> bool {
        self.d == other.d && self.n_theta == other.n_theta
    }

    /// Orientation represented by slice `k`.
    pub fn theta_of(&self, k: usize) -> f64 {
        -PI / 2.0 + k as f64 * PI / self.n_theta as f64
    }

    /// Slice of a wrapped bin difference (`0` ↦ `n_θ/2`).
    #[inline]
    pub fn slice_of_bin_difference(&self, diff: i64) -> usize {
        (wrap_bin_difference(diff, self.n_theta) + self.n_theta as i64 / 2) as usize
    }

    #[inline]
    pub fn index(&self, k: usize, x: i64, y: i64) -> usize {
        let d = self.d as i64;
        debug_assert!(x.abs() <= d && y.abs() <= d && k < self.n_theta);
        let side = self.side();
        (k * side + (y + d) as usize) * side + (x + d) as usize
    }

    #[inline]
    pub fn get(&self, k: usize, x: i64, y: i64) -> f64 {
        self.values[self.index(k, x, y)]
    }

    /// Value at `(x, y)`, zero outside the box.
    #[inline]
    pub fn get_or_zero(&self, k: usize, x: i64, y: i64) -> f64 {
        let d = self.d as i64;
        if x.abs() > d || y.abs() > d {
            0.0
        } else {
            self.get(k, x, y)
        }
    }

    #[inline]
    pub fn add(&mut self, k: usize, x: i64, y: i64, v: f64) {
        let i = self.index(k, x, y);
        self.values[i] += v;
        self.normalized = false;
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let n = self.side() * self.side();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Sum over space per orientation slice.
    pub fn theta_marginal(&self) -> Vec<f64> {
        (0..self.n_theta)
            .map(|k| self.slice(k).iter().sum())
            .collect()
    }

    /// Sum over orientation per pixel, row-major `(2d+1)²`.
    pub fn xy_marginal(&self) -> Vec<f64> {
        let n = self.side() * self.side();
        let mut m = vec![0.0; n];
        for k in 0..self.n_theta {
            for (acc, v) in m.iter_mut().zip(self.slice(k)) {
                *acc += v;
            }
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Divides by the l1 norm; an all-zero volume cannot be normalized.
    pub fn normalize_l1(&mut self) -> Result<()> {
        let s = self.l1_norm();
        if s == 0.0 || !s.is_finite() {
            return Err(Error::Normalization(
                "kernel volume has zero l1 norm".into(),
            ));
        }
        for v in &mut self.values {
            *v /= s;
        }
        self.normalized = true;
        Ok(())
    }

    pub fn normalized_l1(mut self) -> Result<Self> {
        self.normalize_l1()?;
        Ok(self)
    }

    /// Elementwise `self += other`.
    pub fn accumulate(&mut self, other: &KernelVolume) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::DimensionMismatch(format!(
                "cannot add d={},n_theta={} to d={},n_theta={}",
                other.d, other.n_theta, self.d, self.n_theta
            )));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        self.normalized = false;
        Ok(())
    }
}
