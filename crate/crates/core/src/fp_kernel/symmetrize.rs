//! Four-term symmetrization of the resolvent and projection onto the
//! π-periodic orientation grid of the statistical kernels.

use std::f64::consts::PI;

use super::ResolventVolume;
use crate::error::{Error, Result};
use crate::kernel::KernelVolume;

/// Which angle rotates the spatial offset inside `Γ(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaConvention {
    /// `Γ(a, b) = R(R_{θ_b}^T (x_a − x_b), θ_a − θ_b)`, i.e. `R(b⁻¹a)`.
    #[default]
    ReferenceFrame,
    /// `Γ(a, b) = R(R_{θ_a}^T (x_a − x_b), θ_a − θ_b)`.
    Printed,
}

/// Continuous evaluator of the symmetrized kernel `F(X, Θ)` for `Θ` on the
/// solver grid; space is interpolated bilinearly.
pub struct SymmetricKernel<'a> {
    r: &'a ResolventVolume,
    convention: GammaConvention,
}

impl<'a> SymmetricKernel<'a> {
    pub fn new(r: &'a ResolventVolume, convention: GammaConvention) -> Self {
        Self { r, convention }
    }

    fn half_turn(&self) -> usize {
        self.r.n_theta() / 2
    }

    #[inline]
    fn res(&self, x: f64, y: f64, j: i64) -> f64 {
        let n = self.r.n_theta() as i64;
        self.r.bilinear(j.rem_euclid(n) as usize, x, y)
    }

    /// Four-term average at `(X, Θ_j)`.
    pub fn four_term(&self, x: f64, y: f64, j: i64) -> f64 {
        let n = self.r.n_theta();
        let t = j as f64 * 2.0 * PI / n as f64;
        let (c, s) = (t.cos(), t.sin());
        // R_Θ^T X
        let (rx, ry) = (c * x + s * y, -s * x + c * y);
        let pi = self.half_turn() as i64;
        let sum = match self.convention {
            GammaConvention::ReferenceFrame => {
                self.res(x, y, j)
                    + self.res(x, y, j + pi)
                    + self.res(-rx, -ry, -j)
                    + self.res(-rx, -ry, pi - j)
            }
            GammaConvention::Printed => {
                self.res(-x, -y, -j)
                    + self.res(rx, ry, j)
                    + self.res(x, y, pi - j)
                    + self.res(-rx, -ry, j + pi)
            }
        };
        0.25 * sum
    }

    /// Average over the four representatives of `(X, Θ)` in `ℝ² × P¹`
    /// (reference and target orientations each defined modulo π).
    pub fn evaluate(&self, x: f64, y: f64, j: i64) -> f64 {
        let pi = self.half_turn() as i64;
        0.25 * (self.four_term(x, y, j)
            + self.four_term(x, y, j + pi)
            + self.four_term(-x, -y, j + pi)
            + self.four_term(-x, -y, j))
    }
}

/// Symmetrized, π-periodic kernel on `n_theta_out` bins and box `[-d_out, d_out]²`.
///
/// Cells farther than `d_out + ½` from the origin are zeroed, matching the
/// support of the statistical kernels, and the result is l1-normalized.
pub fn symmetrize(
    r: &ResolventVolume,
    n_theta_out: usize,
    d_out: usize,
    convention: GammaConvention,
) -> Result<KernelVolume> {
    let ns = r.n_theta();
    if n_theta_out == 0 || ns % (2 * n_theta_out) != 0 || ns % 4 != 0 {
        return Err(Error::domain(format!(
            "solver orientations {ns} must be divisible by 4 and by 2·{n_theta_out}"
        )));
    }
    if d_out > r.d() {
        return Err(Error::domain(format!(
            "output d = {d_out} exceeds resolvent d = {}",
            r.d()
        )));
    }
    let eval = SymmetricKernel::new(r, convention);
    let ratio = (ns / (2 * n_theta_out)) as i64;
    let quarter = (ns / 4) as i64;
    let mut k = KernelVolume::zeros(d_out, n_theta_out);
    let d = d_out as i64;
    let reach2 = (d_out as f64 + 0.5).powi(2);
    for slice in 0..n_theta_out {
        // θ_slice = -π/2 + slice·π/n_out on the solver grid
        let j = -quarter + slice as i64 * ratio;
        for y in -d..=d {
            for x in -d..=d {
                if ((x * x + y * y) as f64) > reach2 {
                    continue;
                }
                k.add(slice, x, y, eval.evaluate(x as f64, y as f64, j));
            }
        }
    }
    k.normalized_l1()
}
