//! Symmetric-gauge lowest Landau level in the plane (ℓ = 1).
//!
//! Guiding-centre ladder operators act on the angular-momentum basis
//! `φ_m(z) = z^m e^{-|z|²/4} / sqrt(2π 2^m m!)`. With
//! `b = (R_x - i R_y)/√2` one has `R_x = (b + b†)/√2`, `R_y = i(b - b†)/√2`
//! and `[R_x, R_y] = -i`.

use std::f64::consts::{SQRT_2, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{max_modulus, HermitianMatrix};
use crate::quadrature::PanelRule;

/// `ln(m!)` by direct summation; exact enough for the cutoffs used here.
fn ln_factorial(m: usize) -> f64 { (2..=m).map(|k| (k as f64).ln()).sum() }

/// `φ_m(z)`, with the magnitude assembled in the log domain.
pub fn bargmann_basis_eval(m: usize, z: C64) -> C64 {
    let r = z.norm();
    if r == 0.0 {
        return if m == 0 { C64::new((TAU).sqrt().recip(), 0.0) } else { C64::new(0.0, 0.0) };
    }
    let mf = m as f64;
    let log_mag = mf * r.ln() - 0.25 * r * r - 0.5 * (TAU.ln() + mf * 2f64.ln() + ln_factorial(m));
    C64::from_polar(log_mag.exp(), mf * z.arg())
}

/// Truncated guiding-centre ladder operators on `m = 0..M-1`.
#[derive(Clone, Debug)]
pub struct LadderMatrices {
    pub b: DMatrix<C64>,
    pub b_dagger: DMatrix<C64>,
    /// Max entry of `[b, b†] - 1` on the interior block.
    pub commutator_defect: f64,
}

impl LadderMatrices {
    pub fn cutoff(&self) -> usize { self.b.nrows() }

    /// Size of the block unaffected by the hard cutoff (top tenth dropped).
    pub fn interior(&self) -> usize { interior_size(self.cutoff()) }

    pub fn r_x(&self) -> DMatrix<C64> { (&self.b + &self.b_dagger) / C64::new(SQRT_2, 0.0) }

    pub fn r_y(&self) -> DMatrix<C64> { (&self.b - &self.b_dagger) * C64::new(0.0, 1.0 / SQRT_2) }

    pub fn number(&self) -> DMatrix<C64> { &self.b_dagger * &self.b }
}

pub(crate) fn interior_size(m: usize) -> usize { m - m.div_ceil(10) }

/// Leading `k x k` block.
pub fn interior_block(m: &DMatrix<C64>, k: usize) -> DMatrix<C64> { m.view((0, 0), (k, k)).into_owned() }

/// `b|m> = √m |m-1>`, `b†|m> = √(m+1) |m+1>`.
pub fn ladder_matrices(cutoff: usize) -> Result<LadderMatrices> {
    if cutoff < 2 {
        return Err(Error::InvalidCutoff(cutoff));
    }
    let mut b = DMatrix::<C64>::zeros(cutoff, cutoff);
    for m in 1..cutoff {
        b[(m - 1, m)] = C64::new((m as f64).sqrt(), 0.0);
    }
    let b_dagger = b.adjoint();
    let comm = &b * &b_dagger - &b_dagger * &b;
    let k = interior_size(cutoff).max(1);
    let defect = max_modulus(&(interior_block(&comm, k) - DMatrix::<C64>::identity(k, k)));
    Ok(LadderMatrices { b, b_dagger, commutator_defect: defect })
}

/// A continuum LLL state `Σ_m c_m φ_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct BargmannExpansion {
    coefficients: DVector<C64>,
}

impl BargmannExpansion {
    /// Normalizes the given coefficients.
    pub fn new(coefficients: Vec<C64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidCutoff(0));
        }
        let v = DVector::from_vec(coefficients);
        let n = v.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidArgument("coefficients must be finite and nonzero".into()));
        }
        Ok(Self { coefficients: v / C64::new(n, 0.0) })
    }

    pub fn coefficients(&self) -> &DVector<C64> { &self.coefficients }

    pub fn cutoff(&self) -> usize { self.coefficients.len() }

    /// `|c_{M-1}|²`, the weight sitting on the truncation edge.
    pub fn tail_weight(&self) -> f64 { self.coefficients[self.cutoff() - 1].norm_sqr() }

    pub fn evaluate(&self, z: C64) -> C64 {
        self.coefficients.iter().enumerate().map(|(m, c)| c * bargmann_basis_eval(m, z)).sum()
    }
}

/// `⟨m'|V|m⟩` for a rotation-invariant `V(r)` on `m, m' < cutoff`.
///
/// The angular integral is done exactly (it forces `m = m'`); the radial one
/// runs in `s = r²/2`, where `|φ_m|² d²r = s^m e^{-s}/m! ds`, with
/// Gauss–Legendre panels doubled until the relative change is below 1e-12;
/// [`Error::QuadratureFailure`] if it is still above 1e-9 at the panel limit.
pub fn project_potential(v: &dyn Fn(f64) -> f64, cutoff: usize) -> Result<HermitianMatrix> {
    if cutoff < 1 {
        return Err(Error::InvalidCutoff(cutoff));
    }
    let rule = PanelRule::new(24);
    let mut h = DMatrix::<C64>::zeros(cutoff, cutoff);
    for m in 0..cutoff {
        let mf = m as f64;
        let lf = ln_factorial(m);
        let weight = move |s: f64| if s <= 0.0 { if m == 0 { 1.0 } else { 0.0 } } else { (mf * s.ln() - s - lf).exp() };
        let spread = 14.0 * (mf + 1.0).sqrt();
        let (a, b) = ((mf - spread).max(0.0), mf + spread + 30.0);
        let integrand = |s: f64| weight(s) * v((2.0 * s).sqrt());
        let scale = rule.integrate(&|s: f64| (weight(s) * v((2.0 * s).sqrt())).abs(), a, b, 64);
        h[(m, m)] = C64::new(rule.integrate_adaptive(&integrand, (a, b), 1e-12, 1e-9, scale)?, 0.0);
    }
    HermitianMatrix::new(h)
}

/// Levels of the projected `V = (x² + y²)/2`: `(m, ⟨φ_m|V|φ_m⟩)`.
pub fn ho_spectrum(cutoff: usize) -> Result<Vec<(usize, f64)>> {
    if cutoff < 4 {
        return Err(Error::InvalidCutoff(cutoff));
    }
    let h = project_potential(&|r: f64| 0.5 * r * r, cutoff)?;
    Ok((0..cutoff).map(|m| (m, h.entries()[(m, m)].re)).collect())
}

/// Evenly spaced sample points.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    /// Grid with spacing `step` covering `[-half_width, half_width]`.
    pub fn centered(half_width: f64, step: f64) -> Self {
        let len = (2.0 * half_width / step).round() as usize + 1;
        Self { start: -0.5 * (len - 1) as f64 * step, step, len }
    }

    pub fn point(&self, i: usize) -> f64 { self.start + i as f64 * self.step }
}

/// Eigenfunction of `x cos θ + p sin θ` with eigenvalue `k`:
/// `exp(i[k x - x² cos θ / 2] / sin θ) / √(2π)`.
pub fn rotated_basis_state(theta: f64, k: f64, x: f64) -> C64 {
    let (s, c) = theta.sin_cos();
    C64::from_polar(1.0 / TAU.sqrt(), (k * x - 0.5 * x * x * c) / s)
}

/// Max interior residual of `(x cos θ + p sin θ - k) φ_θk` on `grid`, with
/// `p = -i d/dx` by fourth-order central differences.
pub fn duality_rotation_check(theta: f64, k: f64, grid: &UniformGrid) -> Result<f64> {
    let s = theta.sin();
    if s.abs() < 1e-6 {
        return Err(Error::ThetaSingular(s.abs()));
    }
    if grid.len < 1000 || !(grid.step > 0.0) {
        return Err(Error::InvalidArgument(format!("grid needs >= 1000 points and positive spacing, got {} at {}", grid.len, grid.step)));
    }
    let c = theta.cos();
    let h = grid.step;
    let phi: Vec<C64> = (0..grid.len).map(|i| rotated_basis_state(theta, k, grid.point(i))).collect();
    let mut worst = 0.0f64;
    for i in 2..grid.len - 2 {
        let d = (-phi[i + 2] + phi[i + 1] * 8.0 - phi[i - 1] * 8.0 + phi[i - 2]) / (12.0 * h);
        let p = C64::new(0.0, -1.0) * d;
        let r = phi[i] * (grid.point(i) * c - k) + p * s;
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// `exp(i θ b†b)` on the cutoff space.
pub fn rotation_operator(theta: f64, cutoff: usize) -> DMatrix<C64> {
    DMatrix::from_diagonal(&DVector::from_fn(cutoff, |m, _| C64::from_polar(1.0, theta * m as f64)))
}
