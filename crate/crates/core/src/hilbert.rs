//! Finite Hilbert space of a 1D particle whose phase space is a torus.
//!
//! A ring of `N` sites with lattice constant `a = 1` has position period
//! `L = N` and momentum period `P = 2π`, so the phase-space cell has area
//! `2πN` and supports exactly `N` states (`ħ = 1`). Two boundary phases twist
//! the cell: `theta2` offsets the momentum grid, `theta1` is the phase picked
//! up by the phase-space image of a state per winding in position (see
//! [`crate::torus`]).

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `max |H - H†|` accepted by [`diagonalize`].
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Reduce an angle into `[0, 2π)`.
pub fn reduce_phase(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU { 0.0 } else { r }
}

/// Wrap `s` into the symmetric window `[-period/2, period/2)`.
pub fn wrap_symmetric(s: f64, period: f64) -> f64 {
    let r = (s + 0.5 * period).rem_euclid(period) - 0.5 * period;
    if r >= 0.5 * period { r - period } else { r }
}

/* Geometry ******************************************************************/

/// The discrete phase-space cell: dimension, periods and boundary phases.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusGeometry {
    n: usize,
    theta1: f64,
    theta2: f64,
}

impl TorusGeometry {
    /// Lattice constant; fixed to 1 so that `N` is the only scale.
    pub const LATTICE_CONSTANT: f64 = 1.0;

    pub fn new(n: usize, theta1: f64, theta2: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        if !theta1.is_finite() || !theta2.is_finite() {
            return Err(Error::InvalidArgument("boundary phases must be finite".into()));
        }
        Ok(Self { n, theta1: reduce_phase(theta1), theta2: reduce_phase(theta2) })
    }

    /// Untwisted cell with `N` sites.
    pub fn periodic(n: usize) -> Result<Self> { Self::new(n, 0.0, 0.0) }

    pub fn n(&self) -> usize { self.n }

    pub fn theta1(&self) -> f64 { self.theta1 }

    pub fn theta2(&self) -> f64 { self.theta2 }

    /// Position period `L = N a`.
    pub fn position_period(&self) -> f64 { self.n as f64 * Self::LATTICE_CONSTANT }

    /// Momentum period `P = 2π / a`.
    pub fn momentum_period(&self) -> f64 { TAU / Self::LATTICE_CONSTANT }

    /// Phase-space cell area `L P = 2πN`.
    pub fn area(&self) -> f64 { self.position_period() * self.momentum_period() }

    /// Length of the cell diagonal `sqrt(L² + P²)`.
    pub fn diagonal(&self) -> f64 { self.position_period().hypot(self.momentum_period()) }

    /// Position of site `j`.
    pub fn position(&self, j: usize) -> f64 { j as f64 * Self::LATTICE_CONSTANT }

    /// Momentum `k_m = (2πm + theta2) / L`, reported in `[-π/a, π/a)`.
    pub fn momentum(&self, m: usize) -> f64 {
        let raw = (TAU * m as f64 + self.theta2) / self.position_period();
        wrap_symmetric(raw, self.momentum_period())
    }

    pub fn positions(&self) -> Vec<f64> { (0..self.n).map(|j| self.position(j)).collect() }

    pub fn momenta(&self) -> Vec<f64> { (0..self.n).map(|m| self.momentum(m)).collect() }

    /// Phase `k_m x_j` evaluated with exact integer reduction.
    pub(crate) fn dft_angle(&self, m: usize, j: i64) -> f64 {
        let n = self.n as i64;
        let mj = ((m as i64) * j).rem_euclid(n);
        TAU * mj as f64 / n as f64 + self.theta2 * j as f64 / n as f64
    }

    /// Width of the coherent states used for the phase-space image. Chosen as
    /// `sqrt(L / P)` so the cell is square in coherent-state units.
    pub fn kernel_width(&self) -> f64 { (self.position_period() / self.momentum_period()).sqrt() }
}

/* States ********************************************************************/

/// Normalized state in the position basis of a [`TorusGeometry`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
    geometry: TorusGeometry,
}

impl StateVector {
    /// Normalize `amplitudes` into a state.
    pub fn new(geometry: TorusGeometry, amplitudes: Vec<C64>) -> Result<Self> {
        Self::from_dvector(geometry, DVector::from_vec(amplitudes))
    }

    pub fn from_dvector(geometry: TorusGeometry, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != geometry.n() {
            return Err(Error::SpecMismatch {
                what: "state amplitudes",
                got: amplitudes.len(),
                expected: geometry.n(),
            });
        }
        if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero vector cannot be normalized".into()));
        }
        Ok(Self { amplitudes: amplitudes.unscale(norm), geometry })
    }

    /// Site-localized state `|j⟩`.
    pub fn basis(geometry: TorusGeometry, j: usize) -> Result<Self> {
        if j >= geometry.n() {
            return Err(Error::InvalidArgument(format!("site {j} outside 0..{}", geometry.n())));
        }
        let mut v = DVector::zeros(geometry.n());
        v[j] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: v, geometry })
    }

    /// Momentum eigenstate with amplitudes `exp(i k_m x_j) / sqrt(N)`.
    pub fn momentum_eigenstate(geometry: TorusGeometry, m: usize) -> Result<Self> {
        if m >= geometry.n() {
            return Err(Error::InvalidArgument(format!("momentum index {m} outside 0..{}", geometry.n())));
        }
        let norm = (geometry.n() as f64).sqrt().recip();
        let v = DVector::from_fn(geometry.n(), |j, _| {
            C64::from_polar(norm, geometry.dft_angle(m, j as i64))
        });
        Ok(Self { amplitudes: v, geometry })
    }

    /// Haar-random state drawn from complex Gaussian amplitudes.
    pub fn random<R: Rng + ?Sized>(geometry: TorusGeometry, rng: &mut R) -> Self {
        let v = DVector::from_fn(geometry.n(), |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        Self::from_dvector(geometry, v).expect("gaussian vector is nonzero")
    }

    pub fn amplitudes(&self) -> &DVector<C64> { &self.amplitudes }

    pub fn geometry(&self) -> &TorusGeometry { &self.geometry }

    pub fn dim(&self) -> usize { self.amplitudes.len() }

    pub fn norm(&self) -> f64 { self.amplitudes.norm() }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 { self.amplitudes.dotc(&other.amplitudes) }

    /// `|⟨self|other⟩|`.
    pub fn fidelity(&self, other: &StateVector) -> f64 { self.inner(other).norm() }

    pub fn with_global_phase(&self, alpha: f64) -> StateVector {
        Self {
            amplitudes: self.amplitudes.map(|c| c * C64::from_polar(1.0, alpha)),
            geometry: self.geometry,
        }
    }

    /// `⟨ψ|H|ψ⟩` (real part; `H` is Hermitian).
    pub fn expectation(&self, h: &HermitianMatrix) -> f64 {
        let hv = &h.entries * &self.amplitudes;
        self.amplitudes.dotc(&hv).re
    }

    /// Normalized superposition `α ψ₁ + β ψ₂`.
    pub fn superpose(alpha: C64, a: &StateVector, beta: C64, b: &StateVector) -> Result<Self> {
        if a.geometry != b.geometry {
            return Err(Error::GeometryMismatch("superposition of states on different cells".into()));
        }
        Self::from_dvector(a.geometry, a.amplitudes.map(|c| c * alpha) + b.amplitudes.map(|c| c * beta))
    }
}

/* DFT ***********************************************************************/

/// Unitary matrix `U[m, j] = exp(-i k_m x_j) / sqrt(N)`.
pub fn dft_matrix(geometry: &TorusGeometry) -> DMatrix<C64> {
    let n = geometry.n();
    let norm = (n as f64).sqrt().recip();
    DMatrix::from_fn(n, n, |m, j| C64::from_polar(norm, -geometry.dft_angle(m, j as i64)))
}

/// Change to the momentum basis; the result is returned as a state on the
/// same cell (amplitude `m` is the weight of `k_m`).
pub fn dft(state: &StateVector) -> StateVector {
    let u = dft_matrix(state.geometry());
    StateVector { amplitudes: u * state.amplitudes(), geometry: *state.geometry() }
}

/* Hamiltonians **************************************************************/

/// A real scalar profile on the line, used for dispersions `ε(k)` and
/// potentials `v(x)`.
#[derive(Clone)]
pub enum Profile {
    Zero,
    /// `amplitude * cos(wavenumber * s)`.
    Cosine { amplitude: f64, wavenumber: f64 },
    /// `curvature / 2 * w²` with `w = s - center` wrapped into `[-period/2, period/2)`.
    Quadratic { curvature: f64, center: f64, period: f64 },
    /// `slope * w` with the same windowing as [`Profile::Quadratic`].
    Linear { slope: f64, center: f64, period: f64 },
    Sum(Vec<Profile>),
    /// Arbitrary callable with an optional closed-form derivative.
    Function {
        value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        derivative: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    },
    /// Raw grid samples (length `N`); differentiated by trigonometric
    /// interpolation.
    Samples(Vec<f64>),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Zero => write!(f, "Zero"),
            Profile::Cosine { amplitude, wavenumber } => {
                write!(f, "Cosine({amplitude}, {wavenumber})")
            }
            Profile::Quadratic { curvature, center, period } => {
                write!(f, "Quadratic({curvature}, {center}, {period})")
            }
            Profile::Linear { slope, center, period } => write!(f, "Linear({slope}, {center}, {period})"),
            Profile::Sum(parts) => f.debug_list().entries(parts).finish(),
            Profile::Function { .. } => write!(f, "Function"),
            Profile::Samples(s) => write!(f, "Samples(len {})", s.len()),
        }
    }
}

/// Uniform periodic grid `s_j = origin + j * spacing`, `j = 0..n`.
#[derive(Copy, Clone, Debug)]
pub struct SampleGrid {
    pub origin: f64,
    pub spacing: f64,
    pub n: usize,
}

impl SampleGrid {
    fn point(&self, j: usize) -> f64 { self.origin + j as f64 * self.spacing }
}

impl Profile {
    /// Value at `s`. Sampled profiles are evaluated by trigonometric
    /// interpolation on `grid`.
    pub fn value(&self, s: f64, grid: &SampleGrid) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Cosine { amplitude, wavenumber } => amplitude * (wavenumber * s).cos(),
            Profile::Quadratic { curvature, center, period } => {
                let w = wrap_symmetric(s - center, *period);
                0.5 * curvature * w * w
            }
            Profile::Linear { slope, center, period } => slope * wrap_symmetric(s - center, *period),
            Profile::Sum(parts) => parts.iter().map(|p| p.value(s, grid)).sum(),
            Profile::Function { value, .. } => value(s),
            Profile::Samples(v) => trig_interpolate(v, grid, s, false),
        }
    }

    /// Derivative at `s`; `None` only for callables without a derivative.
    pub fn derivative(&self, s: f64, grid: &SampleGrid) -> Option<f64> {
        Some(match self {
            Profile::Zero => 0.0,
            Profile::Cosine { amplitude, wavenumber } => -amplitude * wavenumber * (wavenumber * s).sin(),
            Profile::Quadratic { curvature, center, period } => {
                curvature * wrap_symmetric(s - center, *period)
            }
            Profile::Linear { slope, .. } => *slope,
            Profile::Sum(parts) => {
                let mut acc = 0.0;
                for p in parts {
                    acc += p.derivative(s, grid)?;
                }
                acc
            }
            Profile::Function { derivative, .. } => derivative.as_ref()?(s),
            Profile::Samples(v) => trig_interpolate(v, grid, s, true),
        })
    }

    /// Values on the grid points. Samples are returned verbatim.
    pub fn sample(&self, grid: &SampleGrid) -> Vec<f64> {
        match self {
            Profile::Samples(v) => v.clone(),
            _ => (0..grid.n).map(|j| self.value(grid.point(j), grid)).collect(),
        }
    }
}

/// Trigonometric interpolant (or its derivative) of periodic samples.
fn trig_interpolate(samples: &[f64], grid: &SampleGrid, s: f64, derivative: bool) -> f64 {
    let n = samples.len();
    if n == 0 {
        return 0.0;
    }
    let period = grid.spacing * n as f64;
    let base = TAU / period;
    let t = s - grid.origin;
    let mut acc = 0.0;
    // symmetric set of harmonics; the Nyquist term for even n is split evenly
    let half = n / 2;
    for q in 0..=half {
        let mut coeff = C64::new(0.0, 0.0);
        for (j, &v) in samples.iter().enumerate() {
            coeff += C64::from_polar(v, -TAU * ((q * j) % n) as f64 / n as f64);
        }
        coeff /= n as f64;
        let weight = if q == 0 || (n % 2 == 0 && q == half) { 1.0 } else { 2.0 };
        let wq = base * q as f64;
        let phase = C64::from_polar(1.0, wq * t);
        let term = if derivative { coeff * phase * C64::new(0.0, wq) } else { coeff * phase };
        acc += weight * term.re;
    }
    acc
}

/// `H = ε(p) + v(x)` given by dispersion and potential profiles.
#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    pub label: String,
    pub dispersion: Profile,
    pub potential: Profile,
}

impl HamiltonianSpec {
    pub fn new(label: impl Into<String>, dispersion: Profile, potential: Profile) -> Self {
        Self { label: label.into(), dispersion, potential }
    }

    /// Spec backed by raw samples `ε(k_m)` and `v(x_j)`.
    pub fn from_samples(label: impl Into<String>, dispersion: Vec<f64>, potential: Vec<f64>) -> Result<Self> {
        if dispersion.iter().chain(potential.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite Hamiltonian sample".into()));
        }
        Ok(Self::new(label, Profile::Samples(dispersion), Profile::Samples(potential)))
    }

    pub fn momentum_grid(geometry: &TorusGeometry) -> SampleGrid {
        SampleGrid {
            origin: geometry.theta2() / geometry.position_period(),
            spacing: TAU / geometry.position_period(),
            n: geometry.n(),
        }
    }

    pub fn position_grid(geometry: &TorusGeometry) -> SampleGrid {
        SampleGrid { origin: 0.0, spacing: TorusGeometry::LATTICE_CONSTANT, n: geometry.n() }
    }

    /// Canonical samples `(ε(k_m), v(x_j))`, validated against `N`.
    pub fn samples(&self, geometry: &TorusGeometry) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = geometry.n();
        let kgrid = Self::momentum_grid(geometry);
        let eps = match &self.dispersion {
            Profile::Samples(v) => v.clone(),
            p => geometry.momenta().into_iter().map(|k| p.value(k, &kgrid)).collect(),
        };
        let v = self.potential.sample(&Self::position_grid(geometry));
        if eps.len() != n {
            return Err(Error::SpecMismatch { what: "dispersion", got: eps.len(), expected: n });
        }
        if v.len() != n {
            return Err(Error::SpecMismatch { what: "potential", got: v.len(), expected: n });
        }
        if eps.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite samples in {}", self.label)));
        }
        Ok((eps, v))
    }

    /// Classical velocity `dε/dp`.
    pub fn dispersion_slope(&self, geometry: &TorusGeometry, k: f64) -> Option<f64> {
        self.dispersion.derivative(k, &Self::momentum_grid(geometry))
    }

    /// Classical force `-dv/dx`.
    pub fn force(&self, geometry: &TorusGeometry, x: f64) -> Option<f64> {
        self.potential.derivative(x, &Self::position_grid(geometry)).map(|d| -d)
    }
}

/// Dense Hermitian matrix, optionally tied to the cell it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    entries: DMatrix<C64>,
    hermiticity_defect: f64,
    geometry: Option<TorusGeometry>,
}

impl HermitianMatrix {
    /// Wrap a square matrix, recording `max |H - H†|`.
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{}, expected square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let n = entries.nrows();
        let mut defect: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                defect = defect.max((entries[(i, j)] - entries[(j, i)].conj()).norm());
            }
        }
        Ok(Self { entries, hermiticity_defect: defect, geometry: None })
    }

    pub fn with_geometry(mut self, geometry: TorusGeometry) -> Result<Self> {
        if geometry.n() != self.dim() {
            return Err(Error::GeometryMismatch(format!(
                "matrix dimension {} vs N = {}",
                self.dim(),
                geometry.n()
            )));
        }
        self.geometry = Some(geometry);
        Ok(self)
    }

    pub fn entries(&self) -> &DMatrix<C64> { &self.entries }

    pub fn hermiticity_defect(&self) -> f64 { self.hermiticity_defect }

    pub fn geometry(&self) -> Option<&TorusGeometry> { self.geometry.as_ref() }

    pub fn dim(&self) -> usize { self.entries.nrows() }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 { self.entries.norm() }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.dim() != self.dim() {
            return Err(Error::GeometryMismatch(format!(
                "state dimension {} vs matrix dimension {}",
                state.dim(),
                self.dim()
            )));
        }
        if let Some(g) = &self.geometry {
            if g != state.geometry() {
                return Err(Error::GeometryMismatch("state and Hamiltonian live on different cells".into()));
            }
        }
        Ok(())
    }
}

/// Assemble `H = U† diag(ε(k_m)) U + diag(v(x_j))`.
pub fn build_hamiltonian(spec: &HamiltonianSpec, geometry: &TorusGeometry) -> Result<HermitianMatrix> {
    let (eps, v) = spec.samples(geometry)?;
    let n = geometry.n();
    let mut h = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        for l in j..n {
            let d = j as i64 - l as i64;
            let mut acc = C64::new(0.0, 0.0);
            for (m, &e) in eps.iter().enumerate() {
                acc += C64::from_polar(e, geometry.dft_angle(m, d));
            }
            acc /= n as f64;
            if j == l {
                acc = C64::new(acc.re + v[j], 0.0);
            }
            h[(j, l)] = acc;
            h[(l, j)] = acc.conj();
        }
    }
    HermitianMatrix::new(h)?.with_geometry(*geometry)
}

/* Spectra and propagation ***************************************************/

/// Eigen-decomposition with ascending eigenvalues; eigenvectors are columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<C64>,
    geometry: Option<TorusGeometry>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize { self.eigenvalues.len() }

    /// Eigenvector `i` as a state; requires the decomposed matrix to carry a
    /// geometry.
    pub fn eigenstate(&self, i: usize) -> Result<StateVector> {
        let g = self.geometry.ok_or_else(|| {
            Error::GeometryMismatch("spectral decomposition has no attached geometry".into())
        })?;
        if i >= self.dim() {
            return Err(Error::InvalidArgument(format!("eigen index {i} outside 0..{}", self.dim())));
        }
        StateVector::from_dvector(g, self.eigenvectors.column(i).into_owned())
    }

    /// Smallest distance from eigenvalue `i` to any other eigenvalue.
    pub fn gap(&self, i: usize) -> f64 {
        let e = self.eigenvalues[i];
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &f)| (f - e).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn diagonalize(h: &HermitianMatrix) -> Result<SpectralDecomposition> {
    if h.hermiticity_defect() > HERMITICITY_TOL {
        return Err(Error::NotHermitian(h.hermiticity_defect()));
    }
    let eig = SymmetricEigen::new(h.entries().clone());
    let n = h.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::<C64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        vecs.set_column(dst, &col.unscale(col.norm()));
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors: vecs, geometry: h.geometry().copied() })
}

/// Exact time evolution `exp(-iHt)` through a cached spectral decomposition.
#[derive(Clone, Debug)]
pub struct Propagator {
    hamiltonian: HermitianMatrix,
    spectrum: SpectralDecomposition,
}

impl Propagator {
    pub fn new(h: &HermitianMatrix) -> Result<Self> {
        Ok(Self { hamiltonian: h.clone(), spectrum: diagonalize(h)? })
    }

    pub fn hamiltonian(&self) -> &HermitianMatrix { &self.hamiltonian }

    pub fn spectrum(&self) -> &SpectralDecomposition { &self.spectrum }

    /// State at time `t` (negative `t` runs backwards).
    pub fn evolve(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        self.hamiltonian.check_state(state)?;
        let v = &self.spectrum.eigenvectors;
        let mut coeffs = v.ad_mul(state.amplitudes());
        for (c, &e) in coeffs.iter_mut().zip(&self.spectrum.eigenvalues) {
            *c *= C64::from_polar(1.0, -e * t);
        }
        Ok(StateVector { amplitudes: v * coeffs, geometry: *state.geometry() })
    }
}

/// States after `1..=steps` steps of length `dt`.
pub fn propagate(h: &HermitianMatrix, state: &StateVector, dt: f64, steps: usize) -> Result<Vec<StateVector>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    h.check_state(state)?;
    let prop = Propagator::new(h)?;
    (1..=steps).map(|s| prop.evolve(state, s as f64 * dt)).collect()
}

/// Largest entry modulus of a complex matrix or vector.
pub fn max_modulus<R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::RawStorage<C64, R, C>>(
    m: &nalgebra::Matrix<C64, R, C, S>,
) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}
