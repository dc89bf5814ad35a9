//! Fourier (anti-)self-duality on the torus, reflection symmetry of zero
//! modes, and transmission through a windowed inverted oscillator.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::assignment::assign_with;
use crate::error::{Error, Result};
use crate::hilbert::{build_hamiltonian, dft_matrix, diagonalize, HamiltonianSpec, SpectralDecomposition, StateVector, TorusGeometry};
use crate::torus::{find_nodes, toroidal_distance, NodeSet, PhasePoint};

/// Symmetry norm below which the duality counts as exact.
pub const EXACT_SYMMETRY: f64 = 1e-12;
/// Tolerance for `E ↔ -E` partners and for zero modes.
pub const PAIRING_TOL: f64 = 1e-8;

/// Partner of one level under the anti-duality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub energy: f64,
    pub partner: f64,
    /// Distance of `U v` from the eigenspace at `partner`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub sign: i8,
    /// `‖U H U† − sign·H‖ / ‖H‖` (Frobenius; zero for `H = 0`).
    pub symmetry_norm: f64,
    pub pairing: Vec<Pairing>,
    pub zero_mode_present: bool,
    pub reflection_residual: Option<f64>,
}

impl DualityReport {
    pub fn max_pairing_residual(&self) -> f64 { self.pairing.iter().map(|p| p.residual).fold(0.0, f64::max) }
}

/// Conjugate `H` by the DFT and compare with `sign·H`. For `sign = -1` the
/// spectrum is paired `E ↔ -E` and every eigenvector is checked to map into
/// its partner eigenspace.
pub fn dft_conjugation_check(spec: &HamiltonianSpec, geometry: &TorusGeometry, sign: i8) -> Result<DualityReport> {
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidArgument(format!("sign must be +1 or -1, got {sign}")));
    }
    let h = build_hamiltonian(spec, geometry)?;
    let u = dft_matrix(geometry);
    let conj = &u * h.entries() * u.adjoint();
    let diff = &conj - h.entries() * C64::from(sign as f64);
    let scale = h.norm();
    let symmetry_norm = if scale == 0.0 { diff.norm() } else { diff.norm() / scale };
    let spectrum = diagonalize(&h)?;
    let zero_mode_present = spectrum.eigenvalues.iter().any(|e| e.abs() < PAIRING_TOL);
    let mut pairing = Vec::new();
    if sign == -1 {
        for (i, &e) in spectrum.eigenvalues.iter().enumerate() {
            let partners: Vec<usize> =
                (0..spectrum.dim()).filter(|&j| (e + spectrum.eigenvalues[j]).abs() < PAIRING_TOL).collect();
            if partners.is_empty() {
                if symmetry_norm < EXACT_SYMMETRY {
                    return Err(Error::PairingFailure(e));
                }
                continue;
            }
            let image = &u * spectrum.eigenvectors.column(i);
            let mut rest = image.clone();
            for &j in &partners {
                let v = spectrum.eigenvectors.column(j);
                rest -= v * v.dotc(&image);
            }
            let partner = partners.iter().map(|&j| spectrum.eigenvalues[j]).sum::<f64>() / partners.len() as f64;
            pairing.push(Pairing { energy: e, partner, residual: rest.norm() });
        }
    }
    Ok(DualityReport { sign, symmetry_norm, pairing, zero_mode_present, reflection_residual: None })
}

/// Axis exchange rescaled to the cell: `(x, p) → (p·L/P, x·P/L)`.
pub fn reflect(geometry: &TorusGeometry, pt: PhasePoint) -> PhasePoint {
    let ratio = geometry.position_period() / geometry.momentum_period();
    PhasePoint::new(pt.p * ratio, pt.x / ratio).reduced(geometry)
}

/// Largest distance between the nodes of `b` and the reflected nodes of `a`
/// under the cheapest one-to-one matching.
pub fn reflection_mismatch(a: &NodeSet, b: &NodeSet) -> Result<f64> {
    if a.len() != b.len() || a.geometry != b.geometry {
        return Err(Error::GeometryMismatch("node sets from different cells".into()));
    }
    let g = a.geometry;
    let images: Vec<PhasePoint> = a.nodes.iter().map(|&p| reflect(&g, p)).collect();
    let cost: Vec<Vec<f64>> =
        images.iter().map(|&p| b.nodes.iter().map(|&q| toroidal_distance(&g, p, q)).collect()).collect();
    let m = assign_with(&cost, &|j, k| b.coincident(j, k));
    Ok(m.columns.iter().enumerate().map(|(i, &j)| cost[i][j]).fold(0.0, f64::max))
}

/// The `E ≈ 0` level of an anti-self-dual Hamiltonian and the mismatch
/// between its node set and the reflected node set.
#[derive(Clone, Debug)]
pub struct ZeroModeReflection {
    pub index: usize,
    pub energy: f64,
    pub nodes: NodeSet,
    pub residual: f64,
}

/// Indices of levels with `|E| < 1e-8`.
pub fn zero_modes(spectrum: &SpectralDecomposition) -> Vec<usize> {
    (0..spectrum.dim()).filter(|&i| spectrum.eigenvalues[i].abs() < PAIRING_TOL).collect()
}

/// Reflection test on the zero mode. `Ok(None)` when the spectrum has no
/// level within `1e-8` of zero.
pub fn zero_mode_reflection(spec: &HamiltonianSpec, geometry: &TorusGeometry) -> Result<Option<ZeroModeReflection>> {
    let h = build_hamiltonian(spec, geometry)?;
    let spectrum = diagonalize(&h)?;
    let zeros = zero_modes(&spectrum);
    match zeros.len() {
        0 => Ok(None),
        1 => {
            let index = zeros[0];
            let nodes = find_nodes(&spectrum.eigenstate(index)?)?;
            let residual = reflection_mismatch(&nodes, &nodes)?;
            Ok(Some(ZeroModeReflection { index, energy: spectrum.eigenvalues[index], nodes, residual }))
        }
        k => Err(Error::DegenerateZeroMode(k)),
    }
}

/// Within a degenerate zero-mode space, the combinations fixed by the DFT up
/// to a phase: eigenvectors of `U` restricted to the space.
pub fn symmetrized_zero_modes(spec: &HamiltonianSpec, geometry: &TorusGeometry) -> Result<Vec<StateVector>> {
    let h = build_hamiltonian(spec, geometry)?;
    let spectrum = diagonalize(&h)?;
    let zeros = zero_modes(&spectrum);
    if zeros.is_empty() {
        return Ok(Vec::new());
    }
    let basis = DMatrix::from_fn(geometry.n(), zeros.len(), |r, c| spectrum.eigenvectors[(r, zeros[c])]);
    let u = dft_matrix(geometry);
    let restricted = basis.adjoint() * &u * &basis;
    // U is unitary, so its restriction is normal; Schur vectors are eigenvectors
    let schur = restricted.schur();
    let (q, _) = schur.unpack();
    (0..zeros.len()).map(|c| StateVector::from_dvector(*geometry, &basis * q.column(c))).collect()
}

/// Dimensions among `dims` whose model has a (nondegenerate) zero mode.
pub fn scan_zero_modes(
    dims: impl IntoIterator<Item = usize>,
    model: impl Fn(&TorusGeometry) -> HamiltonianSpec,
) -> Result<Vec<(usize, usize)>> {
    let mut found = Vec::new();
    for n in dims {
        let g = TorusGeometry::periodic(n)?;
        let spectrum = diagonalize(&build_hamiltonian(&model(&g), &g)?)?;
        let k = zero_modes(&spectrum).len();
        if k > 0 {
            found.push((n, k));
        }
    }
    Ok(found)
}

/// One point of a transmission scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    pub energy: f64,
    pub half_window: f64,
    pub step: f64,
    pub transmission: f64,
    pub reflection: f64,
    pub unitarity_defect: f64,
}

/// Inverted oscillator `v = -x²/2` on `|x| <= X`, flat at `-X²/2` outside.
pub fn saddle_potential(x: f64, half_window: f64) -> f64 {
    let y = x.clamp(-half_window, half_window);
    -0.5 * y * y
}

/// Transmission of `-ψ''/2 + v ψ = E ψ` through the windowed saddle.
///
/// The window is cut into cells of width `h` with the potential frozen at
/// each midpoint; each cell contributes an exact unimodular transfer matrix,
/// so flux is conserved to round-off.
pub fn saddle_transmission(energy: f64, half_window: f64, h: f64) -> Result<Transmission> {
    if !(half_window >= 4.0) || !(h > 0.0 && h <= 1e-2) || !(energy.abs() <= 5.0) {
        return Err(Error::InvalidArgument(format!(
            "need X >= 4, 0 < h <= 1e-2, |E| <= 5; got X = {half_window}, h = {h}, E = {energy}"
        )));
    }
    let outer = saddle_potential(half_window, half_window);
    if energy <= outer {
        return Err(Error::EvanescentAsymptotics { energy, outer });
    }
    let k = (2.0 * (energy - outer)).sqrt();
    let cells = (2.0 * half_window / h).round().max(1.0) as usize;
    let dx = 2.0 * half_window / cells as f64;
    // pure outgoing wave at the right edge, integrated leftwards
    let mut psi = C64::from_polar(1.0, k * half_window);
    let mut dpsi = C64::i() * k * psi;
    for c in (0..cells).rev() {
        let mid = -half_window + (c as f64 + 0.5) * dx;
        let q = 2.0 * (energy - saddle_potential(mid, half_window));
        let (cs, sn_over, sn_times) = cell_transfer(q, dx);
        // inverse of [[c, s/κ], [−κ s, c]] applied over −dx
        let p0 = cs * psi - sn_over * dpsi;
        let d0 = sn_times * psi + cs * dpsi;
        psi = p0;
        dpsi = d0;
    }
    // ψ = A e^{ikx} + B e^{-ikx} at x = -X
    let x0 = -half_window;
    let a = 0.5 * (psi + dpsi / (C64::i() * k)) * C64::from_polar(1.0, -k * x0);
    let b = 0.5 * (psi - dpsi / (C64::i() * k)) * C64::from_polar(1.0, k * x0);
    let transmission = 1.0 / a.norm_sqr();
    let reflection = (b / a).norm_sqr();
    Ok(Transmission {
        energy,
        half_window,
        step: h,
        transmission,
        reflection,
        unitarity_defect: (transmission + reflection - 1.0).abs(),
    })
}

/// `(cos κh, sin(κh)/κ, κ sin κh)` for `κ² = q`, continued to `q <= 0`.
fn cell_transfer(q: f64, h: f64) -> (f64, f64, f64) {
    if q > 0.0 {
        let kappa = q.sqrt();
        let (s, c) = (kappa * h).sin_cos();
        (c, s / kappa, kappa * s)
    } else if q < 0.0 {
        let kappa = (-q).sqrt();
        let (s, c) = ((kappa * h).sinh(), (kappa * h).cosh());
        (c, s / kappa, -kappa * s)
    } else {
        (1.0, h, 0.0)
    }
}

/// Transmission over an energy grid.
pub fn transmission_scan(energies: &[f64], half_window: f64, h: f64) -> Result<Vec<Transmission>> {
    energies.iter().map(|&e| saddle_transmission(e, half_window, h)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{harper, saddle};
    use crate::hilbert::Profile;

    #[test]
    fn harper_is_self_dual() {
        for n in [4usize, 8, 16, 32] {
            let g = TorusGeometry::periodic(n).unwrap();
            let r = dft_conjugation_check(&harper(&g), &g, 1).unwrap();
            assert!(r.symmetry_norm < 1e-12, "N={n}: {}", r.symmetry_norm);
            assert!(r.pairing.is_empty());
        }
    }

    #[test]
    fn saddle_is_anti_self_dual() {
        let g = TorusGeometry::periodic(8).unwrap();
        let r = dft_conjugation_check(&saddle(&g), &g, -1).unwrap();
        assert!(r.symmetry_norm < 1e-12);
        assert_eq!(r.pairing.len(), 8);
        assert!(r.max_pairing_residual() < 1e-8);
        // the wrong sign is far off
        let wrong = dft_conjugation_check(&saddle(&g), &g, 1).unwrap();
        assert!(wrong.symmetry_norm > 0.5);
        let h = build_hamiltonian(&saddle(&g), &g).unwrap();
        assert!(h.entries().trace().norm() < 1e-12);
    }

    #[test]
    fn zero_hamiltonian_is_dual_both_ways() {
        let g = TorusGeometry::periodic(5).unwrap();
        let spec = HamiltonianSpec::new("zero", Profile::Zero, Profile::Zero);
        for s in [1, -1] {
            assert_eq!(dft_conjugation_check(&spec, &g, s).unwrap().symmetry_norm, 0.0);
        }
        assert!(dft_conjugation_check(&spec, &g, 0).is_err());
    }

    #[test]
    fn reflection_is_an_involution() {
        let g = TorusGeometry::periodic(12).unwrap();
        let pt = PhasePoint::new(3.7, 5.1);
        let back = reflect(&g, reflect(&g, pt));
        assert!(toroidal_distance(&g, back, pt) < 1e-12);
    }

    #[test]
    fn zero_mode_nodes_are_reflection_symmetric() {
        let found = scan_zero_modes(4..=32, saddle).unwrap();
        let (n, _) = *found.iter().find(|&&(_, k)| k == 1).expect("no simple zero mode in scan");
        let g = TorusGeometry::periodic(n).unwrap();
        let z = zero_mode_reflection(&saddle(&g), &g).unwrap().unwrap();
        assert!(z.residual < 1e-6, "N={n}: {}", z.residual);
    }

    #[test]
    fn degenerate_zero_modes_use_dft_combinations() {
        let g = TorusGeometry::periodic(12).unwrap();
        assert_eq!(zero_mode_reflection(&saddle(&g), &g).unwrap_err(), Error::DegenerateZeroMode(2));
        let modes = symmetrized_zero_modes(&saddle(&g), &g).unwrap();
        assert_eq!(modes.len(), 2);
        let u = dft_matrix(&g);
        for m in &modes {
            // fixed by U up to a phase
            let image = &u * m.amplitudes();
            assert!((m.amplitudes().dotc(&image).norm() - 1.0).abs() < 1e-10);
            let ns = find_nodes(m).unwrap();
            assert!(reflection_mismatch(&ns, &ns).unwrap() < 1e-6);
        }
    }

    #[test]
    fn partner_levels_reflect_into_each_other() {
        let g = TorusGeometry::periodic(11).unwrap();
        let spectrum = diagonalize(&build_hamiltonian(&saddle(&g), &g).unwrap()).unwrap();
        for (lo, hi) in [(0, 10), (1, 9), (3, 7)] {
            let a = find_nodes(&spectrum.eigenstate(lo).unwrap()).unwrap();
            let b = find_nodes(&spectrum.eigenstate(hi).unwrap()).unwrap();
            assert!(reflection_mismatch(&a, &b).unwrap() < 1e-6);
            // a level away from zero is not its own mirror image
            assert!(reflection_mismatch(&a, &a).unwrap() > 1e-2);
        }
        assert!(no_zero_mode_is_reported_as_none());
    }

    fn no_zero_mode_is_reported_as_none() -> bool {
        // N = 6 has no level within 1e-8 of zero
        let g = TorusGeometry::periodic(6).unwrap();
        let found = scan_zero_modes([6], saddle).unwrap();
        found.is_empty() && zero_mode_reflection(&saddle(&g), &g).unwrap().is_none()
    }

    #[test]
    fn transfer_matrix_matches_free_propagation() {
        // a flat potential transmits everything
        let cell = cell_transfer(4.0, 0.3);
        assert!((cell.0 - 0.6f64.cos()).abs() < 1e-15 && (cell.1 - 0.6f64.sin() / 2.0).abs() < 1e-15);
        let t = saddle_transmission(0.0, 8.0, 1e-3).unwrap();
        assert!(t.unitarity_defect < 1e-8);
    }

    #[test]
    fn transmission_half_at_zero_energy() {
        // parabolic-barrier oracle: T = 1 / (1 + e^{-2πE})
        for e in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let t = saddle_transmission(e, 8.0, 1e-3).unwrap();
            let want = 1.0 / (1.0 + (-std::f64::consts::TAU * e).exp());
            assert!((t.transmission - want).abs() < 5e-3, "E={e}: {} vs {want}", t.transmission);
        }
    }

    #[test]
    fn transmission_rejects_bad_arguments() {
        assert!(saddle_transmission(0.0, 3.0, 1e-3).is_err());
        assert!(saddle_transmission(0.0, 8.0, 0.1).is_err());
        assert!(saddle_transmission(6.0, 8.0, 1e-3).is_err());
    }
}
