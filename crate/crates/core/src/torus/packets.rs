use num_complex::Complex64 as C64;

use super::nodes::{assemble_node_set, centroid_reference, certify, newton_root, null_space_state};
use super::{circle_count, toroidal_distance, BargmannFunction, NodeSet, PhasePoint};
use crate::error::{Error, Result};
use crate::hilbert::{StateVector, TorusGeometry};

/// Largest dimension accepted by [`clustered_packet`]; beyond it the
/// derivative conditions lose too many digits.
pub const MAX_CLUSTER_N: usize = 32;

/// Relative gap below which two distinct Husimi maxima count as tied.
const PEAK_TIE: f64 = 1e-12;

/// The state whose `N - 1` nodes all sit at `center`: the null vector of
/// `F(ζ0) = F'(ζ0) = ... = F^{(N-2)}(ζ0) = 0`.
pub fn clustered_packet(center: PhasePoint, geometry: &TorusGeometry) -> Result<StateVector> {
    let n = geometry.n();
    if n > MAX_CLUSTER_N {
        return Err(Error::ConditioningLimit(n));
    }
    let probe = StateVector::basis(*geometry, 0)?;
    let rows = BargmannFunction::new(&probe).taylor_rows(center, n - 1);
    null_space_state(rows, geometry)
}

/// Node set of a clustered packet: `N - 1` copies of the cluster centre
/// (multiplicity certified by a small contour) and the partner node.
pub fn clustered_node_set(state: &StateVector, center: PhasePoint) -> Result<NodeSet> {
    let g = *state.geometry();
    let n = g.n();
    let f = BargmannFunction::new(state);
    let center = center.reduced(&g);
    let reference = centroid_reference(&g)?;
    let m = (n - 1) as f64;
    let guess = PhasePoint::new(reference.x - m * center.x, reference.p - m * center.p).reduced(&g);
    let partner = newton_root(&f, guess).unwrap_or(guess).reduced(&g);
    // a contour that separates the cluster from its partner
    let gap = f.zeta(center) - f.zeta(partner);
    let gap = toroidal_distance(&g, center, partner).min(gap.norm()) / (2.0 * g.kernel_width().max(1.0 / g.kernel_width()));
    let radius = gap.clamp(1e-3, 0.5);
    let mult = circle_count(&f, center, radius)?;
    if mult.count != (n - 1) as i64 {
        return Err(Error::NodeCountMismatch { certificate: mult.count, found: n - 1 });
    }
    let per_side = (8.0 * (n as f64).sqrt()).ceil() as f64;
    let cert = certify(&f, &[center, partner], g.position_period() / per_side, g.momentum_period() / per_side, 1e-4)?;
    let scale = (0..64)
        .flat_map(|i| (0..64).map(move |j| (i, j)))
        .map(|(i, j)| {
            let pt = PhasePoint::new(
                g.position_period() * i as f64 / 64.0,
                g.momentum_period() * j as f64 / 64.0,
            );
            f.scaled_value(pt).norm()
        })
        .fold(0.0, f64::max);
    let mut nodes = vec![center; n - 1];
    nodes.push(partner);
    let residuals = nodes.iter().map(|&p| f.scaled_value(p).norm() / scale).collect();
    Ok(assemble_node_set(g, nodes, residuals, cert))
}

/// Coherent packet centred at `(xbar, pbar)`, periodized over the cell with
/// the boundary twist, at the square-cell kernel width.
pub fn wrapped_coherent_state(xbar: f64, pbar: f64, geometry: &TorusGeometry) -> Result<StateVector> {
    let w = geometry.kernel_width();
    let l = geometry.position_period();
    let reach = super::IMAGE_WINDOW * w;
    let amps = (0..geometry.n())
        .map(|j| {
            let xj = geometry.position(j);
            let lo = ((xbar - reach - xj) / l).ceil() as i64;
            let hi = ((xbar + reach - xj) / l).floor() as i64;
            (lo..=hi)
                .map(|n| {
                    let y = xj + n as f64 * l;
                    let u = (y - xbar) / w;
                    C64::from_polar((-0.5 * u * u).exp(), pbar * y - n as f64 * geometry.theta1())
                })
                .sum::<C64>()
        })
        .collect();
    StateVector::new(*geometry, amps)
}

/// Maximum of the Husimi density on the cell.
///
/// Mesh maxima are polished by a log-quadratic fit and Newton steps on the
/// stationarity condition `F'/F = conj(ζ)`. Two distinct maxima of equal
/// height (relative gap below 1e-12) yield [`Error::AmbiguousPeak`].
pub fn husimi_peak(state: &StateVector) -> Result<PhasePoint> {
    let f = BargmannFunction::new(state);
    let g = *state.geometry();
    let per_side = (8.0 * (g.n() as f64).sqrt()).ceil() as usize;
    let (nx, ny) = (per_side, per_side);
    let dx = g.position_period() / nx as f64;
    let dp = g.momentum_period() / ny as f64;
    let mut vals = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            vals[i * ny + j] = f.husimi(PhasePoint::new(i as f64 * dx, j as f64 * dp));
        }
    }
    let at = |i: isize, j: isize| vals[i.rem_euclid(nx as isize) as usize * ny + j.rem_euclid(ny as isize) as usize];
    let mut maxima = Vec::new();
    for i in 0..nx as isize {
        for j in 0..ny as isize {
            let v = at(i, j);
            let top = (-1..=1).all(|di| (-1..=1).all(|dj| (di == 0 && dj == 0) || at(i + di, j + dj) <= v));
            if top {
                maxima.push((v, i, j));
            }
        }
    }
    maxima.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut refined: Vec<(f64, PhasePoint)> = Vec::new();
    for &(v, i, j) in maxima.iter().take(8) {
        if v < 0.5 * maxima[0].0 {
            break;
        }
        // separable parabola through log values
        let fit = |lm: f64, l0: f64, lp: f64| {
            let den = lm - 2.0 * l0 + lp;
            if den < 0.0 {
                (0.5 * (lm - lp) / den).clamp(-1.0, 1.0)
            } else {
                0.0
            }
        };
        let l0 = v.ln();
        let sx = fit(at(i - 1, j).ln(), l0, at(i + 1, j).ln());
        let sp = fit(at(i, j - 1).ln(), l0, at(i, j + 1).ln());
        let start = PhasePoint::new((i as f64 + sx) * dx, (j as f64 + sp) * dp);
        let pt = polish(&f, start).unwrap_or(start).reduced(&g);
        let h = f.husimi(pt);
        if !refined.iter().any(|&(_, q)| toroidal_distance(&g, q, pt) < 1e-6) {
            refined.push((h, pt));
        }
    }
    refined.sort_by(|a, b| b.0.total_cmp(&a.0));
    if refined.len() >= 2 {
        let gap = (refined[0].0 - refined[1].0) / refined[0].0;
        if gap < PEAK_TIE {
            return Err(Error::AmbiguousPeak { relative_gap: gap, time: 0.0 });
        }
    }
    Ok(refined[0].1)
}

/// Newton iteration for `F'/F - conj(ζ) = 0`, which is not analytic in ζ, so
/// the update solves `a δ - conj(δ) = -r` with `a = d(F'/F)/dζ`.
fn polish(f: &BargmannFunction, start: PhasePoint) -> Option<PhasePoint> {
    let mut z = f.zeta(start);
    for _ in 0..50 {
        let jet = f.scaled_jet(f.point(z));
        if jet.value.norm() == 0.0 {
            return None;
        }
        let q = jet.d1 / jet.value;
        let r = q - z.conj();
        let a = jet.d2 / jet.value - q * q;
        let det = a.norm_sqr() - 1.0;
        if det.abs() < 1e-14 {
            return None;
        }
        let delta = -(r.conj() + a.conj() * r) / det;
        let delta = if delta.norm() > 0.5 { delta * (0.5 / delta.norm()) } else { delta };
        z += delta;
        if delta.norm() < 1e-13 * (1.0 + z.norm()) {
            return Some(f.point(z));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{cluster_multiplicity, find_nodes, state_from_nodes, toroidal_delta};
    use std::f64::consts::{PI, TAU};

    #[test]
    fn peak_of_wrapped_packet() {
        for (n, x, p) in [(16usize, 0.0, 0.0), (32, 2.0, 1.0), (9, 4.3, 5.1)] {
            for theta1 in [0.0, 2.2] {
                let g = TorusGeometry::new(n, theta1, 0.0).unwrap();
                let s = wrapped_coherent_state(x, p, &g).unwrap();
                assert!((s.norm() - 1.0).abs() < 1e-12);
                let peak = husimi_peak(&s).unwrap();
                // off-lattice centres carry an aliasing shift of order e^{-π² w²}
                let d = toroidal_distance(&g, peak, PhasePoint::new(x, p));
                assert!(d < 1e-3, "N={n} θ1={theta1}: {peak:?}");
            }
        }
    }

    #[test]
    fn packet_overlap_is_gaussian() {
        // Husimi-width Gaussians: |<a|b>| = exp(-(Δx/w)²/4)
        let g = TorusGeometry::periodic(64).unwrap();
        let w = g.kernel_width();
        let a = wrapped_coherent_state(20.0, 0.0, &g).unwrap();
        for k in [1.0, 3.0, 5.0] {
            let b = wrapped_coherent_state(20.0 + k * w, 0.0, &g).unwrap();
            let want = (-k * k / 4.0).exp();
            assert!((a.fidelity(&b) - want).abs() < 1e-6 * want.max(1e-3), "{k}");
        }
    }

    #[test]
    fn momentum_eigenstate_peak_is_ambiguous() {
        let g = TorusGeometry::periodic(8).unwrap();
        let s = StateVector::momentum_eigenstate(g, 2).unwrap();
        assert!(matches!(husimi_peak(&s), Err(Error::AmbiguousPeak { .. })));
    }

    #[test]
    fn cluster_has_full_multiplicity() {
        for n in [3usize, 4, 8, 16] {
            let g = TorusGeometry::new(n, 0.5, 0.0).unwrap();
            let c = PhasePoint::new(1.0, 0.5);
            let s = clustered_packet(c, &g).unwrap();
            assert_eq!(cluster_multiplicity(&s, c, 0.3).unwrap(), (n - 1) as i64);
            let ns = clustered_node_set(&s, c).unwrap();
            assert_eq!(ns.count_certificate, n as i64);
            assert!(ns.max_residual() < 1e-9);
        }
    }

    #[test]
    fn cluster_sits_opposite_its_peak() {
        let g = TorusGeometry::periodic(4).unwrap();
        let c = PhasePoint::new(1.0, 0.5);
        let s = clustered_packet(c, &g).unwrap();
        let peak = husimi_peak(&s).unwrap();
        let opposite = PhasePoint::new(1.0 + 2.0, 0.5 + PI);
        let (dx, dp) = toroidal_delta(&g, opposite, peak);
        assert!(dx.abs() < 8.0 / 16.0 && dp.abs() < TAU / 16.0, "{peak:?}");
    }

    #[test]
    fn two_level_cluster_is_single_node_state() {
        let g = TorusGeometry::periodic(2).unwrap();
        let c = PhasePoint::new(0.4, 2.5);
        let a = clustered_packet(c, &g).unwrap();
        let b = state_from_nodes(&[c], &g).unwrap();
        assert!((a.fidelity(&b) - 1.0).abs() < 1e-12);
        let ns = find_nodes(&a).unwrap();
        assert!(ns.nodes.iter().any(|&p| toroidal_distance(&g, p, c) < 1e-8));
    }

    #[test]
    fn large_clusters_are_refused() {
        let g = TorusGeometry::periodic(33).unwrap();
        assert_eq!(clustered_packet(PhasePoint::new(0.0, 0.0), &g), Err(Error::ConditioningLimit(33)));
    }
}
