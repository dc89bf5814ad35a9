//! Node motion under unitary evolution, eigenstate stationarity and the
//! comparison of packet motion with Hamilton's equations.

use serde::{Deserialize, Serialize};

use crate::assignment::assign_with;
use crate::error::{Error, Result};
use crate::hilbert::{build_hamiltonian, HamiltonianSpec, HermitianMatrix, Propagator, StateVector, TorusGeometry};
use crate::torus::{
    find_nodes, husimi_peak, node_set_from_seeds, toroidal_delta, toroidal_distance, wrapped_coherent_state, NodeSet,
    PhasePoint,
};

/// Matchings whose runner-up is within this fraction of the optimum are
/// treated as ambiguous.
pub const MATCH_GAP: f64 = 0.1;

/// Number of times a step may be halved before tracking gives up.
pub const MAX_HALVINGS: u32 = 6;

/// Node sets at increasing times with persistent node labels.
#[derive(Clone, Debug)]
pub struct NodeTrajectory {
    pub times: Vec<f64>,
    /// `frames[k].nodes[i]` is node `i` at `times[k]`.
    pub frames: Vec<NodeSet>,
    /// Total toroidal displacement between consecutive frames.
    pub matching_cost: Vec<f64>,
}

impl NodeTrajectory {
    /// Largest single-node displacement over the whole run.
    pub fn max_excursion(&self) -> f64 {
        let g = self.frames[0].geometry;
        let first = &self.frames[0].nodes;
        self.frames
            .iter()
            .flat_map(|f| f.nodes.iter().zip(first).map(|(&a, &b)| toroidal_distance(&g, a, b)))
            .fold(0.0, f64::max)
    }

    /// Largest centroid distance from the first frame.
    pub fn centroid_drift(&self) -> f64 {
        let g = self.frames[0].geometry;
        let c0 = self.frames[0].centroid;
        self.frames.iter().map(|f| toroidal_distance(&g, f.centroid, c0)).fold(0.0, f64::max)
    }
}

/// Result of matching the nodes of two nearby frames.
struct Match {
    /// `order[i]` is the index in the later frame of node `i`.
    order: Vec<usize>,
}

/// Match `next` to `prev` by minimum total toroidal displacement. `None` when
/// the matching is ambiguous or a node moves by half the smallest spacing.
fn match_frames(prev: &NodeSet, next: &NodeSet) -> Option<Match> {
    let g = prev.geometry;
    if prev.len() != next.len() {
        return None;
    }
    let cost: Vec<Vec<f64>> =
        prev.nodes.iter().map(|&a| next.nodes.iter().map(|&b| toroidal_distance(&g, a, b)).collect()).collect();
    let a = assign_with(&cost, &|j, k| next.coincident(j, k));
    let largest = a.columns.iter().enumerate().map(|(i, &j)| cost[i][j]).fold(0.0, f64::max);
    if a.relative_gap() < MATCH_GAP || largest >= 0.5 * prev.min_spacing() {
        return None;
    }
    Some(Match { order: a.columns })
}

fn relabel(set: &NodeSet, order: &[usize]) -> NodeSet {
    let mut out = set.clone();
    out.nodes = order.iter().map(|&j| set.nodes[j]).collect();
    out.residuals = order.iter().map(|&j| set.residuals[j]).collect();
    out
}

/// Nodes of the evolved state at `t1`, labelled consistently with `prev` at
/// `t0`. The interval is split in `2^h` pieces, `h = 0..=MAX_HALVINGS`, until
/// every piece matches unambiguously.
fn advance(prop: &Propagator, state0: &StateVector, prev: &NodeSet, t0: f64, t1: f64) -> Result<(NodeSet, f64)> {
    for halvings in 0..=MAX_HALVINGS {
        let pieces = 1usize << halvings;
        let mut cur = prev.clone();
        let mut ok = true;
        for k in 1..=pieces {
            let t = t0 + (t1 - t0) * k as f64 / pieces as f64;
            let state = prop.evolve(state0, t)?;
            let found = node_set_from_seeds(&state, &cur.nodes)?;
            match match_frames(&cur, &found) {
                Some(m) => cur = relabel(&found, &m.order),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let g = prev.geometry;
            let cost = prev.nodes.iter().zip(&cur.nodes).map(|(&a, &b)| toroidal_distance(&g, a, b)).sum();
            return Ok((cur, cost));
        }
    }
    Err(Error::TrackingBreakdown { from: t0, to: t1 })
}

/// Follow the nodes of `state0` under `h` for `steps` steps of `dt`
/// (negative `dt` runs backwards).
pub fn track_nodes(h: &HermitianMatrix, state0: &StateVector, dt: f64, steps: usize) -> Result<NodeTrajectory> {
    if !dt.is_finite() || dt == 0.0 || dt.abs() > 1e-2 {
        return Err(Error::InvalidArgument(format!("need 0 < |dt| <= 1e-2, got {dt}")));
    }
    let prop = Propagator::new(h)?;
    let first = find_nodes(state0)?;
    let mut times = vec![0.0];
    let mut frames = vec![first];
    let mut matching_cost = Vec::with_capacity(steps);
    for s in 1..=steps {
        let (t0, t1) = ((s - 1) as f64 * dt, s as f64 * dt);
        let (next, cost) = advance(&prop, state0, frames.last().unwrap(), t0, t1)?;
        times.push(t1);
        frames.push(next);
        matching_cost.push(cost);
    }
    Ok(NodeTrajectory { times, frames, matching_cost })
}

/// Node velocities of a state by central differences.
#[derive(Clone, Debug)]
pub struct NodeVelocities {
    pub nodes: Vec<PhasePoint>,
    /// `(dx/dt, dp/dt)` per node.
    pub velocities: Vec<(f64, f64)>,
    /// Largest difference between the estimates at `dt` and `dt/2`, relative
    /// to the largest speed (absolute below unit speed).
    pub richardson_defect: f64,
    /// Set when `richardson_defect` exceeds 1e-4.
    pub flagged: bool,
}

impl NodeVelocities {
    pub fn max_speed(&self) -> f64 { self.velocities.iter().map(|v| v.0.hypot(v.1)).fold(0.0, f64::max) }
}

fn central_difference(prop: &Propagator, state: &StateVector, at: &NodeSet, dt: f64) -> Result<Vec<(f64, f64)>> {
    let g = at.geometry;
    let later = advance(prop, state, at, 0.0, dt)?.0;
    let earlier = advance(prop, state, at, 0.0, -dt)?.0;
    Ok(earlier
        .nodes
        .iter()
        .zip(&later.nodes)
        .map(|(&a, &b)| {
            let (dx, dp) = toroidal_delta(&g, a, b);
            (dx / (2.0 * dt), dp / (2.0 * dt))
        })
        .collect())
}

/// Velocity of every node of `state` under `h`.
pub fn node_velocity(h: &HermitianMatrix, state: &StateVector, dt: f64) -> Result<NodeVelocities> {
    let prop = Propagator::new(h)?;
    node_velocity_with(&prop, state, dt)
}

fn node_velocity_with(prop: &Propagator, state: &StateVector, dt: f64) -> Result<NodeVelocities> {
    if !(1e-6..=1e-3).contains(&dt) {
        return Err(Error::InvalidArgument(format!("dt must lie in [1e-6, 1e-3], got {dt}")));
    }
    let at = find_nodes(state)?;
    let coarse = central_difference(prop, state, &at, dt)?;
    let fine = central_difference(prop, state, &at, 0.5 * dt)?;
    let scale = fine.iter().map(|v| v.0.hypot(v.1)).fold(1.0, f64::max);
    let defect = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a.0 - b.0).hypot(a.1 - b.1) / scale)
        .fold(0.0, f64::max);
    Ok(NodeVelocities { nodes: at.nodes, velocities: fine, richardson_defect: defect, flagged: defect > 1e-4 })
}

/// Max node speed of eigenstate `k` of `h` at `dt = 1e-4`.
pub fn stationarity_residual(h: &HermitianMatrix, k: usize) -> Result<f64> {
    let prop = Propagator::new(h)?;
    let spec = prop.spectrum();
    if k >= spec.dim() {
        return Err(Error::InvalidArgument(format!("eigen index {k} outside 0..{}", spec.dim())));
    }
    let gap = spec.gap(k);
    if gap <= 1e-8 {
        return Err(Error::DegenerateEigenstate { index: k, gap });
    }
    let state = spec.eigenstate(k)?;
    let e = spec.eigenvalues[k];
    if (state.expectation(h) - e).abs() > 1e-10 * e.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!("eigenpair {k} fails the energy cross-check")));
    }
    Ok(node_velocity_with(&prop, &state, 1e-4)?.max_speed())
}

/// Husimi peak of a packet against the classical orbit from the same start.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassicalComparison {
    pub times: Vec<f64>,
    pub classical: Vec<PhasePoint>,
    pub quantum: Vec<PhasePoint>,
    /// Toroidal distance between the two, in units of the cell diagonal.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
}

/// Classical right-hand side `(dε/dp, -dv/dx)`.
fn hamilton_rhs(spec: &HamiltonianSpec, g: &TorusGeometry, pt: PhasePoint) -> Result<(f64, f64)> {
    let vx = spec.dispersion_slope(g, pt.p);
    let vp = spec.force(g, pt.x);
    match (vx, vp) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::InvalidArgument(format!("{} has a profile without derivative", spec.label))),
    }
}

/// One classical RK4 step.
pub fn rk4_step(spec: &HamiltonianSpec, g: &TorusGeometry, pt: PhasePoint, dt: f64) -> Result<PhasePoint> {
    let at = |base: PhasePoint, k: (f64, f64), s: f64| PhasePoint::new(base.x + s * k.0, base.p + s * k.1);
    let k1 = hamilton_rhs(spec, g, pt)?;
    let k2 = hamilton_rhs(spec, g, at(pt, k1, 0.5 * dt))?;
    let k3 = hamilton_rhs(spec, g, at(pt, k2, 0.5 * dt))?;
    let k4 = hamilton_rhs(spec, g, at(pt, k3, dt))?;
    Ok(PhasePoint::new(
        pt.x + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        pt.p + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    ))
}

/// Evolve a wrapped coherent packet from `start` on an `n`-site cell and
/// follow its Husimi peak next to the RK4 orbit of the same Hamiltonian.
pub fn classical_compare(
    spec: &HamiltonianSpec,
    start: PhasePoint,
    dt: f64,
    steps: usize,
    n: usize,
) -> Result<ClassicalComparison> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let g = TorusGeometry::periodic(n)?;
    let h = build_hamiltonian(spec, &g)?;
    let prop = Propagator::new(&h)?;
    let psi0 = wrapped_coherent_state(start.x, start.p, &g)?;
    const SUBSTEPS: usize = 16;
    let mut orbit = start;
    let mut out = ClassicalComparison {
        times: Vec::with_capacity(steps + 1),
        classical: Vec::with_capacity(steps + 1),
        quantum: Vec::with_capacity(steps + 1),
        deviations: Vec::with_capacity(steps + 1),
        max_deviation: 0.0,
    };
    for s in 0..=steps {
        let t = s as f64 * dt;
        if s > 0 {
            for _ in 0..SUBSTEPS {
                orbit = rk4_step(spec, &g, orbit, dt / SUBSTEPS as f64)?;
            }
        }
        let psi = prop.evolve(&psi0, t)?;
        let peak = husimi_peak(&psi).map_err(|e| match e {
            Error::AmbiguousPeak { relative_gap, .. } => Error::AmbiguousPeak { relative_gap, time: t },
            other => other,
        })?;
        let c = orbit.reduced(&g);
        let dev = toroidal_distance(&g, c, peak) / g.diagonal();
        out.times.push(t);
        out.classical.push(c);
        out.quantum.push(peak);
        out.deviations.push(dev);
        out.max_deviation = out.max_deviation.max(dev);
    }
    Ok(out)
}

/// Node counts binned over the fundamental cell, averaged over frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDensityHistogram {
    /// `(bins along x, bins along p)`.
    pub bins: (usize, usize),
    /// Row-major over x then p; `counts[i * bins.1 + j]`.
    pub counts: Vec<f64>,
    pub frames: usize,
    /// Sum of `counts`; equals `N`.
    pub total: f64,
}

impl NodeDensityHistogram {
    pub fn count(&self, ix: usize, ip: usize) -> f64 { self.counts[ix * self.bins.1 + ip] }

    pub fn max_bin(&self) -> f64 { self.counts.iter().copied().fold(0.0, f64::max) }
}

/// Histogram of node positions with unit mass per node, averaged over the
/// given frames.
pub fn node_density(frames: &[NodeSet], bins: (usize, usize)) -> Result<NodeDensityHistogram> {
    if bins.0 < 4 || bins.1 < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4x4 bins, got {}x{}", bins.0, bins.1)));
    }
    if frames.is_empty() {
        return Err(Error::InvalidArgument("no frames to bin".into()));
    }
    let g = frames[0].geometry;
    let mut counts = vec![0.0; bins.0 * bins.1];
    let w = 1.0 / frames.len() as f64;
    for f in frames {
        for node in &f.nodes {
            let r = node.reduced(&g);
            let ix = ((r.x / g.position_period() * bins.0 as f64) as usize).min(bins.0 - 1);
            let ip = ((r.p / g.momentum_period() * bins.1 as f64) as usize).min(bins.1 - 1);
            counts[ix * bins.1 + ip] += w;
        }
    }
    let total = counts.iter().sum();
    Ok(NodeDensityHistogram { bins, counts, frames: frames.len(), total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{diagonalize, Profile};
    use crate::torus::{clustered_node_set, clustered_packet};
    use num_complex::Complex64 as C64;
    use std::f64::consts::TAU;

    fn harper(n: usize) -> (TorusGeometry, HermitianMatrix) {
        let g = TorusGeometry::periodic(n).unwrap();
        let spec = HamiltonianSpec::new(
            "harper",
            Profile::Cosine { amplitude: -2.0, wavenumber: 1.0 },
            Profile::Cosine { amplitude: -2.0, wavenumber: TAU / n as f64 },
        );
        (g, build_hamiltonian(&spec, &g).unwrap())
    }

    #[test]
    fn eigenstate_nodes_are_frozen() {
        let (_, h) = harper(8);
        let dec = diagonalize(&h).unwrap();
        let psi = dec.eigenstate(0).unwrap();
        let traj = track_nodes(&h, &psi, 1e-2, 50).unwrap();
        assert!(traj.max_excursion() < 1e-6);
        assert!(stationarity_residual(&h, 0).unwrap() < 1e-6);
    }

    #[test]
    fn superposition_nodes_move_and_return() {
        let (g, h) = harper(6);
        let dec = diagonalize(&h).unwrap();
        let (a, b) = (dec.eigenstate(0).unwrap(), dec.eigenstate(1).unwrap());
        let psi = StateVector::superpose(C64::new(1.0, 0.0), &a, C64::new(0.8, 0.0), &b).unwrap();
        let v = node_velocity(&h, &psi, 1e-4).unwrap();
        assert!(v.max_speed() > 1e-3);
        assert!(!v.flagged);
        // global phase leaves velocities alone
        let w = node_velocity(&h, &psi.with_global_phase(1.3), 1e-4).unwrap();
        for (p, q) in v.velocities.iter().zip(&w.velocities) {
            assert!((p.0 - q.0).abs() + (p.1 - q.1).abs() < 1e-6);
        }
        // one Bohr period brings the node set back
        let period = TAU / (dec.eigenvalues[1] - dec.eigenvalues[0]);
        let back = find_nodes(&Propagator::new(&h).unwrap().evolve(&psi, period).unwrap()).unwrap();
        let start = find_nodes(&psi).unwrap();
        for (p, q) in start.nodes.iter().zip(&back.nodes) {
            assert!(toroidal_distance(&g, *p, *q) < 1e-6);
        }
    }

    #[test]
    fn tracking_is_time_reversible() {
        let (g, h) = harper(6);
        let dec = diagonalize(&h).unwrap();
        let psi = StateVector::superpose(
            C64::new(1.0, 0.0),
            &dec.eigenstate(1).unwrap(),
            C64::new(0.0, 0.7),
            &dec.eigenstate(3).unwrap(),
        )
        .unwrap();
        let fwd = track_nodes(&h, &psi, 5e-3, 40).unwrap();
        assert!(fwd.max_excursion() > 1e-3);
        assert!(fwd.centroid_drift() < 1e-6);
        let end = Propagator::new(&h).unwrap().evolve(&psi, 0.2).unwrap();
        let start_end = find_nodes(&end).unwrap();
        let bwd = track_nodes(&h, &end, -5e-3, 40).unwrap();
        // relate labels of the two runs through the shared end frame
        let last = fwd.frames.last().unwrap();
        let label: Vec<usize> = bwd.frames[0]
            .nodes
            .iter()
            .map(|&p| {
                (0..last.len())
                    .min_by(|&i, &j| {
                        toroidal_distance(&g, last.nodes[i], p).total_cmp(&toroidal_distance(&g, last.nodes[j], p))
                    })
                    .unwrap()
            })
            .collect();
        assert_eq!(start_end.len(), 6);
        for (k, frame) in bwd.frames.iter().enumerate() {
            let mirror = &fwd.frames[fwd.frames.len() - 1 - k];
            for (i, &p) in frame.nodes.iter().enumerate() {
                assert!(toroidal_distance(&g, p, mirror.nodes[label[i]]) < 1e-8);
            }
        }
    }

    #[test]
    fn linear_dispersion_translates_at_integer_times() {
        // the lattice shift picks up the momentum offset as a boundary phase, which
        // the kernel absorbs only when the two twists agree
        let g = TorusGeometry::new(8, 0.4, 0.4).unwrap();
        let spec = HamiltonianSpec::new(
            "drift",
            Profile::Linear { slope: 1.0, center: 0.0, period: TAU },
            Profile::Zero,
        );
        let h = build_hamiltonian(&spec, &g).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(4);
        let psi = StateVector::random(g, &mut rng);
        let before = find_nodes(&psi).unwrap();
        let after = find_nodes(&Propagator::new(&h).unwrap().evolve(&psi, 1.0).unwrap()).unwrap();
        for p in &before.nodes {
            let moved = PhasePoint::new(p.x + 1.0, p.p);
            let d = after.nodes.iter().map(|&q| toroidal_distance(&g, q, moved)).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-8);
        }
    }

    #[test]
    fn breakdown_is_reported() {
        // a huge step on a fast Hamiltonian cannot be resolved
        let g = TorusGeometry::periodic(6).unwrap();
        let spec = HamiltonianSpec::new(
            "fast",
            Profile::Cosine { amplitude: -2e5, wavenumber: 1.0 },
            Profile::Cosine { amplitude: 3e5, wavenumber: TAU / 6.0 },
        );
        let h = build_hamiltonian(&spec, &g).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(9);
        let psi = StateVector::random(g, &mut rng);
        assert!(matches!(track_nodes(&h, &psi, 1e-2, 3), Err(Error::TrackingBreakdown { .. })));
    }

    #[test]
    fn rk4_matches_harmonic_orbit() {
        let g = TorusGeometry::periodic(64).unwrap();
        let spec = HamiltonianSpec::new(
            "ho",
            Profile::Quadratic { curvature: 1.0, center: 0.0, period: TAU },
            Profile::Quadratic { curvature: 0.01, center: 32.0, period: 64.0 },
        );
        let mut pt = PhasePoint::new(42.0, 0.0);
        let dt = 0.05;
        for _ in 0..200 {
            pt = rk4_step(&spec, &g, pt, dt).unwrap();
        }
        let t = 200.0 * dt;
        let want = PhasePoint::new(32.0 + 10.0 * (0.1 * t).cos(), -10.0 * 0.1 * (0.1 * t).sin());
        assert!((pt.x - want.x).abs() < 1e-9 && (pt.p - want.p).abs() < 1e-9);
    }

    #[test]
    fn free_packet_keeps_momentum() {
        let spec = HamiltonianSpec::new(
            "free",
            Profile::Quadratic { curvature: 1.0, center: 0.0, period: TAU },
            Profile::Zero,
        );
        let c = classical_compare(&spec, PhasePoint::new(20.0, 0.8), 0.5, 8, 64).unwrap();
        for q in &c.quantum {
            assert!((q.p - 0.8).abs() < 1e-6);
        }
        assert!(c.max_deviation < 0.05);
    }

    #[test]
    fn histogram_mass() {
        let (g, _) = harper(8);
        let psi = StateVector::momentum_eigenstate(g, 1).unwrap();
        let ns = find_nodes(&psi).unwrap();
        let hist = node_density(std::slice::from_ref(&ns), (4, 4)).unwrap();
        assert!((hist.total - 8.0).abs() < 1e-9);
        // the eight nodes sit on one p-line, two per x bin
        for ix in 0..4 {
            let row: f64 = (0..4).map(|ip| hist.count(ix, ip)).sum();
            assert!((row - 2.0).abs() < 1e-9);
        }
        assert!(node_density(&[ns], (3, 8)).is_err());

        let c = PhasePoint::new(2.5, 1.0);
        let packet = clustered_packet(c, &g).unwrap();
        let cl = clustered_node_set(&packet, c).unwrap();
        let hist = node_density(&[cl], (8, 8)).unwrap();
        assert!(hist.max_bin() >= 7.0);
    }
}
