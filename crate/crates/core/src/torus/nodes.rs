use nalgebra::{DMatrix, SVD};
use num_complex::Complex64 as C64;

use super::{
    cell_count, circle_count, circle_moment, toroidal_distance, zeta_distance, BargmannFunction, ContourCount, PhasePoint,
};
use crate::error::{Error, Result};
use crate::hilbert::{wrap_symmetric, StateVector, TorusGeometry};

/// Nodes closer than this are copies of one multiple zero.
pub const COINCIDENT: f64 = 1e-6;

/// Tuning knobs for [`find_nodes_with`].
#[derive(Copy, Clone, Debug)]
pub struct NodeFinderOptions {
    /// Mesh points per side are `ceil(mesh_factor * sqrt(N))`.
    pub mesh_factor: f64,
    /// Roots closer than this (toroidal distance) are merged.
    pub dedupe_distance: f64,
    /// Accepted `|F(ζ)| / max|F|` at a root.
    pub residual_tol: f64,
    /// Minimum distance of any root from the certifying contour.
    pub contour_clearance: f64,
}

impl Default for NodeFinderOptions {
    fn default() -> Self {
        Self { mesh_factor: 8.0, dedupe_distance: 1e-6, residual_tol: 1e-9, contour_clearance: 1e-4 }
    }
}

/// The `N` phase-space zeros of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet {
    pub geometry: TorusGeometry,
    /// Node positions in the fundamental cell `[0, L) x [0, P)`.
    pub nodes: Vec<PhasePoint>,
    /// `|F(ζ_i)| / max|F|` over the scan mesh.
    pub residuals: Vec<f64>,
    /// Zero count from the argument principle around the cell.
    pub count_certificate: i64,
    /// Distance of the contour integral from the nearest integer.
    pub contour_defect: f64,
    /// `(Σ x_i mod L, Σ p_i mod P)`.
    pub centroid: PhasePoint,
}

impl NodeSet {
    fn assemble(
        geometry: TorusGeometry,
        mut nodes: Vec<PhasePoint>,
        mut residuals: Vec<f64>,
        cert: ContourCount,
    ) -> Self {
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by(|&a, &b| nodes[a].x.total_cmp(&nodes[b].x).then(nodes[a].p.total_cmp(&nodes[b].p)));
        nodes = order.iter().map(|&i| nodes[i]).collect();
        residuals = order.iter().map(|&i| residuals[i]).collect();
        let centroid = centroid_of(&geometry, &nodes);
        Self {
            geometry,
            nodes,
            residuals,
            count_certificate: cert.count,
            contour_defect: cert.defect,
            centroid,
        }
    }

    pub fn len(&self) -> usize { self.nodes.len() }

    pub fn is_empty(&self) -> bool { self.nodes.is_empty() }

    pub fn max_residual(&self) -> f64 { self.residuals.iter().copied().fold(0.0, f64::max) }

    /// Smallest toroidal distance between two nodes at different positions
    /// (coincident copies of a multiple zero are skipped).
    pub fn min_spacing(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.nodes.len() {
            for j in i + 1..self.nodes.len() {
                let d = toroidal_distance(&self.geometry, self.nodes[i], self.nodes[j]);
                if d > COINCIDENT {
                    best = best.min(d);
                }
            }
        }
        best
    }

    /// Whether nodes `i` and `j` are copies of one multiple zero.
    pub fn coincident(&self, i: usize, j: usize) -> bool {
        toroidal_distance(&self.geometry, self.nodes[i], self.nodes[j]) <= COINCIDENT
    }
}

pub(crate) fn centroid_of(g: &TorusGeometry, nodes: &[PhasePoint]) -> PhasePoint {
    let sx: f64 = nodes.iter().map(|n| n.x).sum();
    let sp: f64 = nodes.iter().map(|n| n.p).sum();
    PhasePoint::new(sx, sp).reduced(g)
}

/// Newton iteration for the zeros of `F` from `start`, with steps capped at
/// half a coherent-state width.
pub(crate) fn newton_root(f: &BargmannFunction, start: PhasePoint) -> Option<PhasePoint> {
    let mut z = f.zeta(start);
    let mut settled = 0;
    // near a multiple root the iteration stalls at round-off; keep the best
    let mut best = (f64::INFINITY, z);
    let mut last_step = f64::INFINITY;
    for _ in 0..120 {
        let (v, d) = f.scaled(f.point(z));
        if v.norm() < best.0 {
            best = (v.norm(), z);
        }
        // Newton on F(ζ + η) e^{-conj(ζ) η}, which strips the Gaussian growth
        let d = d - z.conj() * v;
        if d.norm() == 0.0 {
            return (v.norm() == 0.0).then(|| f.point(z));
        }
        let mut step = v / d;
        let s = step.norm();
        if !s.is_finite() {
            return None;
        }
        last_step = s;
        if s > 0.5 {
            step *= 0.5 / s;
        }
        z -= step;
        if s < 1e-13 * (1.0 + z.norm()) {
            settled += 1;
            if settled >= 2 {
                return Some(f.point(z));
            }
        }
    }
    (last_step < 1e-6).then(|| f.point(best.1))
}

struct Scan {
    values: Vec<f64>,
    nx: usize,
    ny: usize,
    dx: f64,
    dp: f64,
    max: f64,
}

impl Scan {
    fn run(f: &BargmannFunction, per_side: usize) -> Self {
        let g = f.geometry();
        let (nx, ny) = (per_side, per_side);
        let dx = g.position_period() / nx as f64;
        let dp = g.momentum_period() / ny as f64;
        let mut values = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                values.push(f.scaled_value(PhasePoint::new(i as f64 * dx, j as f64 * dp)).norm());
            }
        }
        let max = values.iter().copied().fold(0.0, f64::max);
        Self { values, nx, ny, dx, dp, max }
    }

    fn at(&self, i: isize, j: isize) -> f64 {
        let i = i.rem_euclid(self.nx as isize) as usize;
        let j = j.rem_euclid(self.ny as isize) as usize;
        self.values[i * self.ny + j]
    }

    fn point(&self, i: usize, j: usize) -> PhasePoint { PhasePoint::new(i as f64 * self.dx, j as f64 * self.dp) }

    fn below(&self, level: f64) -> Vec<(usize, usize)> {
        (0..self.nx)
            .flat_map(|i| (0..self.ny).map(move |j| (i, j)))
            .filter(|&(i, j)| self.values[i * self.ny + j] < level)
            .collect()
    }

    /// Mesh points not exceeded by any of their eight toroidal neighbours.
    fn extrema(&self, minima: bool) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.nx {
            for j in 0..self.ny {
                let v = self.values[i * self.ny + j];
                let mut keep = true;
                'nb: for di in -1isize..=1 {
                    for dj in -1isize..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let w = self.at(i as isize + di, j as isize + dj);
                        if (minima && w < v) || (!minima && w > v) {
                            keep = false;
                            break 'nb;
                        }
                    }
                }
                if keep {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

fn push_unique(g: &TorusGeometry, roots: &mut Vec<PhasePoint>, r: PhasePoint, tol: f64) -> bool {
    if roots.iter().any(|&q| toroidal_distance(g, q, r) < tol) {
        return false;
    }
    roots.push(r);
    true
}

/// Certify the zero count with a cell contour kept clear of `roots`.
pub(crate) fn certify(f: &BargmannFunction, roots: &[PhasePoint], dx: f64, dp: f64, clearance: f64) -> Result<ContourCount> {
    let g = f.geometry();
    let (l, pp) = (g.position_period(), g.momentum_period());
    let shifts = [
        (0.0, 0.0),
        (-0.125, -0.125),
        (0.125, 0.125),
        (-0.25, -0.25),
        (0.25, 0.25),
        (-0.25, 0.25),
        (0.25, -0.25),
        (-0.125, 0.25),
        (0.25, -0.125),
    ];
    let mut best = 0.0f64;
    for (sx, sp) in shifts {
        let origin = PhasePoint::new(sx * dx, sp * dp);
        let clear = roots
            .iter()
            .map(|r| wrap_symmetric(r.x - origin.x, l).abs().min(wrap_symmetric(r.p - origin.p, pp).abs()))
            .fold(f64::INFINITY, f64::min);
        best = best.max(clear);
        if clear >= clearance {
            return cell_count(f, origin);
        }
    }
    Err(Error::ContourDegenerate(best))
}

/// Locate all zeros of the phase-space image of `state` with default options.
pub fn find_nodes(state: &StateVector) -> Result<NodeSet> { find_nodes_with(state, &NodeFinderOptions::default()) }

/// Mesh scan for minima of `|F|`, Newton refinement, deduplication and an
/// argument-principle certificate. One remesh at double density is attempted
/// before reporting [`Error::NodeCountMismatch`].
pub fn find_nodes_with(state: &StateVector, opts: &NodeFinderOptions) -> Result<NodeSet> {
    let f = BargmannFunction::new(state);
    let g = *state.geometry();
    let base = (opts.mesh_factor * (g.n() as f64).sqrt()).ceil() as usize;
    let mut roots: Vec<PhasePoint> = Vec::new();
    let mut last = None;
    for density in [1usize, 2] {
        let scan = Scan::run(&f, base * density);
        let mut seeds = scan.extrema(true);
        if density > 1 {
            // minima can merge for close pairs; seed from every low point
            seeds.extend(scan.below(0.1 * scan.max));
        }
        for (i, j) in seeds {
            if let Some(r) = newton_root(&f, scan.point(i, j)) {
                let r = r.reduced(&g);
                if f.scaled_value(r).norm() <= opts.residual_tol * scan.max {
                    push_unique(&g, &mut roots, r, opts.dedupe_distance);
                }
            }
        }
        let cert = certify(&f, &roots, scan.dx, scan.dp, opts.contour_clearance)?;
        let mut found = roots.len();
        if cert.count != found as i64 {
            // symmetric states can carry multiple zeros; Newton then stalls
            // on a cloud of near-roots that has to be resolved by contours
            if let Some(nodes) = resolve_multiplicities(&f, &roots)? {
                found = nodes.len();
                if cert.count == found as i64 {
                    roots = nodes;
                }
            }
        }
        if cert.count == roots.len() as i64 {
            let residuals = roots.iter().map(|&r| f.scaled_value(r).norm() / scan.max).collect();
            return Ok(NodeSet::assemble(g, roots, residuals, cert));
        }
        last = Some(Error::NodeCountMismatch { certificate: cert.count, found });
    }
    Err(last.expect("loop ran"))
}

/// ζ-radius of the circles used to resolve coincident zeros.
const CLUSTER_RADIUS: f64 = 0.02;

/// Group candidate roots into clusters, each replaced by its zero count
/// copies of the contour mean. `None` if some cluster encloses no zero.
fn resolve_multiplicities(f: &BargmannFunction, candidates: &[PhasePoint]) -> Result<Option<Vec<PhasePoint>>> {
    let g = *f.geometry();
    let w = f.width();
    let mut pending: Vec<PhasePoint> = candidates.to_vec();
    pending.sort_by(|a, b| f.scaled_value(*a).norm().total_cmp(&f.scaled_value(*b).norm()));
    let mut out = Vec::new();
    while let Some(&c) = pending.first() {
        let (m, mean) = circle_moment(f, c, CLUSTER_RADIUS)?;
        if m <= 0 {
            return Ok(None);
        }
        let mean = mean.reduced(&g);
        out.extend(std::iter::repeat_n(mean, m as usize));
        pending.retain(|&q| zeta_distance(&g, w, q, c) > CLUSTER_RADIUS);
    }
    Ok(Some(out))
}

/// Node set of `state` obtained by Newton refinement from `seeds` (typically
/// the nodes of a nearby state). Falls back to a full [`find_nodes`] when the
/// seeds do not yield `N` distinct certified roots.
pub fn node_set_from_seeds(state: &StateVector, seeds: &[PhasePoint]) -> Result<NodeSet> {
    let f = BargmannFunction::new(state);
    let g = *state.geometry();
    let opts = NodeFinderOptions::default();
    let mut roots = Vec::with_capacity(seeds.len());
    let mut ok = seeds.len() == g.n();
    if ok {
        for &s in seeds {
            match newton_root(&f, s) {
                Some(r) if push_unique(&g, &mut roots, r.reduced(&g), opts.dedupe_distance) => {}
                _ => {
                    ok = false;
                    break;
                }
            }
        }
    }
    if ok {
        let per_side = (opts.mesh_factor * (g.n() as f64).sqrt()).ceil() as usize;
        let dx = g.position_period() / per_side as f64;
        let dp = g.momentum_period() / per_side as f64;
        // cheap normalization: the largest |F| over a coarse mesh
        let scale = Scan::run(&f, per_side).max;
        let residuals: Vec<f64> = roots.iter().map(|&r| f.scaled_value(r).norm() / scale).collect();
        if residuals.iter().all(|&r| r <= opts.residual_tol) {
            if let Ok(cert) = certify(&f, &roots, dx, dp, opts.contour_clearance) {
                if cert.count == roots.len() as i64 {
                    return Ok(NodeSet::assemble(g, roots, residuals, cert));
                }
            }
        }
    }
    find_nodes(state)
}

/// Node centroid of a fiducial state (the `k_0` momentum eigenstate) on the
/// same cell. Every state on the cell shares it modulo the lattice.
pub fn centroid_reference(geometry: &TorusGeometry) -> Result<PhasePoint> {
    let fiducial = StateVector::momentum_eigenstate(*geometry, 0)?;
    Ok(find_nodes(&fiducial)?.centroid)
}

/// Toroidal distance between the node centroid and the cell's reference.
pub fn sum_rule(nodes: &NodeSet, geometry: &TorusGeometry) -> Result<f64> {
    if nodes.geometry != *geometry {
        return Err(Error::GeometryMismatch("node set belongs to another cell".into()));
    }
    let reference = centroid_reference(geometry)?;
    Ok(toroidal_distance(geometry, nodes.centroid, reference))
}

/// Singular values (ascending) of the zero-padded `N x N` system whose null
/// vector is the state with zeros at `nodes`.
fn null_space(rows: Vec<Vec<C64>>, n: usize) -> (nalgebra::DVector<C64>, Vec<f64>) {
    let mut a = DMatrix::<C64>::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let scale = row.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let scale = if scale > 0.0 { scale } else { 1.0 };
        for (j, c) in row.iter().enumerate() {
            a[(i, j)] = c / scale;
        }
    }
    let svd = SVD::new(a, false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    let sv = order.iter().map(|&i| svd.singular_values[i]).collect();
    let null = v_t.row(order[0]).adjoint();
    (null, sv)
}

/// A null space is accepted when it is one-dimensional: the second singular
/// value must be at least ten times the first and not lost in round-off.
fn check_gap(sv: &[f64]) -> Result<()> {
    let top = sv.last().copied().unwrap_or(0.0);
    if sv[1] < 10.0 * sv[0] || sv[1] <= 1e-13 * top {
        return Err(Error::DegenerateNodeConfiguration { smallest: sv[0], next: sv[1] });
    }
    Ok(())
}

/// Singular values (ascending) of the reconstruction system for `nodes`.
pub fn reconstruction_singular_values(nodes: &[PhasePoint], geometry: &TorusGeometry) -> Result<Vec<f64>> {
    Ok(reconstruction(nodes, geometry)?.1)
}

fn reconstruction(nodes: &[PhasePoint], geometry: &TorusGeometry) -> Result<(StateVector, Vec<f64>)> {
    let n = geometry.n();
    if nodes.len() != n - 1 {
        return Err(Error::InvalidArgument(format!("need N-1 = {} nodes, got {}", n - 1, nodes.len())));
    }
    // the kernel row does not depend on the amplitudes
    let probe = StateVector::basis(*geometry, 0)?;
    let f = BargmannFunction::new(&probe);
    let rows = nodes.iter().map(|&pt| f.kernel_row(pt)).collect();
    let (null, sv) = null_space(rows, n);
    check_gap(&sv)?;
    Ok((StateVector::from_dvector(*geometry, null)?, sv))
}

/// The unique state (up to phase) whose phase-space image vanishes at the
/// given `N - 1` points; the last zero is fixed by the sum rule.
pub fn state_from_nodes(nodes: &[PhasePoint], geometry: &TorusGeometry) -> Result<StateVector> {
    Ok(reconstruction(nodes, geometry)?.0)
}

/// Number of zeros inside a circle of ζ-radius `radius` around `center`.
pub fn cluster_multiplicity(state: &StateVector, center: PhasePoint, radius: f64) -> Result<i64> {
    let f = BargmannFunction::new(state);
    Ok(circle_count(&f, center, radius)?.count)
}

pub(crate) fn null_space_state(rows: Vec<Vec<C64>>, geometry: &TorusGeometry) -> Result<StateVector> {
    let (null, sv) = null_space(rows, geometry.n());
    check_gap(&sv)?;
    StateVector::from_dvector(*geometry, null)
}

pub(crate) fn assemble_node_set(
    geometry: TorusGeometry,
    nodes: Vec<PhasePoint>,
    residuals: Vec<f64>,
    cert: ContourCount,
) -> NodeSet {
    NodeSet::assemble(geometry, nodes, residuals, cert)
}
