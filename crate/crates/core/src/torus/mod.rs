//! Analytic phase-space image of torus states.
//!
//! A state `c_j` on the ring is mapped to
//!
//! ```text
//! F(ζ) = Σ_j c_j Σ_n e^{i n θ1} K(ζ, x_j + nL),
//! K(ζ, x0) = (π w²)^{-1/4} exp(-ζ²/2 + √2 ζ x0/w - x0²/(2w²)),
//! ζ = (x/w - i p w)/√2,
//! ```
//!
//! an entire function that is quasi-periodic over the cell and has exactly
//! `N` zeros per cell. `|F|² e^{-|ζ|²}` is the Husimi density. The width `w`
//! defaults to [`TorusGeometry::kernel_width`]; with `w = 1` the kernel is the
//! textbook Segal-Bargmann kernel.
//!
//! Evaluation is done in the scaled form `F_s = e^{-|ζ|²/2} F`, which stays
//! bounded everywhere on the cell and has the same phase and zeros as `F`.

mod nodes;
mod packets;

pub use nodes::{
    centroid_reference, cluster_multiplicity, find_nodes, find_nodes_with, node_set_from_seeds,
    reconstruction_singular_values, state_from_nodes, sum_rule, NodeFinderOptions, NodeSet,
};
pub use packets::{clustered_node_set, clustered_packet, husimi_peak, wrapped_coherent_state, MAX_CLUSTER_N};

use std::f64::consts::{PI, SQRT_2, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{wrap_symmetric, StateVector, TorusGeometry};

/// Kernel terms with `|x0 - x| > IMAGE_WINDOW * w` are dropped; their weight
/// is below `e^{-50}` of the leading term.
pub const IMAGE_WINDOW: f64 = 10.0;

/// A point `(x, p)` of phase space.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(x: f64, p: f64) -> Self { Self { x, p } }

    /// Reduce into the fundamental cell `[0, L) x [0, P)`.
    pub fn reduced(self, g: &TorusGeometry) -> Self {
        let (l, pp) = (g.position_period(), g.momentum_period());
        let mut x = self.x.rem_euclid(l);
        let mut p = self.p.rem_euclid(pp);
        if x >= l {
            x = 0.0;
        }
        if p >= pp {
            p = 0.0;
        }
        Self { x, p }
    }
}

/// Shortest displacement `b - a` on the torus.
pub fn toroidal_delta(g: &TorusGeometry, a: PhasePoint, b: PhasePoint) -> (f64, f64) {
    (
        wrap_symmetric(b.x - a.x, g.position_period()),
        wrap_symmetric(b.p - a.p, g.momentum_period()),
    )
}

/// Euclidean distance on the torus in `(x, p)` coordinates.
pub fn toroidal_distance(g: &TorusGeometry, a: PhasePoint, b: PhasePoint) -> f64 {
    let (dx, dp) = toroidal_delta(g, a, b);
    dx.hypot(dp)
}

/// Scaled value, first and second ζ-derivatives at one point.
#[derive(Copy, Clone, Debug)]
pub struct ScaledJet {
    pub value: C64,
    pub d1: C64,
    pub d2: C64,
}

/// Phase-space image of a state; see the module docs.
#[derive(Clone, Debug)]
pub struct BargmannFunction {
    amplitudes: Vec<C64>,
    geometry: TorusGeometry,
    width: f64,
}

impl BargmannFunction {
    pub fn new(state: &StateVector) -> Self { Self::with_width(state, state.geometry().kernel_width()) }

    pub fn with_width(state: &StateVector, width: f64) -> Self {
        Self { amplitudes: state.amplitudes().iter().copied().collect(), geometry: *state.geometry(), width }
    }

    pub fn geometry(&self) -> &TorusGeometry { &self.geometry }

    pub fn width(&self) -> f64 { self.width }

    pub fn zeta(&self, pt: PhasePoint) -> C64 {
        C64::new(pt.x / self.width, -pt.p * self.width) / SQRT_2
    }

    pub fn point(&self, zeta: C64) -> PhasePoint {
        PhasePoint { x: SQRT_2 * self.width * zeta.re, p: -SQRT_2 * zeta.im / self.width }
    }

    /// Largest `|n|` of the periodic images that contribute anywhere on the
    /// fundamental cell.
    pub fn image_range(&self) -> i64 {
        let l = self.geometry.position_period();
        ((IMAGE_WINDOW * self.width + l) / l).ceil() as i64
    }

    /// Visit every retained `(site, x0, e^{i n θ1})` for an evaluation at `x`.
    #[inline]
    fn for_each_image(&self, x: f64, mut f: impl FnMut(usize, f64, C64)) {
        let l = self.geometry.position_period();
        let reach = IMAGE_WINDOW * self.width;
        let theta1 = self.geometry.theta1();
        for (j, _) in self.amplitudes.iter().enumerate() {
            let xj = self.geometry.position(j);
            let lo = ((x - reach - xj) / l).ceil() as i64;
            let hi = ((x + reach - xj) / l).floor() as i64;
            for n in lo..=hi {
                f(j, xj + n as f64 * l, C64::from_polar(1.0, n as f64 * theta1));
            }
        }
    }

    fn prefactor(&self, pt: PhasePoint) -> C64 {
        C64::from_polar((PI * self.width * self.width).powf(-0.25), 0.5 * pt.x * pt.p)
    }

    /// `F_s = e^{-|ζ|²/2} F(ζ)` and `F_s' = e^{-|ζ|²/2} F'(ζ)`.
    pub fn scaled(&self, pt: PhasePoint) -> (C64, C64) {
        let zeta = self.zeta(pt);
        let w = self.width;
        let mut v = C64::new(0.0, 0.0);
        let mut d = C64::new(0.0, 0.0);
        self.for_each_image(pt.x, |j, x0, twist| {
            let u = (x0 - pt.x) / w;
            let t = self.amplitudes[j] * twist * C64::from_polar((-0.5 * u * u).exp(), -pt.p * x0);
            v += t;
            d += t * (C64::new(SQRT_2 * x0 / w, 0.0) - zeta);
        });
        let pre = self.prefactor(pt);
        (v * pre, d * pre)
    }

    /// Scaled value together with the second derivative.
    pub fn scaled_jet(&self, pt: PhasePoint) -> ScaledJet {
        let zeta = self.zeta(pt);
        let w = self.width;
        let (mut v, mut d1, mut d2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        self.for_each_image(pt.x, |j, x0, twist| {
            let u = (x0 - pt.x) / w;
            let t = self.amplitudes[j] * twist * C64::from_polar((-0.5 * u * u).exp(), -pt.p * x0);
            let a = C64::new(SQRT_2 * x0 / w, 0.0) - zeta;
            v += t;
            d1 += t * a;
            d2 += t * (a * a - 1.0);
        });
        let pre = self.prefactor(pt);
        ScaledJet { value: v * pre, d1: d1 * pre, d2: d2 * pre }
    }

    /// Scaled value only; cheapest evaluation, used by mesh scans.
    pub fn scaled_value(&self, pt: PhasePoint) -> C64 {
        let w = self.width;
        let mut v = C64::new(0.0, 0.0);
        self.for_each_image(pt.x, |j, x0, twist| {
            let u = (x0 - pt.x) / w;
            v += self.amplitudes[j] * twist * C64::from_polar((-0.5 * u * u).exp(), -pt.p * x0);
        });
        v * self.prefactor(pt)
    }

    /// Unscaled `(F(ζ), F'(ζ))`. Overflows for `|ζ|² ≳ 1400`; use
    /// [`BargmannFunction::scaled`] away from the origin.
    pub fn evaluate(&self, zeta: C64) -> (C64, C64) {
        let pt = self.point(zeta);
        let (v, d) = self.scaled(pt);
        let s = (0.5 * zeta.norm_sqr()).exp();
        (v * s, d * s)
    }

    /// Husimi density `|F|² e^{-|ζ|²}`.
    pub fn husimi(&self, pt: PhasePoint) -> f64 { self.scaled_value(pt).norm_sqr() }

    /// Row of the linear map `c ↦ e^{-|ζ|²/2} F^{(k)}` expressed through the
    /// Taylor coefficients of `F(ζ0 + η) e^{-conj(ζ0) η}` at `η = 0`, for
    /// `k = 0..orders`. Each row has the same zero set as the direct
    /// derivative conditions but is far better conditioned.
    pub(crate) fn taylor_rows(&self, center: PhasePoint, orders: usize) -> Vec<Vec<C64>> {
        let n = self.amplitudes.len();
        let w = self.width;
        let l = self.geometry.position_period();
        let theta1 = self.geometry.theta1();
        // higher orders pick up polynomial growth; widen the window with them
        let reach = (IMAGE_WINDOW + 2.0 * (orders as f64).sqrt()) * w;
        let mut rows = vec![vec![C64::new(0.0, 0.0); n]; orders];
        let mut herm = vec![0.0; orders.max(2)];
        for j in 0..n {
            let xj = self.geometry.position(j);
            let lo = ((center.x - reach - xj) / l).ceil() as i64;
            let hi = ((center.x + reach - xj) / l).floor() as i64;
            for img in lo..=hi {
                let x0 = xj + img as f64 * l;
                let u = (x0 - center.x) / w;
                let base = C64::from_polar((-0.5 * u * u).exp(), img as f64 * theta1 - center.p * x0);
                let a = SQRT_2 * u;
                // normalized Hermite He_k(a)/sqrt(k!)
                herm[0] = 1.0;
                if orders > 1 {
                    herm[1] = a;
                }
                for k in 2..orders {
                    let kf = k as f64;
                    herm[k] = (a * herm[k - 1] - (kf - 1.0).sqrt() * herm[k - 2]) / kf.sqrt();
                }
                for k in 0..orders {
                    rows[k][j] += base * herm[k];
                }
            }
        }
        rows
    }

    /// Row `e^{-|ζ|²/2} K_T(ζ, x_j)` (up to a factor common to the row) whose
    /// contraction with the amplitudes gives the scaled value at `pt`.
    pub(crate) fn kernel_row(&self, pt: PhasePoint) -> Vec<C64> {
        self.taylor_rows(pt, 1).pop().unwrap()
    }
}

/// Outcome of an argument-principle contour integral.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ContourCount {
    /// Number of zeros enclosed (orientation-corrected).
    pub count: i64,
    /// Distance of `(1/2πi) ∮ F'/F dζ` from the nearest integer.
    pub defect: f64,
}

/// `(1/2πi) ∮ dlog F` along the closed curve `path(s)`, `s ∈ [0, 1]`, given
/// counter-clockwise in `(x, p)`. The integral is accumulated exactly as a sum
/// of `log(F(b)/F(a))` over adaptively refined pieces; refinement continues
/// until each piece turns by less than π/4, its midpoint is consistent, and the
/// turn agrees with the trapezoid estimate of `Im ∫ F'/F dζ` (which catches
/// pieces that alias a whole turn).
pub fn contour_count(
    f: &BargmannFunction,
    path: &dyn Fn(f64) -> PhasePoint,
    initial_pieces: usize,
) -> Result<ContourCount> {
    const MAX_DEPTH: u32 = 48;
    const MAX_TURN: f64 = PI / 4.0;
    // value and F'/F, the latter to predict how far a piece turns
    let eval = |s: f64| {
        let pt = path(s);
        let (v, d) = f.scaled(pt);
        (f.zeta(pt), v, if v == C64::new(0.0, 0.0) { v } else { d / v })
    };
    // turn predicted by the trapezoid rule on d(arg F) = Im(F'/F dζ)
    let predicted = |a: &(C64, C64, C64), b: &(C64, C64, C64)| (0.5 * (a.2 + b.2) * (b.0 - a.0)).im;
    let mut total = C64::new(0.0, 0.0);
    let pieces = initial_pieces.max(4);
    type Node = (C64, C64, C64);
    let mut stack: Vec<(f64, f64, Node, Node, u32)> = Vec::new();
    let start = eval(0.0);
    let mut prev_s = 0.0;
    let mut prev = start;
    for i in 1..=pieces {
        let s = i as f64 / pieces as f64;
        let next = if i == pieces { start } else { eval(s) };
        stack.push((prev_s, s, prev, next, 0));
        prev_s = s;
        prev = next;
        while let Some((a, b, ea, eb, depth)) = stack.pop() {
            let (fa, fb) = (ea.1, eb.1);
            if fa == C64::new(0.0, 0.0) || fb == C64::new(0.0, 0.0) {
                return Err(Error::ContourDegenerate(0.0));
            }
            let m = 0.5 * (a + b);
            let em = eval(m);
            let fm = em.1;
            let r1 = fm / fa;
            let r2 = fb / fm;
            let whole = (fb / fa).arg();
            let (t1, t2) = (r1.arg(), r2.arg());
            let consistent = (t1 + t2 - whole).abs() < 1e-9
                && (predicted(&ea, &em) - t1).abs() < MAX_TURN
                && (predicted(&em, &eb) - t2).abs() < MAX_TURN;
            if t1.abs() < MAX_TURN && t2.abs() < MAX_TURN && consistent {
                total += r1.ln() + r2.ln();
            } else if depth >= MAX_DEPTH {
                return Err(Error::ContourDegenerate(b - a));
            } else {
                // push the right half first so pieces are consumed in order
                stack.push((m, b, em, eb, depth + 1));
                stack.push((a, m, ea, em, depth + 1));
            }
        }
    }
    let winding = total / C64::new(0.0, TAU);
    let rounded = winding.re.round();
    let defect = C64::new(winding.re - rounded, winding.im).norm();
    // ζ = (x/w - i p w)/√2 reverses orientation
    Ok(ContourCount { count: -(rounded as i64), defect })
}

/// Zero count inside the cell `[x0, x0+L] x [p0, p0+P]`.
pub fn cell_count(f: &BargmannFunction, origin: PhasePoint) -> Result<ContourCount> {
    let g = *f.geometry();
    let (l, pp) = (g.position_period(), g.momentum_period());
    let path = move |s: f64| {
        let t = 4.0 * s;
        match t {
            t if t < 1.0 => PhasePoint::new(origin.x + t * l, origin.p),
            t if t < 2.0 => PhasePoint::new(origin.x + l, origin.p + (t - 1.0) * pp),
            t if t < 3.0 => PhasePoint::new(origin.x + (3.0 - t) * l, origin.p + pp),
            t => PhasePoint::new(origin.x, origin.p + (4.0 - t) * pp),
        }
    };
    // a few pieces per coherent-state width along each side
    let per_side = ((l / f.width()).max(pp * f.width()) * 4.0).ceil() as usize;
    contour_count(f, &path, 4 * per_side)
}

/// Zero count inside a circle of ζ-radius `radius` around `center`.
pub fn circle_count(f: &BargmannFunction, center: PhasePoint, radius: f64) -> Result<ContourCount> {
    let z0 = f.zeta(center);
    // counter-clockwise in (x, p) is clockwise in ζ
    let path = move |s: f64| f.point(z0 + C64::from_polar(radius, -TAU * s));
    contour_count(f, &path, 64)
}

/// Number of zeros inside a ζ-circle and their mean position, from
/// `(1/2πi) ∮ ζ F'/F dζ` by the trapezoid rule (spectrally accurate while no
/// zero is close to the circle).
pub fn circle_moment(f: &BargmannFunction, center: PhasePoint, radius: f64) -> Result<(i64, PhasePoint)> {
    let count = circle_count(f, center, radius)?.count;
    if count == 0 {
        return Ok((0, center));
    }
    const POINTS: usize = 256;
    let z0 = f.zeta(center);
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..POINTS {
        let e = C64::from_polar(1.0, TAU * k as f64 / POINTS as f64);
        let z = z0 + e * radius;
        let (v, d) = f.scaled(f.point(z));
        // (1/2πi) ∮ g dζ = mean over the circle of g · ρ e^{iφ}
        acc += (z - z0) * d / v * e * radius;
    }
    let offset = acc / POINTS as f64 / count as f64;
    Ok((count, f.point(z0 + offset)))
}

/// Distance in ζ units between two points, taken on the torus.
pub fn zeta_distance(g: &TorusGeometry, width: f64, a: PhasePoint, b: PhasePoint) -> f64 {
    let (dx, dp) = toroidal_delta(g, a, b);
    (dx / width).hypot(dp * width) / SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct kernel sum with the textbook formula, no windowing.
    fn brute_force(state: &StateVector, width: f64, zeta: C64) -> C64 {
        let g = state.geometry();
        let l = g.position_period();
        let mut acc = C64::new(0.0, 0.0);
        for (j, c) in state.amplitudes().iter().enumerate() {
            for n in -6i64..=6 {
                let x0 = g.position(j) + n as f64 * l;
                let u0 = x0 / width;
                let k = (PI * width * width).powf(-0.25)
                    * (-zeta * zeta / 2.0 + SQRT_2 * zeta * u0 - u0 * u0 / 2.0).exp();
                acc += c * C64::from_polar(1.0, n as f64 * g.theta1()) * k;
            }
        }
        acc
    }

    #[test]
    fn delta_state_at_origin() {
        for theta1 in [0.0, 1.1] {
            let g = TorusGeometry::new(8, theta1, 0.0).unwrap();
            let s = StateVector::basis(g, 0).unwrap();
            let f = BargmannFunction::with_width(&s, 1.0);
            let (v, _) = f.evaluate(C64::new(0.0, 0.0));
            let want = PI.powf(-0.25) * (1.0 + 2.0 * (-32f64).exp() * theta1.cos());
            assert!((v - C64::new(want, 0.0)).norm() < 1e-15, "{v} vs {want}");
        }
    }

    #[test]
    fn matches_brute_force_kernel_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = TorusGeometry::new(6, 0.7, 0.2).unwrap();
        let s = StateVector::random(g, &mut rng);
        for width in [1.0, g.kernel_width()] {
            let f = BargmannFunction::with_width(&s, width);
            for &(x, p) in &[(0.3, 1.0), (2.5, 5.9), (5.9, 0.1)] {
                let z = f.zeta(PhasePoint::new(x, p));
                let (v, _) = f.evaluate(z);
                let b = brute_force(&s, width, z);
                assert!((v - b).norm() < 1e-12 * b.norm().max(1e-3), "{v} vs {b}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = TorusGeometry::periodic(8).unwrap();
        let f = BargmannFunction::new(&StateVector::random(g, &mut rng));
        let h = 1e-5;
        for _ in 0..100 {
            let pt = PhasePoint::new(rand::Rng::random::<f64>(&mut rng) * 8.0, rand::Rng::random::<f64>(&mut rng) * TAU);
            let z = f.zeta(pt);
            let (_, d) = f.evaluate(z);
            let fd = (f.evaluate(z + h).0 - f.evaluate(z - h).0) / (2.0 * h);
            assert!((d - fd).norm() <= 1e-8 * d.norm().max(1.0), "{d} vs {fd}");
            let jet = f.scaled_jet(pt);
            let fd2 = (f.evaluate(z + h).1 - f.evaluate(z - h).1) / (2.0 * h);
            let s = (0.5 * z.norm_sqr()).exp();
            assert!((jet.d2 * s - fd2).norm() <= 1e-7 * fd2.norm().max(1.0));
        }
    }

    #[test]
    fn linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = TorusGeometry::new(8, 0.3, 0.0).unwrap();
        let a = StateVector::random(g, &mut rng);
        let b = StateVector::random(g, &mut rng);
        let (alpha, beta) = (C64::new(0.3, -1.2), C64::new(0.8, 0.4));
        let mix = StateVector::superpose(alpha, &a, beta, &b).unwrap();
        // superpose renormalizes; undo it
        let raw = a.amplitudes() * alpha + b.amplitudes() * beta;
        let scale = raw.norm();
        let (fa, fb, fm) = (BargmannFunction::new(&a), BargmannFunction::new(&b), BargmannFunction::new(&mix));
        for _ in 0..10 {
            let z = C64::new(rand::Rng::random::<f64>(&mut rng) * 4.0, -rand::Rng::random::<f64>(&mut rng) * 3.0);
            let lhs = fm.evaluate(z).0 * scale;
            let rhs = fa.evaluate(z).0 * alpha + fb.evaluate(z).0 * beta;
            assert!((lhs - rhs).norm() < 1e-12 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn quasi_periodicity_factor() {
        // completing the square in K(ζ + L/(√2 w), x0) gives
        // F(ζ + L/(√2 w)) = e^{iθ1} exp(ζ L/(√2 w) + L²/(4 w²)) F(ζ)
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (n, theta1) in [(8usize, 0.0), (8, 2.0), (6, 4.5)] {
            let g = TorusGeometry::new(n, theta1, 0.0).unwrap();
            let s = StateVector::random(g, &mut rng);
            for width in [1.0, g.kernel_width()] {
                let f = BargmannFunction::with_width(&s, width);
                let l = g.position_period();
                let shift = l / (SQRT_2 * width);
                for _ in 0..5 {
                    let z = C64::new(rand::Rng::random::<f64>(&mut rng) * 2.0 - 1.0, -rand::Rng::random::<f64>(&mut rng) * 2.0);
                    let ratio = f.evaluate(z + shift).0 / f.evaluate(z).0;
                    let want = C64::from_polar(1.0, theta1) * (z * shift + l * l / (4.0 * width * width)).exp();
                    assert!(((ratio.norm() / want.norm()) - 1.0).abs() < 1e-10);
                    assert!((ratio / want - 1.0).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn husimi_is_cell_periodic() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = TorusGeometry::new(7, 1.0, 0.5).unwrap();
        let f = BargmannFunction::new(&StateVector::random(g, &mut rng));
        let pt = PhasePoint::new(2.2, 1.3);
        let h = f.husimi(pt);
        let hx = f.husimi(PhasePoint::new(2.2 + 7.0, 1.3));
        let hp = f.husimi(PhasePoint::new(2.2, 1.3 - TAU));
        assert!((h - hx).abs() < 1e-12 * h);
        assert!((h - hp).abs() < 1e-12 * h);
    }

    #[test]
    fn circle_moment_locates_a_double_zero() {
        // (ζ - a)² times anything analytic: build it from two coincident
        // derivative conditions
        let g = TorusGeometry::periodic(5).unwrap();
        let c = PhasePoint::new(2.2, 1.7);
        let s = clustered_packet(c, &g).unwrap();
        let f = BargmannFunction::new(&s);
        let (m, mean) = circle_moment(&f, PhasePoint::new(2.21, 1.69), 0.2).unwrap();
        assert_eq!(m, 4);
        assert!(toroidal_distance(&g, mean, c) < 1e-10);
    }

    #[test]
    fn cell_contour_counts_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [2usize, 3, 5, 9] {
            let g = TorusGeometry::new(n, 0.4, 0.0).unwrap();
            let f = BargmannFunction::new(&StateVector::random(g, &mut rng));
            let c = cell_count(&f, PhasePoint::new(0.013, 0.021)).unwrap();
            assert_eq!(c.count, n as i64);
            assert!(c.defect < 1e-6);
        }
    }
}
