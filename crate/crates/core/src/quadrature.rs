//! Deterministic tensor-product quadrature.
//!
//! Every integral in the crate is computed as an iterated one-dimensional
//! rule. Integrands may report breakpoints (kinks of a capped density, the
//! edge of a kernel support) per axis; each 1-d integral is split there so
//! that Gauss–Legendre keeps its spectral accuracy on every piece.

use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Breakpoint oracle: given the axis being integrated and the coordinates
/// already fixed on earlier axes, push kink locations along that axis.
pub type Breaks<'a> = &'a dyn Fn(usize, &[f64], &mut Vec<f64>);

/// No breakpoints.
pub fn no_breaks(_axis: usize, _prefix: &[f64], _out: &mut Vec<f64>) {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureKind {
    GaussLegendre,
    Midpoint,
}

/// One-dimensional reference rule on [-1, 1], applied per axis and per
/// breakpoint-delimited piece.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    kind: QuadratureKind,
    abscissae: Vec<f64>,
    weights: Vec<f64>,
}

pub const DEFAULT_NODES: usize = 64;

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::gauss_legendre(DEFAULT_NODES).expect("default node count is valid")
    }
}

impl QuadratureRule {
    pub fn new(kind: QuadratureKind, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(invalid("quadrature needs at least 2 nodes per axis"));
        }
        let (abscissae, weights) = match kind {
            QuadratureKind::GaussLegendre => gauss_legendre_nodes(nodes),
            QuadratureKind::Midpoint => {
                let h = 2.0 / nodes as f64;
                let x = (0..nodes).map(|i| -1.0 + (i as f64 + 0.5) * h).collect();
                (x, alloc::vec![h; nodes])
            }
        };
        Ok(Self { kind, abscissae, weights })
    }

    pub fn gauss_legendre(nodes: usize) -> Result<Self> {
        Self::new(QuadratureKind::GaussLegendre, nodes)
    }

    pub fn midpoint(nodes: usize) -> Result<Self> {
        Self::new(QuadratureKind::Midpoint, nodes)
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn nodes(&self) -> usize {
        self.abscissae.len()
    }

    /// Same family with twice the nodes per axis.
    pub fn refined(&self) -> Self {
        Self::new(self.kind, 2 * self.nodes()).expect("doubling keeps nodes >= 2")
    }

    /// Reference nodes and weights on [-1, 1].
    pub fn reference(&self) -> (&[f64], &[f64]) {
        (&self.abscissae, &self.weights)
    }

    /// ∫_a^b f, split at every breakpoint strictly inside (a, b).
    pub fn integrate_1d(&self, a: f64, b: f64, breaks: &[f64], f: &mut dyn FnMut(f64) -> f64) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        let mut cuts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
        cuts.push(a);
        cuts.extend(breaks.iter().copied().filter(|&t| t > a && t < b));
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut total = 0.0;
        for piece in cuts.windows(2) {
            let (lo, hi) = (piece[0], piece[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            let mut acc = 0.0;
            for (x, w) in self.abscissae.iter().zip(&self.weights) {
                acc += w * f(mid + half * x);
            }
            total += half * acc;
        }
        total
    }

    /// Iterated integral over the axis-aligned box `[lo, hi]` (d ≤ 3).
    pub fn integrate_box(
        &self,
        lo: &[f64],
        hi: &[f64],
        breaks: Breaks<'_>,
        f: &mut dyn FnMut(&[f64]) -> f64,
    ) -> f64 {
        debug_assert_eq!(lo.len(), hi.len());
        let mut point = [0.0; 3];
        self.box_axis(0, lo, hi, &mut point, breaks, f)
    }

    fn box_axis(
        &self,
        axis: usize,
        lo: &[f64],
        hi: &[f64],
        point: &mut [f64; 3],
        breaks: Breaks<'_>,
        f: &mut dyn FnMut(&[f64]) -> f64,
    ) -> f64 {
        let dim = lo.len();
        let mut cuts = Vec::new();
        breaks(axis, &point[..axis], &mut cuts);
        let mut line = |x: f64| {
            point[axis] = x;
            if axis + 1 == dim {
                f(&point[..dim])
            } else {
                self.box_axis(axis + 1, lo, hi, point, breaks, f)
            }
        };
        self.integrate_1d(lo[axis], hi[axis], &cuts, &mut line)
    }

    /// Integral over `B(center, radius) ∩ [lo, hi]`.
    ///
    /// The outer coordinates use the substitution `y = c + r sin θ`, which
    /// removes the square-root endpoint behaviour of ball slices.
    pub fn integrate_ball_box(
        &self,
        center: &[f64],
        radius: f64,
        lo: &[f64],
        hi: &[f64],
        breaks: Breaks<'_>,
        f: &mut dyn FnMut(&[f64]) -> f64,
    ) -> f64 {
        let mut point = [0.0; 3];
        self.ball_axis(0, center, radius, lo, hi, &mut point, breaks, f)
    }

    #[allow(clippy::too_many_arguments)]
    fn ball_axis(
        &self,
        axis: usize,
        center: &[f64],
        radius: f64,
        lo: &[f64],
        hi: &[f64],
        point: &mut [f64; 3],
        breaks: Breaks<'_>,
        f: &mut dyn FnMut(&[f64]) -> f64,
    ) -> f64 {
        if radius <= 0.0 {
            return 0.0;
        }
        let dim = center.len();
        let c = center[axis];
        let mut kinks = Vec::new();
        breaks(axis, &point[..axis], &mut kinks);
        if axis + 1 == dim {
            let a = (c - radius).max(lo[axis]);
            let b = (c + radius).min(hi[axis]);
            kinks.push(c);
            let mut line = |x: f64| {
                point[axis] = x;
                f(&point[..dim])
            };
            return self.integrate_1d(a, b, &kinks, &mut line);
        }
        let s_lo = ((lo[axis] - c) / radius).max(-1.0);
        let s_hi = ((hi[axis] - c) / radius).min(1.0);
        if s_lo >= s_hi {
            return 0.0;
        }
        let (t_lo, t_hi) = (libm::asin(s_lo), libm::asin(s_hi));
        let mut angles: Vec<f64> = kinks
            .iter()
            .map(|&k| (k - c) / radius)
            .filter(|s| s.abs() < 1.0)
            .map(libm::asin)
            .collect();
        angles.push(0.0);
        for b in axis + 1..dim {
            for gap in [center[b] - lo[b], hi[b] - center[b]] {
                if gap > 0.0 && gap < radius {
                    let t = libm::acos(gap / radius);
                    angles.push(t);
                    angles.push(-t);
                }
            }
        }
        let mut line = |theta: f64| {
            point[axis] = c + radius * libm::sin(theta);
            let slice = radius * libm::cos(theta);
            slice * self.ball_axis(axis + 1, center, slice, lo, hi, point, breaks, f)
        };
        self.integrate_1d(t_lo, t_hi, &angles, &mut line)
    }

    /// Integral over `{x ∈ B(center, radius) : normal·(x − center) ≤ offset}`
    /// in two dimensions; `normal` must be a unit vector.
    pub fn integrate_disc_cut(
        &self,
        center: [f64; 2],
        radius: f64,
        normal: [f64; 2],
        offset: f64,
        f: &mut dyn FnMut(&[f64]) -> f64,
    ) -> f64 {
        let s_hi = (offset / radius).clamp(-1.0, 1.0);
        if s_hi <= -1.0 {
            return 0.0;
        }
        let tangent = [-normal[1], normal[0]];
        let mut outer = |theta: f64| {
            let s = radius * libm::sin(theta);
            let half = radius * libm::cos(theta);
            let mut inner = |t: f64| {
                let x = [
                    center[0] + s * normal[0] + t * tangent[0],
                    center[1] + s * normal[1] + t * tangent[1],
                ];
                f(&x)
            };
            half * self.integrate_1d(-half, half, &[], &mut inner)
        };
        self.integrate_1d(-core::f64::consts::FRAC_PI_2, libm::asin(s_hi), &[], &mut outer)
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
fn gauss_legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    (x, w)
}

/// (P_n(z), P_n'(z)) by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
