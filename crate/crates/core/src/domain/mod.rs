//! Bounded domains, densities, sampling and the deterministic integrals the
//! continuum functionals are built on.

mod density;
mod measure;
mod region;
mod sample;

pub use density::{Density, DensityBounds, DensityProfile};
pub(crate) use measure::power;
pub use measure::{integrate_power, measure_mu, mollified_density};
pub use region::Region;
pub use sample::{sample, SampleCloud, MAX_PROPOSALS_PER_POINT};

use alloc::format;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{Breaks, QuadratureRule};

/// Axis-aligned box in up to three dimensions. A one-dimensional box is an
/// interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBox {
    dim: usize,
    lo: [f64; 3],
    hi: [f64; 3],
}

impl AxisBox {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let dim = lo.len();
        if dim == 0 || dim > 3 {
            return Err(Error::UnsupportedDimension { expected: 3, found: dim });
        }
        if hi.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: hi.len() });
        }
        let mut b = Self { dim, lo: [0.0; 3], hi: [0.0; 3] };
        for a in 0..dim {
            if !(lo[a].is_finite() && hi[a].is_finite() && hi[a] > lo[a]) {
                return Err(invalid(format!("axis {a} interval ({}, {}) is empty or unbounded", lo[a], hi[a])));
            }
            b.lo[a] = lo[a];
            b.hi[a] = hi[a];
        }
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo[..self.dim]
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi[..self.dim]
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.width(a)).product()
    }

    /// Open-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim).all(|a| x[a] > self.lo[a] && x[a] < self.hi[a])
    }

    /// Half-open membership `lo ≤ x < hi`, used to assign sample points to
    /// exactly one cell of a partition.
    pub fn contains_half_open(&self, x: &[f64]) -> bool {
        (0..self.dim).all(|a| x[a] >= self.lo[a] && x[a] < self.hi[a])
    }

    pub fn is_within(&self, outer: &AxisBox, tol: f64) -> bool {
        self.dim == outer.dim
            && (0..self.dim).all(|a| self.lo[a] >= outer.lo[a] - tol && self.hi[a] <= outer.hi[a] + tol)
    }

    pub fn intersection_volume(&self, other: &AxisBox) -> f64 {
        (0..self.dim)
            .map(|a| (self.hi[a].min(other.hi[a]) - self.lo[a].max(other.lo[a])).max(0.0))
            .product()
    }

    /// Index of the longest axis; ties go to the lowest index.
    pub fn longest_axis(&self) -> usize {
        let mut best = 0;
        for a in 1..self.dim {
            if self.width(a) > self.width(best) {
                best = a;
            }
        }
        best
    }

    pub(crate) fn with_axis(&self, axis: usize, lo: f64, hi: f64) -> Self {
        let mut b = *self;
        b.lo[axis] = lo;
        b.hi[axis] = hi;
        b
    }
}

/// Bounded open domain: an interval, an axis-aligned box, or a disc.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Box(AxisBox),
    Disc { center: [f64; 2], radius: f64 },
}

impl Domain {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Ok(Domain::Box(AxisBox::new(&[lo], &[hi])?))
    }

    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        Ok(Domain::Box(AxisBox::new(lo, hi)?))
    }

    pub fn disc(center: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) || !center.iter().all(|c| c.is_finite()) {
            return Err(invalid("disc needs a finite center and a positive radius"));
        }
        Ok(Domain::Disc { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box(b) => b.dim(),
            Domain::Disc { .. } => 2,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Domain::Box(b) if b.dim() == 1 => "interval",
            Domain::Box(_) => "box",
            Domain::Disc { .. } => "disc",
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Domain::Box(b) => b.volume(),
            Domain::Disc { radius, .. } => core::f64::consts::PI * radius * radius,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Box(b) => b.contains(x),
            Domain::Disc { center, radius } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                dx * dx + dy * dy < radius * radius
            }
        }
    }

    pub fn bounding_box(&self) -> AxisBox {
        match self {
            Domain::Box(b) => *b,
            Domain::Disc { center, radius } => AxisBox::new(
                &[center[0] - radius, center[1] - radius],
                &[center[0] + radius, center[1] + radius],
            )
            .expect("disc radius is positive"),
        }
    }

    pub fn as_box(&self) -> Option<&AxisBox> {
        match self {
            Domain::Box(b) => Some(b),
            Domain::Disc { .. } => None,
        }
    }

    /// ∫_D f.
    pub fn integrate(&self, quad: &QuadratureRule, breaks: Breaks<'_>, f: &mut dyn FnMut(&[f64]) -> f64) -> f64 {
        match self {
            Domain::Box(b) => quad.integrate_box(b.lo(), b.hi(), breaks, f),
            Domain::Disc { center, radius } => quad.integrate_disc_cut(*center, *radius, [1.0, 0.0], *radius, f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(Domain::interval(1.0, 1.0).is_err());
        assert!(Domain::axis_box(&[0.0, 0.0], &[1.0, f64::INFINITY]).is_err());
        assert!(Domain::disc([0.0, 0.0], 0.0).is_err());
        assert!(AxisBox::new(&[0.0; 4], &[1.0; 4]).is_err());
    }

    #[test]
    fn volumes() {
        assert_eq!(Domain::axis_box(&[0.0, 0.0], &[1.0, 4.0]).unwrap().volume(), 4.0);
        let disc = Domain::disc([0.0, 0.0], 2.0).unwrap();
        assert!((disc.volume() - 4.0 * core::f64::consts::PI).abs() < 1e-15);
        let q = QuadratureRule::default();
        let v = disc.integrate(&q, &crate::quadrature::no_breaks, &mut |_| 1.0);
        assert!((v - disc.volume()).abs() < 1e-12);
    }

    #[test]
    fn longest_axis_prefers_first_on_ties() {
        let b = AxisBox::new(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(b.longest_axis(), 0);
        let b = AxisBox::new(&[0.0, 0.0], &[1.0, 4.0]).unwrap();
        assert_eq!(b.longest_axis(), 1);
    }
}
