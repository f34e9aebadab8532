use alloc::vec::Vec;

use super::{AxisBox, Domain};
use crate::error::{Error, Result};
use crate::quadrature::{Breaks, QuadratureRule};

const GEOMETRY_TOL: f64 = 1e-12;

/// A measurable piece of the domain from the supported catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// The whole domain.
    Whole,
    /// Union of pairwise disjoint axis-aligned boxes (interval unions in 1-d).
    Boxes(Vec<AxisBox>),
    /// `{x ∈ disc : normal·(x − center) ≤ offset}` for a disc domain.
    DiscCut { normal: [f64; 2], offset: f64 },
}

impl Region {
    pub fn boxes(boxes: Vec<AxisBox>) -> Self {
        Region::Boxes(boxes)
    }

    pub fn single_box(b: AxisBox) -> Self {
        Region::Boxes(alloc::vec![b])
    }

    /// Interval union on the line.
    pub fn intervals(pieces: &[(f64, f64)]) -> Result<Self> {
        let boxes = pieces
            .iter()
            .map(|&(a, b)| AxisBox::new(&[a], &[b]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Region::Boxes(boxes))
    }

    /// Half-plane cut of a disc domain; `normal` need not be unit length.
    pub fn disc_cut(normal: [f64; 2], offset: f64) -> Result<Self> {
        let len = libm::hypot(normal[0], normal[1]);
        if !(len > 0.0 && len.is_finite() && offset.is_finite()) {
            return Err(crate::error::invalid("disc cut needs a nonzero normal and a finite offset"));
        }
        Ok(Region::DiscCut { normal: [normal[0] / len, normal[1] / len], offset })
    }

    /// Membership of a point of the domain. Boxes use half-open
    /// membership so that a box partition assigns every point exactly once.
    pub fn contains(&self, domain: &Domain, x: &[f64]) -> bool {
        match self {
            Region::Whole => true,
            Region::Boxes(bs) => bs.iter().any(|b| b.contains_half_open(x)),
            Region::DiscCut { normal, offset } => match domain {
                Domain::Disc { center, .. } => {
                    normal[0] * (x[0] - center[0]) + normal[1] * (x[1] - center[1]) <= *offset
                }
                Domain::Box(_) => false,
            },
        }
    }

    /// Fails unless the region lies inside `domain`.
    pub fn check_within(&self, domain: &Domain) -> Result<()> {
        match (self, domain) {
            (Region::Whole, _) => Ok(()),
            (Region::Boxes(bs), Domain::Box(outer)) => {
                for b in bs {
                    if !b.is_within(outer, GEOMETRY_TOL) {
                        return Err(crate::error::invalid("region box extends outside the domain"));
                    }
                }
                Ok(())
            }
            (Region::Boxes(bs), Domain::Disc { center, radius }) => {
                for b in bs {
                    if b.dim() != 2 {
                        return Err(Error::DimensionMismatch { expected: 2, found: b.dim() });
                    }
                    for cx in [b.lo()[0], b.hi()[0]] {
                        for cy in [b.lo()[1], b.hi()[1]] {
                            let r = libm::hypot(cx - center[0], cy - center[1]);
                            if r > radius + GEOMETRY_TOL {
                                return Err(crate::error::invalid("region box extends outside the disc"));
                            }
                        }
                    }
                }
                Ok(())
            }
            (Region::DiscCut { .. }, Domain::Disc { .. }) => Ok(()),
            (Region::DiscCut { .. }, Domain::Box(_)) => Err(Error::UnsupportedGeometry(
                "disc cuts are only defined on disc domains".into(),
            )),
        }
    }

    /// ∫_region f.
    pub fn integrate(
        &self,
        domain: &Domain,
        quad: &QuadratureRule,
        breaks: Breaks<'_>,
        f: &mut dyn FnMut(&[f64]) -> f64,
    ) -> Result<f64> {
        self.check_within(domain)?;
        Ok(match self {
            Region::Whole => domain.integrate(quad, breaks, f),
            Region::Boxes(bs) => bs.iter().map(|b| quad.integrate_box(b.lo(), b.hi(), breaks, f)).sum(),
            Region::DiscCut { normal, offset } => match domain {
                Domain::Disc { center, radius } => quad.integrate_disc_cut(*center, *radius, *normal, *offset, f),
                Domain::Box(_) => unreachable!("checked above"),
            },
        })
    }

    /// Lebesgue measure of the region.
    pub fn volume(&self, domain: &Domain) -> Result<f64> {
        self.check_within(domain)?;
        Ok(match self {
            Region::Whole => domain.volume(),
            Region::Boxes(bs) => bs.iter().map(AxisBox::volume).sum(),
            Region::DiscCut { offset, .. } => match domain {
                Domain::Disc { radius, .. } => {
                    let h = offset.clamp(-*radius, *radius);
                    // area of {s ≤ h}: segment formula
                    let r = *radius;
                    let cap = r * r * libm::acos(h / r) - h * libm::sqrt(r * r - h * h);
                    core::f64::consts::PI * r * r - cap
                }
                Domain::Box(_) => unreachable!(),
            },
        })
    }
}
