use alloc::vec::Vec;

use super::{Density, Domain};
use crate::error::{invalid, Error, Result};
use crate::rng::{open01, rng_from_seed, Rng};

/// Rejection budget: sampling fails after this many proposals per point.
pub const MAX_PROPOSALS_PER_POINT: u64 = 1_000_000;

/// i.i.d. points in a domain, stored row-major, with the seed that made them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCloud {
    dim: usize,
    coords: Vec<f64>,
    seed: u64,
}

impl SampleCloud {
    /// Wraps explicit coordinates (row-major, `dim` per point).
    pub fn from_coords(dim: usize, coords: Vec<f64>, seed: u64) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::UnsupportedDimension { expected: 3, found: dim });
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch { expected: dim, found: coords.len() % dim });
        }
        Ok(Self { dim, coords, seed })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> core::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Draws `n` i.i.d. points from `density`.
///
/// Proposals are uniform on the domain (uniform on the bounding square for a
/// disc, then restricted); non-uniform densities accept with probability
/// ρ(x)/B where B is the declared upper bound.
pub fn sample(density: &Density, n: usize, seed: u64) -> Result<SampleCloud> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    let domain = density.domain();
    let dim = domain.dim();
    let bb = domain.bounding_box();
    let upper = density.upper();
    let uniform = density.is_uniform();
    let budget = MAX_PROPOSALS_PER_POINT.saturating_mul(n as u64);
    let mut rng = rng_from_seed(seed);
    let mut coords = Vec::with_capacity(n * dim);
    let mut x = [0.0; 3];
    let mut proposals = 0u64;
    while coords.len() < n * dim {
        if proposals >= budget {
            return Err(Error::SamplingFailure { proposals });
        }
        proposals += 1;
        propose(&mut rng, &bb, &mut x[..dim]);
        if let Domain::Disc { .. } = domain {
            if !domain.contains(&x[..dim]) {
                continue;
            }
        }
        if !uniform && open01(&mut rng) * upper >= density.value(&x[..dim]) {
            continue;
        }
        coords.extend_from_slice(&x[..dim]);
    }
    Ok(SampleCloud { dim, coords, seed })
}

fn propose(rng: &mut Rng, bb: &super::AxisBox, x: &mut [f64]) {
    for (a, xa) in x.iter_mut().enumerate() {
        *xa = bb.lo()[a] + bb.width(a) * open01(rng);
    }
}
