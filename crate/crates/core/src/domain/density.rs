use alloc::format;
use alloc::vec::Vec;

use super::Domain;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

/// Declared bounds `A ≤ ρ ≤ B` and Lipschitz constant `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityBounds {
    pub lower: f64,
    pub upper: f64,
    pub lipschitz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityProfile {
    Uniform,
    /// `min(peak · exp(−decay ‖x − center‖²), cap)` before normalization.
    TruncatedBump { center: [f64; 3], decay: f64, peak: f64, cap: f64 },
}

/// Probability density on a domain, normalized to integrate to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    domain: Domain,
    profile: DensityProfile,
    scale: f64,
    bounds: DensityBounds,
}

const NORMALIZATION_TOL: f64 = 1e-8;

impl Density {
    pub fn uniform(domain: Domain) -> Self {
        let v = 1.0 / domain.volume();
        Self {
            domain,
            profile: DensityProfile::Uniform,
            scale: v,
            bounds: DensityBounds { lower: v, upper: v, lipschitz: 0.0 },
        }
    }

    /// Capped Gaussian bump. The bounds are declared by the caller and
    /// validated on a grid; they are never inferred.
    pub fn truncated_bump(
        domain: Domain,
        center: &[f64],
        decay: f64,
        peak: f64,
        cap: f64,
        bounds: DensityBounds,
        quad: &QuadratureRule,
    ) -> Result<Self> {
        if center.len() != domain.dim() {
            return Err(Error::DimensionMismatch { expected: domain.dim(), found: center.len() });
        }
        if !(decay > 0.0 && peak > 0.0 && cap > 0.0) {
            return Err(Error::InvalidDensity("bump parameters must be positive".into()));
        }
        let mut c = [0.0; 3];
        c[..center.len()].copy_from_slice(center);
        let mut density = Self {
            domain,
            profile: DensityProfile::TruncatedBump { center: c, decay, peak, cap },
            scale: 1.0,
            bounds,
        };
        let mass = density.integrate_profile(quad);
        density.scale = 1.0 / mass;
        let check = density.integrate_profile(&quad.refined());
        if (check - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDensity(format!(
                "normalization not resolved by quadrature: refined integral {check}"
            )));
        }
        density.validate_bounds()?;
        Ok(density)
    }

    fn integrate_profile(&self, quad: &QuadratureRule) -> f64 {
        let breaks = |a: usize, p: &[f64], out: &mut Vec<f64>| self.push_kinks(a, p, out);
        self.domain.integrate(quad, &breaks, &mut |x| self.value(x))
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn profile(&self) -> &DensityProfile {
        &self.profile
    }

    pub fn bounds(&self) -> DensityBounds {
        self.bounds
    }

    pub fn lower(&self) -> f64 {
        self.bounds.lower
    }

    pub fn upper(&self) -> f64 {
        self.bounds.upper
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.profile, DensityProfile::Uniform)
    }

    /// ρ(x). Points outside the domain are not rejected here.
    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.profile {
            DensityProfile::Uniform => self.scale,
            DensityProfile::TruncatedBump { center, decay, peak, cap } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                self.scale * (peak * libm::exp(-decay * r2)).min(*cap)
            }
        }
    }

    /// Kinks of ρ along `axis` with earlier coordinates fixed to `prefix`.
    /// For the bump these are where the line (or, for outer axes, the
    /// projection) meets the sphere on which the cap becomes active.
    pub fn push_kinks(&self, axis: usize, prefix: &[f64], out: &mut Vec<f64>) {
        self.push_kinks_fixed(axis, prefix.iter().copied().enumerate(), out);
    }

    /// As [`Density::push_kinks`], with an arbitrary set of `(axis, value)`
    /// coordinates held fixed.
    pub fn push_kinks_fixed(&self, axis: usize, fixed: impl IntoIterator<Item = (usize, f64)>, out: &mut Vec<f64>) {
        if let DensityProfile::TruncatedBump { center, decay, peak, cap } = &self.profile {
            if peak <= cap {
                return;
            }
            let r0sq = libm::log(peak / cap) / decay;
            let used: f64 = fixed.into_iter().map(|(a, v)| (v - center[a]) * (v - center[a])).sum();
            let rem = r0sq - used;
            if rem > 0.0 {
                let h = libm::sqrt(rem);
                out.push(center[axis] - h);
                out.push(center[axis] + h);
            }
        }
    }

    /// Spot-check the declared bounds and Lipschitz constant on a tensor grid.
    fn validate_bounds(&self) -> Result<()> {
        let DensityBounds { lower, upper, lipschitz } = self.bounds;
        if !(lower > 0.0 && upper >= lower && lipschitz >= 0.0) {
            return Err(Error::InvalidDensity("need 0 < A ≤ B and L ≥ 0".into()));
        }
        let grid = self.validation_grid(33);
        let d = self.dim();
        let n = 33usize;
        let mut values = alloc::vec![f64::NAN; grid.len() / d];
        for (k, x) in grid.chunks(d).enumerate() {
            if !self.domain.contains(x) {
                continue;
            }
            let v = self.value(x);
            if v < lower * (1.0 - 1e-12) || v > upper * (1.0 + 1e-12) {
                return Err(Error::InvalidDensity(format!(
                    "ρ = {v} at {x:?} violates declared bounds [{lower}, {upper}]"
                )));
            }
            values[k] = v;
        }
        // finite-difference slopes between grid neighbours along each axis
        let stride = |a: usize| n.pow(a as u32);
        for k in 0..values.len() {
            for a in 0..d {
                let ia = (k / stride(a)) % n;
                if ia + 1 == n {
                    continue;
                }
                let k2 = k + stride(a);
                if values[k].is_nan() || values[k2].is_nan() {
                    continue;
                }
                let dx = grid[k2 * d + a] - grid[k * d + a];
                let slope = (values[k2] - values[k]).abs() / dx;
                if slope > lipschitz * (1.0 + 1e-9) + 1e-12 {
                    return Err(Error::InvalidDensity(format!(
                        "observed slope {slope} exceeds declared Lipschitz constant {lipschitz}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Tensor grid (flattened, axis 0 fastest) over the bounding box,
    /// including the box faces.
    fn validation_grid(&self, n: usize) -> Vec<f64> {
        let bb = self.domain.bounding_box();
        let d = bb.dim();
        let total = n.pow(d as u32);
        let mut out = Vec::with_capacity(total * d);
        for k in 0..total {
            let mut rest = k;
            for a in 0..d {
                let i = rest % n;
                rest /= n;
                let t = i as f64 / (n - 1) as f64;
                // pull the faces in slightly so they count as interior
                let t = t.clamp(1e-9, 1.0 - 1e-9);
                out.push(bb.lo()[a] + t * bb.width(a));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump_bounds() -> DensityBounds {
        DensityBounds { lower: 0.0, upper: 0.0, lipschitz: 0.0 }
    }

    #[test]
    fn uniform_is_normalized() {
        let d = Density::uniform(Domain::axis_box(&[0.0, 0.0], &[1.0, 4.0]).unwrap());
        assert_eq!(d.value(&[0.3, 0.3]), 0.25);
        assert_eq!(d.lower(), 0.25);
    }

    #[test]
    fn bump_rejects_wrong_declared_bounds() {
        let dom = Domain::axis_box(&[0.0, 0.0], &[1.0, 3.0]).unwrap();
        let q = QuadratureRule::default();
        let err = Density::truncated_bump(dom, &[0.5, 2.0], 4.0, 2.0, 0.5, bump_bounds(), &q);
        assert!(matches!(err, Err(Error::InvalidDensity(_))));
    }

    #[test]
    fn bump_accepts_generous_bounds_and_normalizes() {
        let dom = Domain::axis_box(&[0.0, 0.0], &[1.0, 3.0]).unwrap();
        let q = QuadratureRule::default();
        let b = DensityBounds { lower: 1e-7, upper: 0.75, lipschitz: 5.0 };
        let d = Density::truncated_bump(dom.clone(), &[0.5, 2.0], 4.0, 2.0, 0.5, b, &q).unwrap();
        let total = dom.integrate(&q.refined(), &|a, p, o| d.push_kinks(a, p, o), &mut |x| d.value(x));
        assert!((total - 1.0).abs() < 1e-10);
        assert!(d.value(&[0.5, 2.0]) > d.value(&[0.0, 0.0]));
    }
}
