use alloc::vec::Vec;

use super::{Density, Domain, Region};
use crate::error::{invalid, Result};
use crate::kernel::Kernel;
use crate::quadrature::QuadratureRule;

/// ρ^p with the convention ρ^0 = 1, ρ^1 = ρ.
pub(crate) fn power(rho: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p == 1.0 {
        rho
    } else if p == 2.0 {
        rho * rho
    } else {
        libm::pow(rho, p)
    }
}

/// ∫_D ρ^p.
pub fn integrate_power(density: &Density, p: f64, quad: &QuadratureRule) -> f64 {
    let breaks = |a: usize, pre: &[f64], out: &mut Vec<f64>| density.push_kinks(a, pre, out);
    density.domain().integrate(quad, &breaks, &mut |x| power(density.value(x), p))
}

/// μ(region) for dμ = ρ^{1+α} dx / ∫_D ρ^{1+α}.
pub fn measure_mu(density: &Density, alpha: f64, region: &Region, quad: &QuadratureRule) -> Result<f64> {
    let p = 1.0 + alpha;
    let breaks = |a: usize, pre: &[f64], out: &mut Vec<f64>| density.push_kinks(a, pre, out);
    let part = region.integrate(density.domain(), quad, &breaks, &mut |x| power(density.value(x), p))?;
    Ok(part / integrate_power(density, p, quad))
}

/// ρ_ε(x) = ∫_D η_ε(x − y) ρ(y) dy.
pub fn mollified_density(
    density: &Density,
    kernel: &Kernel,
    eps: f64,
    x: &[f64],
    quad: &QuadratureRule,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    let domain = density.domain();
    let bb = domain.bounding_box();
    let inside_disc = matches!(domain, Domain::Disc { .. });
    let breaks = |a: usize, pre: &[f64], out: &mut Vec<f64>| density.push_kinks(a, pre, out);
    let radius = eps * kernel.support_radius();
    let mut integrand = |y: &[f64]| {
        if inside_disc && !domain.contains(y) {
            return 0.0;
        }
        let r = distance(x, y) / eps;
        kernel.radial(r) / libm::pow(eps, kernel.dim() as f64) * density.value(y)
    };
    Ok(quad.integrate_ball_box(x, radius, bb.lo(), bb.hi(), &breaks, &mut integrand))
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
    libm::sqrt(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AxisBox, DensityBounds};
    use crate::kernel::Profile;

    fn unit_square() -> Density {
        Density::uniform(Domain::axis_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap())
    }

    #[test]
    fn mu_examples() {
        let q = QuadratureRule::default();
        let sq = unit_square();
        let left = Region::single_box(AxisBox::new(&[0.0, 0.0], &[0.5, 1.0]).unwrap());
        for alpha in [-1.0, 0.0, 1.0, 2.5] {
            assert!((measure_mu(&sq, alpha, &left, &q).unwrap() - 0.5).abs() < 1e-14);
            assert!((measure_mu(&sq, alpha, &Region::Whole, &q).unwrap() - 1.0).abs() < 1e-14);
        }
        let line = Density::uniform(Domain::interval(0.0, 1.0).unwrap());
        let r = Region::intervals(&[(0.0, 0.3)]).unwrap();
        assert!((measure_mu(&line, 3.0, &r, &q).unwrap() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn mu_rejects_region_outside_domain() {
        let q = QuadratureRule::default();
        let r = Region::intervals(&[(0.5, 1.5)]).unwrap();
        let line = Density::uniform(Domain::interval(0.0, 1.0).unwrap());
        assert!(measure_mu(&line, 0.0, &r, &q).is_err());
    }

    #[test]
    fn power_integrals() {
        let q = QuadratureRule::default();
        assert!((integrate_power(&unit_square(), 2.0, &q) - 1.0).abs() < 1e-14);
        let strip = Density::uniform(Domain::axis_box(&[0.0, 0.0], &[1.0, 4.0]).unwrap());
        assert!((integrate_power(&strip, 2.0, &q) - 0.25).abs() < 1e-14);
        let line = Density::uniform(Domain::interval(0.0, 1.0).unwrap());
        assert!((integrate_power(&line, 4.0, &q) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mu_additive_over_disjoint_regions() {
        let q = QuadratureRule::default();
        let dom = Domain::axis_box(&[0.0, 0.0], &[1.0, 3.0]).unwrap();
        let b = DensityBounds { lower: 1e-7, upper: 0.75, lipschitz: 5.0 };
        let d = Density::truncated_bump(dom, &[0.5, 2.0], 4.0, 2.0, 0.5, b, &q).unwrap();
        let lower = Region::single_box(AxisBox::new(&[0.0, 0.0], &[1.0, 1.7]).unwrap());
        let upper = Region::single_box(AxisBox::new(&[0.0, 1.7], &[1.0, 3.0]).unwrap());
        let total = measure_mu(&d, 1.0, &lower, &q).unwrap() + measure_mu(&d, 1.0, &upper, &q).unwrap();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mollified_interior_equals_density() {
        let q = QuadratureRule::default();
        for d in 1..=3 {
            let dom = Domain::axis_box(&[0.0; 3][..d], &[1.0; 3][..d]).unwrap();
            let rho = Density::uniform(dom);
            let k = Kernel::new(Profile::Indicator, d).unwrap();
            let v = mollified_density(&rho, &k, 0.1, &[0.5, 0.5, 0.5][..d], &q).unwrap();
            assert!((v - 1.0).abs() < 1e-10, "d={d}: {v}");
        }
    }

    #[test]
    fn mollified_at_edge_of_interval() {
        // indicator kernel on (0,1): ρ_ε(x) = (min(x+ε,1) − max(x−ε,0)) / (2ε)
        let q = QuadratureRule::default();
        let rho = Density::uniform(Domain::interval(0.0, 1.0).unwrap());
        let k = Kernel::new(Profile::Indicator, 1).unwrap();
        for x in [0.01, 0.05, 0.15, 0.99] {
            let v = mollified_density(&rho, &k, 0.1, &[x], &q).unwrap();
            let exact = ((x + 0.1).min(1.0) - (x - 0.1).max(0.0)) / 0.2;
            assert!((v - exact).abs() < 1e-12, "{x}: {v} vs {exact}");
        }
    }
}
