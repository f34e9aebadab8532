//! Radial, compactly supported connectivity kernels.
//!
//! Every profile is canonicalized to support radius 1 and normalized so that
//! `∫ η = 1` in its dimension. Length scales enter only through `eps`:
//! `η_ε(z) = η(z / ε) / ε^d`.

use core::f64::consts::PI;

use crate::domain::{integrate_power, Density};
use crate::error::{invalid, Error, Result};
use crate::quadrature::QuadratureRule;
use crate::rng::{open01, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Profile {
    /// Uniform on the unit ball.
    Indicator,
    /// `1 − r` on the unit ball.
    Cone,
    /// `1 − r²` on the unit ball.
    Epanechnikov,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Indicator => "indicator",
            Profile::Cone => "cone",
            Profile::Epanechnikov => "epanechnikov",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "indicator" => Ok(Profile::Indicator),
            "cone" => Ok(Profile::Cone),
            "epanechnikov" => Ok(Profile::Epanechnikov),
            other => Err(invalid(alloc::format!("unknown kernel profile {other:?}"))),
        }
    }

    /// Unnormalized radial shape on r ∈ [0, 1).
    fn shape(self, r: f64) -> f64 {
        match self {
            Profile::Indicator => 1.0,
            Profile::Cone => 1.0 - r,
            Profile::Epanechnikov => 1.0 - r * r,
        }
    }

    /// ∫_0^1 shape(r) r^{d-1} dr.
    fn radial_mass(self, d: usize) -> f64 {
        let d = d as f64;
        match self {
            Profile::Indicator => 1.0 / d,
            Profile::Cone => 1.0 / (d * (d + 1.0)),
            Profile::Epanechnikov => 2.0 / (d * (d + 2.0)),
        }
    }

    /// ∫_0^1 shape(r) r^d dr.
    fn first_moment(self, d: usize) -> f64 {
        let d = d as f64;
        match self {
            Profile::Indicator => 1.0 / (d + 1.0),
            Profile::Cone => 1.0 / ((d + 1.0) * (d + 2.0)),
            Profile::Epanechnikov => 2.0 / ((d + 1.0) * (d + 3.0)),
        }
    }
}

/// Surface measure of the unit sphere S^{d−1}.
fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// ∫_{S^{d−1}} |θ₁| dθ.
fn sphere_abs_first(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 4.0,
        _ => 2.0 * PI,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    profile: Profile,
    dim: usize,
    norm: f64,
}

impl Kernel {
    pub fn new(profile: Profile, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension { expected: 3, found: dim });
        }
        let norm = 1.0 / (sphere_area(dim) * profile.radial_mass(dim));
        Ok(Self { profile, dim, norm })
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Normalization constant `c` with `η = c · shape`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn support_radius(&self) -> f64 {
        1.0
    }

    /// η as a function of ‖z‖.
    #[inline]
    pub fn radial(&self, r: f64) -> f64 {
        if r < 1.0 {
            self.norm * self.profile.shape(r)
        } else {
            0.0
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.radial(norm2(z))
    }

    /// η_ε(z) = η(z/ε)/ε^d.
    pub fn eval_eps(&self, eps: f64, z: &[f64]) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(invalid("eps must be positive"));
        }
        Ok(self.radial(norm2(z) / eps) / libm::pow(eps, self.dim as f64))
    }

    /// σ_η = ∫ η(x) |x₁| dx, in closed form.
    pub fn sigma(&self) -> f64 {
        self.norm * sphere_abs_first(self.dim) * self.profile.first_moment(self.dim)
    }

    /// C_{η,ρ} = σ_η / (2 ∫_D ρ²).
    pub fn c_eta_rho(&self, density: &Density, quad: &QuadratureRule) -> f64 {
        self.sigma() / (2.0 * integrate_power(density, 2.0, quad))
    }

    /// Draws Z with density η by rejection from the unit ball.
    pub fn sample_unit(&self, rng: &mut Rng, out: &mut [f64]) {
        let peak = self.radial(0.0);
        loop {
            let mut r2 = 0.0;
            for z in out.iter_mut() {
                *z = 2.0 * open01(rng) - 1.0;
                r2 += *z * *z;
            }
            if r2 >= 1.0 {
                continue;
            }
            if self.profile == Profile::Indicator || open01(rng) * peak < self.radial(libm::sqrt(r2)) {
                return;
            }
        }
    }
}

#[inline]
pub(crate) fn norm2(z: &[f64]) -> f64 {
    libm::sqrt(z.iter().map(|v| v * v).sum())
}
