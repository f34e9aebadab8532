//! Continuum functionals on partitions of the domain: weighted perimeter,
//! the balance measure, Λ and Λ_ε, the nonlocal total variation TV_ε, the
//! limiting energy, and reference minimizers for boxes.

use alloc::vec::Vec;

use crate::domain::{measure_mu, mollified_density, sample, AxisBox, Density, Domain, Region, SampleCloud};
use crate::error::{invalid, Error, Result};
use crate::functional::DiscretePartition;
use crate::kernel::Kernel;
use crate::quadrature::QuadratureRule;
use crate::rng::{derive_seed, rng_from_seed};

const GEOMETRY_TOL: f64 = 1e-12;

/// Default threshold on the balance deficit above which the continuum
/// energy is infinite.
pub const DEFAULT_BALANCE_TOL: f64 = 1e-6;

/// A function on the domain: either the indicator of a region or an
/// arbitrary bounded function.
#[derive(Clone, Copy)]
pub enum Field<'a> {
    Indicator(&'a Region),
    Function(&'a dyn Fn(&[f64]) -> f64),
}

impl Field<'_> {
    pub fn eval(&self, domain: &Domain, x: &[f64]) -> f64 {
        match self {
            Field::Indicator(r) => {
                if r.contains(domain, x) {
                    1.0
                } else {
                    0.0
                }
            }
            Field::Function(f) => f(x),
        }
    }
}

impl core::fmt::Debug for Field<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Field::Indicator(r) => f.debug_tuple("Indicator").field(r).finish(),
            Field::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// K regions covering the domain up to measure zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumPartition {
    domain: Domain,
    regions: Vec<Region>,
}

impl ContinuumPartition {
    /// Validates that the regions lie in the domain, do not overlap, and
    /// cover it.
    pub fn new(domain: Domain, regions: Vec<Region>) -> Result<Self> {
        if regions.is_empty() {
            return Err(invalid("a partition needs at least one region"));
        }
        let mut total = 0.0;
        for r in &regions {
            total += r.volume(&domain)?;
        }
        let vol = domain.volume();
        if (total - vol).abs() > 1e-9 * vol {
            return Err(invalid(alloc::format!(
                "regions cover volume {total}, domain has {vol}"
            )));
        }
        let boxes: Vec<(usize, &AxisBox)> = regions
            .iter()
            .enumerate()
            .flat_map(|(k, r)| match r {
                Region::Boxes(bs) => bs.iter().map(move |b| (k, b)).collect::<Vec<_>>(),
                _ => Vec::new(),
            })
            .collect();
        for (i, (_, a)) in boxes.iter().enumerate() {
            for (_, b) in &boxes[i + 1..] {
                if a.intersection_volume(b) > GEOMETRY_TOL * vol {
                    return Err(invalid("partition boxes overlap"));
                }
            }
        }
        Ok(Self { domain, regions })
    }

    pub fn whole(domain: Domain) -> Self {
        Self { domain, regions: alloc::vec![Region::Whole] }
    }

    /// Slabs of a box domain separated by cuts perpendicular to `axis`.
    pub fn slabs(domain: &Domain, axis: usize, cuts: &[f64]) -> Result<Self> {
        let b = box_of(domain)?;
        if axis >= b.dim() {
            return Err(invalid("cut axis out of range"));
        }
        let mut edges = Vec::with_capacity(cuts.len() + 2);
        edges.push(b.lo()[axis]);
        edges.extend_from_slice(cuts);
        edges.push(b.hi()[axis]);
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("cuts must be strictly increasing and inside the domain"));
        }
        let regions = edges.windows(2).map(|w| Region::single_box(b.with_axis(axis, w[0], w[1]))).collect();
        Self::new(domain.clone(), regions)
    }

    /// Rectilinear grid on a planar box: cells ordered with axis 0 fastest.
    pub fn grid(domain: &Domain, cuts0: &[f64], cuts1: &[f64]) -> Result<Self> {
        let b = box_of(domain)?;
        if b.dim() != 2 {
            return Err(Error::UnsupportedDimension { expected: 2, found: b.dim() });
        }
        let edges = |axis: usize, cuts: &[f64]| {
            let mut e = alloc::vec![b.lo()[axis]];
            e.extend_from_slice(cuts);
            e.push(b.hi()[axis]);
            e
        };
        let (e0, e1) = (edges(0, cuts0), edges(1, cuts1));
        let mut regions = Vec::new();
        for w1 in e1.windows(2) {
            for w0 in e0.windows(2) {
                let cell = AxisBox::new(&[w0[0], w1[0]], &[w0[1], w1[1]])?;
                regions.push(Region::single_box(cell));
            }
        }
        Self::new(domain.clone(), regions)
    }

    /// Two halves of a disc separated by the line `normal·(x − c) = offset`.
    pub fn disc_halves(domain: &Domain, normal: [f64; 2], offset: f64) -> Result<Self> {
        let below = Region::disc_cut(normal, offset)?;
        let above = Region::disc_cut([-normal[0], -normal[1]], -offset)?;
        Self::new(domain.clone(), alloc::vec![below, above])
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn k(&self) -> usize {
        self.regions.len()
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    /// Index of the first region containing `x`.
    pub fn label_of(&self, x: &[f64]) -> Option<usize> {
        self.regions.iter().position(|r| r.contains(&self.domain, x))
    }

    /// The partition `U_k ∩ X_n` induced on a sample.
    pub fn induce(&self, cloud: &SampleCloud) -> Result<DiscretePartition> {
        let labels = cloud
            .points()
            .map(|p| {
                self.label_of(p)
                    .map(|k| k as u32)
                    .ok_or_else(|| invalid("sample point not covered by any region"))
            })
            .collect::<Result<Vec<_>>>()?;
        DiscretePartition::new(labels, self.k())
    }
}

fn box_of(domain: &Domain) -> Result<&AxisBox> {
    domain
        .as_box()
        .ok_or_else(|| Error::UnsupportedGeometry("operation needs a box domain".into()))
}

/// ∫ ρ² over the facet `{x_axis = t, x_other ∈ face}`.
fn facet_integral(density: &Density, quad: &QuadratureRule, axis: usize, t: f64, face: &AxisBox) -> f64 {
    let d = face.dim();
    if d == 1 {
        let v = density.value(&[t]);
        return v * v;
    }
    let others: Vec<usize> = (0..d).filter(|&a| a != axis).collect();
    let lo: Vec<f64> = others.iter().map(|&a| face.lo()[a]).collect();
    let hi: Vec<f64> = others.iter().map(|&a| face.hi()[a]).collect();
    let breaks = |la: usize, prefix: &[f64], out: &mut Vec<f64>| {
        let fixed = prefix
            .iter()
            .enumerate()
            .map(|(i, &v)| (others[i], v))
            .chain(core::iter::once((axis, t)));
        density.push_kinks_fixed(others[la], fixed, out);
    };
    let mut full = [0.0; 3];
    full[axis] = t;
    quad.integrate_box(&lo, &hi, &breaks, &mut |y| {
        for (i, &a) in others.iter().enumerate() {
            full[a] = y[i];
        }
        let v = density.value(&full[..d]);
        v * v
    })
}

fn on_domain_face(domain: &Domain, axis: usize, t: f64) -> bool {
    match domain {
        Domain::Box(b) => (t - b.lo()[axis]).abs() <= GEOMETRY_TOL || (t - b.hi()[axis]).abs() <= GEOMETRY_TOL,
        Domain::Disc { .. } => false,
    }
}

/// Per(U; ρ²) = ∫_{∂U ∩ D} ρ² dH^{d−1}.
pub fn perimeter(region: &Region, density: &Density, quad: &QuadratureRule) -> Result<f64> {
    let domain = density.domain();
    region.check_within(domain)?;
    match region {
        Region::Whole => Ok(0.0),
        Region::Boxes(boxes) => {
            let mut total = 0.0;
            for (bi, b) in boxes.iter().enumerate() {
                for axis in 0..b.dim() {
                    for (t, lower_face) in [(b.lo()[axis], true), (b.hi()[axis], false)] {
                        if on_domain_face(domain, axis, t) {
                            continue;
                        }
                        total += facet_integral(density, quad, axis, t, b);
                        // facets shared with another box of the same region are interior to U
                        for (bj, other) in boxes.iter().enumerate() {
                            if bj == bi {
                                continue;
                            }
                            let touching = if lower_face {
                                (other.hi()[axis] - t).abs() <= GEOMETRY_TOL
                            } else {
                                (other.lo()[axis] - t).abs() <= GEOMETRY_TOL
                            };
                            if !touching {
                                continue;
                            }
                            if let Some(shared) = face_overlap(b, other, axis) {
                                total -= facet_integral(density, quad, axis, t, &shared);
                            }
                        }
                    }
                }
            }
            Ok(total)
        }
        Region::DiscCut { normal, offset } => {
            let Domain::Disc { center, radius } = domain else {
                unreachable!("checked by check_within")
            };
            if offset.abs() >= *radius {
                return Ok(0.0);
            }
            let half = libm::sqrt(radius * radius - offset * offset);
            let tangent = [-normal[1], normal[0]];
            let base = [center[0] + offset * normal[0], center[1] + offset * normal[1]];
            Ok(quad.integrate_1d(-half, half, &[], &mut |s| {
                let v = density.value(&[base[0] + s * tangent[0], base[1] + s * tangent[1]]);
                v * v
            }))
        }
    }
}

/// Overlap of two boxes' faces perpendicular to `axis`, as a box whose
/// `axis` extent is irrelevant.
fn face_overlap(a: &AxisBox, b: &AxisBox, axis: usize) -> Option<AxisBox> {
    let d = a.dim();
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for k in 0..d {
        if k == axis {
            lo[k] = 0.0;
            hi[k] = 1.0;
            continue;
        }
        lo[k] = a.lo()[k].max(b.lo()[k]);
        hi[k] = a.hi()[k].min(b.hi()[k]);
        if hi[k] <= lo[k] {
            return None;
        }
    }
    AxisBox::new(&lo[..d], &hi[..d]).ok()
}

/// Σ_k Per(U_k; ρ²).
pub fn perimeter_sum(partition: &ContinuumPartition, density: &Density, quad: &QuadratureRule) -> Result<f64> {
    partition.regions.iter().map(|r| perimeter(r, density, quad)).sum()
}

/// Λ(u) = ∫_D u ρ^{1+α}.
pub fn lambda(u: Field<'_>, density: &Density, alpha: f64, quad: &QuadratureRule) -> Result<f64> {
    let p = 1.0 + alpha;
    let breaks = |a: usize, pre: &[f64], out: &mut Vec<f64>| density.push_kinks(a, pre, out);
    let rho_p = |x: &[f64]| crate::domain::power(density.value(x), p);
    match u {
        Field::Indicator(region) => region.integrate(density.domain(), quad, &breaks, &mut |x| rho_p(x)),
        Field::Function(f) => Ok(density.domain().integrate(quad, &breaks, &mut |x| f(x) * rho_p(x))),
    }
}

/// Λ_ε(u) = ∫_D u ρ_ε^α ρ with ρ_ε the mollified density.
pub fn lambda_eps(
    u: Field<'_>,
    density: &Density,
    alpha: f64,
    kernel: &Kernel,
    eps: f64,
    quad: &QuadratureRule,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    let domain = density.domain();
    let bb = domain.bounding_box();
    let reach = eps * kernel.support_radius();
    // ρ_ε has kinks where the kernel support starts to leave the domain
    let breaks = |a: usize, pre: &[f64], out: &mut Vec<f64>| {
        density.push_kinks(a, pre, out);
        out.push(bb.lo()[a] + reach);
        out.push(bb.hi()[a] - reach);
    };
    let mut failure = None;
    let mut integrand = |x: &[f64]| {
        let ux = u.eval(domain, x);
        if ux == 0.0 {
            return 0.0;
        }
        match mollified_density(density, kernel, eps, x, quad) {
            Ok(re) => ux * crate::domain::power(re, alpha) * density.value(x),
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    };
    let value = match u {
        Field::Indicator(region) => region.integrate(domain, quad, &breaks, &mut integrand)?,
        Field::Function(_) => domain.integrate(quad, &breaks, &mut integrand),
    };
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Σ_k (μ(U_k) − 1/K)².
pub fn balance_deficit(
    partition: &ContinuumPartition,
    density: &Density,
    alpha: f64,
    quad: &QuadratureRule,
) -> Result<f64> {
    let k = partition.k() as f64;
    let mut total = 0.0;
    for r in &partition.regions {
        let m = measure_mu(density, alpha, r, quad)?;
        total += (m - 1.0 / k) * (m - 1.0 / k);
    }
    Ok(total)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

const MC_BLOCK: usize = 1 << 16;

/// TV_ε(u; ρ) = (1/ε) ∬ η_ε(x − y) |u(x) − u(y)| ρ(x) ρ(y) dx dy.
///
/// Estimated as `E[|u(X) − u(X + εZ)| ρ(X + εZ) 1_D(X + εZ)] / ε` with
/// `X ~ ρ`, `Z ~ η`. Draws come in blocks of 65536 with per-block seeds,
/// reduced in block order.
pub fn tv_eps(
    u: Field<'_>,
    density: &Density,
    kernel: &Kernel,
    eps: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    if mc_samples < 2 {
        return Err(invalid("need at least two Monte Carlo samples"));
    }
    let domain = density.domain();
    let dim = domain.dim();
    if kernel.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: kernel.dim() });
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut done = 0usize;
    let mut block = 0u64;
    let mut z = [0.0; 3];
    let mut y = [0.0; 3];
    while done < mc_samples {
        let size = MC_BLOCK.min(mc_samples - done);
        let block_seed = derive_seed(seed, block);
        let xs = sample(density, size, block_seed)?;
        let mut rng = rng_from_seed(derive_seed(block_seed, 1));
        let (mut bs, mut bsq) = (0.0, 0.0);
        for x in xs.points() {
            kernel.sample_unit(&mut rng, &mut z[..dim]);
            for a in 0..dim {
                y[a] = x[a] + eps * z[a];
            }
            if !domain.contains(&y[..dim]) {
                continue;
            }
            let jump = (u.eval(domain, x) - u.eval(domain, &y[..dim])).abs();
            if jump == 0.0 {
                continue;
            }
            let v = jump * density.value(&y[..dim]) / eps;
            bs += v;
            bsq += v * v;
        }
        sum += bs;
        sum_sq += bsq;
        done += size;
        block += 1;
    }
    let n = done as f64;
    let mean = sum / n;
    let var = ((sum_sq / n) - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(McEstimate { mean, std_err: libm::sqrt(var / n), samples: done })
}

/// Limiting energy of a partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumEnergy {
    pub balance_deficit: f64,
    pub perimeter_sum: f64,
    pub c_eta_rho: f64,
    /// `C_{η,ρ} Σ_k Per(U_k; ρ²)`, or `+∞` when the deficit exceeds the tolerance.
    pub value: f64,
}

impl ContinuumEnergy {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

pub fn continuum_energy(
    partition: &ContinuumPartition,
    density: &Density,
    alpha: f64,
    kernel: &Kernel,
    tol_balance: f64,
    quad: &QuadratureRule,
) -> Result<ContinuumEnergy> {
    let deficit = balance_deficit(partition, density, alpha, quad)?;
    let per = perimeter_sum(partition, density, quad)?;
    let c = kernel.c_eta_rho(density, quad);
    let value = if deficit > tol_balance { f64::INFINITY } else { c * per };
    Ok(ContinuumEnergy { balance_deficit: deficit, perimeter_sum: per, c_eta_rho: c, value })
}

/// Candidate minimizer of the balanced perimeter problem on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMinimizer {
    pub partition: ContinuumPartition,
    /// The domain's symmetry admits other minimizers of equal energy.
    pub non_unique: bool,
    /// Global optimality is not certified.
    pub heuristic: bool,
    pub layout: Layout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Slabs { axis: usize },
    Grid { cells0: usize, cells1: usize },
}

/// Position `t` on `axis` where the μ-mass of `{x_axis < t}` equals `target`.
pub fn mu_quantile(density: &Density, alpha: f64, axis: usize, target: f64, quad: &QuadratureRule) -> Result<f64> {
    let b = *box_of(density.domain())?;
    let (mut lo, mut hi) = (b.lo()[axis], b.hi()[axis]);
    if !(0.0..=1.0).contains(&target) {
        return Err(invalid("quantile target must lie in [0, 1]"));
    }
    let mass_below = |t: f64| -> Result<f64> {
        if t <= b.lo()[axis] {
            return Ok(0.0);
        }
        measure_mu(density, alpha, &Region::single_box(b.with_axis(axis, b.lo()[axis], t)), quad)
    };
    while hi - lo > 1e-10 * b.width(axis).max(1.0) * 0.5 {
        let mid = 0.5 * (lo + hi);
        if mass_below(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Parallel cuts perpendicular to the longest axis at the μ-quantiles
/// `j/K`; on planar boxes the balanced rectilinear grid is also evaluated
/// and kept when its perimeter is lower.
pub fn reference_minimizer(
    domain: &Domain,
    density: &Density,
    alpha: f64,
    k: usize,
    quad: &QuadratureRule,
) -> Result<ReferenceMinimizer> {
    let b = *box_of(domain)?;
    if density.domain() != domain {
        return Err(invalid("density lives on a different domain"));
    }
    if k == 0 {
        return Err(invalid("K must be at least 1"));
    }
    let axis = b.longest_axis();
    let tied = (0..b.dim()).filter(|&a| (b.width(a) - b.width(axis)).abs() <= GEOMETRY_TOL).count() > 1;
    let cuts = (1..k)
        .map(|j| mu_quantile(density, alpha, axis, j as f64 / k as f64, quad))
        .collect::<Result<Vec<_>>>()?;
    let slabs = ContinuumPartition::slabs(domain, axis, &cuts)?;
    let mut best = ReferenceMinimizer {
        non_unique: tied && k >= 2,
        heuristic: k > 2 || !density.is_uniform(),
        layout: Layout::Slabs { axis },
        partition: slabs,
    };
    if b.dim() == 2 && k >= 4 {
        let slab_per = perimeter_sum(&best.partition, density, quad)?;
        let mut best_per = slab_per;
        for p in 2..k {
            if k % p != 0 || k / p < 2 {
                continue;
            }
            let q = k / p;
            let c0 = (1..p)
                .map(|j| mu_quantile(density, alpha, 0, j as f64 / p as f64, quad))
                .collect::<Result<Vec<_>>>()?;
            let c1 = (1..q)
                .map(|j| mu_quantile(density, alpha, 1, j as f64 / q as f64, quad))
                .collect::<Result<Vec<_>>>()?;
            let grid = ContinuumPartition::grid(domain, &c0, &c1)?;
            if balance_deficit(&grid, density, alpha, quad)? > DEFAULT_BALANCE_TOL {
                continue;
            }
            let per = perimeter_sum(&grid, density, quad)?;
            if per < best_per - 1e-12 {
                best_per = per;
                best.partition = grid;
                best.layout = Layout::Grid { cells0: p, cells1: q };
                best.heuristic = true;
                best.non_unique = tied;
            }
        }
    }
    Ok(best)
}
