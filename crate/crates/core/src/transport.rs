//! One-dimensional quantile transport, TL¹ surrogates and clustering scores.

use alloc::vec::Vec;

use crate::continuum::ContinuumPartition;
use crate::domain::{Density, Domain, Region, SampleCloud};
use crate::error::{Error, Result};
use crate::functional::DiscretePartition;
use crate::quadrature::QuadratureRule;

/// Grid size for the numeric CDF of a non-uniform density.
pub const CDF_GRID: usize = 4096;

/// Largest cluster count for which the label permutation is searched.
pub const MAX_PERMUTATION_K: usize = 8;

#[derive(Debug, Clone)]
enum Cdf {
    Uniform,
    /// Cumulative values and slopes at grid nodes; monotone cubic Hermite
    /// between them.
    Grid { x: Vec<f64>, f: Vec<f64>, slope: Vec<f64> },
}

/// `T = F_n⁻¹ ∘ F` for a sample on an interval.
#[derive(Debug, Clone)]
pub struct TransportMap1D {
    density: Density,
    lo: f64,
    hi: f64,
    sorted: Vec<f64>,
    /// `order[k]` is the cloud index of the k-th order statistic.
    order: Vec<u32>,
    /// Cell boundaries `F⁻¹(k/n)`, `k = 0..=n`; T is constant on each cell.
    cells: Vec<f64>,
    cdf: Cdf,
}

fn interval(density: &Density) -> Result<(f64, f64)> {
    match density.domain() {
        Domain::Box(b) if b.dim() == 1 => Ok((b.lo()[0], b.hi()[0])),
        d => Err(Error::UnsupportedDimension { expected: 1, found: d.dim() }),
    }
}

fn kinks(density: &Density) -> Vec<f64> {
    let mut out = Vec::new();
    density.push_kinks(0, &[], &mut out);
    out
}

impl Cdf {
    fn build(density: &Density, lo: f64, hi: f64, quad: &QuadratureRule) -> Self {
        if density.is_uniform() {
            return Cdf::Uniform;
        }
        let ks = kinks(density);
        let h = (hi - lo) / CDF_GRID as f64;
        let x: Vec<f64> = (0..=CDF_GRID).map(|i| if i == CDF_GRID { hi } else { lo + h * i as f64 }).collect();
        let mut f = Vec::with_capacity(x.len());
        f.push(0.0);
        let mut acc = 0.0;
        for w in x.windows(2) {
            acc += quad.integrate_1d(w[0], w[1], &ks, &mut |t| density.value(&[t]));
            f.push(acc);
        }
        let total = acc;
        for v in f.iter_mut() {
            *v /= total;
        }
        let mut slope: Vec<f64> = x.iter().map(|&t| density.value(&[t]) / total).collect();
        // Fritsch–Carlson limiter
        for i in 0..CDF_GRID {
            let delta = (f[i + 1] - f[i]) / (x[i + 1] - x[i]);
            if delta <= 0.0 {
                slope[i] = 0.0;
                slope[i + 1] = 0.0;
                continue;
            }
            let (a, b) = (slope[i] / delta, slope[i + 1] / delta);
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / libm::sqrt(r);
                slope[i] = tau * a * delta;
                slope[i + 1] = tau * b * delta;
            }
        }
        Cdf::Grid { x, f, slope }
    }

    fn eval(&self, lo: f64, hi: f64, t: f64) -> f64 {
        if t <= lo {
            return 0.0;
        }
        if t >= hi {
            return 1.0;
        }
        match self {
            Cdf::Uniform => (t - lo) / (hi - lo),
            Cdf::Grid { x, f, slope } => {
                let i = x.partition_point(|&v| v <= t).clamp(1, x.len() - 1) - 1;
                hermite(x[i], x[i + 1], f[i], f[i + 1], slope[i], slope[i + 1], t)
            }
        }
    }

    fn inverse(&self, lo: f64, hi: f64, p: f64) -> f64 {
        if p <= 0.0 {
            return lo;
        }
        if p >= 1.0 {
            return hi;
        }
        match self {
            Cdf::Uniform => lo + p * (hi - lo),
            Cdf::Grid { x, f, slope } => {
                let i = f.partition_point(|&v| v < p).clamp(1, f.len() - 1) - 1;
                let (mut a, mut b) = (x[i], x[i + 1]);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if hermite(x[i], x[i + 1], f[i], f[i + 1], slope[i], slope[i + 1], m) < p {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                b
            }
        }
    }
}

fn hermite(x0: f64, x1: f64, f0: f64, f1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = x1 - x0;
    let s = (t - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * f0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * f1 + (s3 - s2) * h * d1
}

/// Builds the quantile map of `cloud` against `density` on an interval.
pub fn build_quantile_map(density: &Density, cloud: &SampleCloud, quad: &QuadratureRule) -> Result<TransportMap1D> {
    if cloud.dim() != 1 {
        return Err(Error::UnsupportedDimension { expected: 1, found: cloud.dim() });
    }
    let (lo, hi) = interval(density)?;
    let n = cloud.len();
    if n == 0 {
        return Err(crate::error::invalid("transport map needs a nonempty sample"));
    }
    let xs = cloud.coords();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&a, &b| xs[a as usize].total_cmp(&xs[b as usize]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| xs[i as usize]).collect();
    let cdf = Cdf::build(density, lo, hi, quad);
    let cells = (0..=n).map(|k| cdf.inverse(lo, hi, k as f64 / n as f64)).collect();
    Ok(TransportMap1D { density: density.clone(), lo, hi, sorted, order, cells, cdf })
}

impl TransportMap1D {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn order_statistics(&self) -> &[f64] {
        &self.sorted
    }

    /// Cloud index of each order statistic.
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    /// Cell boundaries `F⁻¹(k/n)`.
    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Reference CDF of ν.
    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf.eval(self.lo, self.hi, x)
    }

    /// Order-statistic rank (0-based) that `x` is sent to.
    pub fn rank(&self, x: f64) -> usize {
        let n = self.sorted.len();
        let k = libm::ceil(n as f64 * self.cdf(x)) as usize;
        k.clamp(1, n) - 1
    }

    /// `T(x) = X_(⌈n F(x)⌉)`.
    pub fn apply(&self, x: f64) -> f64 {
        self.sorted[self.rank(x)]
    }

    fn cell_integral(&self, k: usize, extra: &[f64], quad: &QuadratureRule, f: &mut dyn FnMut(f64) -> f64) -> f64 {
        let (a, b) = (self.cells[k], self.cells[k + 1]);
        let mut breaks = kinks(&self.density);
        breaks.extend_from_slice(extra);
        quad.integrate_1d(a, b, &breaks, &mut |t| f(t) * self.density.value(&[t]))
    }

    /// `∫ g(T x) dν(x)`, by quadrature of ρ over every cell.
    pub fn pushforward_integral(&self, g: &mut dyn FnMut(f64) -> f64, quad: &QuadratureRule) -> f64 {
        (0..self.len()).map(|k| g(self.sorted[k]) * self.cell_integral(k, &[], quad, &mut |_| 1.0)).sum()
    }

    /// `(1/n) Σ g(Xᵢ)`.
    pub fn empirical_mean(&self, g: &mut dyn FnMut(f64) -> f64) -> f64 {
        self.sorted.iter().map(|&x| g(x)).sum::<f64>() / self.len() as f64
    }
}

/// `‖Id − T‖_∞` and its law-of-the-iterated-logarithm normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupDeviation {
    pub sup: f64,
    /// `√n · sup / √(2 log log n)`, defined for `n ≥ 3`.
    pub lil: Option<f64>,
}

/// Exact sup over the cells: on each cell T is constant, so the supremum is
/// reached at a cell endpoint (possibly only as a limit).
pub fn sup_deviation(map: &TransportMap1D) -> SupDeviation {
    let n = map.len();
    let sup = (0..n)
        .map(|k| {
            let x = map.sorted[k];
            libm::fabs(map.cells[k] - x).max(libm::fabs(map.cells[k + 1] - x))
        })
        .fold(0.0, f64::max);
    let lil = (n >= 3).then(|| {
        let nf = n as f64;
        libm::sqrt(nf) * sup / libm::sqrt(2.0 * libm::log(libm::log(nf)))
    });
    SupDeviation { sup, lil }
}

fn region_breaks(region: &Region) -> Vec<f64> {
    match region {
        Region::Boxes(bs) => bs.iter().flat_map(|b| [b.lo()[0], b.hi()[0]]).collect(),
        _ => Vec::new(),
    }
}

/// `J = ∫|x − Tx| dν + ∫|u(x) − u_n(Tx)| dν` with `u = 1_region`; an upper
/// bound for the TL¹ distance between `(ν, u)` and `(ν_n, u_n)`.
pub fn tl1_surrogate(map: &TransportMap1D, region: &Region, u_n: &[f64], quad: &QuadratureRule) -> Result<f64> {
    if u_n.len() != map.len() {
        return Err(Error::DimensionMismatch { expected: map.len(), found: u_n.len() });
    }
    let domain = map.density.domain().clone();
    region.check_within(&domain)?;
    let mut rb = region_breaks(region);
    rb.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for k in 0..map.len() {
        let x = map.sorted[k];
        let v = u_n[map.order[k] as usize];
        let (a, b) = (map.cells[k], map.cells[k + 1]);
        let mut extra = alloc::vec![x];
        let start = rb.partition_point(|&t| t <= a);
        extra.extend(rb[start..].iter().take_while(|&&t| t < b));
        total += map.cell_integral(k, &extra, quad, &mut |t| {
            let u = if region.contains(&domain, &[t]) { 1.0 } else { 0.0 };
            libm::fabs(t - x) + libm::fabs(u - v)
        });
    }
    Ok(total)
}

/// Agreement between a discrete clustering and a reference labeling, after
/// the best relabeling.
#[derive(Debug, Clone, PartialEq)]
pub struct Misclassification {
    /// Per reference class, the fraction of its points given the matched
    /// label; `None` when the class has no sample points.
    pub ratios: Vec<Option<f64>>,
    pub min: f64,
    /// `max_k r_k`, the weakest of the three scores.
    pub max: f64,
    pub overall: f64,
    /// `permutation[k]` is the discrete label matched to reference class k.
    pub permutation: Vec<u32>,
}

/// Scores labels `found` against `truth` over all permutations of `k` labels.
pub fn misclassification_labels(truth: &[u32], found: &[u32], k: usize) -> Result<Misclassification> {
    if truth.len() != found.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), found: found.len() });
    }
    if k > MAX_PERMUTATION_K {
        return Err(Error::TooLarge { n: k, cap: MAX_PERMUTATION_K });
    }
    if truth.is_empty() || k == 0 {
        return Err(crate::error::invalid("misclassification needs points and at least one class"));
    }
    let mut table = alloc::vec![0usize; k * k];
    let mut class = alloc::vec![0usize; k];
    for (&t, &f) in truth.iter().zip(found) {
        let (t, f) = (t as usize, f as usize);
        if t >= k || f >= k {
            return Err(crate::error::invalid("label exceeds the class count"));
        }
        table[t * k + f] += 1;
        class[t] += 1;
    }
    let mut perm: Vec<u32> = (0..k as u32).collect();
    let mut best = (0usize, perm.clone());
    loop {
        let hits: usize = (0..k).map(|c| table[c * k + perm[c] as usize]).sum();
        if hits > best.0 {
            best = (hits, perm.clone());
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let (hits, permutation) = best;
    let ratios: Vec<Option<f64>> = (0..k)
        .map(|c| (class[c] > 0).then(|| table[c * k + permutation[c] as usize] as f64 / class[c] as f64))
        .collect();
    let defined = ratios.iter().flatten();
    let min = defined.clone().copied().fold(f64::INFINITY, f64::min);
    let max = defined.copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Misclassification { ratios, min, max, overall: hits as f64 / truth.len() as f64, permutation })
}

/// Lexicographic successor; false once the last permutation is reached.
fn next_permutation(p: &mut [u32]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else { return false };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Scores a discrete partition against the partition a continuum one
/// induces on the same cloud.
pub fn misclassification(
    partition_n: &DiscretePartition,
    partition: &ContinuumPartition,
    cloud: &SampleCloud,
) -> Result<Misclassification> {
    let truth = partition.induce(cloud)?;
    let k = partition.k().max(partition_n.k());
    misclassification_labels(truth.labels(), partition_n.labels(), k)
}

/// Names of the weak-convergence test functions, in column order.
pub const TEST_FUNCTIONS: [&str; 5] = ["one", "x0", "smooth_step", "cosine", "bump"];

/// Bounded Lipschitz test functions on the domain's bounding box.
struct Panel {
    lo: f64,
    width: f64,
    center: [f64; 3],
    scale2: f64,
}

impl Panel {
    fn new(domain: &Domain) -> Self {
        let bb = domain.bounding_box();
        let mut center = [0.0; 3];
        let mut diag2 = 0.0;
        for a in 0..bb.dim() {
            center[a] = 0.5 * (bb.lo()[a] + bb.hi()[a]);
            diag2 += bb.width(a) * bb.width(a);
        }
        Self { lo: bb.lo()[0], width: bb.width(0), center, scale2: 0.25 * diag2 }
    }

    fn ramp(&self) -> (f64, f64) {
        let mid = self.lo + 0.5 * self.width;
        (mid - 0.05 * self.width, mid + 0.05 * self.width)
    }

    fn eval(&self, j: usize, x: &[f64]) -> f64 {
        match j {
            0 => 1.0,
            1 => x[0],
            2 => {
                let (a, b) = self.ramp();
                ((b - x[0]) / (b - a)).clamp(0.0, 1.0)
            }
            3 => libm::cos(2.0 * core::f64::consts::PI * (x[0] - self.lo) / self.width),
            _ => {
                let r2: f64 = x.iter().zip(&self.center).map(|(p, c)| (p - c) * (p - c)).sum();
                1.0 / (1.0 + r2 / self.scale2)
            }
        }
    }
}

/// One row of the weak-convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakRow {
    pub n: usize,
    pub seed: u64,
    /// `|(1/n)Σ f(Xᵢ) − ∫ f dν|` per test function.
    pub errors: [f64; 5],
}

/// Empirical-mean errors of the test panel for each cloud.
pub fn weak_convergence_diagnostic(clouds: &[SampleCloud], density: &Density, quad: &QuadratureRule) -> Result<Vec<WeakRow>> {
    let domain = density.domain();
    let panel = Panel::new(domain);
    let (ra, rb) = panel.ramp();
    let breaks = |axis: usize, prefix: &[f64], out: &mut Vec<f64>| {
        density.push_kinks(axis, prefix, out);
        if axis == 0 {
            out.push(ra);
            out.push(rb);
        }
    };
    let mut exact = [0.0; 5];
    for (j, e) in exact.iter_mut().enumerate() {
        *e = domain.integrate(quad, &breaks, &mut |x| panel.eval(j, x) * density.value(x));
    }
    clouds
        .iter()
        .map(|cloud| {
            if cloud.dim() != domain.dim() {
                return Err(Error::DimensionMismatch { expected: domain.dim(), found: cloud.dim() });
            }
            let n = cloud.len();
            let mut errors = [0.0; 5];
            for (j, e) in errors.iter_mut().enumerate() {
                let mean = cloud.points().map(|p| panel.eval(j, p)).sum::<f64>() / n as f64;
                *e = libm::fabs(mean - exact[j]);
            }
            Ok(WeakRow { n, seed: cloud.seed(), errors })
        })
        .collect()
}
