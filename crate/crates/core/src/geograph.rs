//! Kernel-weighted random geometric graphs.
//!
//! Weights `W_ij = η_ε(X_i − X_j)` for `i ≠ j`, stored as compressed
//! neighbour lists sorted by vertex index. Pairs are found with a uniform
//! cell grid of edge `R·ε`, so only the 3^d surrounding cells are scanned.

use alloc::vec::Vec;

use crate::domain::SampleCloud;
use crate::error::{invalid, Error, Result};
use crate::kernel::Kernel;

/// Sparse symmetric weighted graph on a sample cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricGraph {
    n: usize,
    eps: f64,
    kernel: Option<Kernel>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
    total_weight: f64,
}

/// `d^α` with `0^0 = 1` and the exact shortcuts for α ∈ {0, 1, 2}.
#[inline]
pub fn degree_power(d: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else if alpha == 1.0 {
        d
    } else if alpha == 2.0 {
        d * d
    } else {
        libm::pow(d, alpha)
    }
}

/// Builds the graph with unit weight scale.
pub fn build_graph(cloud: &SampleCloud, kernel: &Kernel, eps: f64) -> Result<GeometricGraph> {
    build_graph_scaled(cloud, kernel, eps, 1.0)
}

/// Builds the graph with every weight multiplied by `scale`.
pub fn build_graph_scaled(cloud: &SampleCloud, kernel: &Kernel, eps: f64, scale: f64) -> Result<GeometricGraph> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid("eps must be positive"));
    }
    if !(scale > 0.0) {
        return Err(invalid("weight scale must be positive"));
    }
    if cloud.is_empty() {
        return Err(invalid("cannot build a graph on an empty cloud"));
    }
    if cloud.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), found: cloud.dim() });
    }
    if cloud.len() > u32::MAX as usize {
        return Err(invalid("too many points for 32-bit neighbour indices"));
    }
    let n = cloud.len();
    let dim = cloud.dim();
    let cutoff = eps * kernel.support_radius();
    let inv_vol = scale / libm::pow(eps, dim as f64);
    let grid = CellGrid::new(cloud, cutoff);

    let mut offsets = Vec::with_capacity(n + 1);
    let mut neighbors = Vec::new();
    let mut weights = Vec::new();
    let mut scratch: Vec<(u32, f64)> = Vec::new();
    offsets.push(0);
    for i in 0..n {
        let xi = cloud.point(i);
        scratch.clear();
        for &c in &grid.adjacent[grid.cell_of[i] as usize] {
            let (start, end) = grid.ranges[c as usize];
            for &j in &grid.order[start..end] {
                if j as usize == i {
                    continue;
                }
                let dist = distance(xi, cloud.point(j as usize));
                if dist < cutoff {
                    scratch.push((j, kernel.radial(dist / eps) * inv_vol));
                }
            }
        }
        scratch.sort_unstable_by_key(|&(j, _)| j);
        for &(j, w) in &scratch {
            neighbors.push(j);
            weights.push(w);
        }
        offsets.push(neighbors.len());
    }
    Ok(GeometricGraph::from_csr(n, eps, Some(*kernel), offsets, neighbors, weights))
}

#[inline]
fn distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (p, q) in a.iter().zip(b) {
        let d = p - q;
        s += d * d;
    }
    libm::sqrt(s)
}

/// Occupied cells of a uniform grid, sorted lexicographically.
struct CellGrid {
    /// Point indices grouped by cell.
    order: Vec<u32>,
    /// `order[start..end]` for each occupied cell.
    ranges: Vec<(usize, usize)>,
    /// Occupied cells within one step (including the cell itself).
    adjacent: Vec<Vec<u32>>,
    cell_of: Vec<u32>,
}

impl CellGrid {
    fn new(cloud: &SampleCloud, cell: f64) -> Self {
        let dim = cloud.dim();
        let mut lo = [f64::INFINITY; 3];
        for p in cloud.points() {
            for a in 0..dim {
                lo[a] = lo[a].min(p[a]);
            }
        }
        let key = |p: &[f64]| {
            let mut k = [0i64; 3];
            for a in 0..dim {
                k[a] = libm::floor((p[a] - lo[a]) / cell) as i64;
            }
            k
        };
        let mut keyed: Vec<([i64; 3], u32)> = cloud.points().enumerate().map(|(i, p)| (key(p), i as u32)).collect();
        keyed.sort_unstable();
        let mut keys: Vec<[i64; 3]> = Vec::new();
        let mut ranges = Vec::new();
        let mut cell_of = alloc::vec![0u32; cloud.len()];
        let mut start = 0;
        for idx in 0..keyed.len() {
            cell_of[keyed[idx].1 as usize] = keys.len() as u32;
            if idx + 1 == keyed.len() || keyed[idx + 1].0 != keyed[idx].0 {
                keys.push(keyed[idx].0);
                ranges.push((start, idx + 1));
                start = idx + 1;
            }
        }
        let span = 3usize.pow(dim as u32);
        let adjacent = keys
            .iter()
            .map(|k| {
                let mut out = Vec::with_capacity(span);
                for code in 0..span {
                    let mut probe = *k;
                    let mut rest = code;
                    for slot in probe.iter_mut().take(dim) {
                        *slot += (rest % 3) as i64 - 1;
                        rest /= 3;
                    }
                    if let Ok(c) = keys.binary_search(&probe) {
                        out.push(c as u32);
                    }
                }
                out
            })
            .collect();
        let order = keyed.into_iter().map(|(_, i)| i).collect();
        Self { order, ranges, adjacent, cell_of }
    }
}

impl GeometricGraph {
    fn from_csr(
        n: usize,
        eps: f64,
        kernel: Option<Kernel>,
        offsets: Vec<usize>,
        neighbors: Vec<u32>,
        weights: Vec<f64>,
    ) -> Self {
        let degrees: Vec<f64> = (0..n).map(|i| weights[offsets[i]..offsets[i + 1]].iter().sum()).collect();
        let total_weight = degrees.iter().sum();
        Self { n, eps, kernel, offsets, neighbors, weights, degrees, total_weight }
    }

    /// Graph with explicit symmetric weights, for hand-built instances.
    /// Each undirected edge `(i, j, w)` is listed once; duplicates add up.
    pub fn from_edges(n: usize, eps: f64, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(invalid("eps must be positive"));
        }
        let mut lists: Vec<Vec<(u32, f64)>> = alloc::vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(invalid("edge endpoint out of range"));
            }
            if i == j {
                return Err(invalid("self loops are not allowed"));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(invalid("edge weights must be finite and nonnegative"));
            }
            lists[i].push((j as u32, w));
            lists[j].push((i as u32, w));
        }
        let mut offsets = alloc::vec![0];
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        for mut list in lists {
            list.sort_unstable_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < list.len() {
                let (j, mut w) = list[k];
                k += 1;
                while k < list.len() && list[k].0 == j {
                    w += list[k].1;
                    k += 1;
                }
                neighbors.push(j);
                weights.push(w);
            }
            offsets.push(neighbors.len());
        }
        Ok(Self::from_csr(n, eps, None, offsets, neighbors, weights))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        self.kernel.as_ref()
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// 2m = Σ_i d_i, summed in index order.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Stored directed entries (each undirected edge counted twice).
    pub fn stored_entries(&self) -> usize {
        self.neighbors.len()
    }

    /// Neighbour indices and weights of vertex `i`, sorted by index.
    #[inline]
    pub fn neighbors(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.neighbors[r.clone()], &self.weights[r])
    }

    /// `W_ij`, or 0 if the pair is not adjacent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (nb, w) = self.neighbors(i);
        match nb.binary_search(&(j as u32)) {
            Ok(k) => w[k],
            Err(_) => 0.0,
        }
    }

    /// Undirected edges `(i, j, w)` with `i < j`, in lexicographic order.
    pub fn upper_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (nb, w) = self.neighbors(i);
            nb.iter()
                .zip(w)
                .filter(move |(&j, _)| j as usize > i)
                .map(move |(&j, &w)| (i, j as usize, w))
        })
    }

    /// `d_i^α` for every vertex.
    pub fn degree_powers(&self, alpha: f64) -> Result<Vec<f64>> {
        if alpha < 0.0 {
            if let Some(v) = self.degrees.iter().position(|&d| d <= 0.0) {
                return Err(Error::DegenerateGraph { vertex: v });
            }
        }
        Ok(self.degrees.iter().map(|&d| degree_power(d, alpha)).collect())
    }

    /// S(α) = Σ_i d_i^α.
    pub fn s_alpha(&self, alpha: f64) -> Result<f64> {
        Ok(self.degree_powers(alpha)?.iter().sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{sample, Density, Domain};
    use crate::kernel::Profile;

    fn line_cloud(xs: &[f64]) -> SampleCloud {
        SampleCloud::from_coords(1, xs.to_vec(), 0).unwrap()
    }

    #[test]
    fn far_points_have_no_edges() {
        let k = Kernel::new(Profile::Indicator, 1).unwrap();
        let g = build_graph(&line_cloud(&[0.0, 1.5]), &k, 1.0).unwrap();
        assert_eq!(g.stored_entries(), 0);
        assert_eq!(g.total_weight(), 0.0);
    }

    #[test]
    fn three_point_line() {
        let k = Kernel::new(Profile::Indicator, 1).unwrap();
        let g = build_graph(&line_cloud(&[0.0, 0.5, 1.2]), &k, 1.0).unwrap();
        assert_eq!(g.weight(0, 1), 0.5);
        assert_eq!(g.weight(1, 2), 0.5);
        assert_eq!(g.weight(0, 2), 0.0);
        assert_eq!(g.degrees(), &[0.5, 1.0, 0.5]);
        assert_eq!(g.total_weight(), 2.0);
        assert_eq!(g.s_alpha(0.0).unwrap(), 3.0);
        assert_eq!(g.s_alpha(1.0).unwrap(), 2.0);
        assert_eq!(g.s_alpha(2.0).unwrap(), 1.5);
    }

    #[test]
    fn rejects_bad_eps() {
        let k = Kernel::new(Profile::Indicator, 1).unwrap();
        assert!(build_graph(&line_cloud(&[0.0]), &k, 0.0).is_err());
        assert!(build_graph(&line_cloud(&[0.0]), &k, -1.0).is_err());
    }

    #[test]
    fn isolated_vertex_blocks_negative_alpha() {
        let k = Kernel::new(Profile::Indicator, 1).unwrap();
        let g = build_graph(&line_cloud(&[0.0, 0.5, 3.0]), &k, 1.0).unwrap();
        assert_eq!(g.s_alpha(0.0).unwrap(), 3.0);
        assert!(matches!(g.s_alpha(-1.0), Err(Error::DegenerateGraph { vertex: 2 })));
    }

    #[test]
    fn scale_multiplies_weights() {
        let dens = Density::uniform(Domain::axis_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap());
        let cloud = sample(&dens, 300, 5).unwrap();
        let k = Kernel::new(Profile::Cone, 2).unwrap();
        let g = build_graph(&cloud, &k, 0.15).unwrap();
        let g3 = build_graph_scaled(&cloud, &k, 0.15, 3.0).unwrap();
        assert_eq!(g.stored_entries(), g3.stored_entries());
        for i in 0..g.n() {
            assert!((g3.degree(i) - 3.0 * g.degree(i)).abs() <= 1e-12 * g3.degree(i).max(1.0));
        }
        assert!((g3.total_weight() - 3.0 * g.total_weight()).abs() < 1e-9 * g3.total_weight());
    }

    #[test]
    fn from_edges_merges_duplicates() {
        let g = GeometricGraph::from_edges(3, 1.0, &[(0, 1, 1.0), (1, 0, 2.0), (1, 2, 0.5)]).unwrap();
        assert_eq!(g.weight(0, 1), 3.0);
        assert_eq!(g.weight(1, 0), 3.0);
        assert_eq!(g.total_weight(), 7.0);
        assert!(GeometricGraph::from_edges(2, 1.0, &[(0, 0, 1.0)]).is_err());
    }
}
