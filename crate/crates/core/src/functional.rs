//! Modularity and its exact decomposition into a balance term and a graph
//! total variation term.
//!
//! For a partition into indicator vectors `u_1..u_K`,
//!
//! ```text
//! 1 − 1/K − Q = n²(n−1)^{2α}/S² · Σ_k GΛ(u_k − 1/K)²  +  ε · n(n−1)/(4m) · Σ_k GTV(u_k)
//! ```
//!
//! which is pure algebra; [`decompose`] evaluates both sides along independent
//! code paths and reports the residual.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::geograph::{degree_power, GeometricGraph};

/// Hard assignment of vertices to clusters `0..k`. Empty clusters are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscretePartition {
    labels: Vec<u32>,
    k: usize,
}

impl DiscretePartition {
    pub fn new(labels: Vec<u32>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("cluster cap K must be at least 1"));
        }
        if let Some(&bad) = labels.iter().find(|&&c| c as usize >= k) {
            return Err(invalid(alloc::format!("label {bad} outside 0..{k}")));
        }
        Ok(Self { labels, k })
    }

    /// Everything in cluster 0.
    pub fn single(n: usize) -> Self {
        Self { labels: alloc::vec![0; n], k: 1 }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k];
        for &c in &self.labels {
            sizes[c as usize] += 1;
        }
        sizes
    }

    pub fn nonempty_clusters(&self) -> usize {
        self.cluster_sizes().iter().filter(|&&s| s > 0).count()
    }

    /// Indicator vector of cluster `c`.
    pub fn indicator(&self, c: usize) -> Vec<f64> {
        self.labels.iter().map(|&l| if l as usize == c { 1.0 } else { 0.0 }).collect()
    }

    /// Applies `perm[old] = new` to every label.
    pub fn relabeled(&self, perm: &[u32]) -> Result<Self> {
        if perm.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, found: perm.len() });
        }
        Self::new(self.labels.iter().map(|&c| perm[c as usize]).collect(), self.k)
    }

    /// Same labels, larger declared cap.
    pub fn with_cap(&self, k: usize) -> Result<Self> {
        Self::new(self.labels.clone(), k)
    }
}

/// Both sides of the modularity identity for one (graph, partition).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionReport {
    pub n: usize,
    pub eps: f64,
    pub alpha: f64,
    pub k: usize,
    pub q: f64,
    pub quad_term: f64,
    pub gtv_term: f64,
    pub residual: f64,
}

impl DecompositionReport {
    /// Tolerance the residual is held to.
    pub fn tolerance(&self) -> f64 {
        1e-9 * (self.n as f64).max(1.0)
    }
}

fn check_len(graph: &GeometricGraph, len: usize) -> Result<()> {
    if graph.n() != len {
        return Err(Error::DimensionMismatch { expected: graph.n(), found: len });
    }
    Ok(())
}

/// α-modularity from cluster aggregates:
/// `Q = Σ_k internal_k / 2m − Σ_k (Σ_{i∈k} d_i^α)² / S²`.
pub fn modularity(graph: &GeometricGraph, partition: &DiscretePartition, alpha: f64) -> Result<f64> {
    check_len(graph, partition.len())?;
    let two_m = graph.total_weight();
    if !(two_m > 0.0) {
        return Err(Error::EmptyGraph);
    }
    let powers = graph.degree_powers(alpha)?;
    let s: f64 = powers.iter().sum();
    let k = partition.k();
    let mut internal = alloc::vec![0.0; k];
    let mut mass = alloc::vec![0.0; k];
    for i in 0..graph.n() {
        let ci = partition.labels[i];
        mass[ci as usize] += powers[i];
        let (nb, w) = graph.neighbors(i);
        let mut acc = 0.0;
        for (&j, &wij) in nb.iter().zip(w) {
            if partition.labels[j as usize] == ci {
                acc += wij;
            }
        }
        internal[ci as usize] += acc;
    }
    let edge_part: f64 = internal.iter().sum::<f64>() / two_m;
    let null_part: f64 = mass.iter().map(|a| (a / s) * (a / s)).sum();
    Ok(edge_part - null_part)
}

/// `Q^λ = (1/2m) Σ_ij (W_ij − λ d_i d_j / 2m) δ(c_i, c_j)`.
pub fn modularity_lambda(graph: &GeometricGraph, partition: &DiscretePartition, lambda: f64) -> Result<f64> {
    check_len(graph, partition.len())?;
    if !(lambda >= 0.0) {
        return Err(invalid("lambda must be nonnegative"));
    }
    let two_m = graph.total_weight();
    if !(two_m > 0.0) {
        return Err(Error::EmptyGraph);
    }
    let mut internal = 0.0;
    let mut mass = alloc::vec![0.0; partition.k()];
    for i in 0..graph.n() {
        let ci = partition.labels[i];
        mass[ci as usize] += graph.degree(i);
        let (nb, w) = graph.neighbors(i);
        for (&j, &wij) in nb.iter().zip(w) {
            if partition.labels[j as usize] == ci {
                internal += wij;
            }
        }
    }
    let null: f64 = mass.iter().map(|d| (d / two_m) * (d / two_m)).sum();
    Ok(internal / two_m - lambda * null)
}

/// `GTV(u) = (1/ε) · 1/(n(n−1)) · Σ_{i≠j} W_ij |u_i − u_j|`.
pub fn gtv(graph: &GeometricGraph, u: &[f64]) -> Result<f64> {
    check_len(graph, u.len())?;
    let n = graph.n();
    if n < 2 {
        return Err(invalid("graph total variation needs at least two vertices"));
    }
    let mut acc = 0.0;
    for i in 0..n {
        let (nb, w) = graph.neighbors(i);
        for (&j, &wij) in nb.iter().zip(w) {
            acc += wij * (u[i] - u[j as usize]).abs();
        }
    }
    Ok(acc / (graph.eps() * n as f64 * (n - 1) as f64))
}

/// `GΛ(u) = (1/n) Σ_i (d_i/(n−1))^α u_i`; linear in `u`.
pub fn glambda(graph: &GeometricGraph, alpha: f64, u: &[f64]) -> Result<f64> {
    check_len(graph, u.len())?;
    let n = graph.n();
    if n < 2 {
        return Err(invalid("GΛ needs at least two vertices"));
    }
    let scale = (n - 1) as f64;
    let mut acc = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        let d = graph.degree(i);
        if alpha < 0.0 && d <= 0.0 {
            return Err(Error::DegenerateGraph { vertex: i });
        }
        acc += degree_power(d / scale, alpha) * ui;
    }
    Ok(acc / n as f64)
}

/// Evaluates both sides of the modularity identity. `Q` comes from
/// [`modularity`]; the right-hand side is assembled from GΛ and GTV.
pub fn decompose(
    graph: &GeometricGraph,
    partition: &DiscretePartition,
    alpha: f64,
    k: usize,
) -> Result<DecompositionReport> {
    check_len(graph, partition.len())?;
    if k == 0 || partition.labels.iter().any(|&c| c as usize >= k) {
        return Err(invalid("K must exceed every label"));
    }
    let n = graph.n();
    if n < 2 {
        return Err(invalid("decomposition needs at least two vertices"));
    }
    let q = modularity(graph, partition, alpha)?;
    let two_m = graph.total_weight();
    let s = graph.s_alpha(alpha)?;
    let nf = n as f64;
    let n1 = (n - 1) as f64;

    // GΛ(u_c) for every cluster in one pass, GΛ(1) as their sum's companion
    let mut glam = alloc::vec![0.0; k];
    let mut glam_one = 0.0;
    for i in 0..n {
        let v = degree_power(graph.degree(i) / n1, alpha) / nf;
        glam[partition.label(i)] += v;
        glam_one += v;
    }
    let kf = k as f64;
    let spread: f64 = glam.iter().map(|g| (g - glam_one / kf) * (g - glam_one / kf)).sum();
    let quad_term = nf * nf * degree_power(n1, 2.0 * alpha) / (s * s) * spread;

    // GTV(u_c) for every cluster: each cut pair contributes to both sides' clusters
    let mut cut = alloc::vec![0.0; k];
    for i in 0..n {
        let ci = partition.labels[i];
        let (nb, w) = graph.neighbors(i);
        for (&j, &wij) in nb.iter().zip(w) {
            let cj = partition.labels[j as usize];
            if cj != ci {
                cut[ci as usize] += wij;
                cut[cj as usize] += wij;
            }
        }
    }
    let eps = graph.eps();
    let gtv_sum: f64 = cut.iter().map(|c| c / (eps * nf * n1)).sum();
    let gtv_term = nf * n1 / (2.0 * two_m) * gtv_sum;

    let residual = (1.0 - 1.0 / kf - q) - (quad_term + eps * gtv_term);
    Ok(DecompositionReport { n, eps, alpha, k, q, quad_term, gtv_term, residual })
}

/// Discrete energy split `E_n = F_n + TV_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteEnergy {
    pub f_n: f64,
    pub tv_n: f64,
}

impl DiscreteEnergy {
    pub fn total(&self) -> f64 {
        self.f_n + self.tv_n
    }
}

/// `E_n = F_n + TV_n` with `F_n = quad_term/ε`, `TV_n = gtv_term`; then
/// `ε E_n + Q = 1 − 1/K`.
pub fn energy_en(
    graph: &GeometricGraph,
    partition: &DiscretePartition,
    alpha: f64,
    k: usize,
) -> Result<DiscreteEnergy> {
    let r = decompose(graph, partition, alpha, k)?;
    Ok(DiscreteEnergy { f_n: r.quad_term / r.eps, tv_n: r.gtv_term })
}
