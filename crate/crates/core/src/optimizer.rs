//! Modularity maximization with at most K clusters.
//!
//! Three methods share one objective, written as
//!
//! ```text
//! Q = Σ_c internal_c / 2m − γ Σ_c A_c² / S²,   A_c = Σ_{i∈c} a_i
//! ```
//!
//! with `a = d^α, S = Σ a, γ = 1` for α-modularity and `a = d, S = 2m, γ = λ`
//! for the resolution variant `Q^λ`. Moving vertex `i` (weight `x = a_i`)
//! from cluster `p` to `c` changes it by
//!
//! ```text
//! ΔQ = 2 (w_{i,c} − w_{i,p∖i}) / 2m − γ ((A_p − x)² + (A_c + x)² − A_p² − A_c²) / S²
//! ```
//!
//! and merging clusters `a, b` by `2 w_ab / 2m − 2γ A_a A_b / S²`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::functional::{modularity, modularity_lambda, DiscretePartition};
use crate::geograph::GeometricGraph;
use crate::rng::{derive_seed, open01, rng_from_seed, shuffle, Rng};

/// Largest graph [`exhaustive`] accepts.
pub const EXHAUSTIVE_MAX_N: usize = 14;

/// Gains at or below this are treated as zero, so ties keep the current label.
const MIN_GAIN: f64 = 1e-13;
const MAX_PASSES: usize = 1000;
/// Levels up to this many nodes also seed capped candidates in the greedy engine.
const CANDIDATE_LEVEL_MAX: usize = 500;

/// Eigen-solver tolerance on the relative Ritz residual.
pub const EIGEN_TOL: f64 = 1e-8;
/// Operator applications allowed per bisection.
pub const EIGEN_MAX_ITER: usize = 10_000;
const KRYLOV_DIM: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    Greedy,
    Spectral,
    Refine,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exhaustive => "exhaustive",
            Method::Greedy => "greedy",
            Method::Spectral => "spectral",
            Method::Refine => "refine",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "exhaustive" => Ok(Method::Exhaustive),
            "greedy" => Ok(Method::Greedy),
            "spectral" => Ok(Method::Spectral),
            "refine" => Ok(Method::Refine),
            other => Err(invalid(alloc::format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerResult {
    pub partition: DiscretePartition,
    /// Objective of `partition`, recomputed from scratch.
    pub q: f64,
    pub method: Method,
    /// Labelings enumerated, passes made, or operator applications, by method.
    pub iterations: u64,
    /// Accepted vertex moves and merges.
    pub moves: u64,
    pub seed: u64,
    /// Some eigen-solve stopped before reaching [`EIGEN_TOL`].
    pub degraded: bool,
}

struct Objective<'g> {
    graph: &'g GeometricGraph,
    a: Vec<f64>,
    s2: f64,
    gamma: f64,
    two_m: f64,
    lambda: Option<f64>,
    alpha: f64,
}

impl<'g> Objective<'g> {
    fn alpha(graph: &'g GeometricGraph, alpha: f64) -> Result<Self> {
        let two_m = graph.total_weight();
        if !(two_m > 0.0) {
            return Err(Error::EmptyGraph);
        }
        let a = graph.degree_powers(alpha)?;
        let s: f64 = a.iter().sum();
        Ok(Self { graph, a, s2: s * s, gamma: 1.0, two_m, lambda: None, alpha })
    }

    fn lambda(graph: &'g GeometricGraph, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda must be finite and nonnegative"));
        }
        let two_m = graph.total_weight();
        if !(two_m > 0.0) {
            return Err(Error::EmptyGraph);
        }
        let a = graph.degrees().to_vec();
        Ok(Self { graph, a, s2: two_m * two_m, gamma: lambda, two_m, lambda: Some(lambda), alpha: 1.0 })
    }

    fn n(&self) -> usize {
        self.graph.n()
    }

    /// The reported value, through the public functional.
    fn reported(&self, partition: &DiscretePartition) -> Result<f64> {
        match self.lambda {
            Some(l) => modularity_lambda(self.graph, partition, l),
            None => modularity(self.graph, partition, self.alpha),
        }
    }
}

/// A graph the local-move engine runs on: the input graph, or a coarse
/// graph whose nodes are clusters of the level below. Coarse nodes carry
/// their internal weight as a self loop.
struct Level<'g> {
    base: Option<&'g GeometricGraph>,
    offsets: Vec<usize>,
    nbr: Vec<u32>,
    w: Vec<f64>,
    self_w: Vec<f64>,
    a: Vec<f64>,
}

impl<'g> Level<'g> {
    fn base(obj: &Objective<'g>) -> Self {
        Self {
            base: Some(obj.graph),
            offsets: Vec::new(),
            nbr: Vec::new(),
            w: Vec::new(),
            self_w: alloc::vec![0.0; obj.n()],
            a: obj.a.clone(),
        }
    }

    fn n(&self) -> usize {
        self.a.len()
    }

    #[inline]
    fn neighbors(&self, i: usize) -> (&[u32], &[f64]) {
        match self.base {
            Some(g) => g.neighbors(i),
            None => {
                let r = self.offsets[i]..self.offsets[i + 1];
                (&self.nbr[r.clone()], &self.w[r])
            }
        }
    }

    /// Objective of a labeling, from scratch.
    fn value(&self, obj: &Objective<'_>, labels: &[u32], ids: usize) -> f64 {
        let mut internal = 0.0;
        let mut mass = alloc::vec![0.0; ids];
        for i in 0..self.n() {
            let c = labels[i];
            mass[c as usize] += self.a[i];
            internal += self.self_w[i];
            let (nb, w) = self.neighbors(i);
            for (&j, &wij) in nb.iter().zip(w) {
                if labels[j as usize] == c {
                    internal += wij;
                }
            }
        }
        internal / obj.two_m - obj.gamma * mass.iter().map(|m| m * m).sum::<f64>() / obj.s2
    }

    /// Collapses each cluster of a compacted labeling into one node.
    fn coarsen(&self, labels: &[u32], ids: usize) -> Level<'g> {
        let mut members: Vec<Vec<u32>> = alloc::vec![Vec::new(); ids];
        let mut a = alloc::vec![0.0; ids];
        let mut self_w = alloc::vec![0.0; ids];
        for (i, &c) in labels.iter().enumerate() {
            members[c as usize].push(i as u32);
            a[c as usize] += self.a[i];
            self_w[c as usize] += self.self_w[i];
        }
        let mut offsets = alloc::vec![0usize];
        let mut nbr = Vec::new();
        let mut w = Vec::new();
        let mut link = alloc::vec![0.0; ids];
        let mut touched: Vec<u32> = Vec::new();
        for c in 0..ids {
            for &i in &members[c] {
                let (nb, wi) = self.neighbors(i as usize);
                for (&j, &wij) in nb.iter().zip(wi) {
                    let cj = labels[j as usize];
                    if cj as usize == c {
                        self_w[c] += wij;
                    } else {
                        if link[cj as usize] == 0.0 {
                            touched.push(cj);
                        }
                        link[cj as usize] += wij;
                    }
                }
            }
            touched.sort_unstable();
            for &d in &touched {
                nbr.push(d);
                w.push(link[d as usize]);
                link[d as usize] = 0.0;
            }
            touched.clear();
            offsets.push(nbr.len());
        }
        Level { base: None, offsets, nbr, w, self_w, a }
    }
}

/// Labels plus per-cluster aggregates, with the objective tracked
/// incrementally.
struct State {
    labels: Vec<u32>,
    mass: Vec<f64>,
    size: Vec<u32>,
    alive: usize,
    q: f64,
    moves: u64,
}

impl State {
    fn new(obj: &Objective<'_>, level: &Level<'_>, labels: Vec<u32>, ids: usize) -> Self {
        let mut mass = alloc::vec![0.0; ids];
        let mut size = alloc::vec![0u32; ids];
        for (i, &c) in labels.iter().enumerate() {
            mass[c as usize] += level.a[i];
            size[c as usize] += 1;
        }
        let alive = size.iter().filter(|&&s| s > 0).count();
        let q = level.value(obj, &labels, ids);
        Self { labels, mass, size, alive, q, moves: 0 }
    }

    fn singletons(obj: &Objective<'_>, level: &Level<'_>) -> Self {
        let n = level.n();
        Self::new(obj, level, (0..n as u32).collect(), n)
    }

    /// Renumbers clusters `0..alive` in order of first appearance.
    fn compact(&mut self) {
        let mut map = alloc::vec![u32::MAX; self.mass.len()];
        let mut next = 0u32;
        for c in self.labels.iter_mut() {
            let slot = &mut map[*c as usize];
            if *slot == u32::MAX {
                *slot = next;
                next += 1;
            }
            *c = *slot;
        }
        let mut mass = alloc::vec![0.0; next as usize];
        let mut size = alloc::vec![0u32; next as usize];
        for (old, &new) in map.iter().enumerate() {
            if new != u32::MAX {
                mass[new as usize] = self.mass[old];
                size[new as usize] = self.size[old];
            }
        }
        self.mass = mass;
        self.size = size;
        self.alive = next as usize;
    }

    /// Grows the id space to `cap` so empty clusters can receive vertices.
    fn reserve(&mut self, cap: usize) {
        if self.mass.len() < cap {
            self.mass.resize(cap, 0.0);
            self.size.resize(cap, 0);
        }
    }

    fn check(&self, obj: &Objective<'_>, level: &Level<'_>) {
        if cfg!(debug_assertions) {
            let fresh = level.value(obj, &self.labels, self.mass.len());
            debug_assert!((fresh - self.q).abs() <= 1e-9, "tracked Q {} drifted from {}", self.q, fresh);
        }
    }
}

/// Single-node relabeling passes in a seeded order until a pass makes no
/// move. Only existing ids are used; when the id space is at most `cap`
/// every id is a candidate, so moves into empty clusters are possible.
/// With `cap = 0` only clusters of neighbours are considered.
/// Returns the number of passes.
fn local_moves(obj: &Objective<'_>, level: &Level<'_>, st: &mut State, cap: usize, rng: &mut Rng) -> u64 {
    let n = level.n();
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut link = alloc::vec![0.0; st.mass.len()];
    let mut touched: Vec<u32> = Vec::new();
    let mut passes = 0;
    loop {
        passes += 1;
        shuffle(rng, &mut order);
        let scan_all = st.mass.len() <= cap;
        let mut moved = false;
        for &i in &order {
            let i = i as usize;
            let p = st.labels[i] as usize;
            let x = level.a[i];
            let (nb, w) = level.neighbors(i);
            for (&j, &wij) in nb.iter().zip(w) {
                let c = st.labels[j as usize];
                if link[c as usize] == 0.0 {
                    touched.push(c);
                }
                link[c as usize] += wij;
            }
            let gain = |c: usize, w_ic: f64| {
                2.0 * (w_ic - link[p]) / obj.two_m
                    - obj.gamma * 2.0 * x * (st.mass[c] - st.mass[p] + x) / obj.s2
            };
            let mut best = (MIN_GAIN, p);
            if scan_all {
                let mut offered_empty = false;
                for c in 0..st.mass.len() {
                    if c == p {
                        continue;
                    }
                    if st.size[c] == 0 {
                        // one empty cluster is as good as another
                        if offered_empty || st.alive >= cap || st.size[p] == 1 {
                            continue;
                        }
                        offered_empty = true;
                    }
                    let g = gain(c, link[c]);
                    if g > best.0 {
                        best = (g, c);
                    }
                }
            } else {
                for &c in &touched {
                    let c = c as usize;
                    if c != p {
                        let g = gain(c, link[c]);
                        if g > best.0 {
                            best = (g, c);
                        }
                    }
                }
            }
            for &c in &touched {
                link[c as usize] = 0.0;
            }
            touched.clear();
            let (g, c) = best;
            if c != p {
                st.labels[i] = c as u32;
                st.mass[p] -= x;
                st.mass[c] += x;
                st.size[p] -= 1;
                if st.size[p] == 0 {
                    st.alive -= 1;
                }
                if st.size[c] == 0 {
                    st.alive += 1;
                }
                st.size[c] += 1;
                st.q += g;
                st.moves += 1;
                moved = true;
                if st.moves % 100 == 0 {
                    st.check(obj, level);
                }
            }
        }
        if !moved || passes as usize >= MAX_PASSES {
            return passes;
        }
    }
}

/// Agglomerates clusters: merges are forced while more than `cap` clusters
/// are alive, then continue only while some merge has positive gain.
/// Returns the number of merges.
fn merge_phase(obj: &Objective<'_>, level: &Level<'_>, st: &mut State, cap: usize) -> u64 {
    st.compact();
    let ids = st.mass.len();
    let mut adj: Vec<BTreeMap<u32, f64>> = alloc::vec![BTreeMap::new(); ids];
    for i in 0..level.n() {
        let (nb, w) = level.neighbors(i);
        let a = st.labels[i];
        for (&j, &wij) in nb.iter().zip(w) {
            let b = st.labels[j as usize];
            if a != b {
                *adj[a as usize].entry(b).or_insert(0.0) += wij;
            }
        }
    }
    let mut alive = alloc::vec![true; ids];
    let mut parent: Vec<u32> = (0..ids as u32).collect();
    let mut count = ids;
    let mut merges = 0;
    let merge_gain = |w_ab: f64, ma: f64, mb: f64| 2.0 * w_ab / obj.two_m - obj.gamma * 2.0 * ma * mb / obj.s2;
    loop {
        if count <= 1 {
            break;
        }
        let mut best: Option<(f64, u32, u32)> = None;
        let better = |cand: (f64, u32, u32), cur: Option<(f64, u32, u32)>| match cur {
            None => true,
            Some(c) => cand.0 > c.0 || (cand.0 == c.0 && (cand.1, cand.2) < (c.1, c.2)),
        };
        for a in 0..ids {
            if !alive[a] {
                continue;
            }
            for (&b, &w) in adj[a].range(a as u32 + 1..) {
                let cand = (merge_gain(w, st.mass[a], st.mass[b as usize]), a as u32, b);
                if better(cand, best) {
                    best = Some(cand);
                }
            }
        }
        // the best merge between non-adjacent clusters joins the two lightest
        let mut light = [(f64::INFINITY, u32::MAX); 2];
        for c in 0..ids {
            if alive[c] {
                let m = st.mass[c];
                if m < light[0].0 {
                    light[1] = light[0];
                    light[0] = (m, c as u32);
                } else if m < light[1].0 {
                    light[1] = (m, c as u32);
                }
            }
        }
        let (a, b) = (light[0].1.min(light[1].1), light[0].1.max(light[1].1));
        let w = adj[a as usize].get(&b).copied().unwrap_or(0.0);
        let cand = (merge_gain(w, st.mass[a as usize], st.mass[b as usize]), a, b);
        if better(cand, best) {
            best = Some(cand);
        }
        let Some((g, a, b)) = best else { break };
        if count <= cap && g <= MIN_GAIN {
            break;
        }
        // fold b into a
        let folded = core::mem::take(&mut adj[b as usize]);
        for (c, w) in folded {
            adj[c as usize].remove(&b);
            if c != a {
                *adj[a as usize].entry(c).or_insert(0.0) += w;
                *adj[c as usize].entry(a).or_insert(0.0) += w;
            }
        }
        adj[a as usize].remove(&b);
        st.mass[a as usize] += st.mass[b as usize];
        st.mass[b as usize] = 0.0;
        st.size[a as usize] += st.size[b as usize];
        st.size[b as usize] = 0;
        alive[b as usize] = false;
        parent[b as usize] = a;
        st.q += g;
        count -= 1;
        merges += 1;
    }
    if merges > 0 {
        for c in st.labels.iter_mut() {
            let mut r = *c;
            while parent[r as usize] != r {
                r = parent[r as usize];
            }
            *c = r;
        }
        st.alive = count;
        st.moves += merges;
        st.check(obj, level);
    }
    st.compact();
    merges
}

/// Kernighan–Lin style sweep: every node is moved exactly once, each time
/// taking the best available move even when it lowers Q, and the sweep is
/// then rolled back to its best intermediate state. Returns whether Q rose.
/// Each step scans all unmoved nodes, so a sweep costs `O(n² k)`.
fn fine_tune(obj: &Objective<'_>, level: &Level<'_>, st: &mut State, k: usize) -> bool {
    st.reserve(k);
    let n = level.n();
    let ids = st.mass.len();
    let mut link = alloc::vec![0.0; n * ids];
    for i in 0..n {
        let (nb, w) = level.neighbors(i);
        for (&j, &wij) in nb.iter().zip(w) {
            link[i * ids + st.labels[j as usize] as usize] += wij;
        }
    }
    let mut moved = alloc::vec![false; n];
    let mut history: Vec<(u32, u32, u32)> = Vec::new();
    let start_q = st.q;
    let mut best = (start_q, 0usize);
    for _ in 0..n {
        let mut pick: Option<(f64, usize, usize)> = None;
        let empty = (0..ids).find(|&c| st.size[c] == 0);
        for i in 0..n {
            if moved[i] {
                continue;
            }
            let p = st.labels[i] as usize;
            let x = level.a[i];
            let row = &link[i * ids..(i + 1) * ids];
            for c in 0..ids {
                if c == p {
                    continue;
                }
                if st.size[c] == 0 && (Some(c) != empty || st.alive >= k || st.size[p] == 1) {
                    continue;
                }
                let g = 2.0 * (row[c] - row[p]) / obj.two_m - obj.gamma * 2.0 * x * (st.mass[c] - st.mass[p] + x) / obj.s2;
                if pick.map_or(true, |(bg, _, _)| g > bg) {
                    pick = Some((g, i, c));
                }
            }
        }
        let Some((g, i, c)) = pick else { break };
        let p = st.labels[i] as usize;
        apply_move(level, st, &mut link, ids, i, p, c);
        st.q += g;
        moved[i] = true;
        history.push((i as u32, p as u32, c as u32));
        if st.q > best.0 + MIN_GAIN {
            best = (st.q, history.len());
        }
    }
    while history.len() > best.1 {
        let (i, p, c) = history.pop().expect("non-empty history");
        apply_move(level, st, &mut link, ids, i as usize, c as usize, p as usize);
    }
    st.q = if best.1 > 0 { best.0 } else { start_q };
    if best.1 > 0 {
        st.moves += best.1 as u64;
        st.check(obj, level);
    }
    best.1 > 0
}

fn apply_move(level: &Level<'_>, st: &mut State, link: &mut [f64], ids: usize, i: usize, from: usize, to: usize) {
    let x = level.a[i];
    st.labels[i] = to as u32;
    st.mass[from] -= x;
    st.mass[to] += x;
    st.size[from] -= 1;
    if st.size[from] == 0 {
        st.alive -= 1;
    }
    if st.size[to] == 0 {
        st.alive += 1;
    }
    st.size[to] += 1;
    let (nb, w) = level.neighbors(i);
    for (&j, &wij) in nb.iter().zip(w) {
        link[j as usize * ids + from] -= wij;
        link[j as usize * ids + to] += wij;
    }
}

/// Work allowed for one fine-tuning sweep, in node-cluster gain evaluations.
const FINE_TUNE_BUDGET: usize = 10_000_000;
const FINE_TUNE_SWEEPS: usize = 5;
/// Polishing rounds that may still call the fine-tuner.
const FINE_TUNE_ROUNDS: usize = 3;

/// Repeated fine-tuning sweeps while they improve Q and fit the budget.
fn fine_tune_all(obj: &Objective<'_>, level: &Level<'_>, st: &mut State, k: usize) -> u64 {
    let n = level.n();
    if n.saturating_mul(n).saturating_mul(k.max(2)) > FINE_TUNE_BUDGET {
        return 0;
    }
    let mut sweeps = 0;
    while sweeps < FINE_TUNE_SWEEPS as u64 {
        sweeps += 1;
        if !fine_tune(obj, level, st, k) {
            break;
        }
    }
    sweeps
}

/// Local moves, profitable merges and fine-tuning under the cap until none
/// changes anything. Returns the number of passes.
fn polish(obj: &Objective<'_>, level: &Level<'_>, st: &mut State, k: usize, rng: &mut Rng) -> u64 {
    let mut passes = 0;
    st.reserve(k);
    for round in 0..MAX_PASSES {
        let before = st.moves;
        passes += local_moves(obj, level, st, k, rng);
        merge_phase(obj, level, st, k);
        if round < FINE_TUNE_ROUNDS {
            passes += fine_tune_all(obj, level, st, k);
        }
        st.reserve(k);
        if st.moves == before {
            break;
        }
    }
    passes
}

fn finish(obj: &Objective<'_>, st: State, k: usize, method: Method, iterations: u64, seed: u64, degraded: bool) -> Result<OptimizerResult> {
    let mut st = st;
    st.compact();
    let mut partition = DiscretePartition::new(st.labels, k)?;
    let mut q = obj.reported(&partition)?;
    // the single cluster is always feasible
    let single = DiscretePartition::single(obj.n()).with_cap(k)?;
    let q_single = obj.reported(&single)?;
    if q_single > q {
        partition = single;
        q = q_single;
    }
    Ok(OptimizerResult { partition, q, method, iterations, moves: st.moves, seed, degraded })
}

fn check_cap(k: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid("cluster cap K must be at least 1"));
    }
    Ok(())
}

/// Multilevel agglomeration: uncapped local moves and coarsening until a
/// level makes no move, agglomeration down to `k` clusters on the coarsest
/// level, then capped local moves on every level back down to the vertices.
fn greedy_engine(obj: &Objective<'_>, k: usize, seed: u64) -> Result<OptimizerResult> {
    check_cap(k)?;
    let mut rng = rng_from_seed(seed);
    let mut levels = alloc::vec![Level::base(obj)];
    let mut maps: Vec<Vec<u32>> = Vec::new();
    let mut passes = 0;
    let mut moves = 0;
    loop {
        let level = levels.last().expect("at least the base level");
        if level.n() <= 1 {
            break;
        }
        let mut st = State::singletons(obj, level);
        passes += local_moves(obj, level, &mut st, 0, &mut rng);
        if st.moves == 0 {
            break;
        }
        moves += st.moves;
        st.compact();
        let next = level.coarsen(&st.labels, st.alive);
        maps.push(st.labels);
        levels.push(next);
    }
    // Capped candidates (agglomeration and spectral bisection) are formed on
    // the coarsest level and on every level small enough for agglomeration,
    // then carried down to the vertices; the best final Q wins.
    let mut best: Option<State> = None;
    for start in (0..levels.len()).rev() {
        if start + 1 != levels.len() && levels[start].n() > CANDIDATE_LEVEL_MAX {
            continue;
        }
        let lvl = &levels[start];
        let mut merged = State::singletons(obj, lvl);
        merge_phase(obj, lvl, &mut merged, k);
        merged.reserve(k);
        passes += local_moves(obj, lvl, &mut merged, k, &mut rng);
        let (mut split, _, _) = spectral_on(obj, lvl, k, &mut rng);
        passes += local_moves(obj, lvl, &mut split, k, &mut rng);
        for cand in [merged, split] {
            moves += cand.moves;
            let mut labels = cand.labels;
            for l in (0..start).rev() {
                let projected: Vec<u32> = maps[l].iter().map(|&c| labels[c as usize]).collect();
                let mut st = State::new(obj, &levels[l], projected, k);
                passes += local_moves(obj, &levels[l], &mut st, k, &mut rng);
                moves += st.moves;
                labels = st.labels;
            }
            let mut st = State::new(obj, &levels[0], labels, k);
            passes += polish(obj, &levels[0], &mut st, k, &mut rng);
            moves += st.moves;
            if best.as_ref().map_or(true, |b| st.q > b.q + MIN_GAIN) {
                best = Some(st);
            }
        }
    }
    let mut st = best.expect("the coarsest level always yields candidates");
    st.moves = moves;
    finish(obj, st, k, Method::Greedy, passes, seed, false)
}

/// Greedy modularity maximization with at most `k` clusters: multilevel
/// Louvain-style agglomeration capped at the coarsest level and refined on
/// the way back down. The node visit order is drawn from `seed`.
pub fn greedy_capped(graph: &GeometricGraph, alpha: f64, k: usize, seed: u64) -> Result<OptimizerResult> {
    greedy_engine(&Objective::alpha(graph, alpha)?, k, seed)
}

/// [`greedy_capped`] on the resolution variant `Q^λ`.
pub fn greedy_lambda(graph: &GeometricGraph, lambda: f64, k: usize, seed: u64) -> Result<OptimizerResult> {
    greedy_engine(&Objective::lambda(graph, lambda)?, k, seed)
}

/// Local moves and profitable merges starting from `start`, keeping its cap.
pub fn refine(graph: &GeometricGraph, alpha: f64, start: &DiscretePartition, seed: u64) -> Result<OptimizerResult> {
    let obj = Objective::alpha(graph, alpha)?;
    if start.len() != graph.n() {
        return Err(Error::DimensionMismatch { expected: graph.n(), found: start.len() });
    }
    let k = start.k();
    let mut rng = rng_from_seed(seed);
    let level = Level::base(&obj);
    let mut st = State::new(&obj, &level, start.labels().to_vec(), k);
    let passes = polish(&obj, &level, &mut st, k, &mut rng);
    finish(&obj, st, k, Method::Refine, passes, seed, false)
}

/// Best of several runs: spectral bisection followed by [`refine`], and
/// [`greedy_capped`] with `restarts` seeds derived from `seed`. The
/// highest Q wins, the earliest candidate on ties; the result carries the
/// winner's method and the totals over all runs.
pub fn multistart(graph: &GeometricGraph, alpha: f64, k: usize, seed: u64, restarts: usize) -> Result<OptimizerResult> {
    check_cap(k)?;
    let spectral = spectral_bisection(graph, alpha, k, seed)?;
    let mut best = refine(graph, alpha, &spectral.partition, seed)?;
    best.method = Method::Spectral;
    best.degraded = spectral.degraded;
    let mut iterations = spectral.iterations + best.iterations;
    let mut moves = spectral.moves + best.moves;
    for r in 0..restarts {
        let run = greedy_capped(graph, alpha, k, derive_seed(seed, r as u64))?;
        iterations += run.iterations;
        moves += run.moves;
        if run.q > best.q {
            best = run;
        }
    }
    best.iterations = iterations;
    best.moves = moves;
    best.seed = seed;
    Ok(best)
}

/// True maximizer by enumerating restricted-growth strings with labels
/// below `k`. Ties keep the first labeling found.
pub fn exhaustive(graph: &GeometricGraph, alpha: f64, k: usize) -> Result<OptimizerResult> {
    check_cap(k)?;
    let n = graph.n();
    if n > EXHAUSTIVE_MAX_N {
        return Err(Error::TooLarge { n, cap: EXHAUSTIVE_MAX_N });
    }
    let obj = Objective::alpha(graph, alpha)?;
    let mut dense = alloc::vec![0.0; n * n];
    for (i, j, w) in graph.upper_edges() {
        dense[i * n + j] = w;
        dense[j * n + i] = w;
    }
    let mut search = Exhaustive {
        n,
        k,
        dense,
        obj: &obj,
        labels: alloc::vec![0; n],
        mass: alloc::vec![0.0; k],
        best: (f64::NEG_INFINITY, Vec::new()),
        visited: 0,
    };
    search.descend(0, 0, 0.0);
    let (_, labels) = core::mem::take(&mut search.best);
    let visited = search.visited;
    let partition = DiscretePartition::new(labels, k)?;
    let q = obj.reported(&partition)?;
    Ok(OptimizerResult { partition, q, method: Method::Exhaustive, iterations: visited, moves: 0, seed: 0, degraded: false })
}

struct Exhaustive<'a, 'g> {
    n: usize,
    k: usize,
    dense: Vec<f64>,
    obj: &'a Objective<'g>,
    labels: Vec<u32>,
    mass: Vec<f64>,
    best: (f64, Vec<u32>),
    visited: u64,
}

impl Exhaustive<'_, '_> {
    /// `used` clusters are open among vertices `0..i`; `internal` is Σ W_ij δ over them.
    fn descend(&mut self, i: usize, used: usize, internal: f64) {
        if i == self.n {
            self.visited += 1;
            let null: f64 = self.mass.iter().map(|m| m * m).sum();
            let q = internal / self.obj.two_m - null / self.obj.s2;
            if q > self.best.0 {
                self.best = (q, self.labels.clone());
            }
            return;
        }
        let top = if used < self.k { used + 1 } else { used };
        for c in 0..top.max(1) {
            let row = &self.dense[i * self.n..i * self.n + i];
            let add: f64 = row.iter().zip(&self.labels[..i]).filter(|(_, &l)| l as usize == c).map(|(w, _)| w).sum();
            self.labels[i] = c as u32;
            self.mass[c] += self.obj.a[i];
            self.descend(i + 1, used.max(c + 1), internal + 2.0 * add);
            self.mass[c] -= self.obj.a[i];
        }
    }
}

/// Recursive bisection by the sign of the leading eigenvector of the
/// generalized modularity operator on each cluster, each split followed by
/// local-move refinement. At most `2k` eigen-solves are made.
pub fn spectral_bisection(graph: &GeometricGraph, alpha: f64, k: usize, seed: u64) -> Result<OptimizerResult> {
    check_cap(k)?;
    let obj = Objective::alpha(graph, alpha)?;
    let mut rng = rng_from_seed(seed);
    let level = Level::base(&obj);
    let (st, matvecs, degraded) = spectral_on(&obj, &level, k, &mut rng);
    finish(&obj, st, k, Method::Spectral, matvecs, seed, degraded)
}

/// Returns the state, the operator applications spent, and whether some
/// eigen-solve missed the tolerance.
fn spectral_on(obj: &Objective<'_>, level: &Level<'_>, k: usize, rng: &mut Rng) -> (State, u64, bool) {
    let n = level.n();
    let mut st = State::new(obj, level, alloc::vec![0; n], k);
    let mut solves = 0usize;
    let mut matvecs = 0u64;
    let mut degraded = false;
    let mut indivisible = alloc::vec![false; k];
    while st.alive < k && solves < 2 * k {
        let mut best: Option<(f64, usize, Vec<bool>)> = None;
        for c in 0..k {
            if st.size[c] < 2 || indivisible[c] || solves >= 2 * k {
                continue;
            }
            solves += 1;
            let members: Vec<u32> = (0..n as u32).filter(|&i| st.labels[i as usize] == c as u32).collect();
            let split = split_cluster(obj, level, &members, rng);
            matvecs += split.matvecs;
            degraded |= !split.converged;
            match split.side {
                Some((gain, side)) if gain > MIN_GAIN => {
                    if best.as_ref().map_or(true, |b| gain > b.0) {
                        let mut mask = alloc::vec![false; n];
                        for (&v, &s) in members.iter().zip(&side) {
                            mask[v as usize] = s;
                        }
                        best = Some((gain, c, mask));
                    }
                }
                _ => indivisible[c] = true,
            }
        }
        let Some((gain, c, mask)) = best else { break };
        let fresh = (0..k).find(|&e| st.size[e] == 0).expect("fewer than k clusters alive");
        for i in 0..n {
            if mask[i] {
                st.labels[i] = fresh as u32;
                st.mass[c] -= level.a[i];
                st.mass[fresh] += level.a[i];
                st.size[c] -= 1;
                st.size[fresh] += 1;
            }
        }
        st.alive += 1;
        st.q += gain;
        st.moves += 1;
        st.check(obj, level);
        local_moves(obj, level, &mut st, k, rng);
        fine_tune_all(obj, level, &mut st, k);
        indivisible.iter_mut().for_each(|f| *f = false);
        for c in 0..k {
            if st.size[c] < 2 {
                indivisible[c] = true;
            }
        }
    }
    (st, matvecs, degraded)
}

struct Split {
    /// Gain and side (true = moves to the new cluster) per member.
    side: Option<(f64, Vec<bool>)>,
    converged: bool,
    matvecs: u64,
}

/// The generalized modularity operator of a cluster `g`, scaled by 2m:
/// `B_g v = W_g v − c a (a·v) − diag(r) v` with `c = 2m/S²` and
/// `r_i = Σ_{j∈g} W_ij − c a_i A_g`, so that `B_g 1 = 0`.
struct ClusterOperator<'a, 'g> {
    level: &'a Level<'g>,
    members: &'a [u32],
    local: Vec<u32>,
    a: Vec<f64>,
    r: Vec<f64>,
    c: f64,
    /// Gershgorin bound on the spectrum.
    bound: f64,
}

impl<'a, 'g> ClusterOperator<'a, 'g> {
    fn new(obj: &Objective<'_>, level: &'a Level<'g>, members: &'a [u32]) -> Self {
        let mut local = alloc::vec![u32::MAX; level.n()];
        for (l, &v) in members.iter().enumerate() {
            local[v as usize] = l as u32;
        }
        let c = obj.gamma * obj.two_m / obj.s2;
        let a: Vec<f64> = members.iter().map(|&v| level.a[v as usize]).collect();
        let a_g: f64 = a.iter().sum();
        let mut r = Vec::with_capacity(members.len());
        let mut bound = 0.0f64;
        for (l, &v) in members.iter().enumerate() {
            let (nb, w) = level.neighbors(v as usize);
            let w_in: f64 = level.self_w[v as usize]
                + nb.iter().zip(w).filter(|(&j, _)| local[j as usize] != u32::MAX).map(|(_, &w)| w).sum::<f64>();
            let ri = w_in - c * a[l] * a_g;
            r.push(ri);
            bound = bound.max(w_in + c * a[l] * a_g + ri.abs());
        }
        Self { level, members, local, a, r, c, bound }
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let av: f64 = self.a.iter().zip(v).map(|(a, v)| a * v).sum();
        for (l, &g) in self.members.iter().enumerate() {
            let (nb, w) = self.level.neighbors(g as usize);
            let mut acc = self.level.self_w[g as usize] * v[l];
            for (&j, &wij) in nb.iter().zip(w) {
                let lj = self.local[j as usize];
                if lj != u32::MAX {
                    acc += wij * v[lj as usize];
                }
            }
            out[l] = acc - self.c * self.a[l] * av - self.r[l] * v[l];
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = libm::sqrt(dot(v, v));
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn split_cluster(obj: &Objective<'_>, level: &Level<'_>, members: &[u32], rng: &mut Rng) -> Split {
    let ng = members.len();
    let op = ClusterOperator::new(obj, level, members);
    let eig = leading_eigenvector(&op, rng);
    let Some((theta, vec)) = eig.pair else {
        return Split { side: None, converged: eig.converged, matvecs: eig.matvecs };
    };
    if !(theta > MIN_GAIN * op.bound.max(1.0)) {
        return Split { side: None, converged: eig.converged, matvecs: eig.matvecs };
    }
    let side: Vec<bool> = vec.iter().map(|&x| x < 0.0).collect();
    let moved = side.iter().filter(|&&s| s).count();
    if moved == 0 || moved == ng {
        return Split { side: None, converged: eig.converged, matvecs: eig.matvecs };
    }
    // ΔQ = −2 (w(g1, g2) − γ A_1 A_2 2m/S²) / 2m
    let mut cross = 0.0;
    let mut a1 = 0.0;
    let mut a2 = 0.0;
    for (l, &v) in members.iter().enumerate() {
        if side[l] {
            a1 += op.a[l];
        } else {
            a2 += op.a[l];
            continue;
        }
        let (nb, w) = level.neighbors(v as usize);
        for (&j, &wij) in nb.iter().zip(w) {
            let lj = op.local[j as usize];
            if lj != u32::MAX && !side[lj as usize] {
                cross += wij;
            }
        }
    }
    let gain = -2.0 * (cross / obj.two_m - obj.gamma * a1 * a2 / obj.s2);
    Split { side: Some((gain, side)), converged: eig.converged, matvecs: eig.matvecs }
}

struct Eigen {
    pair: Option<(f64, Vec<f64>)>,
    converged: bool,
    matvecs: u64,
}

/// Largest eigenpair of the operator on the complement of the constants,
/// by restarted Lanczos with full reorthogonalization.
fn leading_eigenvector(op: &ClusterOperator<'_, '_>, rng: &mut Rng) -> Eigen {
    let ng = op.members.len();
    let dim = ng - 1;
    if dim == 0 {
        return Eigen { pair: None, converged: true, matvecs: 0 };
    }
    let scale = op.bound.max(f64::MIN_POSITIVE);
    let mut start: Vec<f64> = (0..ng).map(|_| open01(rng) - 0.5).collect();
    let mut matvecs = 0u64;
    let mut last: Option<(f64, Vec<f64>)> = None;
    let mut w = alloc::vec![0.0; ng];
    while (matvecs as usize) < EIGEN_MAX_ITER {
        remove_mean(&mut start);
        if normalize(&mut start) == 0.0 {
            return Eigen { pair: None, converged: true, matvecs };
        }
        let m_max = KRYLOV_DIM.min(dim).min(EIGEN_MAX_ITER - matvecs as usize).max(1);
        let mut basis: Vec<Vec<f64>> = alloc::vec![start.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        loop {
            let j = alphas.len();
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            let a = dot(&basis[j], &w);
            alphas.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let h = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(x, qi)| *x -= h * qi);
                }
                remove_mean(&mut w);
            }
            let b = libm::sqrt(dot(&w, &w));
            let steps = alphas.len();
            let breakdown = b <= 1e-12 * scale;
            let at_end = steps >= m_max || breakdown || matvecs as usize >= EIGEN_MAX_ITER;
            if at_end || steps % 10 == 0 {
                let (theta, y) = tridiagonal_top(&alphas, &betas);
                let residual = if breakdown { 0.0 } else { b * y[steps - 1].abs() };
                let mut x = alloc::vec![0.0; ng];
                if residual <= EIGEN_TOL * scale || at_end {
                    for (q, &yk) in basis.iter().zip(&y) {
                        x.iter_mut().zip(q).for_each(|(xi, qi)| *xi += yk * qi);
                    }
                    remove_mean(&mut x);
                    normalize(&mut x);
                }
                if residual <= EIGEN_TOL * scale {
                    return Eigen { pair: Some((theta, x)), converged: true, matvecs };
                }
                if at_end {
                    start = x.clone();
                    last = Some((theta, x));
                    break;
                }
            }
            betas.push(b);
            let mut next = w.clone();
            next.iter_mut().for_each(|x| *x /= b);
            basis.push(next);
        }
    }
    Eigen { pair: last, converged: false, matvecs }
}

/// Largest eigenvalue (Sturm bisection) and unit eigenvector (inverse
/// iteration) of the symmetric tridiagonal matrix with diagonal `a` and
/// off-diagonal `b`.
fn tridiagonal_top(a: &[f64], b: &[f64]) -> (f64, Vec<f64>) {
    let m = a.len();
    let off = |i: usize| if i < b.len() { b[i] } else { 0.0 };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = (if i > 0 { off(i - 1).abs() } else { 0.0 }) + if i + 1 < m { off(i).abs() } else { 0.0 };
        lo = lo.min(a[i] - r);
        hi = hi.max(a[i] + r);
    }
    let span = (hi - lo).abs().max(f64::MIN_POSITIVE);
    let tiny = span * 1e-300_f64.max(f64::EPSILON * 1e-3);
    // number of eigenvalues below x
    let below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..m {
            let bb = if i > 0 { off(i - 1) * off(i - 1) } else { 0.0 };
            d = a[i] - x - if i > 0 { bb / d } else { 0.0 };
            if d == 0.0 {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let (mut l, mut h) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (l + h);
        if mid <= l || mid >= h {
            break;
        }
        if below(mid) >= m {
            h = mid;
        } else {
            l = mid;
        }
    }
    let theta = 0.5 * (l + h);
    // inverse iteration on T − (θ + δ) I via the Thomas algorithm
    let shift = theta + span * 1e-10;
    let mut y = alloc::vec![1.0; m];
    let mut c = alloc::vec![0.0; m];
    let mut d = alloc::vec![0.0; m];
    for _ in 0..3 {
        for i in 0..m {
            let sub = if i > 0 { off(i - 1) } else { 0.0 };
            let mut piv = a[i] - shift - if i > 0 { sub * c[i - 1] } else { 0.0 };
            if piv.abs() < tiny {
                piv = -tiny;
            }
            c[i] = if i + 1 < m { off(i) / piv } else { 0.0 };
            d[i] = (y[i] - if i > 0 { sub * d[i - 1] } else { 0.0 }) / piv;
        }
        for i in (0..m).rev() {
            y[i] = d[i] - if i + 1 < m { c[i] * y[i + 1] } else { 0.0 };
        }
        normalize(&mut y);
    }
    (theta, y)
}
