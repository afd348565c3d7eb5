//! Time-varying communication graphs and their mixing matrices.
//!
//! A [`MixingSchedule`] maps a step index `k` to a graph `G_k` and its
//! Metropolis mixing matrix `W(k)`. Gossip contracts disagreement only over
//! windows of `B` consecutive steps, measured by
//! `δ(k) = σ_max(W_B(k) − 11ᵀ/n)` with `W_B(k) = W(k) W(k−1) ⋯ W(k−B+1)`.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Residual allowed on row/column sums when checking a schedule.
pub const STOCHASTIC_TOL: f64 = 1e-10;

/// Random draws per epoch before the epoch graph is patched with a ring.
const MAX_DRAWS: usize = 10_000;

/// Undirected simple graph on agents `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Graph("graph needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::Graph(format!("self-loop on node {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::Graph(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Graph { n, edges: set })
    }

    pub fn empty(n: usize) -> Self {
        assert!(n > 0, "graph needs at least one node");
        Graph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                g.edges.insert((i, j));
            }
        }
        g
    }

    pub fn path(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for i in 1..n {
            g.edges.insert((i - 1, i));
        }
        g
    }

    pub fn ring(n: usize) -> Self {
        let mut g = Graph::path(n);
        if n > 2 {
            g.edges.insert((0, n - 1));
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(i, j)` pairs with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn union(&self, other: &Graph) -> Graph {
        assert_eq!(self.n, other.n, "union of graphs on different node sets");
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().copied());
        Graph { n: self.n, edges }
    }

    pub fn is_connected(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = self.n;
        for &(i, j) in &self.edges {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components == 1
    }

    fn gilbert(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
        let mut g = Graph::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    g.edges.insert((i, j));
                }
            }
        }
        g
    }
}

fn union_all<'a>(graphs: impl IntoIterator<Item = &'a Graph>) -> Option<Graph> {
    graphs
        .into_iter()
        .fold(None, |acc: Option<Graph>, g| match acc {
            None => Some(g.clone()),
            Some(u) => Some(u.union(g)),
        })
}

/// Doubly stochastic matrix supported on a graph's edges plus the diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingMatrix(DMatrix<f64>);

impl MixingMatrix {
    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }
}

impl AsRef<DMatrix<f64>> for MixingMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Largest deviation of any row or column sum from 1.
pub fn stochasticity_residual(w: &DMatrix<f64>) -> f64 {
    let rows = w.row_iter().map(|r| (r.sum() - 1.0).abs());
    let cols = w.column_iter().map(|c| (c.sum() - 1.0).abs());
    rows.chain(cols).fold(0.0, f64::max)
}

/// Metropolis weights: `W_ij = 1 / (1 + max(deg_i, deg_j))` on edges, the
/// diagonal takes up the remaining mass.
pub fn metropolis_weights(g: &Graph) -> MixingMatrix {
    let n = g.n();
    let deg = g.degrees();
    let mut w = DMatrix::zeros(n, n);
    for (i, j) in g.edges() {
        let wij = 1.0 / (1 + deg[i].max(deg[j])) as f64;
        w[(i, j)] = wij;
        w[(j, i)] = wij;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    MixingMatrix(w)
}

/// How a schedule produces its graph sequence.
#[derive(Clone, Debug)]
pub enum ScheduleKind {
    /// The same graph at every step.
    Fixed(Graph),
    /// Cycle through the list, one graph per step.
    Alternating(Vec<Graph>),
    /// Redraw a `G(n, p)` graph every `period` steps from the seeded stream.
    RandomGilbert { p: f64, period: usize },
}

struct RandomCache {
    rng: ChaCha8Rng,
    graphs: Vec<Graph>,
    matrices: Vec<Arc<MixingMatrix>>,
}

#[allow(clippy::large_enum_variant)]
enum Source {
    Cyclic {
        graphs: Vec<Graph>,
        matrices: Vec<Arc<MixingMatrix>>,
    },
    Random {
        p: f64,
        period: usize,
        /// Consecutive epochs whose union must be connected.
        span: usize,
        cache: RwLock<RandomCache>,
    },
}

/// Deterministic generator of `(G_k, W(k))` for `k ≥ 0`.
///
/// Random schedules are materialized lazily epoch by epoch; the generated
/// sequence depends only on `(seed, p, period, window)`, never on access order.
pub struct MixingSchedule {
    n: usize,
    window: usize,
    seed: u64,
    source: Source,
}

impl fmt::Debug for MixingSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.source {
            Source::Cyclic { graphs, .. } if graphs.len() == 1 => "fixed".to_string(),
            Source::Cyclic { graphs, .. } => format!("alternating({})", graphs.len()),
            Source::Random { p, period, .. } => format!("random-gilbert(p={p}, period={period})"),
        };
        f.debug_struct("MixingSchedule")
            .field("n", &self.n)
            .field("window", &self.window)
            .field("seed", &self.seed)
            .field("kind", &kind)
            .finish()
    }
}

/// Build a schedule on `n ≥ 2` agents with connectivity window `window`.
///
/// Random schedules redraw until every union of `window` consecutive graphs
/// is connected. Alternating lists must satisfy the same property cyclically.
pub fn build_schedule(
    kind: ScheduleKind,
    n: usize,
    seed: u64,
    window: usize,
) -> Result<MixingSchedule> {
    if n < 2 {
        return Err(Error::Schedule(format!("need at least 2 agents, got {n}")));
    }
    if window == 0 {
        return Err(Error::Schedule("window length B must be positive".into()));
    }
    let check_n = |g: &Graph| {
        if g.n() != n {
            Err(Error::Schedule(format!("graph has {} nodes, schedule has {n}", g.n())))
        } else {
            Ok(())
        }
    };
    let source = match kind {
        ScheduleKind::Fixed(g) => {
            check_n(&g)?;
            let w = Arc::new(metropolis_weights(&g));
            Source::Cyclic {
                graphs: vec![g],
                matrices: vec![w],
            }
        }
        ScheduleKind::Alternating(graphs) => {
            if graphs.is_empty() {
                return Err(Error::Schedule("alternating schedule needs at least one graph".into()));
            }
            for g in &graphs {
                check_n(g)?;
            }
            let len = graphs.len();
            for start in 0..len {
                let u = union_all((0..window).map(|t| &graphs[(start + t) % len])).unwrap();
                if !u.is_connected() {
                    return Err(Error::Schedule(format!(
                        "union of {window} consecutive graphs starting at index {start} is disconnected"
                    )));
                }
            }
            let matrices = graphs.iter().map(|g| Arc::new(metropolis_weights(g))).collect();
            Source::Cyclic { graphs, matrices }
        }
        ScheduleKind::RandomGilbert { p, period } => {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Schedule(format!("edge probability must be in (0, 1], got {p}")));
            }
            if period == 0 {
                return Err(Error::Schedule("regeneration period must be positive".into()));
            }
            Source::Random {
                p,
                period,
                span: window.div_ceil(period),
                cache: RwLock::new(RandomCache {
                    rng: ChaCha8Rng::seed_from_u64(seed),
                    graphs: Vec::new(),
                    matrices: Vec::new(),
                }),
            }
        }
    };
    Ok(MixingSchedule {
        n,
        window,
        seed,
        source,
    })
}

impl MixingSchedule {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Connectivity window `B`.
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn graph(&self, k: usize) -> Graph {
        match &self.source {
            Source::Cyclic { graphs, .. } => graphs[k % graphs.len()].clone(),
            Source::Random { period, .. } => {
                let epoch = k / period;
                self.ensure_epoch(epoch);
                self.random_cache().graphs[epoch].clone()
            }
        }
    }

    /// Mixing matrix `W(k)`.
    pub fn matrix(&self, k: usize) -> Arc<MixingMatrix> {
        match &self.source {
            Source::Cyclic { matrices, .. } => Arc::clone(&matrices[k % matrices.len()]),
            Source::Random { period, .. } => {
                let epoch = k / period;
                self.ensure_epoch(epoch);
                Arc::clone(&self.random_cache().matrices[epoch])
            }
        }
    }

    fn random_cache(&self) -> std::sync::RwLockReadGuard<'_, RandomCache> {
        match &self.source {
            Source::Random { cache, .. } => cache.read().expect("schedule cache poisoned"),
            Source::Cyclic { .. } => unreachable!(),
        }
    }

    fn ensure_epoch(&self, epoch: usize) {
        let Source::Random { p, span, cache, .. } = &self.source else {
            return;
        };
        if cache.read().expect("schedule cache poisoned").graphs.len() > epoch {
            return;
        }
        let mut c = cache.write().expect("schedule cache poisoned");
        while c.graphs.len() <= epoch {
            let e = c.graphs.len();
            let lookback = if e + 1 >= *span { span - 1 } else { 0 };
            let checked = e + 1 >= *span;
            let mut accepted = None;
            for _ in 0..MAX_DRAWS {
                let g = Graph::gilbert(self.n, *p, &mut c.rng);
                let ok = !checked || {
                    let prev = &c.graphs[e - lookback..e];
                    union_all(prev.iter().chain(std::iter::once(&g)))
                        .unwrap()
                        .is_connected()
                };
                if ok {
                    accepted = Some(g);
                    break;
                }
            }
            let g = accepted.unwrap_or_else(|| {
                Graph::gilbert(self.n, *p, &mut c.rng).union(&Graph::ring(self.n))
            });
            let w = Arc::new(metropolis_weights(&g));
            c.graphs.push(g);
            c.matrices.push(w);
        }
    }
}

/// `W_b(k) = W(k) W(k−1) ⋯ W(k−b+1)`; `W_0(k) = I`.
pub fn window_product(s: &MixingSchedule, k: usize, b: usize) -> Result<DMatrix<f64>> {
    if k + 1 < b {
        return Err(Error::InvalidArgument(format!(
            "window product of length {b} needs k >= {}, got k = {k}",
            b - 1
        )));
    }
    let mut prod = DMatrix::identity(s.n(), s.n());
    for t in 0..b {
        prod *= s.matrix(k - t).as_matrix();
    }
    Ok(prod)
}

/// `σ_max(W_b − 11ᵀ/n)`, the per-window contraction of disagreement.
pub fn window_delta(wb: &DMatrix<f64>) -> Result<f64> {
    if !wb.is_square() {
        return Err(Error::dim(
            "square matrix",
            format!("{}x{}", wb.nrows(), wb.ncols()),
        ));
    }
    let n = wb.nrows();
    let deflated = wb.map(|v| v - 1.0 / n as f64);
    Ok(deflated.singular_values().iter().copied().fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparsityViolation {
    pub k: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Outcome of checking a schedule against the mixing assumptions over a
/// finite horizon.
#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub window: usize,
    pub horizon: usize,
    /// Row/column-sum residual of `W(k)` for `k in 0..horizon`.
    pub step_residuals: Vec<f64>,
    pub max_residual: f64,
    pub sparsity_violations: Vec<SparsityViolation>,
    /// Smallest entry seen; informational, negativity is not a failure.
    pub min_entry: f64,
    /// `max_{k ∈ [B−1, horizon)} δ(k)`.
    pub delta_hat: f64,
    pub pass: bool,
}

impl AssumptionReport {
    pub fn stats(&self) -> ScheduleStats {
        ScheduleStats {
            window: self.window,
            delta_hat: self.delta_hat,
            horizon: self.horizon,
        }
    }
}

/// Window length and empirical contraction factor of a verified schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScheduleStats {
    pub window: usize,
    pub delta_hat: f64,
    pub horizon: usize,
}

/// Horizon used when none is given: ten times `B` window positions.
pub fn default_horizon(window: usize) -> usize {
    window - 1 + 10 * window
}

pub fn verify_assumption(
    s: &MixingSchedule,
    window: usize,
    horizon: usize,
) -> Result<AssumptionReport> {
    if window == 0 || horizon < window {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= B <= horizon, got B = {window}, horizon = {horizon}"
        )));
    }
    let n = s.n();
    let mut step_residuals = Vec::with_capacity(horizon);
    let mut violations = Vec::new();
    let mut min_entry = f64::INFINITY;
    for k in 0..horizon {
        let g = s.graph(k);
        let w = s.matrix(k);
        let w = w.as_matrix();
        step_residuals.push(stochasticity_residual(w));
        for i in 0..n {
            for j in 0..n {
                let v = w[(i, j)];
                min_entry = min_entry.min(v);
                if i != j && v != 0.0 && !g.has_edge(i, j) {
                    violations.push(SparsityViolation { k, i, j, value: v });
                }
            }
        }
    }
    let mut delta_hat: f64 = 0.0;
    for k in window - 1..horizon {
        delta_hat = delta_hat.max(window_delta(&window_product(s, k, window)?)?);
    }
    let max_residual = step_residuals.iter().copied().fold(0.0, f64::max);
    let pass = delta_hat < 1.0 && max_residual <= STOCHASTIC_TOL && violations.is_empty();
    Ok(AssumptionReport {
        window,
        horizon,
        step_residuals,
        max_residual,
        sparsity_violations: violations,
        min_entry,
        delta_hat,
        pass,
    })
}

/// Parse a graph-list file: one graph per block of `i j` edge lines, blocks
/// separated by blank lines, nodes 0-indexed. `#` starts a comment.
pub fn parse_graph_list(text: &str, n: usize, origin: &str) -> Result<Vec<Graph>> {
    let mut graphs = Vec::new();
    let mut current: Vec<(usize, usize)> = Vec::new();
    let mut in_block = false;
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            if in_block && raw.trim().is_empty() {
                graphs.push(Graph::new(n, current.drain(..)).map_err(|e| err(lineno, e.to_string()))?);
                in_block = false;
            }
            continue;
        }
        let mut toks = line.split_ascii_whitespace();
        let parse = |t: Option<&str>| -> Result<usize> {
            let t = t.ok_or_else(|| err(lineno, format!("expected `i j`, got {line:?}")))?;
            t.parse::<usize>()
                .map_err(|_| err(lineno, format!("bad node index {t:?}")))
        };
        let i = parse(toks.next())?;
        let j = parse(toks.next())?;
        if let Some(extra) = toks.next() {
            return Err(err(lineno, format!("unexpected token {extra:?}")));
        }
        current.push((i, j));
        in_block = true;
    }
    if in_block {
        let last = text.lines().count();
        graphs.push(Graph::new(n, current).map_err(|e| err(last, e.to_string()))?);
    }
    Ok(graphs)
}

pub fn read_graph_list(path: impl AsRef<Path>, n: usize) -> Result<Vec<Graph>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_graph_list(&text, n, &path.display().to_string())
}
