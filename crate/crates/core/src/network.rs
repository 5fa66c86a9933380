//! Temporal network data model.
//!
//! Nodes and frames are 0-based everywhere inside the library; the CSV
//! reader/writer and the CLI translate to and from 1-based ids.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::error::{Result, TempoError};

/// Largest `n * N` for which the dense time-evolving adjacency matrix may be built.
pub const DENSE_MATERIALIZE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(source: usize, target: usize, weight: f64) -> Self {
        Edge {
            source,
            target,
            weight,
        }
    }
}

/// Edge list of a single frame, before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameGraph {
    pub edges: Vec<Edge>,
}

impl FrameGraph {
    pub fn new(edges: Vec<Edge>) -> Self {
        FrameGraph { edges }
    }

    pub fn empty() -> Self {
        FrameGraph::default()
    }
}

impl FromIterator<(usize, usize, f64)> for FrameGraph {
    fn from_iter<I: IntoIterator<Item = (usize, usize, f64)>>(iter: I) -> Self {
        FrameGraph {
            edges: iter
                .into_iter()
                .map(|(s, t, w)| Edge::new(s, t, w))
                .collect(),
        }
    }
}

/// Weighted adjacency matrix of one frame in compressed sparse row form.
///
/// Entry `(v, w)` is strictly positive exactly when `v -> w` is an edge.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyFrame {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl AdjacencyFrame {
    /// Builds and validates a frame: positive finite weights, ids below `n`,
    /// at most one weight per ordered pair.
    pub fn from_graph(n: usize, graph: &FrameGraph) -> Result<Self> {
        let mut edges = graph.edges.clone();
        for e in &edges {
            if e.source >= n || e.target >= n {
                return Err(TempoError::Validation(format!(
                    "edge {}->{} references a node outside 1..={n}",
                    e.source + 1,
                    e.target + 1
                )));
            }
            if !(e.weight > 0.0) || !e.weight.is_finite() {
                return Err(TempoError::Validation(format!(
                    "edge {}->{} has non-positive or non-finite weight {}",
                    e.source + 1,
                    e.target + 1,
                    e.weight
                )));
            }
        }
        edges.sort_by_key(|e| (e.source, e.target));
        if let Some(w) = edges
            .windows(2)
            .find(|w| w[0].source == w[1].source && w[0].target == w[1].target)
        {
            return Err(TempoError::Validation(format!(
                "duplicate edge {}->{}",
                w[0].source + 1,
                w[0].target + 1
            )));
        }

        let mut row_ptr = vec![0usize; n + 1];
        for e in &edges {
            row_ptr[e.source + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(AdjacencyFrame {
            n,
            row_ptr,
            cols: edges.iter().map(|e| e.target).collect(),
            vals: edges.iter().map(|e| e.weight).collect(),
        })
    }

    pub fn empty(n: usize) -> Self {
        AdjacencyFrame {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and weights of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[range.clone()], &self.vals[range])
    }

    /// Index of edge `i -> j` in row-major edge order, if present.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.cols[start..self.row_ptr[i + 1]]
            .binary_search(&j)
            .ok()
            .map(|p| start + p)
    }

    /// Edge-index range of row `i`.
    pub fn row_span(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    /// Incoming edges grouped by target: `(ptr, sources, edge_index)`, with
    /// sources ascending inside each target's range.
    pub fn incoming(&self) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let mut ptr = vec![0usize; self.n + 1];
        for &j in &self.cols {
            ptr[j + 1] += 1;
        }
        for j in 0..self.n {
            ptr[j + 1] += ptr[j];
        }
        let mut next = ptr.clone();
        let mut sources = vec![0; self.nnz()];
        let mut index = vec![0; self.nnz()];
        for i in 0..self.n {
            for e in self.row_span(i) {
                let slot = &mut next[self.cols[e]];
                sources[*slot] = i;
                index[*slot] = e;
                *slot += 1;
            }
        }
        (ptr, sources, index)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .map(move |(&j, &w)| Edge::new(i, j, w))
        })
    }

    pub fn to_graph(&self) -> FrameGraph {
        FrameGraph::new(self.edges().collect())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for e in self.edges() {
            m[(e.source, e.target)] = e.weight;
        }
        m
    }

    /// `y += alpha * A x`
    pub fn mul_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let dot: f64 = cols.iter().zip(vals).map(|(&j, &w)| w * x[j]).sum();
            *yi += alpha * dot;
        }
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).1.iter().sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Weighted out-degree of every node.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// Spectral radius of this nonnegative matrix.
    ///
    /// The radius is the largest radius over strongly connected components.
    /// On each irreducible component, power iteration on `A + I` from the
    /// all-ones vector keeps every iterate strictly positive, so the
    /// Collatz-Wielandt quotients bracket `rho + 1` at every step; the upper
    /// end of the bracket is returned once it is tighter than `rel_tol` or
    /// after `max_iter` steps.
    pub fn spectral_radius(&self, rel_tol: f64, max_iter: usize) -> f64 {
        if self.nnz() == 0 {
            return 0.0;
        }
        let mut graph = DiGraph::<(), ()>::with_capacity(self.n, self.nnz());
        for _ in 0..self.n {
            graph.add_node(());
        }
        for e in self.edges() {
            graph.add_edge(NodeIndex::new(e.source), NodeIndex::new(e.target), ());
        }
        let mut best = 0.0f64;
        for comp in tarjan_scc(&graph) {
            let nodes: Vec<usize> = comp.iter().map(|v| v.index()).collect();
            if nodes.len() == 1 {
                best = best.max(self.get(nodes[0], nodes[0]));
                continue;
            }
            best = best.max(self.component_radius(&nodes, rel_tol, max_iter));
        }
        best
    }

    fn component_radius(&self, nodes: &[usize], rel_tol: f64, max_iter: usize) -> f64 {
        let mut local = vec![usize::MAX; self.n];
        for (k, &v) in nodes.iter().enumerate() {
            local[v] = k;
        }
        let m = nodes.len();
        let mut x = vec![1.0; m];
        let mut y = vec![0.0; m];
        let mut upper = f64::INFINITY;
        for _ in 0..max_iter {
            for (k, &v) in nodes.iter().enumerate() {
                let (cols, vals) = self.row(v);
                let mut acc = x[k];
                for (&j, &w) in cols.iter().zip(vals) {
                    if local[j] != usize::MAX {
                        acc += w * x[local[j]];
                    }
                }
                y[k] = acc;
            }
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for (yi, xi) in y.iter().zip(&x) {
                let q = yi / xi;
                lo = lo.min(q);
                hi = hi.max(q);
            }
            upper = upper.min(hi);
            let norm = y.iter().cloned().fold(0.0, f64::max);
            for (xi, yi) in x.iter_mut().zip(&y) {
                *xi = yi / norm;
            }
            if hi - lo <= rel_tol * hi {
                break;
            }
        }
        (upper - 1.0).max(0.0)
    }
}

/// Ordered sequence of frames over the fixed node set `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalNetwork {
    n: usize,
    frames: Vec<AdjacencyFrame>,
    timestamps: Option<Vec<f64>>,
}

impl TemporalNetwork {
    pub fn new(n: usize, frames: Vec<FrameGraph>) -> Result<Self> {
        let frames = frames
            .iter()
            .map(|g| AdjacencyFrame::from_graph(n, g))
            .collect::<Result<Vec<_>>>()?;
        Self::from_frames(n, frames)
    }

    pub fn from_frames(n: usize, frames: Vec<AdjacencyFrame>) -> Result<Self> {
        if frames.is_empty() {
            return Err(TempoError::Validation(
                "a temporal network needs at least one frame".into(),
            ));
        }
        if let Some(f) = frames.iter().find(|f| f.n() != n) {
            return Err(TempoError::Validation(format!(
                "frame has {} nodes, network has {n}",
                f.n()
            )));
        }
        Ok(TemporalNetwork {
            n,
            frames,
            timestamps: None,
        })
    }

    /// Attaches frame timestamps. They are carried as metadata only.
    pub fn with_timestamps(mut self, timestamps: Vec<f64>) -> Result<Self> {
        if timestamps.len() != self.frames.len() {
            return Err(TempoError::Validation(format!(
                "{} timestamps for {} frames",
                timestamps.len(),
                self.frames.len()
            )));
        }
        if timestamps.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(TempoError::Validation(
                "timestamps must be non-decreasing".into(),
            ));
        }
        self.timestamps = Some(timestamps);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn frames(&self) -> &[AdjacencyFrame] {
        &self.frames
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    pub fn frame_adjacency(&self, frame: usize) -> Result<&AdjacencyFrame> {
        self.frames.get(frame).ok_or(TempoError::Index {
            index: frame + 1,
            len: self.frames.len(),
        })
    }

    /// The subnetwork made of frames `first..=last`.
    pub fn subnetwork(&self, first: usize, last: usize) -> Result<TemporalNetwork> {
        if first > last || last >= self.frames.len() {
            return Err(TempoError::Index {
                index: last.max(first) + 1,
                len: self.frames.len(),
            });
        }
        Ok(TemporalNetwork {
            n: self.n,
            frames: self.frames[first..=last].to_vec(),
            timestamps: self.timestamps.as_ref().map(|t| t[first..=last].to_vec()),
        })
    }

    /// Appends a frame in place.
    pub fn push_frame(&mut self, frame: AdjacencyFrame) -> Result<()> {
        if frame.n() != self.n {
            return Err(TempoError::Dimension(format!(
                "appended frame has {} nodes, network has {}",
                frame.n(),
                self.n
            )));
        }
        self.frames.push(frame);
        if let Some(ts) = &mut self.timestamps {
            let last = ts.last().copied().unwrap_or(0.0);
            ts.push(last);
        }
        Ok(())
    }

    /// Removes the last frame; the only frame is never removed.
    pub fn pop_frame(&mut self) -> Option<AdjacencyFrame> {
        if self.frames.len() < 2 {
            return None;
        }
        if let Some(ts) = &mut self.timestamps {
            ts.pop();
        }
        self.frames.pop()
    }

    pub fn total_edges(&self) -> usize {
        self.frames.iter().map(AdjacencyFrame::nnz).sum()
    }

    /// Every weight is an integer small enough for exact `f64` arithmetic.
    pub fn has_integer_weights(&self) -> bool {
        self.frames
            .iter()
            .flat_map(|f| f.vals.iter())
            .all(|w| w.fract() == 0.0 && *w < 9.0e15)
    }

    pub fn time_evolving(&self) -> TimeEvolvingAdjacency<'_> {
        TimeEvolvingAdjacency { net: self }
    }

    /// `max_s rho(A_[s])`, which is the spectral radius of the block
    /// upper-triangular time-evolving adjacency matrix.
    pub fn spectral_radius(&self) -> f64 {
        self.frames
            .iter()
            .map(|f| f.spectral_radius(1e-12, 20_000))
            .fold(0.0, f64::max)
    }
}

/// Implicit `nN x nN` block upper-triangular matrix whose `(r, s)` block is
/// `A_[s]` for `r <= s` and zero below the diagonal.
#[derive(Debug, Clone, Copy)]
pub struct TimeEvolvingAdjacency<'a> {
    net: &'a TemporalNetwork,
}

impl<'a> TimeEvolvingAdjacency<'a> {
    pub fn n(&self) -> usize {
        self.net.n
    }

    pub fn num_frames(&self) -> usize {
        self.net.frames.len()
    }

    pub fn dim(&self) -> usize {
        self.n() * self.num_frames()
    }

    /// Block `(r, s)`, or `None` for the zero blocks below the diagonal.
    pub fn block(&self, r: usize, s: usize) -> Option<&'a AdjacencyFrame> {
        (r <= s).then(|| &self.net.frames[s])
    }

    /// `y = alpha * A x` without forming `A`.
    pub fn apply(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        let n = self.n();
        let frames = &self.net.frames;
        y.iter_mut().for_each(|v| *v = 0.0);
        // (A x)_r = sum_{s >= r} A_[s] x_s, accumulated from the last frame down.
        let mut acc = vec![0.0; n];
        for s in (0..frames.len()).rev() {
            frames[s].mul_add(alpha, &x[s * n..(s + 1) * n], &mut acc);
            y[s * n..(s + 1) * n].copy_from_slice(&acc);
        }
    }

    /// Infinity norm (max row sum) of the implicit matrix.
    pub fn norm_inf(&self) -> f64 {
        let n = self.n();
        let mut acc = vec![0.0; n];
        let mut best = 0.0f64;
        for f in self.net.frames.iter().rev() {
            for (a, r) in acc.iter_mut().zip(f.row_sums()) {
                *a += r;
            }
            best = acc.iter().cloned().fold(best, f64::max);
        }
        best
    }

    /// Dense debug copy; refused when `n * N` exceeds [`DENSE_MATERIALIZE_LIMIT`].
    pub fn materialize(&self) -> Result<DMatrix<f64>> {
        let (n, frames) = (self.n(), self.num_frames());
        if n * frames > DENSE_MATERIALIZE_LIMIT {
            return Err(TempoError::Dimension(format!(
                "refusing to materialize a {0}x{0} matrix (limit {DENSE_MATERIALIZE_LIMIT})",
                n * frames
            )));
        }
        let mut m = DMatrix::zeros(n * frames, n * frames);
        for s in 0..frames {
            let block = self.net.frames[s].to_dense();
            for r in 0..=s {
                m.view_mut((r * n, s * n), (n, n)).copy_from(&block);
            }
        }
        Ok(m)
    }

    pub fn apply_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.dim());
        self.apply(1.0, x.as_slice(), y.as_mut_slice());
        y
    }
}
