//! Brute-force walk counting on small temporal networks.
//!
//! Everything here is exponential or high-polynomial in the instance size
//! and exists to validate the fast formulas in [`crate::centrality`].

use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Result, TempoError};
use crate::network::TemporalNetwork;
use crate::ring::RingMatrix;

/// Default limit on explored branches (edge extensions) per call.
pub const DEFAULT_BRANCH_CAP: u64 = 10_000_000;

/// A walk `i_1 ... i_{k+1}` whose `l`-th edge belongs to frame `frames[l]`,
/// with non-decreasing frame labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalWalk {
    pub nodes: Vec<usize>,
    pub frames: Vec<usize>,
    /// Product of all `k` edge weights.
    pub weight: f64,
}

impl TemporalWalk {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn first_frame(&self) -> Option<usize> {
        self.frames.first().copied()
    }

    pub fn last_frame(&self) -> Option<usize> {
        self.frames.last().copied()
    }

    /// Some `i_l == i_{l+2}`.
    pub fn is_backtracking(&self) -> bool {
        self.nodes.windows(3).any(|w| w[0] == w[2])
    }
}

struct Budget {
    used: u64,
    cap: u64,
}

impl Budget {
    fn new(cap: u64) -> Self {
        Budget { used: 0, cap }
    }

    fn spend(&mut self, amount: u64) -> Result<()> {
        self.used += amount;
        if self.used > self.cap {
            return Err(TempoError::BudgetExceeded { cap: self.cap });
        }
        Ok(())
    }
}

/// Every walk of length `k`, optionally only the nonbacktracking ones, in
/// depth-first order (start node, then frame, then target).
pub fn enumerate_walks(
    net: &TemporalNetwork,
    k: usize,
    nonbacktracking: bool,
) -> Result<Vec<TemporalWalk>> {
    enumerate_walks_capped(net, k, nonbacktracking, DEFAULT_BRANCH_CAP)
}

pub fn enumerate_walks_capped(
    net: &TemporalNetwork,
    k: usize,
    nonbacktracking: bool,
    cap: u64,
) -> Result<Vec<TemporalWalk>> {
    let mut dfs = Dfs {
        net,
        k,
        nonbacktracking,
        budget: Budget::new(cap),
        nodes: Vec::with_capacity(k + 1),
        frames: Vec::with_capacity(k),
        out: Vec::new(),
    };
    for start in 0..net.n() {
        dfs.nodes.push(start);
        dfs.extend(1.0)?;
        dfs.nodes.pop();
    }
    Ok(dfs.out)
}

struct Dfs<'a> {
    net: &'a TemporalNetwork,
    k: usize,
    nonbacktracking: bool,
    budget: Budget,
    nodes: Vec<usize>,
    frames: Vec<usize>,
    out: Vec<TemporalWalk>,
}

impl Dfs<'_> {
    fn extend(&mut self, weight: f64) -> Result<()> {
        if self.frames.len() == self.k {
            self.out.push(TemporalWalk {
                nodes: self.nodes.clone(),
                frames: self.frames.clone(),
                weight,
            });
            return Ok(());
        }
        let len = self.nodes.len();
        let current = self.nodes[len - 1];
        let previous = (len >= 2).then(|| self.nodes[len - 2]);
        let first = self.frames.last().copied().unwrap_or(0);
        for f in first..self.net.num_frames() {
            let (cols, vals) = self.net.frames()[f].row(current);
            for (&next, &w) in cols.iter().zip(vals) {
                self.budget.spend(1)?;
                if self.nonbacktracking && previous == Some(next) {
                    continue;
                }
                self.nodes.push(next);
                self.frames.push(f);
                self.extend(weight * w)?;
                self.frames.pop();
                self.nodes.pop();
            }
        }
        Ok(())
    }
}

/// Arithmetic used by the tallies: exact checked integers or floats.
pub trait WalkWeight: Copy + PartialEq + std::fmt::Debug + Send + Sync {
    const ZERO: Self;
    const ONE: Self;
    fn from_edge(w: f64) -> Result<Self>;
    fn plus(self, other: Self) -> Result<Self>;
    fn times(self, other: Self) -> Result<Self>;
    fn to_f64(self) -> f64;
}

impl WalkWeight for i64 {
    const ZERO: Self = 0;
    const ONE: Self = 1;

    fn from_edge(w: f64) -> Result<Self> {
        if w.fract() != 0.0 || w >= i64::MAX as f64 {
            return Err(TempoError::Validation(format!(
                "exact tallies need integer weights, found {w}"
            )));
        }
        Ok(w as i64)
    }

    fn plus(self, other: Self) -> Result<Self> {
        self.checked_add(other).ok_or(TempoError::Overflow)
    }

    fn times(self, other: Self) -> Result<Self> {
        self.checked_mul(other).ok_or(TempoError::Overflow)
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl WalkWeight for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    fn from_edge(w: f64) -> Result<Self> {
        Ok(w)
    }

    fn plus(self, other: Self) -> Result<Self> {
        Ok(self + other)
    }

    fn times(self, other: Self) -> Result<Self> {
        Ok(self * other)
    }

    fn to_f64(self) -> f64 {
        self
    }
}

/// Summed weights of length-`k` walks from `i` to `j` whose first edge lies
/// in a frame `>= t1` and whose last edge lies in frame `t2`.
///
/// Laid out like the matrix power `A^k` of the time-evolving adjacency
/// matrix: entry `(t1, t2, i, j)` sits at `(t1 n + i, t2 n + j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkTally<W> {
    n: usize,
    frames: usize,
    length: usize,
    data: Vec<W>,
}

impl<W: WalkWeight> WalkTally<W> {
    fn zeros(n: usize, frames: usize, length: usize) -> Self {
        WalkTally {
            n,
            frames,
            length,
            data: vec![W::ZERO; frames * frames * n * n],
        }
    }

    fn idx(&self, t1: usize, t2: usize, i: usize, j: usize) -> usize {
        ((t1 * self.frames + t2) * self.n + i) * self.n + j
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_frames(&self) -> usize {
        self.frames
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn get(&self, t1: usize, t2: usize, i: usize, j: usize) -> W {
        self.data[self.idx(t1, t2, i, j)]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let (n, nf) = (self.n, self.frames);
        DMatrix::from_fn(n * nf, n * nf, |a, b| {
            self.get(a / n, b / n, a % n, b % n).to_f64()
        })
    }

    /// Entry `t1 n + i` is the total over all end frames and end nodes.
    pub fn row_totals(&self) -> Result<Vec<W>> {
        let (n, nf) = (self.n, self.frames);
        let mut out = vec![W::ZERO; n * nf];
        for t1 in 0..nf {
            for i in 0..n {
                let mut acc = W::ZERO;
                for t2 in 0..nf {
                    for j in 0..n {
                        acc = acc.plus(self.get(t1, t2, i, j))?;
                    }
                }
                out[t1 * n + i] = acc;
            }
        }
        Ok(out)
    }

    pub fn total(&self) -> Result<W> {
        self.data.iter().try_fold(W::ZERO, |acc, &v| acc.plus(v))
    }
}

/// Tally of all (or all nonbacktracking) walks of length exactly `k`.
pub fn tally_walks<W: WalkWeight>(
    net: &TemporalNetwork,
    k: usize,
    nonbacktracking: bool,
) -> Result<WalkTally<W>> {
    let mut all = tally_walks_upto(net, k, nonbacktracking, DEFAULT_BRANCH_CAP)?;
    Ok(all.pop().expect("lengths 0..=k are always produced"))
}

/// Tallies for every length `0..=k_max`.
///
/// Walks are aggregated by dynamic programming over the state (first frame,
/// previous node, current node, last frame) rather than listed one by one;
/// the result is identical to summing [`enumerate_walks`] but the cost is
/// polynomial. `cap` bounds the number of state transitions.
pub fn tally_walks_upto<W: WalkWeight>(
    net: &TemporalNetwork,
    k_max: usize,
    nonbacktracking: bool,
    cap: u64,
) -> Result<Vec<WalkTally<W>>> {
    let (n, nf) = (net.n(), net.num_frames());
    let mut budget = Budget::new(cap);
    let mut weights = Vec::with_capacity(nf);
    for frame in net.frames() {
        weights.push(
            frame
                .values()
                .iter()
                .map(|&w| W::from_edge(w))
                .collect::<Result<Vec<W>>>()?,
        );
    }

    let mut out: Vec<WalkTally<W>> = (0..=k_max).map(|k| WalkTally::zeros(n, nf, k)).collect();
    for t in 0..nf {
        for i in 0..n {
            let idx = out[0].idx(t, t, i, i);
            out[0].data[idx] = W::ONE;
        }
    }
    if k_max == 0 {
        return Ok(out);
    }

    // state (f1, prev, cur, last) -> weight
    let state_len = nf * n * n * nf;
    let at = |f1: usize, p: usize, c: usize, lf: usize| ((f1 * n + p) * n + c) * nf + lf;
    let mut cur = vec![W::ZERO; state_len];
    let mut next = vec![W::ZERO; state_len];
    let mut by_first = vec![W::ZERO; nf * nf * n];

    for start in 0..n {
        cur.iter_mut().for_each(|v| *v = W::ZERO);
        for (f, frame) in net.frames().iter().enumerate() {
            for e in frame.row_span(start) {
                budget.spend(1)?;
                let d = frame.col_indices()[e];
                let slot = at(f, start, d, f);
                cur[slot] = cur[slot].plus(weights[f][e])?;
            }
        }
        for (k, tally) in out.iter_mut().enumerate().skip(1) {
            if k > 1 {
                next.iter_mut().for_each(|v| *v = W::ZERO);
                for f1 in 0..nf {
                    for p in 0..n {
                        for c in 0..n {
                            for lf in 0..nf {
                                let v = cur[at(f1, p, c, lf)];
                                if v == W::ZERO {
                                    continue;
                                }
                                for (g, (frame, wg)) in
                                    net.frames().iter().zip(&weights).enumerate().skip(lf)
                                {
                                    for e in frame.row_span(c) {
                                        budget.spend(1)?;
                                        let d = frame.col_indices()[e];
                                        if nonbacktracking && d == p {
                                            continue;
                                        }
                                        let slot = at(f1, c, d, g);
                                        next[slot] = next[slot].plus(v.times(wg[e])?)?;
                                    }
                                }
                            }
                        }
                    }
                }
                std::mem::swap(&mut cur, &mut next);
            }
            // Sum out the previous node: by_first[(f1, last, end)].
            by_first.iter_mut().for_each(|v| *v = W::ZERO);
            for f1 in 0..nf {
                for p in 0..n {
                    for c in 0..n {
                        for lf in f1..nf {
                            let v = cur[at(f1, p, c, lf)];
                            if v != W::ZERO {
                                let slot = (f1 * nf + lf) * n + c;
                                by_first[slot] = by_first[slot].plus(v)?;
                            }
                        }
                    }
                }
            }
            // Window start t1 admits every exact first frame f1 >= t1.
            for t2 in 0..nf {
                for j in 0..n {
                    let mut acc = W::ZERO;
                    for t1 in (0..=t2).rev() {
                        acc = acc.plus(by_first[(t1 * nf + t2) * n + j])?;
                        let idx = tally.idx(t1, t2, start, j);
                        tally.data[idx] = acc;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Weighted count of the alternating walks `i, j, i, j, ..., i` of length
/// `2k`, as an `N x N` table indexed `t1 * N + t2` (first edge in a frame
/// `>= t1`, last edge in frame `t2`).
pub fn tally_alternating<W: WalkWeight>(
    net: &TemporalNetwork,
    i: usize,
    j: usize,
    k: usize,
) -> Result<Vec<W>> {
    let nf = net.num_frames();
    if i >= net.n() || j >= net.n() {
        return Err(TempoError::Index {
            index: i.max(j) + 1,
            len: net.n(),
        });
    }
    let weights = |a: usize, b: usize| -> Result<Vec<W>> {
        net.frames()
            .iter()
            .map(|f| W::from_edge(f.get(a, b)))
            .collect()
    };
    let (forward, backward) = (weights(i, j)?, weights(j, i)?);

    let mut table = vec![W::ZERO; nf * nf];
    if k == 0 {
        for t in 0..nf {
            table[t * nf + t] = W::ONE;
        }
        return Ok(table);
    }
    // state[f1 * nf + last]
    for t1 in 0..nf {
        let mut state = vec![W::ZERO; nf];
        // The first edge may use any frame g >= t1.
        for (g, &w) in forward.iter().enumerate().skip(t1) {
            state[g] = state[g].plus(w)?;
        }
        for step in 1..2 * k {
            let w = if step % 2 == 0 { &forward } else { &backward };
            let mut next = vec![W::ZERO; nf];
            let mut running = W::ZERO;
            for g in 0..nf {
                running = running.plus(state[g])?;
                next[g] = running.times(w[g])?;
            }
            state = next;
        }
        for t2 in t1..nf {
            table[t1 * nf + t2] = state[t2];
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceRow {
    pub k: usize,
    pub max_discrepancy: f64,
    /// Total weight of all nonbacktracking walks of length `k`.
    pub walk_total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceReport {
    pub n: usize,
    #[serde(rename = "N")]
    pub frames: usize,
    pub k_max: usize,
    pub exact_arithmetic: bool,
    pub max_discrepancy: f64,
    pub rows: Vec<RecurrenceRow>,
    pub runtime_ms: f64,
}

impl RecurrenceReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Coefficients of the nonbacktracking recurrence, as dense `nN x nN`
/// matrices indexed by walk-length offset `l >= 1`:
/// odd `l = 2h + 1` gives `(A * A^{*T})^{*h} * A`, even `l = 2h + 2` gives
/// `-dd*(A ((A * A^{*T})^{*h} * A))` with an ordinary product inside `dd*`.
pub fn recurrence_coefficients(
    net: &TemporalNetwork,
    max_offset: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let (n, nf) = (net.n(), net.num_frames());
    let a_dense = net.time_evolving().materialize()?;
    let a = RingMatrix::from_dense(n, nf, &a_dense)?;
    let aat = a.star_multiply(&a.star_transpose())?;
    let mut odd = a.clone();
    let mut coeffs = vec![DMatrix::zeros(n * nf, n * nf)];
    for l in 1..=max_offset {
        if l % 2 == 1 {
            if l > 1 {
                odd = aat.star_multiply(&odd)?;
            }
            coeffs.push(odd.to_dense());
        } else {
            let inner = &a_dense * odd.to_dense();
            let dd = RingMatrix::from_dense(n, nf, &inner)?.dd_star();
            coeffs.push(-dd.to_dense());
        }
    }
    Ok(coeffs)
}

/// Compares nonbacktracking tallies `P_k` with the recurrence
/// `P_k = sum_{l=1}^{k} C_l P_{k-l}` for every `1 <= k <= k_max`.
pub fn recurrence_check(net: &TemporalNetwork, k_max: usize) -> Result<RecurrenceReport> {
    recurrence_check_capped(net, k_max, DEFAULT_BRANCH_CAP)
}

pub fn recurrence_check_capped(
    net: &TemporalNetwork,
    k_max: usize,
    cap: u64,
) -> Result<RecurrenceReport> {
    let started = Instant::now();
    let exact = net.has_integer_weights();
    let tallies: Vec<DMatrix<f64>> = if exact {
        tally_walks_upto::<i64>(net, k_max, true, cap)?
            .iter()
            .map(WalkTally::to_dense)
            .collect()
    } else {
        tally_walks_upto::<f64>(net, k_max, true, cap)?
            .iter()
            .map(WalkTally::to_dense)
            .collect()
    };
    let coeffs = recurrence_coefficients(net, k_max)?;
    let mut rows = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut rhs = DMatrix::zeros(tallies[0].nrows(), tallies[0].ncols());
        for l in 1..=k {
            rhs += &coeffs[l] * &tallies[k - l];
        }
        let diff = (&tallies[k] - rhs).amax();
        rows.push(RecurrenceRow {
            k,
            max_discrepancy: diff,
            walk_total: tallies[k].sum(),
        });
    }
    Ok(RecurrenceReport {
        n: net.n(),
        frames: net.num_frames(),
        k_max,
        exact_arithmetic: exact,
        max_discrepancy: rows.iter().map(|r| r.max_discrepancy).fold(0.0, f64::max),
        rows,
        runtime_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}
