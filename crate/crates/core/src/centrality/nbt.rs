use nalgebra::{DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;

use super::{
    check_below_t0, check_t, compute_t0, factor_block, frame_t0, max_abs_diff_ones,
    CentralityReport, Window,
};
use crate::error::{Result, TempoError};
use crate::network::{AdjacencyFrame, TemporalNetwork, DENSE_MATERIALIZE_LIMIT};
use crate::ring::RingMatrix;

pub(crate) type DenseLu = LU<f64, Dyn, Dyn>;
/// One LU per diagonal block of `M`, in frame order.
pub(crate) type BlockLus = Vec<DenseLu>;

/// `t w / (1 - t^2 w u)`: the weight of an edge of weight `w` once every
/// immediate reversal (of weight `u`) has been folded into it.
pub(crate) fn damped(t: f64, w: f64, u: f64) -> f64 {
    (t * w) / (1.0 - (t * t) * (w * u))
}

/// Factors of the nonbacktracking generating function `Psi = M^{-1}` with
/// `M = I - Z + D`, both `Z` and `D` block upper triangular.
///
/// Storage is by frame column so that appending a frame appends a column:
/// `z[s][e * (s + 1) + r]` is `Z^{(i,j)}[r, s]` where `e` indexes edge
/// `i -> j` in frame `s`; `Z^{(i,j)}[., s]` vanishes when that edge is
/// absent. `d[s][i * (s + 1) + r]` is `D_i[r, s]`.
#[derive(Debug, Clone)]
pub struct PsiFactors {
    pub(crate) t: f64,
    pub(crate) net: TemporalNetwork,
    pub(crate) z: Vec<Vec<f64>>,
    pub(crate) d: Vec<Vec<f64>>,
}

/// Splits a column buffer into per-row chunks of `width` entries per edge.
fn split_rows<'a>(
    mut data: &'a mut [f64],
    frame: &AdjacencyFrame,
    width: usize,
) -> Vec<&'a mut [f64]> {
    let mut out = Vec::with_capacity(frame.n());
    for i in 0..frame.n() {
        let (head, tail) = data.split_at_mut(frame.row_span(i).len() * width);
        out.push(head);
        data = tail;
    }
    out
}

/// Every `Z` column from scratch. Per ordered pair `(i, j)` the rows of the
/// slice follow from `Z (E - t^2 B) = t A` by forward substitution, with
/// running sums making each row linear in `N`.
fn z_columns(net: &TemporalNetwork, t: f64) -> Vec<Vec<f64>> {
    let (n, frames) = (net.n(), net.num_frames());
    let mut z: Vec<Vec<f64>> = net
        .frames()
        .iter()
        .enumerate()
        .map(|(s, f)| vec![0.0; f.nnz() * (s + 1)])
        .collect();
    let mut per_row: Vec<Vec<&mut [f64]>> = (0..n).map(|_| Vec::with_capacity(frames)).collect();
    for (s, col) in z.iter_mut().enumerate() {
        for (i, chunk) in split_rows(col, &net.frames()[s], s + 1)
            .into_iter()
            .enumerate()
        {
            per_row[i].push(chunk);
        }
    }
    per_row
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut chunks)| {
            let mut targets: Vec<usize> = net
                .frames()
                .iter()
                .flat_map(|f| f.row(i).0.iter().copied())
                .collect();
            targets.sort_unstable();
            targets.dedup();
            let mut w = vec![0.0; frames];
            let mut u = vec![0.0; frames];
            let mut local = vec![usize::MAX; frames];
            for &j in &targets {
                for (s, f) in net.frames().iter().enumerate() {
                    match f.position(i, j) {
                        Some(e) => {
                            w[s] = f.values()[e];
                            local[s] = e - f.row_span(i).start;
                        }
                        None => {
                            w[s] = 0.0;
                            local[s] = usize::MAX;
                        }
                    }
                    u[s] = f.get(j, i);
                }
                for r in 0..frames {
                    // c = sum_{q<s} X[r,q] sum_{k=q}^{s-1} u[k];  pf = sum_{q<s} X[r,q]
                    let (mut c, mut pf) = (0.0, 0.0);
                    for s in r..frames {
                        let cs = c + u[s] * pf;
                        let x = if w[s] == 0.0 {
                            0.0
                        } else {
                            ((t * w[s]) * (1.0 + t * cs)) / (1.0 - (t * t) * (w[s] * u[s]))
                        };
                        if local[s] != usize::MAX {
                            chunks[s][local[s] * (s + 1) + r] = x;
                        }
                        c = cs + x * u[s];
                        pf += x;
                    }
                }
            }
        });
    z
}

/// Column `s` of `D` from frames `0..=s` and column `s` of `Z`:
/// `D_i[r, s] = t sum_{m=r}^{s} sum_{k -> i in frame s} A_[m](i, k) Z^{(k,i)}[m, s]`.
fn d_column(frames: &[AdjacencyFrame], zcol: &[f64], t: f64, s: usize) -> Vec<f64> {
    let frame = &frames[s];
    let n = frame.n();
    let width = s + 1;
    let (ptr, sources, index) = frame.incoming();
    let mut out = vec![0.0; n * width];
    out.par_chunks_mut(width).enumerate().for_each(|(i, dst)| {
        let mut g = vec![0.0; width];
        for slot in ptr[i]..ptr[i + 1] {
            let (k, e) = (sources[slot], index[slot]);
            let zk = &zcol[e * width..(e + 1) * width];
            for (m, gm) in g.iter_mut().enumerate() {
                let a = frames[m].get(i, k);
                if a != 0.0 {
                    *gm += a * zk[m];
                }
            }
        }
        let mut acc = 0.0;
        for r in (0..width).rev() {
            acc += g[r];
            dst[r] = t * acc;
        }
    });
    out
}

/// Dense diagonal block `I - Z_ss + D_ss`, shared by the static and the
/// temporal solver so both produce identical bits on a single frame.
pub(crate) fn diagonal_block(
    frame: &AdjacencyFrame,
    zdiag: impl Fn(usize) -> f64,
    ddiag: impl Fn(usize) -> f64,
) -> DMatrix<f64> {
    let n = frame.n();
    let mut m = DMatrix::identity(n, n);
    for i in 0..n {
        for e in frame.row_span(i) {
            m[(i, frame.col_indices()[e])] -= zdiag(e);
        }
    }
    for i in 0..n {
        m[(i, i)] += ddiag(i);
    }
    m
}

impl PsiFactors {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.net.n()
    }

    pub fn num_frames(&self) -> usize {
        self.net.num_frames()
    }

    pub fn network(&self) -> &TemporalNetwork {
        &self.net
    }

    /// `Z^{(i,j)}[r, s]`.
    pub fn z_entry(&self, i: usize, j: usize, r: usize, s: usize) -> f64 {
        if r > s {
            return 0.0;
        }
        match self.net.frames()[s].position(i, j) {
            Some(e) => self.z[s][e * (s + 1) + r],
            None => 0.0,
        }
    }

    /// `D_i[r, s]`.
    pub fn d_entry(&self, i: usize, r: usize, s: usize) -> f64 {
        if r > s {
            0.0
        } else {
            self.d[s][i * (s + 1) + r]
        }
    }

    /// `Z` as a ring matrix (slices for every pair with an edge in some frame).
    pub fn z_ring(&self) -> Result<RingMatrix> {
        let frames = self.num_frames();
        let mut pairs: Vec<(usize, usize)> = self
            .net
            .frames()
            .iter()
            .flat_map(|f| f.edges().map(|e| (e.source, e.target)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        let slices = pairs.into_iter().map(|(i, j)| {
            let m = DMatrix::from_fn(frames, frames, |r, s| self.z_entry(i, j, r, s));
            ((i, j), m)
        });
        RingMatrix::from_slices(self.n(), frames, slices)
    }

    /// `D` as a ring matrix with diagonal slices only.
    pub fn d_ring(&self) -> Result<RingMatrix> {
        let frames = self.num_frames();
        let slices = (0..self.n()).map(|i| {
            (
                (i, i),
                DMatrix::from_fn(frames, frames, |r, s| self.d_entry(i, r, s)),
            )
        });
        RingMatrix::from_slices(self.n(), frames, slices)
    }

    /// Block `(r, s)` of `M = I - Z + D`.
    pub fn m_block(&self, r: usize, s: usize) -> DMatrix<f64> {
        let n = self.n();
        if r > s {
            return DMatrix::zeros(n, n);
        }
        let frame = &self.net.frames()[s];
        let w = s + 1;
        if r == s {
            diagonal_block(frame, |e| self.z[s][e * w + r], |i| self.d[s][i * w + r])
        } else {
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for e in frame.row_span(i) {
                    m[(i, frame.col_indices()[e])] -= self.z[s][e * w + r];
                }
                m[(i, i)] += self.d[s][i * w + r];
            }
            m
        }
    }

    /// Dense `M`, refused beyond [`DENSE_MATERIALIZE_LIMIT`].
    pub fn m_dense(&self) -> Result<DMatrix<f64>> {
        let (n, frames) = (self.n(), self.num_frames());
        if n * frames > DENSE_MATERIALIZE_LIMIT {
            return Err(TempoError::Dimension(format!(
                "refusing to materialize a {0}x{0} matrix",
                n * frames
            )));
        }
        let mut m = DMatrix::zeros(n * frames, n * frames);
        for r in 0..frames {
            for s in r..frames {
                m.view_mut((r * n, s * n), (n, n))
                    .copy_from(&self.m_block(r, s));
            }
        }
        Ok(m)
    }

    /// LU of every diagonal block.
    pub(crate) fn factor_diagonal(&self) -> Result<BlockLus> {
        (0..self.num_frames())
            .map(|s| factor_block(self.m_block(s, s), s))
            .collect()
    }

    /// `y = M x`.
    pub fn apply_m(&self, x: &[f64]) -> Vec<f64> {
        let (n, frames) = (self.n(), self.num_frames());
        let mut y = x.to_vec();
        for s in 0..frames {
            let frame = &self.net.frames()[s];
            let w = s + 1;
            let xs = &x[s * n..(s + 1) * n];
            for r in 0..=s {
                let yr = &mut y[r * n..(r + 1) * n];
                for i in 0..n {
                    let mut acc = 0.0;
                    for e in frame.row_span(i) {
                        acc += self.z[s][e * w + r] * xs[frame.col_indices()[e]];
                    }
                    yr[i] += self.d[s][i * w + r] * xs[i] - acc;
                }
            }
        }
        y
    }

    /// Solves `M x = b` by block back substitution with the given LUs.
    pub(crate) fn solve_with(&self, lus: &[DenseLu], b: &[f64]) -> Result<Vec<f64>> {
        let (n, frames) = (self.n(), self.num_frames());
        // rhs_t[i * frames + r] = remaining right-hand side of node i, frame r
        let mut rhs_t = vec![0.0; n * frames];
        for r in 0..frames {
            for i in 0..n {
                rhs_t[i * frames + r] = b[r * n + i];
            }
        }
        let mut x = vec![0.0; n * frames];
        for q in (0..frames).rev() {
            let bq = DVector::from_iterator(n, (0..n).map(|i| rhs_t[i * frames + q]));
            let xq = lus[q].solve(&bq).ok_or_else(|| {
                TempoError::Numerical(format!("block solve failed at frame {}", q + 1))
            })?;
            x[q * n..(q + 1) * n].copy_from_slice(xq.as_slice());
            if q == 0 {
                break;
            }
            let frame = &self.net.frames()[q];
            let (zq, dq) = (&self.z[q], &self.d[q]);
            let w = q + 1;
            let xq = xq.as_slice();
            rhs_t
                .par_chunks_mut(frames)
                .enumerate()
                .for_each(|(i, row)| {
                    for e in frame.row_span(i) {
                        let xj = xq[frame.col_indices()[e]];
                        if xj != 0.0 {
                            let ze = &zq[e * w..e * w + q];
                            row[..q].iter_mut().zip(ze).for_each(|(v, z)| *v += z * xj);
                        }
                    }
                    let xi = xq[i];
                    row[..q]
                        .iter_mut()
                        .zip(&dq[i * w..i * w + q])
                        .for_each(|(v, d)| *v -= d * xi);
                });
        }
        Ok(x)
    }
}

/// `Z` and `D` for `Psi(t)`; requires `t < t0`.
pub fn psi_factors(net: &TemporalNetwork, t: f64) -> Result<PsiFactors> {
    check_t(t)?;
    check_below_t0(t, compute_t0(net))?;
    let z = z_columns(net, t);
    let d = (0..net.num_frames())
        .map(|s| d_column(net.frames(), &z[s], t, s))
        .collect();
    Ok(PsiFactors {
        t,
        net: net.clone(),
        z,
        d,
    })
}

/// Appends the column of a new last frame to `factors` (whose network must
/// already contain that frame). Uses the old columns; `O(nnz N^2)`.
pub(crate) fn append_columns(factors: &PsiFactors) -> (Vec<f64>, Vec<f64>) {
    let net = &factors.net;
    let s = net.num_frames() - 1;
    let t = factors.t;
    let frame = &net.frames()[s];
    let width = s + 1;
    let mut zcol = vec![0.0; frame.nnz() * width];
    let chunks = split_rows(&mut zcol, frame, width);
    chunks.into_par_iter().enumerate().for_each(|(i, chunk)| {
        let mut suf = vec![0.0; width];
        let mut old_pos = vec![usize::MAX; s];
        for (local, e) in frame.row_span(i).enumerate() {
            let j = frame.col_indices()[e];
            let (w, u) = (frame.values()[e], frame.get(j, i));
            // suf[q] = sum_{k=q}^{s} u_k
            let mut acc = 0.0;
            for q in (0..width).rev() {
                acc += net.frames()[q].get(j, i);
                suf[q] = acc;
            }
            for (q, pos) in old_pos.iter_mut().enumerate() {
                *pos = net.frames()[q].position(i, j).unwrap_or(usize::MAX);
            }
            let dst = &mut chunk[local * width..(local + 1) * width];
            for (r, out) in dst.iter_mut().enumerate() {
                let mut cs = 0.0;
                for q in r..s {
                    if old_pos[q] != usize::MAX {
                        cs += factors.z[q][old_pos[q] * (q + 1) + r] * suf[q];
                    }
                }
                *out = ((t * w) * (1.0 + t * cs)) / (1.0 - (t * t) * (w * u));
            }
        }
    });
    let dcol = d_column(net.frames(), &zcol, t, s);
    (zcol, dcol)
}

/// `Psi(t) 1` over all frames together with the factors and block LUs.
pub(crate) fn solve_all(net: &TemporalNetwork, t: f64) -> Result<(PsiFactors, BlockLus, Vec<f64>)> {
    let factors = psi_factors(net, t)?;
    let lus = factors.factor_diagonal()?;
    let ones = vec![1.0; net.n() * net.num_frames()];
    let x = factors.solve_with(&lus, &ones)?;
    Ok((factors, lus, x))
}

/// Nonbacktracking Katz scores of walks starting in frame `start` (0-based).
pub fn nbt_katz_temporal(net: &TemporalNetwork, t: f64, start: usize) -> Result<CentralityReport> {
    if start >= net.num_frames() {
        return Err(TempoError::Index {
            index: start + 1,
            len: net.num_frames(),
        });
    }
    let (factors, _, x) = solve_all(net, t)?;
    Ok(nbt_report(&factors, &x, start))
}

pub(crate) fn nbt_report(factors: &PsiFactors, x: &[f64], start: usize) -> CentralityReport {
    let n = factors.n();
    let residual = max_abs_diff_ones(&factors.apply_m(x));
    let window = Window::from_start(&factors.net, start);
    CentralityReport::new(
        "nbt",
        x[start * n..(start + 1) * n].to_vec(),
        factors.t,
        compute_t0(&factors.net),
        window,
    )
    .with_residual(residual)
}

/// Nonbacktracking Katz on one static graph:
/// `(I - t A~ + t^2 D~)^{-1} 1` with reciprocated edges damped.
pub fn static_nbt_katz(frame: &AdjacencyFrame, t: f64) -> Result<CentralityReport> {
    check_t(t)?;
    let t0 = frame_t0(frame);
    check_below_t0(t, t0)?;
    let n = frame.n();
    let zdiag: Vec<f64> = frame
        .edges()
        .map(|e| damped(t, e.weight, frame.get(e.target, e.source)))
        .collect();
    let ddiag: Vec<f64> = (0..n)
        .map(|i| {
            let (cols, vals) = frame.row(i);
            let sum: f64 = cols
                .iter()
                .zip(vals)
                .fold(0.0, |acc, (&j, &a)| acc + a * damped(t, frame.get(j, i), a));
            t * sum
        })
        .collect();
    let m = diagonal_block(frame, |e| zdiag[e], |i| ddiag[i]);
    let check = m.clone();
    let lu = factor_block(m, 0)?;
    let x = lu
        .solve(&DVector::from_element(n, 1.0))
        .ok_or_else(|| TempoError::Numerical("static nonbacktracking solve failed".into()))?;
    let residual = max_abs_diff_ones((&check * &x).as_slice());
    Ok(
        CentralityReport::new("nbt-static", x.data.into(), t, t0, Window::new(0, 0))
            .with_residual(residual),
    )
}
