//! Matrices over the ring `R = {F^{n x n}, +, Hadamard}`.
//!
//! An element of `R^{N x N}` is stored through its slices: `slice(i, j)` is
//! the `N x N` matrix collecting entry `(i, j)` of every block, so
//! `slice(i, j)[r, s] == block(r, s)[i, j]`. Ring multiplication acts on
//! each slice independently as ordinary matrix multiplication, which makes
//! every operation here a loop over independent `N x N` problems.
//!
//! Slices that are identically zero are not stored. When every stored slice
//! is upper triangular the matrix carries the `upper` flag and slices are
//! packed row-major, `N (N + 1) / 2` values each.

mod spectral;

use std::collections::BTreeMap;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TempoError};

pub use spectral::{RingEigenDecomposition, DEFECTIVE_CONDITION_LIMIT};

/// Scalars a ring matrix may hold: `f64` for all arithmetic on real inputs,
/// `Complex64` for spectra and eigenvectors.
pub trait RingScalar: ComplexField<RealField = f64> + Copy + Send + Sync {}
impl<T: ComplexField<RealField = f64> + Copy + Send + Sync> RingScalar for T {}

/// Relative pivot threshold below which a slice counts as singular.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-14;

#[inline]
pub(crate) fn packed_len(grid: usize) -> usize {
    grid * (grid + 1) / 2
}

/// Position of `(r, s)`, `r <= s`, inside a packed upper-triangular slice.
#[inline]
pub(crate) fn packed_index(grid: usize, r: usize, s: usize) -> usize {
    r * grid - r * r.saturating_sub(1) / 2 + (s - r)
}

/// Read-only view of one stored slice.
#[derive(Debug, Clone, Copy)]
pub struct SliceRef<'a, T> {
    grid: usize,
    upper: bool,
    data: &'a [T],
}

impl<'a, T: RingScalar> SliceRef<'a, T> {
    #[inline]
    pub fn get(&self, r: usize, s: usize) -> T {
        if self.upper {
            if r > s {
                T::zero()
            } else {
                self.data[packed_index(self.grid, r, s)]
            }
        } else {
            self.data[r * self.grid + s]
        }
    }

    pub fn is_packed_upper(&self) -> bool {
        self.upper
    }

    pub fn raw(&self) -> &'a [T] {
        self.data
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.grid, self.grid, |r, s| self.get(r, s))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingMatrix<T: RingScalar = f64> {
    n: usize,
    grid: usize,
    upper: bool,
    // CSR over slice coordinates (i, j)
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    data: Vec<T>,
}

impl<T: RingScalar> RingMatrix<T> {
    pub fn zeros(n: usize, grid: usize) -> Self {
        RingMatrix {
            n,
            grid,
            upper: true,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            data: Vec::new(),
        }
    }

    /// The multiplicative identity `E`: all-ones diagonal blocks, so every
    /// slice is the `N x N` identity.
    pub fn identity(n: usize, grid: usize) -> Self {
        Self::from_fn_all(
            n,
            grid,
            true,
            |_, _, r, s| if r == s { T::one() } else { T::zero() },
        )
    }

    /// Builds a matrix with all `n^2` slices stored, entry `(i, j, r, s)` from `f`.
    pub fn from_fn_all(
        n: usize,
        grid: usize,
        upper: bool,
        f: impl Fn(usize, usize, usize, usize) -> T,
    ) -> Self {
        let stride = slice_stride(grid, upper);
        let mut data = Vec::with_capacity(n * n * stride);
        for i in 0..n {
            for j in 0..n {
                for r in 0..grid {
                    let cols = if upper { r..grid } else { 0..grid };
                    for s in cols {
                        data.push(f(i, j, r, s));
                    }
                }
            }
        }
        RingMatrix {
            n,
            grid,
            upper,
            row_ptr: (0..=n).map(|i| i * n).collect(),
            cols: (0..n).flat_map(|_| 0..n).collect(),
            data,
        }
    }

    /// Assembles a matrix from explicit slices. Zero slices are dropped; the
    /// upper flag is set when every remaining slice is upper triangular.
    pub fn from_slices(
        n: usize,
        grid: usize,
        slices: impl IntoIterator<Item = ((usize, usize), DMatrix<T>)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for ((i, j), m) in slices {
            if i >= n || j >= n {
                return Err(TempoError::Dimension(format!(
                    "slice ({i},{j}) outside an n={n} ring"
                )));
            }
            if m.shape() != (grid, grid) {
                return Err(TempoError::Dimension(format!(
                    "slice ({i},{j}) is {:?}, expected {grid}x{grid}",
                    m.shape()
                )));
            }
            if m.iter().any(|v| *v != T::zero()) {
                map.insert((i, j), m);
            }
        }
        let upper = map
            .values()
            .all(|m| (0..grid).all(|r| (0..r).all(|s| m[(r, s)] == T::zero())));
        let stride = slice_stride(grid, upper);
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(map.len());
        let mut data = Vec::with_capacity(map.len() * stride);
        for ((i, j), m) in &map {
            row_ptr[i + 1] += 1;
            cols.push(*j);
            pack_into(&mut data, m, upper);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(RingMatrix {
            n,
            grid,
            upper,
            row_ptr,
            cols,
            data,
        })
    }

    /// Reads the ring structure out of a dense `nN x nN` block matrix.
    pub fn from_dense(n: usize, grid: usize, dense: &DMatrix<T>) -> Result<Self> {
        if dense.shape() != (n * grid, n * grid) {
            return Err(TempoError::Dimension(format!(
                "dense matrix is {:?}, expected {}x{}",
                dense.shape(),
                n * grid,
                n * grid
            )));
        }
        let slices = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                (
                    (i, j),
                    DMatrix::from_fn(grid, grid, |r, s| dense[(r * n + i, s * n + j)]),
                )
            });
        Self::from_slices(n, grid, slices.collect::<Vec<_>>())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn is_upper(&self) -> bool {
        self.upper
    }

    pub fn num_slices(&self) -> usize {
        self.cols.len()
    }

    pub(crate) fn stride(&self) -> usize {
        slice_stride(self.grid, self.upper)
    }

    /// Storage position of slice `(i, j)`, if it is stored.
    pub fn slice_position(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[lo..hi].binary_search(&j).ok().map(|p| lo + p)
    }

    fn slice_at(&self, pos: usize) -> SliceRef<'_, T> {
        let stride = self.stride();
        SliceRef {
            grid: self.grid,
            upper: self.upper,
            data: &self.data[pos * stride..(pos + 1) * stride],
        }
    }

    pub fn slice(&self, i: usize, j: usize) -> Option<SliceRef<'_, T>> {
        self.slice_position(i, j).map(|p| self.slice_at(p))
    }

    /// Slice `(i, j)` as a dense matrix (zeros if not stored).
    pub fn slice_dense(&self, i: usize, j: usize) -> DMatrix<T> {
        self.slice(i, j)
            .map(|s| s.to_dense())
            .unwrap_or_else(|| DMatrix::zeros(self.grid, self.grid))
    }

    /// Stored slices in `(i, j)` order.
    pub fn slices(&self) -> impl Iterator<Item = ((usize, usize), SliceRef<'_, T>)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(move |p| ((i, self.cols[p]), self.slice_at(p)))
        })
    }

    /// Entry `(i, j)` of block `(r, s)`.
    pub fn get(&self, r: usize, s: usize, i: usize, j: usize) -> T {
        self.slice(i, j)
            .map(|sl| sl.get(r, s))
            .unwrap_or_else(T::zero)
    }

    pub fn block(&self, r: usize, s: usize) -> DMatrix<T> {
        let mut b = DMatrix::zeros(self.n, self.n);
        for ((i, j), sl) in self.slices() {
            b[(i, j)] = sl.get(r, s);
        }
        b
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let n = self.n;
        let mut m = DMatrix::zeros(n * self.grid, n * self.grid);
        for ((i, j), sl) in self.slices() {
            for r in 0..self.grid {
                for s in 0..self.grid {
                    m[(r * n + i, s * n + j)] = sl.get(r, s);
                }
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    fn check_conformable(&self, other: &Self, op: &str) -> Result<()> {
        if self.n != other.n || self.grid != other.grid {
            return Err(TempoError::Dimension(format!(
                "{op}: (n={}, N={}) vs (n={}, N={})",
                self.n, self.grid, other.n, other.grid
            )));
        }
        Ok(())
    }

    /// Ring product `A * B`: block `(r, s)` is the sum over `k` of the
    /// Hadamard products `A_rk o B_ks`, i.e. slice-wise matrix products.
    pub fn star_multiply(&self, other: &Self) -> Result<Self> {
        self.check_conformable(other, "star_multiply")?;
        let upper = self.upper && other.upper;
        let pairs = merge_patterns(self, other, false);
        let grid = self.grid;
        Ok(build_from_pairs(self, other, &pairs, upper, |a, b, out| {
            let (a, b) = (a.unwrap(), b.unwrap());
            slice_product(grid, upper, a, b, out);
        }))
    }

    pub fn star_pow(&self, k: u32) -> Result<Self> {
        let mut acc = Self::identity(self.n, self.grid);
        for _ in 0..k {
            acc = acc.star_multiply(self)?;
        }
        Ok(acc)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, T::one())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -T::one())
    }

    fn combine(&self, other: &Self, sign: T) -> Result<Self> {
        self.check_conformable(other, "add")?;
        let upper = self.upper && other.upper;
        let pairs = merge_patterns(self, other, true);
        let grid = self.grid;
        Ok(build_from_pairs(self, other, &pairs, upper, |a, b, out| {
            for r in 0..grid {
                for s in row_range(grid, upper, r) {
                    let x = a.map(|a| a.get(r, s)).unwrap_or_else(T::zero);
                    let y = b.map(|b| b.get(r, s)).unwrap_or_else(T::zero);
                    out[slot(grid, upper, r, s)] = x + sign * y;
                }
            }
        }))
    }

    pub fn scale(&self, alpha: T) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `lambda o A`: block `(r, s)` becomes `lambda o A_rs`, so slice `(i, j)`
    /// is scaled by `lambda[(i, j)]`.
    pub fn ring_scale(&self, lambda: &DMatrix<T>) -> Result<Self> {
        if lambda.shape() != (self.n, self.n) {
            return Err(TempoError::Dimension(
                "ring element has the wrong shape".into(),
            ));
        }
        let mut out = self.clone();
        let stride = self.stride();
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let l = lambda[(i, self.cols[p])];
                out.data[p * stride..(p + 1) * stride]
                    .iter_mut()
                    .for_each(|v| *v *= l);
            }
        }
        Ok(out)
    }

    /// Transposes every block in place; block positions are unchanged, so
    /// slice `(i, j)` of the result is slice `(j, i)` of `self`.
    pub fn star_transpose(&self) -> Self {
        let mut entries: Vec<(usize, usize, usize)> = Vec::with_capacity(self.num_slices());
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                entries.push((self.cols[p], i, p));
            }
        }
        entries.sort_unstable();
        let stride = self.stride();
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut data = Vec::with_capacity(self.data.len());
        for (i, j, p) in entries {
            row_ptr[i + 1] += 1;
            cols.push(j);
            data.extend_from_slice(&self.data[p * stride..(p + 1) * stride]);
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        RingMatrix {
            n: self.n,
            grid: self.grid,
            upper: self.upper,
            row_ptr,
            cols,
            data,
        }
    }

    /// Replaces every block by the diagonal matrix of its own diagonal,
    /// which keeps exactly the slices `(i, i)`.
    pub fn dd_star(&self) -> Self {
        let stride = self.stride();
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::new();
        let mut data = Vec::new();
        for i in 0..self.n {
            if let Some(p) = self.slice_position(i, i) {
                row_ptr[i + 1] = 1;
                cols.push(i);
                data.extend_from_slice(&self.data[p * stride..(p + 1) * stride]);
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        RingMatrix {
            n: self.n,
            grid: self.grid,
            upper: self.upper,
            row_ptr,
            cols,
            data,
        }
    }

    /// Inverse over `R`, computed slice by slice (back substitution for
    /// upper-triangular slices, LU otherwise). Fails on the first singular
    /// slice; a missing slice is the zero matrix and therefore singular.
    pub fn star_inverse(&self) -> Result<Self> {
        let n = self.n;
        let grid = self.grid;
        if self.num_slices() < n * n {
            let missing = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .find(|&(i, j)| self.slice_position(i, j).is_none())
                .unwrap();
            return Err(TempoError::NotInvertibleOverR {
                i: missing.0,
                j: missing.1,
            });
        }
        let stride = self.stride();
        let upper = self.upper;
        let mut data = vec![T::zero(); self.data.len()];
        let results: Vec<Option<()>> = data
            .par_chunks_mut(stride)
            .zip(self.data.par_chunks(stride))
            .map(|(out, src)| {
                let slice = SliceRef {
                    grid,
                    upper,
                    data: src,
                };
                if upper {
                    invert_upper(grid, slice, out)
                } else {
                    invert_general(grid, slice, out)
                }
            })
            .collect();
        if let Some(p) = results.iter().position(Option::is_none) {
            let i = self.row_ptr.partition_point(|&start| start <= p) - 1;
            return Err(TempoError::NotInvertibleOverR { i, j: self.cols[p] });
        }
        Ok(RingMatrix {
            data,
            ..self.clone()
        })
    }

    /// Determinant over `R`: entry `(i, j)` is the determinant of slice `(i, j)`.
    pub fn ring_det(&self) -> DMatrix<T> {
        let mut det = DMatrix::zeros(self.n, self.n);
        if self.grid == 0 {
            det.fill(T::one());
            return det;
        }
        for ((i, j), sl) in self.slices() {
            det[(i, j)] = if self.upper {
                (0..self.grid).fold(T::one(), |acc, r| acc * sl.get(r, r))
            } else {
                sl.to_dense().determinant()
            };
        }
        det
    }

    /// Drops the upper flag, storing full `N x N` slices.
    pub fn to_full(&self) -> Self {
        if !self.upper {
            return self.clone();
        }
        let mut data = Vec::with_capacity(self.num_slices() * self.grid * self.grid);
        for (_, sl) in self.slices() {
            for r in 0..self.grid {
                for s in 0..self.grid {
                    data.push(sl.get(r, s));
                }
            }
        }
        RingMatrix {
            upper: false,
            data,
            ..self.clone()
        }
    }
}

impl RingMatrix<f64> {
    pub fn to_complex(&self) -> RingMatrix<Complex64> {
        RingMatrix {
            n: self.n,
            grid: self.grid,
            upper: self.upper,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// Debug dump: `{n, N, slices: {"i,j": row-major N x N array}}` with
    /// 1-based slice keys; missing keys are zero slices.
    pub fn to_json(&self) -> serde_json::Value {
        let dump = RingDump {
            n: self.n,
            grid: self.grid,
            slices: self
                .slices()
                .map(|((i, j), sl)| {
                    let dense = sl.to_dense();
                    let rows: Vec<f64> = (0..self.grid)
                        .flat_map(|r| (0..self.grid).map(move |s| (r, s)))
                        .map(|(r, s)| dense[(r, s)])
                        .collect();
                    (format!("{},{}", i + 1, j + 1), rows)
                })
                .collect(),
        };
        serde_json::to_value(dump).expect("ring dump serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let dump: RingDump = serde_json::from_value(value.clone())
            .map_err(|e| TempoError::Validation(format!("bad ring dump: {e}")))?;
        let mut slices = Vec::with_capacity(dump.slices.len());
        for (key, values) in dump.slices {
            let parsed = key.split_once(',').and_then(|(a, b)| {
                Some((
                    a.trim().parse::<usize>().ok()?,
                    b.trim().parse::<usize>().ok()?,
                ))
            });
            let (i, j) = match parsed {
                Some((i, j)) if i >= 1 && j >= 1 => (i - 1, j - 1),
                _ => return Err(TempoError::Validation(format!("bad slice key {key:?}"))),
            };
            if values.len() != dump.grid * dump.grid {
                return Err(TempoError::Dimension(format!(
                    "slice {key} has {} values",
                    values.len()
                )));
            }
            slices.push((
                (i, j),
                DMatrix::from_row_slice(dump.grid, dump.grid, &values),
            ));
        }
        Self::from_slices(dump.n, dump.grid, slices)
    }
}

#[derive(Serialize, Deserialize)]
struct RingDump {
    n: usize,
    #[serde(rename = "N")]
    grid: usize,
    slices: BTreeMap<String, Vec<f64>>,
}

#[inline]
pub(crate) fn slice_stride(grid: usize, upper: bool) -> usize {
    if upper {
        packed_len(grid)
    } else {
        grid * grid
    }
}

#[inline]
fn row_range(grid: usize, upper: bool, r: usize) -> std::ops::Range<usize> {
    if upper {
        r..grid
    } else {
        0..grid
    }
}

#[inline]
fn slot(grid: usize, upper: bool, r: usize, s: usize) -> usize {
    if upper {
        packed_index(grid, r, s)
    } else {
        r * grid + s
    }
}

fn pack_into<T: RingScalar>(data: &mut Vec<T>, m: &DMatrix<T>, upper: bool) {
    let grid = m.nrows();
    for r in 0..grid {
        for s in row_range(grid, upper, r) {
            data.push(m[(r, s)]);
        }
    }
}

/// Walks two sparsity patterns row by row. With `union == false` only
/// coordinates stored in both are returned.
fn merge_patterns<T: RingScalar>(
    a: &RingMatrix<T>,
    b: &RingMatrix<T>,
    union: bool,
) -> Vec<(usize, usize, Option<usize>, Option<usize>)> {
    let mut out = Vec::new();
    for i in 0..a.n {
        let (mut p, pe) = (a.row_ptr[i], a.row_ptr[i + 1]);
        let (mut q, qe) = (b.row_ptr[i], b.row_ptr[i + 1]);
        while p < pe || q < qe {
            let ja = if p < pe { a.cols[p] } else { usize::MAX };
            let jb = if q < qe { b.cols[q] } else { usize::MAX };
            if ja == jb {
                out.push((i, ja, Some(p), Some(q)));
                p += 1;
                q += 1;
            } else if ja < jb {
                if union {
                    out.push((i, ja, Some(p), None));
                }
                p += 1;
            } else {
                if union {
                    out.push((i, jb, None, Some(q)));
                }
                q += 1;
            }
        }
    }
    out
}

fn build_from_pairs<T: RingScalar>(
    left: &RingMatrix<T>,
    right: &RingMatrix<T>,
    pairs: &[(usize, usize, Option<usize>, Option<usize>)],
    upper: bool,
    kernel: impl Fn(Option<SliceRef<'_, T>>, Option<SliceRef<'_, T>>, &mut [T]) + Sync,
) -> RingMatrix<T> {
    let n = left.n;
    let stride = slice_stride(left.grid, upper);
    let mut row_ptr = vec![0usize; n + 1];
    for &(i, ..) in pairs {
        row_ptr[i + 1] += 1;
    }
    for i in 0..n {
        row_ptr[i + 1] += row_ptr[i];
    }
    let cols = pairs.iter().map(|p| p.1).collect();
    let mut data = vec![T::zero(); pairs.len() * stride];
    if stride > 0 {
        data.par_chunks_mut(stride)
            .zip(pairs.par_iter())
            .for_each(|(out, &(_, _, a, b))| {
                kernel(
                    a.map(|p| left.slice_at(p)),
                    b.map(|p| right.slice_at(p)),
                    out,
                )
            });
    }
    RingMatrix {
        n,
        grid: left.grid,
        upper,
        row_ptr,
        cols,
        data,
    }
}

/// `out = a * b` for one slice, summing over `k` in ascending order.
fn slice_product<T: RingScalar>(
    grid: usize,
    upper: bool,
    a: SliceRef<'_, T>,
    b: SliceRef<'_, T>,
    out: &mut [T],
) {
    for r in 0..grid {
        for s in row_range(grid, upper, r) {
            let ks = if upper { r..s + 1 } else { 0..grid };
            let mut acc = T::zero();
            for k in ks {
                acc += a.get(r, k) * b.get(k, s);
            }
            out[slot(grid, upper, r, s)] = acc;
        }
    }
}

fn invert_upper<T: RingScalar>(grid: usize, u: SliceRef<'_, T>, out: &mut [T]) -> Option<()> {
    let scale = u.raw().iter().map(|v| v.modulus()).fold(0.0, f64::max);
    let tol = (SINGULAR_PIVOT_TOL * scale).max(SINGULAR_PIVOT_TOL);
    if (0..grid).any(|r| u.get(r, r).modulus() <= tol) {
        return None;
    }
    for s in 0..grid {
        out[packed_index(grid, s, s)] = T::one() / u.get(s, s);
        for r in (0..s).rev() {
            let mut acc = T::zero();
            for k in r + 1..=s {
                acc += u.get(r, k) * out[packed_index(grid, k, s)];
            }
            out[packed_index(grid, r, s)] = -acc / u.get(r, r);
        }
    }
    Some(())
}

fn invert_general<T: RingScalar>(grid: usize, a: SliceRef<'_, T>, out: &mut [T]) -> Option<()> {
    let dense = a.to_dense();
    let scale = a.raw().iter().map(|v| v.modulus()).fold(0.0, f64::max);
    let lu = dense.lu();
    let u = lu.u();
    let tol = (SINGULAR_PIVOT_TOL * scale).max(SINGULAR_PIVOT_TOL);
    if (0..grid).any(|k| u[(k, k)].modulus() <= tol) {
        return None;
    }
    let inv = lu.try_inverse()?;
    for r in 0..grid {
        for s in 0..grid {
            out[r * grid + s] = inv[(r, s)];
        }
    }
    Some(())
}

#[cfg(test)]
mod tests;
