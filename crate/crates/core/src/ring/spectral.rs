//! Determinants, spectra and diagonalization over `R`.
//!
//! Everything reduces to the classical problem on each slice; spectra are
//! computed in complex arithmetic because real slices may have nonreal
//! eigenvalues.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use super::RingMatrix;
use crate::error::{Result, TempoError};

/// Eigenvector-matrix condition number above which a slice is treated as
/// defective.
pub const DEFECTIVE_CONDITION_LIMIT: f64 = 1e8;

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;

/// `M * V == V * Lambda` with `Lambda` diagonal over `R` and `V` invertible
/// over `R`, assembled slice by slice from classical eigendecompositions.
#[derive(Debug, Clone)]
pub struct RingEigenDecomposition {
    pub vectors: RingMatrix<Complex64>,
    pub values: RingMatrix<Complex64>,
    /// Eigenvector-matrix condition number of every slice, `(i, j)` order.
    pub conditions: Vec<((usize, usize), f64)>,
}

impl RingEigenDecomposition {
    /// The `k`-th eigenvalue, an element of `R`.
    pub fn eigenvalue(&self, k: usize) -> DMatrix<Complex64> {
        self.values.block(k, k)
    }
}

fn is_upper_triangular(m: &DMatrix<f64>) -> bool {
    (0..m.nrows()).all(|r| (0..r).all(|s| m[(r, s)] == 0.0))
}

/// Complex Schur form `(Q, T)`, skipped when the slice is already triangular.
fn schur_form(slice: &DMatrix<f64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let complex = slice.map(|v| Complex64::new(v, 0.0));
    if is_upper_triangular(slice) {
        return Ok((DMatrix::identity(slice.nrows(), slice.nrows()), complex));
    }
    let schur = Schur::try_new(complex, SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or_else(|| TempoError::Numerical("Schur iteration did not converge".into()))?;
    Ok(schur.unpack())
}

/// Eigenvalues of one real slice.
pub fn slice_eigenvalues(slice: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if is_upper_triangular(slice) {
        return Ok(slice
            .diagonal()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect());
    }
    let (_, t) = schur_form(slice)?;
    Ok(t.diagonal().iter().copied().collect())
}

/// Eigenvectors of an upper-triangular `T` by back substitution, one column
/// per diagonal entry. Near-coincident diagonal entries are perturbed to a
/// small floor; a defective `T` then yields a badly conditioned result.
fn triangular_eigenvectors(t: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let m = t.nrows();
    let scale = t.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let floor = (f64::EPSILON * scale).max(f64::MIN_POSITIVE);
    let mut y = DMatrix::<Complex64>::zeros(m, m);
    for k in 0..m {
        let lambda = t[(k, k)];
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut rhs = Complex64::new(0.0, 0.0);
            for q in i + 1..=k {
                rhs -= t[(i, q)] * y[(q, k)];
            }
            if rhs == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < floor {
                d = Complex64::new(floor, 0.0);
            }
            y[(i, k)] = rhs / d;
        }
        let norm = y.column(k).norm();
        y.column_mut(k).unscale_mut(norm);
    }
    y
}

fn condition_number(w: &DMatrix<Complex64>) -> f64 {
    let sv = w.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Eigenvalues of slice `(i, j)`.
pub type SliceSpectrum = ((usize, usize), Vec<Complex64>);

impl RingMatrix<f64> {
    /// Spectra of all `n^2` slices in `(i, j)` order; missing slices
    /// contribute `N` zero eigenvalues.
    pub fn slice_spectra(&self) -> Result<Vec<SliceSpectrum>> {
        let mut out = Vec::with_capacity(self.n() * self.n());
        for i in 0..self.n() {
            for j in 0..self.n() {
                let eig = match self.slice(i, j) {
                    Some(sl) => slice_eigenvalues(&sl.to_dense())?,
                    None => vec![Complex64::new(0.0, 0.0); self.grid()],
                };
                out.push(((i, j), eig));
            }
        }
        Ok(out)
    }

    /// Generalized spectral radius: the largest classical spectral radius
    /// over all slices.
    pub fn ring_spectral_radius(&self) -> Result<f64> {
        let mut rho = 0.0f64;
        for (_, sl) in self.slices() {
            let dense = sl.to_dense();
            let r = if sl.is_packed_upper() || is_upper_triangular(&dense) {
                dense.diagonal().iter().map(|v| v.abs()).fold(0.0, f64::max)
            } else {
                slice_eigenvalues(&dense)?
                    .iter()
                    .map(|v| v.norm())
                    .fold(0.0, f64::max)
            };
            rho = rho.max(r);
        }
        Ok(rho)
    }

    /// Radius of convergence in `z` of `sum c_k z^k M^{*k}` for a scalar
    /// series of radius `coeff_radius`; infinite when `rho_R(M) = 0`.
    pub fn series_radius(&self, coeff_radius: f64) -> Result<f64> {
        if !(coeff_radius > 0.0) {
            return Err(TempoError::Parameter(format!(
                "coefficient radius must be positive, got {coeff_radius}"
            )));
        }
        let rho = self.ring_spectral_radius()?;
        Ok(if rho == 0.0 {
            f64::INFINITY
        } else {
            coeff_radius / rho
        })
    }

    /// Diagonalizes over `R` slice by slice: slice `(i, j)` of `V` is the
    /// eigenvector matrix of slice `(i, j)` of `M`, and slice `(i, j)` of
    /// `Lambda` is the matching diagonal of eigenvalues.
    pub fn ring_eigendecompose(&self) -> Result<RingEigenDecomposition> {
        let (n, grid) = (self.n(), self.grid());
        let mut vec_slices = Vec::with_capacity(n * n);
        let mut val_slices = Vec::with_capacity(n * n);
        let mut conditions = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let slice = self.slice_dense(i, j);
                let (q, t) = schur_form(&slice)?;
                let w = &q * triangular_eigenvectors(&t);
                let cond = condition_number(&w);
                if !(cond <= DEFECTIVE_CONDITION_LIMIT) {
                    return Err(TempoError::NotDiagonalizableOverR {
                        i,
                        j,
                        condition: cond,
                    });
                }
                conditions.push(((i, j), cond));
                val_slices.push(((i, j), DMatrix::from_diagonal(&t.diagonal())));
                vec_slices.push(((i, j), w));
            }
        }
        Ok(RingEigenDecomposition {
            vectors: RingMatrix::from_slices(n, grid, vec_slices)?,
            values: RingMatrix::from_slices(n, grid, val_slices)?,
            conditions,
        })
    }

    /// Characteristic polynomial over `R` evaluated at `lambda`:
    /// `det_R(lambda o E - M)`.
    pub fn characteristic(&self, lambda: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        let (n, grid) = (self.n(), self.grid());
        let shifted = RingMatrix::<Complex64>::identity(n, grid)
            .ring_scale(lambda)?
            .sub(&self.to_complex())?;
        Ok(shifted.ring_det())
    }

    /// Every root of the characteristic polynomial over `R`, obtained by
    /// choosing one eigenvalue of each slice: `N^(n^2)` elements counted with
    /// multiplicity. Refuses when that count exceeds `cap`.
    pub fn ring_eigenvalues(&self, cap: usize) -> Result<Vec<DMatrix<Complex64>>> {
        let (n, grid) = (self.n(), self.grid());
        let count = (grid as u128)
            .checked_pow((n * n) as u32)
            .unwrap_or(u128::MAX);
        if count > cap as u128 {
            return Err(TempoError::BudgetExceeded { cap: cap as u64 });
        }
        let spectra = self.slice_spectra()?;
        let mut out = Vec::with_capacity(count as usize);
        let mut choice = vec![0usize; n * n];
        loop {
            out.push(DMatrix::from_fn(n, n, |i, j| {
                spectra[i * n + j].1[choice[i * n + j]]
            }));
            // odometer increment
            let mut pos = 0;
            loop {
                if pos == choice.len() {
                    return Ok(out);
                }
                choice[pos] += 1;
                if choice[pos] < grid {
                    break;
                }
                choice[pos] = 0;
                pos += 1;
            }
        }
    }
}
