use nalgebra::{DMatrix, DVector};

use super::{check_t, factor_block, max_abs_diff_ones, CentralityReport, Window};
use crate::error::{Result, TempoError};
use crate::network::{AdjacencyFrame, TemporalNetwork};

/// Frames with at most this many nodes are solved with a dense LU; larger
/// ones by fixed-point iteration on the sparse frame.
pub const KATZ_DENSE_LIMIT: usize = 2000;

const FIXED_POINT_TOL: f64 = 1e-14;
const FIXED_POINT_CAP: usize = 100_000;

/// `(I - tA)^{-1} 1` over all frames, block by block from the last frame.
pub fn katz_vector(net: &TemporalNetwork, t: f64) -> Result<Vec<f64>> {
    check_t(t)?;
    let rho = net.spectral_radius();
    if t * rho >= 1.0 {
        return Err(TempoError::Parameter(format!(
            "t = {t} needs t * rho(A) < 1, but rho(A) = {rho}"
        )));
    }
    let (n, frames) = (net.n(), net.num_frames());
    let mut x = vec![0.0; n * frames];
    // acc = sum_{m > r} A_[m] x_m
    let mut acc = vec![0.0; n];
    for r in (0..frames).rev() {
        let frame = &net.frames()[r];
        let rhs: Vec<f64> = acc.iter().map(|a| 1.0 + t * a).collect();
        let xr = solve_shifted(frame, t, rhs, r)?;
        frame.mul_add(1.0, &xr, &mut acc);
        x[r * n..(r + 1) * n].copy_from_slice(&xr);
    }
    Ok(x)
}

/// Solves `(I - tA) x = b` for one frame.
fn solve_shifted(frame: &AdjacencyFrame, t: f64, b: Vec<f64>, index: usize) -> Result<Vec<f64>> {
    let n = frame.n();
    if n <= KATZ_DENSE_LIMIT {
        let m = DMatrix::identity(n, n) - frame.to_dense() * t;
        let lu = factor_block(m, index)?;
        let x = lu.solve(&DVector::from_vec(b)).ok_or_else(|| {
            TempoError::Numerical(format!("Katz solve failed at frame {}", index + 1))
        })?;
        return Ok(x.data.into());
    }
    let mut x = b.clone();
    let mut next = vec![0.0; n];
    for _ in 0..FIXED_POINT_CAP {
        next.copy_from_slice(&b);
        frame.mul_add(t, &x, &mut next);
        let scale = next.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let change = x
            .iter()
            .zip(&next)
            .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
        std::mem::swap(&mut x, &mut next);
        if change <= FIXED_POINT_TOL * scale {
            return Ok(x);
        }
    }
    Err(TempoError::Numerical(format!(
        "Katz fixed-point iteration did not converge at frame {}",
        index + 1
    )))
}

/// `|| (I - tA) x - 1 ||_inf`.
pub(crate) fn katz_residual(net: &TemporalNetwork, t: f64, x: &[f64]) -> f64 {
    let mut ax = vec![0.0; x.len()];
    net.time_evolving().apply(t, x, &mut ax);
    let r: Vec<f64> = x.iter().zip(&ax).map(|(a, b)| a - b).collect();
    max_abs_diff_ones(&r)
}

/// Katz scores of walks that start in frame `start` (0-based).
pub fn katz_temporal(net: &TemporalNetwork, t: f64, start: usize) -> Result<CentralityReport> {
    if start >= net.num_frames() {
        return Err(TempoError::Index {
            index: start + 1,
            len: net.num_frames(),
        });
    }
    let window = Window::from_start(net, start);
    let x = katz_vector(net, t)?;
    let n = net.n();
    let residual = katz_residual(net, t, &x);
    let scores = x[start * n..(start + 1) * n].to_vec();
    Ok(CentralityReport::new("katz", scores, t, f64::INFINITY, window).with_residual(residual))
}
