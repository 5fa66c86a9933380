//! Temporal walk centralities: Katz, general f-centralities and
//! nonbacktracking Katz, plus the frame-append update.

mod fcent;
mod katz;
mod nbt;
mod report;
mod update;

use serde::Serialize;

use crate::error::{Result, TempoError};
use crate::network::{AdjacencyFrame, TemporalNetwork};

pub use fcent::{
    f_centrality, CoefficientFunction, SeriesKind, SERIES_ITERATION_CAP, SERIES_TOLERANCE,
};
pub use katz::{katz_temporal, katz_vector};
pub use nbt::{nbt_katz_temporal, psi_factors, static_nbt_katz, PsiFactors};
pub use report::{rank_nodes, CentralityReport};
pub use update::{nbt_append_frame, NbtUpdater};

/// Inclusive range of frames, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Window {
    pub first: usize,
    pub last: usize,
}

impl Window {
    pub fn new(first: usize, last: usize) -> Self {
        Window { first, last }
    }

    pub fn full(net: &TemporalNetwork) -> Self {
        Window {
            first: 0,
            last: net.num_frames() - 1,
        }
    }

    /// From the start frame to the end of the network.
    pub fn from_start(net: &TemporalNetwork, first: usize) -> Self {
        Window {
            first,
            last: net.num_frames() - 1,
        }
    }

    pub fn validate(&self, net: &TemporalNetwork) -> Result<()> {
        if self.first > self.last || self.last >= net.num_frames() {
            return Err(TempoError::Index {
                index: self.first.max(self.last) + 1,
                len: net.num_frames(),
            });
        }
        Ok(())
    }

    /// Parses `a:b` with 1-based inclusive frame ids.
    pub fn parse_one_based(text: &str) -> Result<Self> {
        let bad = || TempoError::Parameter(format!("window {text:?} is not of the form a:b"));
        let (a, b) = text.split_once(':').ok_or_else(bad)?;
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a == 0 || b < a {
            return Err(bad());
        }
        Ok(Window {
            first: a - 1,
            last: b - 1,
        })
    }
}

/// `(max_{i,j,s} a_ij a_ji)^(-1/2)` over all frames, loops included;
/// infinite when no frame has a reciprocal pair or a loop.
pub fn compute_t0(net: &TemporalNetwork) -> f64 {
    net.frames()
        .iter()
        .map(frame_t0)
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn frame_t0(frame: &AdjacencyFrame) -> f64 {
    let mut best = 0.0f64;
    for e in frame.edges() {
        best = best.max(e.weight * frame.get(e.target, e.source));
    }
    if best == 0.0 {
        f64::INFINITY
    } else {
        1.0 / best.sqrt()
    }
}

/// Half of the tighter of `1 / rho(A)` and `t0`; `0.5` when neither bounds `t`.
pub fn auto_t(net: &TemporalNetwork) -> f64 {
    let rho = net.spectral_radius();
    let bound = (1.0 / rho).min(compute_t0(net));
    if bound.is_finite() {
        0.5 * bound
    } else {
        0.5
    }
}

pub(crate) fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(TempoError::Parameter(format!(
            "t must be finite and non-negative, got {t}"
        )));
    }
    Ok(())
}

pub(crate) fn check_below_t0(t: f64, t0: f64) -> Result<()> {
    if t >= t0 {
        return Err(TempoError::Parameter(format!(
            "t = {t} is not below t0 = {t0}; the nonbacktracking series diverges"
        )));
    }
    Ok(())
}

/// LU of a dense diagonal block; a pivot below `1e-13` of the block's
/// largest entry is reported as a numerical failure at `frame`.
pub(crate) fn factor_block(
    m: nalgebra::DMatrix<f64>,
    frame: usize,
) -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let scale = m.amax().max(1.0);
    let lu = m.lu();
    let u = lu.u();
    let pivot = u
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if !(pivot > 1e-13 * scale) {
        return Err(TempoError::Numerical(format!(
            "diagonal block of frame {} is singular to working precision (pivot {pivot:.3e})",
            frame + 1
        )));
    }
    Ok(lu)
}

pub(crate) fn max_abs_diff_ones(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max((x - 1.0).abs()))
}
