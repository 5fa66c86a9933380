use super::nbt::{append_columns, nbt_report, solve_all, BlockLus, PsiFactors};
use super::{check_below_t0, factor_block, frame_t0, CentralityReport};
use crate::error::{Result, TempoError};
use crate::network::{AdjacencyFrame, TemporalNetwork};

/// Nonbacktracking Katz state that absorbs new frames without refactoring
/// the old ones: the factors gain one column, one new diagonal block is
/// factored, and `Psi 1` is re-solved with the cached block LUs.
#[derive(Debug, Clone)]
pub struct NbtUpdater {
    factors: PsiFactors,
    lus: BlockLus,
    psi_ones: Vec<f64>,
}

impl NbtUpdater {
    /// Factors and solves from scratch.
    pub fn new(net: &TemporalNetwork, t: f64) -> Result<Self> {
        let (factors, lus, psi_ones) = solve_all(net, t)?;
        Ok(NbtUpdater {
            factors,
            lus,
            psi_ones,
        })
    }

    pub fn t(&self) -> f64 {
        self.factors.t()
    }

    pub fn network(&self) -> &TemporalNetwork {
        self.factors.network()
    }

    pub fn factors(&self) -> &PsiFactors {
        &self.factors
    }

    /// `Psi(t) 1` over all frames, frame-major.
    pub fn psi_ones(&self) -> &[f64] {
        &self.psi_ones
    }

    /// Appends a frame. On error the state is left as it was.
    pub fn append_frame(&mut self, frame: AdjacencyFrame) -> Result<()> {
        if frame.n() != self.factors.n() {
            return Err(TempoError::Dimension(format!(
                "frame has {} nodes, network has {}",
                frame.n(),
                self.factors.n()
            )));
        }
        check_below_t0(self.t(), frame_t0(&frame))?;
        self.factors.net.push_frame(frame)?;
        let (zcol, dcol) = append_columns(&self.factors);
        self.factors.z.push(zcol);
        self.factors.d.push(dcol);
        let s = self.factors.num_frames() - 1;
        let lu = match factor_block(self.factors.m_block(s, s), s) {
            Ok(lu) => lu,
            Err(e) => {
                self.rollback();
                return Err(e);
            }
        };
        self.lus.push(lu);
        let ones = vec![1.0; self.factors.n() * self.factors.num_frames()];
        match self.factors.solve_with(&self.lus, &ones) {
            Ok(x) => {
                self.psi_ones = x;
                Ok(())
            }
            Err(e) => {
                self.lus.pop();
                self.rollback();
                Err(e)
            }
        }
    }

    fn rollback(&mut self) {
        self.factors.z.pop();
        self.factors.d.pop();
        self.factors.net.pop_frame();
    }

    /// Scores of walks starting in frame `start` (0-based).
    pub fn report(&self, start: usize) -> Result<CentralityReport> {
        if start >= self.factors.num_frames() {
            return Err(TempoError::Index {
                index: start + 1,
                len: self.factors.num_frames(),
            });
        }
        Ok(nbt_report(&self.factors, &self.psi_ones, start))
    }
}

/// Extends `state` by one frame in place.
pub fn nbt_append_frame(state: &mut NbtUpdater, frame: AdjacencyFrame) -> Result<()> {
    state.append_frame(frame)
}
