//! Walk-based centrality measures on temporal networks.

// Checks are written `!(x >= 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod centrality;
pub mod error;
pub mod generate;
pub mod io;
pub mod network;
pub mod oracle;
pub mod ring;
pub mod scaling;

pub use centrality::{
    auto_t, compute_t0, f_centrality, katz_temporal, nbt_append_frame, nbt_katz_temporal,
    psi_factors, static_nbt_katz, CentralityReport, CoefficientFunction, NbtUpdater, PsiFactors,
    Window,
};
pub use error::{Result, TempoError};
pub use generate::{generate, Density, GeneratorSpec, WeightLaw};
pub use network::{AdjacencyFrame, Edge, FrameGraph, TemporalNetwork, TimeEvolvingAdjacency};
pub use ring::{RingEigenDecomposition, RingMatrix};
pub use scaling::{bench_scaling, BenchConfig, BenchMode, BenchmarkReport};
