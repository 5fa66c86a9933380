use std::path::PathBuf;

use clap::{ArgGroup, Parser, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Katz,
    FExp,
    FSeries,
    Nbt,
    NbtUpdate,
    StaticNbt,
    OracleCheck,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Katz => "katz",
            Method::FExp => "f-exp",
            Method::FSeries => "f-series",
            Method::Nbt => "nbt",
            Method::NbtUpdate => "nbt-update",
            Method::StaticNbt => "static-nbt",
            Method::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchKind {
    Size,
    Frames,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Sparse,
    Dense,
    Both,
}

/// Walk-based centralities on temporal networks.
///
/// Input is a CSV edge list `frame,source,target[,weight]` with 1-based ids,
/// or a random network such as `--generate sparse:n=500,N=10,seed=7`.
#[derive(Debug, Parser)]
#[command(name = "tempo", version)]
#[command(group(ArgGroup::new("source").args(["input", "generate"])))]
pub struct Args {
    /// Edge-list CSV file.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Random network, `sparse|dense:n=..,N=..,seed=..[,weights=uniform][,loops=true]`.
    #[arg(long)]
    pub generate: Option<String>,

    #[arg(long, value_enum, default_value = "katz")]
    pub method: Method,

    /// Attenuation factor, or `auto` for half the tighter admissibility bound.
    #[arg(long, default_value = "auto")]
    pub t: String,

    /// Frames `a:b`, 1-based inclusive; defaults to every frame.
    #[arg(long)]
    pub window: Option<String>,

    /// Output prefix: writes `<out>.csv` and `<out>.json` (benchmarks add `<out>.tsv`).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads; defaults to all cores for centralities and 1 for benchmarks.
    #[arg(long)]
    pub threads: Option<usize>,

    /// Generator seed; `TEMPO_SEED` takes precedence.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Coefficients for `f-series`: `exp`, `cosh`, `resolvent` or `poly:c0,c1,...`.
    #[arg(long, default_value = "exp")]
    pub series: String,

    /// Longest walk checked by `oracle-check`.
    #[arg(long, default_value_t = 6)]
    pub k_max: usize,

    /// Frame (1-based) used by `static-nbt`.
    #[arg(long, default_value_t = 1)]
    pub frame: usize,

    /// Frames solved from scratch by `nbt-update` before appending the rest;
    /// defaults to all but the last.
    #[arg(long)]
    pub update_from: Option<usize>,

    /// Run a scaling benchmark instead of a centrality.
    #[arg(long, value_enum, conflicts_with_all = ["input", "generate"])]
    pub bench: Option<BenchKind>,

    #[arg(long, default_value_t = 3)]
    pub trials: usize,

    /// Benchmark family; `both` keeps the sweep's default families.
    #[arg(long, value_enum, default_value = "both")]
    pub family: FamilyArg,

    /// Node counts for the size sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,

    /// Frame counts for the frames sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub frame_counts: Option<Vec<usize>>,

    /// Node count for the frames sweep.
    #[arg(long, default_value_t = 60)]
    pub nodes: usize,

    /// Benchmark with all cores instead of one.
    #[arg(long)]
    pub parallel: bool,
}
