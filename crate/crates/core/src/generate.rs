//! Random temporal networks: independent Bernoulli edges per ordered pair
//! and frame, with the expected edge count fixed by the density family.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TempoError};
use crate::network::{FrameGraph, TemporalNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    /// `3 (n - 1)` expected edges per frame.
    Sparse,
    /// `3 n (n - 1) / 10` expected edges per frame.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightLaw {
    Unit,
    /// Uniform on `(0, 1]`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub density: Density,
    pub n: usize,
    #[serde(rename = "N")]
    pub frames: usize,
    pub seed: u64,
    pub weights: WeightLaw,
    pub self_loops: bool,
}

impl GeneratorSpec {
    pub fn new(density: Density, n: usize, frames: usize, seed: u64) -> Self {
        GeneratorSpec {
            density,
            n,
            frames,
            seed,
            weights: WeightLaw::Unit,
            self_loops: false,
        }
    }

    pub fn expected_edges(&self) -> f64 {
        let n = self.n as f64;
        match self.density {
            Density::Sparse => 3.0 * (n - 1.0),
            Density::Dense => 3.0 * n * (n - 1.0) / 10.0,
        }
    }

    /// Per-pair edge probability, clamped to 1. Loops, when enabled, use
    /// the same probability.
    pub fn edge_probability(&self) -> f64 {
        let n = self.n as f64;
        (self.expected_edges() / (n * (n - 1.0))).min(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(TempoError::Validation(format!(
                "generator needs n >= 2, got {}",
                self.n
            )));
        }
        if self.frames < 1 {
            return Err(TempoError::Validation("generator needs N >= 1".into()));
        }
        Ok(())
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = match self.density {
            Density::Sparse => "sparse",
            Density::Dense => "dense",
        };
        write!(
            f,
            "{family}:n={},N={},seed={}",
            self.n, self.frames, self.seed
        )?;
        if self.weights == WeightLaw::Uniform {
            write!(f, ",weights=uniform")?;
        }
        if self.self_loops {
            write!(f, ",loops=true")?;
        }
        Ok(())
    }
}

impl FromStr for GeneratorSpec {
    type Err = TempoError;

    /// `family:key=value,...` with keys `n`, `N`, `seed`, `weights`
    /// (`unit` or `uniform`) and `loops` (`true` or `false`).
    fn from_str(text: &str) -> Result<Self> {
        let bad = |msg: String| TempoError::Validation(format!("generator spec {text:?}: {msg}"));
        let (family, rest) = text
            .split_once(':')
            .ok_or_else(|| bad("expected family:key=value,...".into()))?;
        let density = match family.trim() {
            "sparse" => Density::Sparse,
            "dense" => Density::Dense,
            other => return Err(bad(format!("unknown family {other:?}"))),
        };
        let mut spec = GeneratorSpec::new(density, 0, 0, 0);
        let (mut seen_n, mut seen_frames) = (false, false);
        for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| bad(format!("{item:?} is not key=value")))?;
            let value = value.trim();
            let number = |v: &str| {
                v.parse::<u64>()
                    .map_err(|_| bad(format!("{key} must be a non-negative integer")))
            };
            match key.trim() {
                "n" => {
                    spec.n = number(value)? as usize;
                    seen_n = true;
                }
                "N" => {
                    spec.frames = number(value)? as usize;
                    seen_frames = true;
                }
                "seed" => spec.seed = number(value)?,
                "weights" => {
                    spec.weights = match value {
                        "unit" => WeightLaw::Unit,
                        "uniform" => WeightLaw::Uniform,
                        other => return Err(bad(format!("unknown weight law {other:?}"))),
                    }
                }
                "loops" => {
                    spec.self_loops = value
                        .parse()
                        .map_err(|_| bad("loops must be true or false".into()))?;
                }
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        if !seen_n || !seen_frames {
            return Err(bad("both n and N are required".into()));
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Draws the network; the same spec always yields the same edge lists.
pub fn generate(spec: &GeneratorSpec) -> Result<TemporalNetwork> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let p = spec.edge_probability();
    let n = spec.n;
    let frames = (0..spec.frames)
        .map(|_| {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if i == j && !spec.self_loops {
                        continue;
                    }
                    if rng.random::<f64>() < p {
                        let w = match spec.weights {
                            WeightLaw::Unit => 1.0,
                            WeightLaw::Uniform => 1.0 - rng.random::<f64>(),
                        };
                        edges.push((i, j, w));
                    }
                }
            }
            edges.into_iter().collect::<FrameGraph>()
        })
        .collect();
    TemporalNetwork::new(n, frames)
}
