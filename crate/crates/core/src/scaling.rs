//! Desk-scale timing sweeps: growth in the number of nodes at a fixed
//! number of frames, and growth in frames with and without the append update.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::centrality::{auto_t, f_centrality, CoefficientFunction, NbtUpdater, Window};
use crate::error::{Result, TempoError};
use crate::generate::{generate, Density, GeneratorSpec, WeightLaw};

/// Medians below this many milliseconds are too close to timer and
/// scheduling noise to enter a slope fit.
pub const MIN_RESOLVABLE_MS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchMode {
    SizeSweep,
    FramesSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub mode: BenchMode,
    pub families: Vec<Density>,
    /// Node counts for the size sweep.
    pub sizes: Vec<usize>,
    /// Frames used by the size sweep.
    pub frames: usize,
    /// Node count for the frames sweep.
    pub frames_sweep_n: usize,
    /// Frame counts for the frames sweep, ascending.
    pub frame_counts: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub weights: WeightLaw,
    /// Worker threads for the compute kernels; 1 unless parallel mode is requested.
    pub threads: usize,
}

impl BenchConfig {
    pub fn size_sweep() -> Self {
        BenchConfig {
            mode: BenchMode::SizeSweep,
            families: vec![Density::Sparse, Density::Dense],
            sizes: vec![100, 200, 400, 800],
            frames: 10,
            frames_sweep_n: 60,
            frame_counts: Vec::new(),
            trials: 3,
            seed: 7,
            weights: WeightLaw::Unit,
            threads: 1,
        }
    }

    pub fn frames_sweep() -> Self {
        BenchConfig {
            mode: BenchMode::FramesSweep,
            families: vec![Density::Dense],
            sizes: Vec::new(),
            frames: 10,
            frames_sweep_n: 60,
            frame_counts: (1..=8).map(|k| 5 * k).collect(),
            trials: 3,
            seed: 7,
            weights: WeightLaw::Unit,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 3 {
            return Err(TempoError::Validation(format!(
                "benchmarks need at least 3 trials, got {}",
                self.trials
            )));
        }
        if self.threads == 0 {
            return Err(TempoError::Validation(
                "thread count must be positive".into(),
            ));
        }
        let axis = match self.mode {
            BenchMode::SizeSweep => &self.sizes,
            BenchMode::FramesSweep => &self.frame_counts,
        };
        if axis.len() < 2
            || axis.windows(2).any(|w| w[0] >= w[1])
            || axis[0] < 2 && self.mode == BenchMode::SizeSweep
        {
            return Err(TempoError::Validation(
                "sweep needs at least two strictly increasing sizes".into(),
            ));
        }
        if axis[0] == 0 || self.families.is_empty() {
            return Err(TempoError::Validation(
                "sweep sizes must be positive and a family given".into(),
            ));
        }
        Ok(())
    }
}

/// Median wall time of one series at one size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchPoint {
    pub series: String,
    pub family: Density,
    /// `n` for the size sweep, `N` for the frames sweep.
    pub size: usize,
    pub times_ms: Vec<f64>,
    pub median_ms: f64,
    /// Analytic estimate of the peak working set of the measured call.
    pub memory_bytes: u64,
    /// Excluded from the fit because the median is below [`MIN_RESOLVABLE_MS`].
    pub unresolved: bool,
}

/// Least-squares fit of `ln(median) = slope ln(size) + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub series: String,
    pub family: Density,
    pub slope: f64,
    pub intercept: f64,
    pub size_min: usize,
    pub size_max: usize,
    pub points: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub library_version: String,
    pub os: String,
    pub arch: String,
    pub available_cores: usize,
    pub threads: usize,
}

impl Environment {
    fn capture(threads: usize) -> Self {
        Environment {
            library_version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            available_cores: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
            threads,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub config: BenchConfig,
    pub points: Vec<BenchPoint>,
    pub slopes: Vec<SlopeFit>,
    pub peak_memory_bytes: u64,
    pub environment: Environment,
    pub warnings: Vec<String>,
}

impl BenchmarkReport {
    pub fn slope(&self, series: &str, family: Density) -> Option<&SlopeFit> {
        self.slopes
            .iter()
            .find(|s| s.series == series && s.family == family)
    }

    /// Gnuplot-ready: one block per (series, family), separated by blank lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# series\tfamily\tsize\tmedian_ms\n");
        let mut last: Option<(&str, Density)> = None;
        for p in &self.points {
            let key = (p.series.as_str(), p.family);
            if last.is_some() && last != Some(key) {
                out.push_str("\n\n");
            }
            last = Some(key);
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                p.series,
                family_name(p.family),
                p.size,
                p.median_ms
            );
        }
        out
    }

    /// Every individual trial.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,family,size,trial,ms\n");
        for p in &self.points {
            for (k, ms) in p.times_ms.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    p.series,
                    family_name(p.family),
                    p.size,
                    k + 1,
                    ms
                );
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!(self)
    }
}

fn family_name(d: Density) -> &'static str {
    match d {
        Density::Sparse => "sparse",
        Density::Dense => "dense",
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Times `run` once as warm-up, then `trials` times.
fn time_trials(trials: usize, mut run: impl FnMut() -> Result<()>) -> Result<Vec<f64>> {
    run()?;
    (0..trials)
        .map(|_| {
            let start = Instant::now();
            run()?;
            Ok(start.elapsed().as_secs_f64() * 1e3)
        })
        .collect()
}

pub fn fit_loglog(points: &[(usize, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Bytes held by the nonbacktracking factors, block LUs and vectors.
fn nbt_memory(n: usize, frame_nnz: &[usize]) -> u64 {
    let frames = frame_nnz.len();
    let z: usize = frame_nnz
        .iter()
        .enumerate()
        .map(|(s, nnz)| nnz * (s + 1))
        .sum();
    let d: usize = (0..frames).map(|s| n * (s + 1)).sum();
    let lu = frames * (n * n + n);
    let csr: usize = frame_nnz.iter().map(|nnz| nnz * 2 + n + 1).sum();
    (8 * (z + d + lu + csr + 3 * n * frames)) as u64
}

fn fexp_memory(n: usize, frame_nnz: &[usize]) -> u64 {
    let csr: usize = frame_nnz.iter().map(|nnz| nnz * 2 + n + 1).sum();
    (8 * (csr + 4 * n * frame_nnz.len())) as u64
}

/// Runs the sweep described by `config` on a dedicated thread pool.
pub fn bench_scaling(config: &BenchConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| TempoError::Numerical(format!("cannot build thread pool: {e}")))?;
    pool.install(|| match config.mode {
        BenchMode::SizeSweep => size_sweep(config),
        BenchMode::FramesSweep => frames_sweep(config),
    })
}

fn finish(
    config: &BenchConfig,
    points: Vec<BenchPoint>,
    mut warnings: Vec<String>,
) -> BenchmarkReport {
    let mut slopes = Vec::new();
    let mut keys: Vec<(String, Density)> = Vec::new();
    for p in &points {
        if !keys.iter().any(|(s, f)| *s == p.series && *f == p.family) {
            keys.push((p.series.clone(), p.family));
        }
    }
    for (series, family) in keys {
        let all: Vec<&BenchPoint> = points
            .iter()
            .filter(|p| p.series == series && p.family == family)
            .collect();
        let used: Vec<(usize, f64)> = all
            .iter()
            .filter(|p| !p.unresolved)
            .map(|p| (p.size, p.median_ms))
            .collect();
        if used.len() < all.len() {
            if let Some(first) = used.first() {
                warnings.push(format!(
                    "{series}/{}: sizes below {MIN_RESOLVABLE_MS} ms excluded; fit starts at size {}",
                    family_name(family),
                    first.0
                ));
            }
        }
        match fit_loglog(&used) {
            Some((slope, intercept)) => slopes.push(SlopeFit {
                series,
                family,
                slope,
                intercept,
                size_min: used[0].0,
                size_max: used[used.len() - 1].0,
                points: used.len(),
                trials: config.trials,
            }),
            None => warnings.push(format!(
                "{series}/{}: fewer than two resolvable sizes, no slope fitted",
                family_name(family)
            )),
        }
    }
    let peak_memory_bytes = points.iter().map(|p| p.memory_bytes).max().unwrap_or(0);
    BenchmarkReport {
        config: config.clone(),
        points,
        slopes,
        peak_memory_bytes,
        environment: Environment::capture(config.threads),
        warnings,
    }
}

fn point(
    series: &str,
    family: Density,
    size: usize,
    times_ms: Vec<f64>,
    memory_bytes: u64,
) -> BenchPoint {
    let median_ms = median(&times_ms);
    BenchPoint {
        series: series.into(),
        family,
        size,
        times_ms,
        median_ms,
        memory_bytes,
        unresolved: median_ms < MIN_RESOLVABLE_MS,
    }
}

fn size_sweep(config: &BenchConfig) -> Result<BenchmarkReport> {
    let mut points = Vec::new();
    let exp = CoefficientFunction::exponential();
    for &family in &config.families {
        let mut nbt_points = Vec::new();
        let mut exp_points = Vec::new();
        for &n in &config.sizes {
            let spec = GeneratorSpec {
                weights: config.weights,
                ..GeneratorSpec::new(family, n, config.frames, config.seed)
            };
            let net = generate(&spec)?;
            let t = auto_t(&net);
            let nnz: Vec<usize> = net.frames().iter().map(|f| f.nnz()).collect();
            let times = time_trials(config.trials, || NbtUpdater::new(&net, t).map(|_| ()))?;
            nbt_points.push(point("nbt", family, n, times, nbt_memory(n, &nnz)));
            let times = time_trials(config.trials, || {
                f_centrality(&net, &exp, t, Window::full(&net)).map(|_| ())
            })?;
            exp_points.push(point("f-exp", family, n, times, fexp_memory(n, &nnz)));
        }
        points.extend(nbt_points);
        points.extend(exp_points);
    }
    Ok(finish(config, points, Vec::new()))
}

fn frames_sweep(config: &BenchConfig) -> Result<BenchmarkReport> {
    let mut points = Vec::new();
    let n = config.frames_sweep_n;
    let max_frames = *config.frame_counts.last().expect("validated non-empty");
    for &family in &config.families {
        let spec = GeneratorSpec {
            weights: config.weights,
            ..GeneratorSpec::new(family, n, max_frames, config.seed)
        };
        let net = generate(&spec)?;
        let t = auto_t(&net);
        let nnz: Vec<usize> = net.frames().iter().map(|f| f.nnz()).collect();
        let mut recompute = Vec::new();
        let mut update = Vec::new();
        let first = config.frame_counts[0];
        let mut state = if first >= 2 {
            Some(NbtUpdater::new(&net.subnetwork(0, first - 2)?, t)?)
        } else {
            None
        };
        for &frames in &config.frame_counts {
            let sub = net.subnetwork(0, frames - 1)?;
            let times = time_trials(config.trials, || NbtUpdater::new(&sub, t).map(|_| ()))?;
            recompute.push(point(
                "recompute",
                family,
                frames,
                times,
                nbt_memory(n, &nnz[..frames]),
            ));
            if frames < 2 {
                state = Some(NbtUpdater::new(&sub, t)?);
                continue;
            }
            // bring the cached state to frames - 1 without timing
            let mut base = state.take().expect("state exists once frames >= 2");
            while base.network().num_frames() < frames - 1 {
                let next = base.network().num_frames();
                base.append_frame(net.frames()[next].clone())?;
            }
            let frame = &net.frames()[frames - 1];
            let mut trials = Vec::with_capacity(config.trials);
            let mut warm = base.clone();
            warm.append_frame(frame.clone())?;
            for _ in 0..config.trials {
                let mut copy = base.clone();
                let start = Instant::now();
                copy.append_frame(frame.clone())?;
                trials.push(start.elapsed().as_secs_f64() * 1e3);
            }
            update.push(point(
                "update",
                family,
                frames,
                trials,
                nbt_memory(n, &nnz[..frames]),
            ));
            state = Some(warm);
        }
        points.extend(recompute);
        points.extend(update);
    }
    Ok(finish(config, points, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loglog_fit_recovers_power_law() {
        let pts: Vec<(usize, f64)> = [2usize, 4, 8, 16]
            .iter()
            .map(|&s| (s, 3.0 * (s as f64).powf(2.5)))
            .collect();
        let (slope, intercept) = fit_loglog(&pts).unwrap();
        assert!((slope - 2.5).abs() < 1e-12 && (intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit_loglog(&pts[..1]).is_none());
    }

    #[test]
    fn median_of_odd_and_even_counts() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn fewer_than_three_trials_rejected() {
        let cfg = BenchConfig {
            trials: 1,
            ..BenchConfig::size_sweep()
        };
        assert_eq!(bench_scaling(&cfg).unwrap_err().code(), "VALIDATION");
    }

    #[test]
    fn small_sweeps_produce_complete_reports() {
        let cfg = BenchConfig {
            sizes: vec![20, 40],
            frames: 3,
            ..BenchConfig::size_sweep()
        };
        let r = bench_scaling(&cfg).unwrap();
        assert_eq!(r.points.len(), 8);
        assert!(r
            .points
            .iter()
            .all(|p| p.times_ms.len() == 3 && p.memory_bytes > 0));
        assert!(r.to_csv().lines().count() == 1 + 8 * 3);
        assert!(r.to_tsv().starts_with("# series"));
        assert_eq!(r.to_json()["config"]["seed"], 7);

        let cfg = BenchConfig {
            frames_sweep_n: 12,
            frame_counts: vec![1, 2, 4, 6],
            ..BenchConfig::frames_sweep()
        };
        let r = bench_scaling(&cfg).unwrap();
        assert_eq!(
            r.points.iter().filter(|p| p.series == "recompute").count(),
            4
        );
        assert_eq!(r.points.iter().filter(|p| p.series == "update").count(), 3);
    }
}
