use std::fs::{self, File};
use std::io::{BufReader, ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};
use tempo_core::centrality::Window;
use tempo_core::io::{parse_temporal_edgelist, ParseOptions};
use tempo_core::oracle::recurrence_check;
use tempo_core::{
    auto_t, bench_scaling, f_centrality, generate, katz_temporal, nbt_append_frame,
    nbt_katz_temporal, static_nbt_katz, BenchConfig, CentralityReport, CoefficientFunction,
    Density, GeneratorSpec, NbtUpdater, Result, TempoError, TemporalNetwork,
};

use crate::args::{Args, BenchKind, FamilyArg, Method};

/// Environment variable that overrides every seed.
pub const SEED_ENV: &str = "TEMPO_SEED";

pub fn error_json(e: &TempoError) -> Value {
    json!({ "code": e.code(), "message": e.to_string() })
}

pub fn exit_code(e: &TempoError) -> u8 {
    match e {
        TempoError::Io(_) => 2,
        TempoError::Parse { .. } => 3,
        TempoError::Validation(_) => 4,
        TempoError::Parameter(_) | TempoError::Index { .. } | TempoError::Dimension(_) => 5,
        TempoError::Numerical(_)
        | TempoError::NotInvertibleOverR { .. }
        | TempoError::NotDiagonalizableOverR { .. } => 6,
        TempoError::BudgetExceeded { .. } | TempoError::Overflow => 7,
    }
}

pub fn run(args: &Args) -> Result<()> {
    let seed = env_seed()?.or(args.seed);
    if let Some(kind) = args.bench {
        return run_bench(args, kind, seed);
    }
    let pool = thread_pool(args.threads)?;
    pool.install(|| run_centrality(args, seed))
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            TempoError::Validation(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
        }),
        Err(_) => Ok(None),
    }
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    if threads == Some(0) {
        return Err(TempoError::Validation(
            "thread count must be positive".into(),
        ));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| TempoError::Numerical(format!("cannot start thread pool: {e}")))
}

fn load(args: &Args, seed: Option<u64>) -> Result<(TemporalNetwork, Value)> {
    match (&args.input, &args.generate) {
        (Some(path), _) => {
            let file = File::open(path)
                .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
            let net = parse_temporal_edgelist(BufReader::new(file), &ParseOptions::default())?;
            Ok((net, json!({ "input": path.display().to_string() })))
        }
        (None, Some(text)) => {
            let mut spec: GeneratorSpec = text.parse()?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let net = generate(&spec)?;
            Ok((
                net,
                json!({ "generate": spec.to_string(), "seed": spec.seed }),
            ))
        }
        (None, None) => Err(std::io::Error::new(
            ErrorKind::NotFound,
            "no input: pass --input FILE or --generate SPEC",
        )
        .into()),
    }
}

fn parse_t(text: &str, net: &TemporalNetwork) -> Result<f64> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(auto_t(net));
    }
    text.trim()
        .parse()
        .map_err(|_| TempoError::Parameter(format!("t {text:?} is neither a number nor auto")))
}

fn run_centrality(args: &Args, seed: Option<u64>) -> Result<()> {
    let (full, source) = load(args, seed)?;
    let window = match &args.window {
        Some(w) => Window::parse_one_based(w)?,
        None => Window::full(&full),
    };
    window.validate(&full)?;
    let net = full.subnetwork(window.first, window.last)?;

    if args.method == Method::OracleCheck {
        let report = recurrence_check(&net, args.k_max)?;
        let mut body = report.to_json();
        body["config"] = config_json(args, source, None);
        return emit(args.out.as_deref(), None, &body);
    }

    let started = Instant::now();
    let mut report = match args.method {
        Method::Katz => katz_temporal(&net, parse_t(&args.t, &net)?, 0)?,
        Method::Nbt => nbt_katz_temporal(&net, parse_t(&args.t, &net)?, 0)?,
        Method::FExp => {
            let t = parse_t(&args.t, &net)?;
            f_centrality(
                &net,
                &CoefficientFunction::exponential(),
                t,
                Window::full(&net),
            )?
        }
        Method::FSeries => {
            let f = CoefficientFunction::parse(&args.series)?;
            let t = parse_t(&args.t, &net)?;
            f_centrality(&net, &f, t, Window::full(&net))?
        }
        Method::NbtUpdate => nbt_update(&net, args)?,
        Method::StaticNbt => {
            if args.frame == 0 || args.frame > net.num_frames() {
                return Err(TempoError::Index {
                    index: args.frame,
                    len: net.num_frames(),
                });
            }
            let single = net.subnetwork(args.frame - 1, args.frame - 1)?;
            let t = parse_t(&args.t, &single)?;
            let mut report = static_nbt_katz(&single.frames()[0], t)?;
            report.window =
                Window::new(window.first + args.frame - 1, window.first + args.frame - 1);
            report
        }
        Method::OracleCheck => unreachable!("handled above"),
    };
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    if args.method != Method::StaticNbt {
        report.window = window;
    }
    let mut body = report.to_json(Some(wall_ms));
    body["config"] = config_json(args, source, Some(&report));
    emit(args.out.as_deref(), Some(&report), &body)
}

/// Solves the first `update_from` frames, then appends the rest one at a time.
fn nbt_update(net: &TemporalNetwork, args: &Args) -> Result<CentralityReport> {
    let frames = net.num_frames();
    let base = args.update_from.unwrap_or(frames.saturating_sub(1).max(1));
    if base == 0 || base > frames {
        return Err(TempoError::Index {
            index: base,
            len: frames,
        });
    }
    let t = parse_t(&args.t, net)?;
    let mut state = NbtUpdater::new(&net.subnetwork(0, base - 1)?, t)?;
    for frame in &net.frames()[base..] {
        nbt_append_frame(&mut state, frame.clone())?;
    }
    let mut report = state.report(0)?;
    report.method = "nbt-update".into();
    Ok(report)
}

fn config_json(args: &Args, source: Value, report: Option<&CentralityReport>) -> Value {
    let mut config = json!({
        "method": args.method.name(),
        "t": args.t,
        "window": args.window,
        "version": env!("CARGO_PKG_VERSION"),
    });
    match args.method {
        Method::FSeries => config["series"] = json!(args.series),
        Method::OracleCheck => config["k_max"] = json!(args.k_max),
        Method::StaticNbt => config["frame"] = json!(args.frame),
        Method::NbtUpdate => config["update_from"] = json!(args.update_from),
        _ => {}
    }
    if let Some(r) = report {
        config["resolved_t"] = json!(r.t);
    }
    if let (Value::Object(c), Value::Object(s)) = (&mut config, source) {
        c.extend(s);
    }
    config
}

/// Writes `<prefix>.csv` and `<prefix>.json`, or prints to stdout without a prefix.
fn emit(out: Option<&Path>, report: Option<&CentralityReport>, body: &Value) -> Result<()> {
    let json_text = serde_json::to_string_pretty(body).expect("json serializes");
    match out {
        Some(prefix) => {
            if let Some(r) = report {
                fs::write(with_suffix(prefix, "csv"), r.to_csv())?;
            }
            fs::write(with_suffix(prefix, "json"), json_text + "\n")?;
        }
        None => match report {
            Some(r) => stdout(&r.to_csv())?,
            None => stdout(&(json_text + "\n"))?,
        },
    }
    Ok(())
}

/// A closed reader (`tempo ... | head`) is not an error.
fn stdout(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn run_bench(args: &Args, kind: BenchKind, seed: Option<u64>) -> Result<()> {
    let mut config = match kind {
        BenchKind::Size => BenchConfig::size_sweep(),
        BenchKind::Frames => BenchConfig::frames_sweep(),
    };
    config.trials = args.trials;
    if let Some(s) = seed {
        config.seed = s;
    }
    match args.family {
        FamilyArg::Sparse => config.families = vec![Density::Sparse],
        FamilyArg::Dense => config.families = vec![Density::Dense],
        FamilyArg::Both => {}
    }
    if let Some(sizes) = &args.sizes {
        config.sizes = sizes.clone();
    }
    if let Some(counts) = &args.frame_counts {
        config.frame_counts = counts.clone();
    }
    config.frames_sweep_n = args.nodes;
    config.threads = match (args.threads, args.parallel) {
        (Some(t), _) => t,
        (None, true) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        (None, false) => 1,
    };
    let report = bench_scaling(&config)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let json_text = serde_json::to_string_pretty(&report.to_json()).expect("json serializes");
    match &args.out {
        Some(prefix) => {
            fs::write(with_suffix(prefix, "tsv"), report.to_tsv())?;
            fs::write(with_suffix(prefix, "csv"), report.to_csv())?;
            fs::write(with_suffix(prefix, "json"), json_text + "\n")?;
        }
        None => stdout(&report.to_tsv())?,
    }
    Ok(())
}
