//! CSV edge-list format: `frame,source,target[,weight]`, 1-based ids,
//! `#` comments, and an optional `n=<int> N=<int>` header line declaring
//! dimensions larger than the ids observed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use crate::error::{Result, TempoError};
use crate::network::{AdjacencyFrame, Edge, FrameGraph, TemporalNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    #[default]
    Error,
    Sum,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub duplicates: DuplicatePolicy,
    /// Node count override; must not be smaller than the largest id seen.
    pub n: Option<usize>,
    /// Frame count override; must not be smaller than the largest frame seen.
    pub frames: Option<usize>,
}

fn parse_err(line: u64, message: impl Into<String>) -> TempoError {
    TempoError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_id(field: &str, what: &str, line: u64) -> Result<usize> {
    let v: i64 = field
        .parse()
        .map_err(|_| parse_err(line, format!("{what} id {field:?} is not an integer")))?;
    if v < 1 {
        return Err(TempoError::Validation(format!(
            "line {line}: {what} id {v} must be at least 1"
        )));
    }
    Ok(v as usize)
}

fn parse_header(field: &str, line: u64) -> Result<(Option<usize>, Option<usize>)> {
    let (mut n, mut frames) = (None, None);
    for token in field.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("bad header token {token:?}")))?;
        let value: usize = value
            .parse()
            .map_err(|_| parse_err(line, format!("bad header value {value:?}")))?;
        match key {
            "n" => n = Some(value),
            "N" => frames = Some(value),
            _ => return Err(parse_err(line, format!("unknown header key {key:?}"))),
        }
    }
    Ok((n, frames))
}

/// Reads a temporal network from CSV text.
pub fn parse_temporal_edgelist<R: Read>(
    reader: R,
    options: &ParseOptions,
) -> Result<TemporalNetwork> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let (mut header_n, mut header_frames) = (None, None);
    let mut seen_data = false;
    // (frame, source, target) -> weight, all 1-based
    let mut entries: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    let (mut max_node, mut max_frame) = (0usize, 0usize);

    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            match e.into_kind() {
                csv::ErrorKind::Io(io) => TempoError::Io(io),
                other => parse_err(line, format!("{other:?}")),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() == 1 && record[0].starts_with("n=") {
            if seen_data {
                return Err(parse_err(line, "dimension header must precede edge rows"));
            }
            (header_n, header_frames) = parse_header(&record[0], line)?;
            continue;
        }
        if !(3..=4).contains(&record.len()) {
            return Err(parse_err(
                line,
                format!(
                    "expected frame,source,target[,weight], got {} fields",
                    record.len()
                ),
            ));
        }
        seen_data = true;
        let frame = parse_id(&record[0], "frame", line)?;
        let source = parse_id(&record[1], "source", line)?;
        let target = parse_id(&record[2], "target", line)?;
        let weight = match record.get(3) {
            Some(w) if !w.is_empty() => w
                .parse::<f64>()
                .map_err(|_| parse_err(line, format!("weight {w:?} is not a number")))?,
            _ => 1.0,
        };
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(TempoError::Validation(format!(
                "line {line}: weight {weight} must be positive and finite"
            )));
        }
        max_node = max_node.max(source).max(target);
        max_frame = max_frame.max(frame);
        match entries.get_mut(&(frame, source, target)) {
            None => {
                entries.insert((frame, source, target), weight);
            }
            Some(w) => match options.duplicates {
                DuplicatePolicy::Sum => *w += weight,
                DuplicatePolicy::Error => {
                    return Err(TempoError::Validation(format!(
                        "line {line}: duplicate edge {source}->{target} in frame {frame}"
                    )))
                }
            },
        }
    }

    let n = resolve_dim(options.n.or(header_n), max_node, "node")?;
    let num_frames = resolve_dim(options.frames.or(header_frames), max_frame, "frame")?;
    if n == 0 || num_frames == 0 {
        return Err(TempoError::Validation(
            "input declares no nodes or no frames".into(),
        ));
    }

    let mut frames = vec![FrameGraph::empty(); num_frames];
    for ((f, s, t), w) in entries {
        frames[f - 1].edges.push(Edge::new(s - 1, t - 1, w));
    }
    TemporalNetwork::new(n, frames)
}

fn resolve_dim(declared: Option<usize>, observed: usize, what: &str) -> Result<usize> {
    match declared {
        Some(d) if d < observed => Err(TempoError::Validation(format!(
            "declared {what} count {d} is below the largest {what} id {observed}"
        ))),
        Some(d) => Ok(d),
        None => Ok(observed),
    }
}

pub fn parse_str(text: &str) -> Result<TemporalNetwork> {
    parse_temporal_edgelist(text.as_bytes(), &ParseOptions::default())
}

/// Writes the network in the same CSV format, rows sorted by
/// `(frame, source, target)`, with a dimension header.
pub fn serialize_temporal_edgelist(net: &TemporalNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n={} N={}", net.n(), net.num_frames());
    for (f, frame) in net.frames().iter().enumerate() {
        write_frame(&mut out, f, frame);
    }
    out
}

fn write_frame(out: &mut String, f: usize, frame: &AdjacencyFrame) {
    for e in frame.edges() {
        let _ = writeln!(
            out,
            "{},{},{},{:?}",
            f + 1,
            e.source + 1,
            e.target + 1,
            e.weight
        );
    }
}
