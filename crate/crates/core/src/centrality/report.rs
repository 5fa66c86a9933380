use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use super::Window;

/// Node scores with their ranking and the parameters that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityReport {
    pub method: String,
    pub scores: Vec<f64>,
    /// Node ids, best first; ties go to the smaller id.
    pub ranking: Vec<usize>,
    pub t: f64,
    /// Infinite when unconstrained.
    pub t0: f64,
    pub window: Window,
    /// Method-specific diagnostic: a solve residual or a truncation bound.
    pub residual: Option<f64>,
}

/// Node ids sorted by descending score, ascending id on ties.
pub fn rank_nodes(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

impl CentralityReport {
    pub fn new(
        method: impl Into<String>,
        scores: Vec<f64>,
        t: f64,
        t0: f64,
        window: Window,
    ) -> Self {
        CentralityReport {
            method: method.into(),
            ranking: rank_nodes(&scores),
            scores,
            t,
            t0,
            window,
            residual: None,
        }
    }

    pub fn with_residual(mut self, residual: f64) -> Self {
        self.residual = Some(residual);
        self
    }

    /// 1-based rank of every node.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.scores.len()];
        for (pos, &node) in self.ranking.iter().enumerate() {
            ranks[node] = pos + 1;
        }
        ranks
    }

    /// `node,score,rank` with 1-based node ids, in node order. Scores use
    /// the shortest round-tripping decimal form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,score,rank\n");
        for (node, (score, rank)) in self.scores.iter().zip(self.ranks()).enumerate() {
            let _ = writeln!(out, "{},{},{}", node + 1, score, rank);
        }
        out
    }

    /// Summary with 1-based window; infinite `t0` is written as the string `"inf"`.
    pub fn to_json(&self, wall_time_ms: Option<f64>) -> serde_json::Value {
        let t0 = if self.t0.is_finite() {
            json!(self.t0)
        } else {
            json!("inf")
        };
        json!({
            "method": self.method,
            "n": self.scores.len(),
            "t": self.t,
            "t0": t0,
            "window": [self.window.first + 1, self.window.last + 1],
            "residual": self.residual,
            "wall_time_ms": wall_time_ms,
        })
    }
}
