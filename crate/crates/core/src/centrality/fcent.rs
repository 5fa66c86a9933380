use std::fmt;
use std::sync::Arc;

use super::katz::{katz_residual, katz_vector};
use super::{check_t, CentralityReport, Window};
use crate::error::{Result, TempoError};
use crate::network::TemporalNetwork;

/// Relative accuracy targeted by the truncated series.
pub const SERIES_TOLERANCE: f64 = 1e-12;
/// Terms summed before a series is declared non-convergent.
pub const SERIES_ITERATION_CAP: usize = 10_000;

/// Terms looked ahead by the generic tail estimate.
const LOOKAHEAD: usize = 32;

/// How a coefficient function is summed.
#[derive(Debug, Clone, PartialEq)]
pub enum SeriesKind {
    /// `c_k = 1`: solved exactly as Katz.
    Resolvent,
    /// `c_k = 1/k!`, with a rigorous Taylor tail bound.
    Exponential,
    /// `c_k = 1/k!` for even `k`, zero otherwise; same tail bound as `exp`.
    Cosh,
    /// Finitely many coefficients: summed exactly.
    Polynomial(Vec<f64>),
    /// Arbitrary coefficients with a lookahead tail estimate.
    Generic,
}

/// `f(z) = sum_k c_k z^k` with non-negative coefficients and radius of
/// convergence `radius` (possibly infinite).
#[derive(Clone)]
pub struct CoefficientFunction {
    name: String,
    kind: SeriesKind,
    radius: f64,
    coeff: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
}

impl fmt::Debug for CoefficientFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientFunction")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("radius", &self.radius)
            .finish()
    }
}

fn inverse_factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc / j as f64)
}

impl CoefficientFunction {
    pub fn resolvent() -> Self {
        CoefficientFunction {
            name: "resolvent".into(),
            kind: SeriesKind::Resolvent,
            radius: 1.0,
            coeff: Arc::new(|_| 1.0),
        }
    }

    pub fn exponential() -> Self {
        CoefficientFunction {
            name: "exp".into(),
            kind: SeriesKind::Exponential,
            radius: f64::INFINITY,
            coeff: Arc::new(inverse_factorial),
        }
    }

    pub fn cosh() -> Self {
        CoefficientFunction {
            name: "cosh".into(),
            kind: SeriesKind::Cosh,
            radius: f64::INFINITY,
            coeff: Arc::new(|k| {
                if k % 2 == 0 {
                    inverse_factorial(k)
                } else {
                    0.0
                }
            }),
        }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(c) = coeffs.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
            return Err(TempoError::Parameter(format!(
                "polynomial coefficient {c} is not a finite non-negative number"
            )));
        }
        let table = coeffs.clone();
        Ok(CoefficientFunction {
            name: "poly".into(),
            kind: SeriesKind::Polynomial(coeffs),
            radius: f64::INFINITY,
            coeff: Arc::new(move |k| table.get(k).copied().unwrap_or(0.0)),
        })
    }

    /// Arbitrary coefficients; negative ones are rejected when reached.
    pub fn from_fn(
        name: impl Into<String>,
        radius: f64,
        coeff: impl Fn(usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CoefficientFunction {
            name: name.into(),
            kind: SeriesKind::Generic,
            radius,
            coeff: Arc::new(coeff),
        }
    }

    /// `exp`, `resolvent`, `cosh` or `poly:c0,c1,...`.
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "exp" | "exponential" => Ok(Self::exponential()),
            "resolvent" | "katz" => Ok(Self::resolvent()),
            "cosh" => Ok(Self::cosh()),
            other => {
                let body = other
                    .strip_prefix("poly:")
                    .ok_or_else(|| TempoError::Parameter(format!("unknown series {other:?}")))?;
                let coeffs = body
                    .split(',')
                    .map(|c| {
                        c.trim().parse::<f64>().map_err(|_| {
                            TempoError::Parameter(format!("bad polynomial coefficient {c:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::polynomial(coeffs)
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &SeriesKind {
        &self.kind
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn coefficient(&self, k: usize) -> f64 {
        (self.coeff)(k)
    }

    fn checked_coefficient(&self, k: usize) -> Result<f64> {
        let c = self.coefficient(k);
        if !(c >= 0.0) || !c.is_finite() {
            return Err(TempoError::Parameter(format!(
                "coefficient c_{k} = {c} of {} is negative or not finite",
                self.name
            )));
        }
        Ok(c)
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// `f(tA) 1` restricted to walks inside `window`; the scores are the
/// block of the window's first frame. The report's residual is the bound
/// (or estimate) on the dropped tail in the infinity norm.
pub fn f_centrality(
    net: &TemporalNetwork,
    f: &CoefficientFunction,
    t: f64,
    window: Window,
) -> Result<CentralityReport> {
    check_t(t)?;
    window.validate(net)?;
    let sub = net.subnetwork(window.first, window.last)?;
    let n = net.n();
    let method = format!("f-{}", f.name());
    if f.radius().is_finite() {
        let rho = sub.spectral_radius();
        if t * rho >= f.radius() {
            return Err(TempoError::Parameter(format!(
                "t * rho(A) = {} is outside the radius of convergence {} of {}",
                t * rho,
                f.radius(),
                f.name()
            )));
        }
    }
    let (y, residual) = match f.kind() {
        SeriesKind::Resolvent => {
            let x = katz_vector(&sub, t)?;
            let r = katz_residual(&sub, t, &x);
            (x, r)
        }
        SeriesKind::Exponential => taylor(&sub, t, false)?,
        SeriesKind::Cosh => taylor(&sub, t, true)?,
        SeriesKind::Polynomial(c) => polynomial(&sub, t, c),
        SeriesKind::Generic => generic(&sub, f, t)?,
    };
    let scores = y[..n].to_vec();
    Ok(CentralityReport::new(method, scores, t, f64::INFINITY, window).with_residual(residual))
}

/// Sums `q_k = (tA)^k 1 / k!` until the Taylor tail bound
/// `x^{K+1}/(K+1)! / (1 - x/(K+2))`, `x = t ||A||_inf`, drops below the
/// tolerance relative to the running sum.
fn taylor(net: &TemporalNetwork, t: f64, even_only: bool) -> Result<(Vec<f64>, f64)> {
    let op = net.time_evolving();
    let x = t * op.norm_inf();
    let mut y = vec![1.0; op.dim()];
    let mut q = y.clone();
    let mut next = vec![0.0; op.dim()];
    if x == 0.0 {
        return Ok((y, 0.0));
    }
    // ln(x^{K+1} / (K+1)!) for the current K.
    let mut log_term = x.ln();
    for k in 1..=SERIES_ITERATION_CAP {
        op.apply(t, &q, &mut next);
        let inv = 1.0 / k as f64;
        next.iter_mut().for_each(|v| *v *= inv);
        std::mem::swap(&mut q, &mut next);
        if q.iter().any(|v| !v.is_finite()) {
            return Err(TempoError::Numerical(format!(
                "series terms overflowed at k = {k}"
            )));
        }
        if !even_only || k % 2 == 0 {
            y.iter_mut().zip(&q).for_each(|(a, b)| *a += b);
        }
        if q.iter().all(|v| *v == 0.0) {
            return Ok((y, 0.0));
        }
        log_term += x.ln() - ((k + 1) as f64).ln();
        let kf = k as f64;
        if kf + 2.0 > x {
            let bound = log_term.exp() / (1.0 - x / (kf + 2.0));
            if bound <= SERIES_TOLERANCE * norm_inf(&y) {
                return Ok((y, bound));
            }
        }
    }
    Err(TempoError::Numerical(format!(
        "series did not reach tolerance within {SERIES_ITERATION_CAP} terms (t ||A|| = {x})"
    )))
}

fn polynomial(net: &TemporalNetwork, t: f64, coeffs: &[f64]) -> (Vec<f64>, f64) {
    let op = net.time_evolving();
    let c0 = coeffs.first().copied().unwrap_or(0.0);
    let mut y = vec![c0; op.dim()];
    let mut p = vec![1.0; op.dim()];
    let mut next = vec![0.0; op.dim()];
    for &c in coeffs.iter().skip(1) {
        op.apply(t, &p, &mut next);
        std::mem::swap(&mut p, &mut next);
        y.iter_mut().zip(&p).for_each(|(a, b)| *a += c * b);
    }
    (y, 0.0)
}

/// Sums `c_k (tA)^k 1` until a lookahead estimate of the tail, built from
/// the observed growth rate of `||(tA)^k 1||`, drops below the tolerance.
fn generic(net: &TemporalNetwork, f: &CoefficientFunction, t: f64) -> Result<(Vec<f64>, f64)> {
    let op = net.time_evolving();
    let c0 = f.checked_coefficient(0)?;
    let mut y = vec![c0; op.dim()];
    let mut p = vec![1.0; op.dim()];
    let mut next = vec![0.0; op.dim()];
    let mut norms = vec![1.0f64];
    for k in 1..=SERIES_ITERATION_CAP {
        op.apply(t, &p, &mut next);
        std::mem::swap(&mut p, &mut next);
        if p.iter().any(|v| !v.is_finite()) {
            return Err(TempoError::Numerical(format!(
                "series terms overflowed at k = {k}"
            )));
        }
        let c = f.checked_coefficient(k)?;
        if c != 0.0 {
            y.iter_mut().zip(&p).for_each(|(a, b)| *a += c * b);
        }
        let nk = norm_inf(&p);
        norms.push(nk);
        if nk == 0.0 {
            return Ok((y, 0.0));
        }
        let one_step = nk / norms[k - 1];
        let growth = if k >= 2 {
            one_step.max((nk / norms[k - 2]).sqrt())
        } else {
            one_step
        };
        let tail = lookahead_tail(f, k, nk, growth)?;
        if tail <= SERIES_TOLERANCE * norm_inf(&y) {
            return Ok((y, tail));
        }
    }
    Err(TempoError::Numerical(format!(
        "series {} did not reach tolerance within {SERIES_ITERATION_CAP} terms",
        f.name()
    )))
}

/// `sum_{j > k} c_j nk g^{j-k}`: the next `LOOKAHEAD` terms plus a geometric
/// closure; infinite when the terms are not yet decreasing.
fn lookahead_tail(f: &CoefficientFunction, k: usize, nk: f64, growth: f64) -> Result<f64> {
    let mut sum = 0.0;
    let mut power = 1.0;
    let mut prev = 0.0;
    let mut last = 0.0;
    for j in k + 1..=k + LOOKAHEAD {
        power *= growth;
        prev = last;
        last = f.checked_coefficient(j)? * nk * power;
        sum += last;
    }
    if last == 0.0 {
        return Ok(sum);
    }
    let ratio = if prev > 0.0 { last / prev } else { growth };
    if ratio >= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(sum + last * ratio / (1.0 - ratio))
}
