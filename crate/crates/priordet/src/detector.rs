//! The regression function `eta(x; q)`, the plug-in likelihood-ratio
//! detector, decision-boundary location, and exact evaluation of the risk
//! `R(q') = q P1(q') + (1-q) P0(q')`.
//!
//! Gaussian and discrete pairs are evaluated in closed form / by exact
//! summation; other continuous pairs by quadrature split at the decision
//! boundaries. Ties at `eta = 1/2` classify as 1.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::density::{DensityPair, Domain, Scenario};
use crate::numeric::{self, integrate_split};
use crate::{Error, Result};

/// How a risk value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl RiskMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            RiskMethod::ClosedForm => "closed-form",
            RiskMethod::Quadrature => "quadrature",
            RiskMethod::MonteCarlo => "monte-carlo",
        }
    }
}

/// Error probabilities and risks of the detector that plugs `q_used` into the
/// likelihood-ratio threshold, evaluated under the scenario's true prior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskReport {
    pub q_used: f64,
    pub p0_error: f64,
    pub p1_error: f64,
    pub risk: f64,
    pub bayes_risk: f64,
    pub excess: f64,
    pub method: RiskMethod,
    pub tol: f64,
    pub degenerate: bool,
}

impl RiskReport {
    pub fn csv_header() -> &'static str {
        "q_used,p0_error,p1_error,risk,bayes_risk,excess,method,tol"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.q_used,
            self.p0_error,
            self.p1_error,
            self.risk,
            self.bayes_risk,
            self.excess,
            self.method.as_str(),
            self.tol
        )
    }
}

/// Sign changes of `eta(x; q) - 1/2` over the support, with the decision
/// label on each resulting interval.
#[derive(Debug, Clone)]
pub struct BoundarySet {
    /// Strictly increasing boundary points.
    pub points: Vec<f64>,
    /// Decision labels per interval; `labels.len() == points.len() + 1`.
    pub labels: Vec<u8>,
    /// Support endpoints the labels refer to.
    pub lo: f64,
    pub hi: f64,
}

impl BoundarySet {
    /// Intervals `(a, b, label)` covering `[lo, hi]`.
    pub fn intervals(&self) -> Vec<(f64, f64, u8)> {
        let mut edges = vec![self.lo];
        edges.extend(&self.points);
        edges.push(self.hi);
        edges
            .windows(2)
            .zip(&self.labels)
            .map(|(w, &l)| (w[0], w[1], l))
            .collect()
    }

    /// Intervals where the detector decides the given label.
    pub fn decision_region(&self, label: u8) -> Vec<(f64, f64)> {
        self.intervals()
            .into_iter()
            .filter(|&(_, _, l)| l == label)
            .map(|(a, b, _)| (a, b))
            .collect()
    }
}

/// Posterior probability `P(Y = 1 | X = x)` under prior `q`.
pub fn eta(pair: &DensityPair, q: f64, x: f64) -> Result<f64> {
    check_prior(q)?;
    if pair.is_degenerate() {
        return Ok(q);
    }
    let p0 = pair.p0(x);
    let p1 = pair.p1(x);
    if p0 == 0.0 && p1 == 0.0 {
        return Err(Error::UndefinedPoint { x });
    }
    if p0 == 0.0 {
        return Ok(1.0);
    }
    Ok(q * p1 / ((1.0 - q) * p0 + q * p1))
}

/// Plug-in decision at `x`: 1 iff `eta(x; q) >= 1/2`, equivalently
/// `p1(x)/p0(x) >= (1-q)/q`.
pub fn classify(pair: &DensityPair, q: f64, x: f64) -> Result<u8> {
    Ok(u8::from(eta(pair, q, x)? >= 0.5))
}

const BOUNDARY_GRID: usize = 4096;
const BOUNDARY_XTOL: f64 = 1e-10;

/// Locate every decision-label change of the plug-in detector on the support
/// of a continuous pair (grid scan plus bisection refinement).
pub fn decision_boundaries(pair: &DensityPair, q: f64) -> Result<BoundarySet> {
    check_prior(q)?;
    let Domain::Continuous { lo, hi, cuts } = pair.domain() else {
        return Err(Error::invalid(
            "pair",
            "decision boundaries require a continuous pair",
        ));
    };
    if pair.is_degenerate() {
        return Ok(BoundarySet {
            points: Vec::new(),
            labels: vec![u8::from(q >= 0.5)],
            lo,
            hi,
        });
    }
    let grid = scan_grid(lo, hi, &cuts);
    let decide = |x: f64| eta(pair, q, x).map(|e| e >= 0.5).unwrap_or(false);
    let points = numeric::scan_transitions(decide, &grid, BOUNDARY_XTOL);
    let mut labels = Vec::with_capacity(points.len() + 1);
    let mut edges = vec![lo];
    edges.extend(&points);
    edges.push(hi);
    for w in edges.windows(2) {
        labels.push(u8::from(decide(0.5 * (w[0] + w[1]))));
    }
    Ok(BoundarySet {
        points,
        labels,
        lo,
        hi,
    })
}

pub(crate) fn scan_grid(lo: f64, hi: f64, cuts: &[f64]) -> Vec<f64> {
    let mut grid = numeric::lin_spaced(lo, hi, BOUNDARY_GRID);
    for &c in cuts {
        if c > lo && c < hi {
            grid.push(c);
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    grid
}

/// `(P0(q'), P1(q'))` with the evaluation method and achieved tolerance.
#[derive(Debug, Clone, Copy)]
pub struct ErrorProbabilities {
    pub p0_error: f64,
    pub p1_error: f64,
    pub method: RiskMethod,
    pub tol: f64,
}

/// Error probabilities of the detector thresholded at prior `q_used`:
/// closed form for Gaussian pairs, exact summation for discrete pairs,
/// boundary-split quadrature otherwise.
pub fn error_probabilities(pair: &DensityPair, q_used: f64) -> Result<ErrorProbabilities> {
    check_prior(q_used)?;
    if pair.is_degenerate() {
        // eta == q_used everywhere: the decision is constant.
        let decide_one = q_used >= 0.5;
        return Ok(ErrorProbabilities {
            p0_error: if decide_one { 1.0 } else { 0.0 },
            p1_error: if decide_one { 0.0 } else { 1.0 },
            method: RiskMethod::ClosedForm,
            tol: 0.0,
        });
    }
    if let Some(p) = pair.gaussian_params() {
        let threshold = (1.0 - q_used) / q_used;
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        let delta = p.mean1 - p.mean0;
        // Lambda(x) = exp(delta (x - m) / sigma^2), m the midpoint of means.
        let m = 0.5 * (p.mean0 + p.mean1);
        let x_star = m + p.sigma * p.sigma * threshold.ln() / delta;
        let (p1_error, p0_error) = if delta > 0.0 {
            // decide 1 on [x*, inf)
            (
                normal.cdf((x_star - p.mean1) / p.sigma),
                1.0 - normal.cdf((x_star - p.mean0) / p.sigma),
            )
        } else {
            // decide 1 on (-inf, x*]
            (
                1.0 - normal.cdf((x_star - p.mean1) / p.sigma),
                normal.cdf((x_star - p.mean0) / p.sigma),
            )
        };
        return Ok(ErrorProbabilities {
            p0_error,
            p1_error,
            method: RiskMethod::ClosedForm,
            tol: 1e-14,
        });
    }
    if let Some(p) = pair.discrete_params() {
        let threshold = (1.0 - q_used) / q_used;
        let mut p0_error = 0.0;
        let mut p1_error = 0.0;
        for j in 0..p.alphabet.len() {
            let (w0, w1) = (p.weights0[j], p.weights1[j]);
            if w0 == 0.0 && w1 == 0.0 {
                continue;
            }
            // Atoms at the threshold belong to the decision-1 region.
            let decide_one = if w0 == 0.0 { true } else { w1 / w0 >= threshold };
            if decide_one {
                p0_error += w0;
            } else {
                p1_error += w1;
            }
        }
        return Ok(ErrorProbabilities {
            p0_error,
            p1_error,
            method: RiskMethod::ClosedForm,
            tol: 0.0,
        });
    }
    error_probabilities_via_quadrature(pair, q_used)
}

const RISK_QUAD_TOL: f64 = 1e-10;

/// Quadrature evaluation of `(P0, P1)` regardless of family closed forms;
/// the independent route used to cross-check the closed-form path.
pub fn error_probabilities_via_quadrature(
    pair: &DensityPair,
    q_used: f64,
) -> Result<ErrorProbabilities> {
    check_prior(q_used)?;
    let Domain::Continuous { cuts, .. } = pair.domain() else {
        return Err(Error::invalid(
            "pair",
            "quadrature risk requires a continuous pair",
        ));
    };
    let bounds = decision_boundaries(pair, q_used)?;
    let mut p0_error = 0.0;
    let mut p1_error = 0.0;
    let mut tol = 0.0;
    for (a, b, label) in bounds.intervals() {
        if label == 1 {
            let q = integrate_split(|x| pair.p0(x), a, b, &cuts, RISK_QUAD_TOL)?;
            p0_error += q.value;
            tol += q.error;
        } else {
            let q = integrate_split(|x| pair.p1(x), a, b, &cuts, RISK_QUAD_TOL)?;
            p1_error += q.value;
            tol += q.error;
        }
    }
    Ok(ErrorProbabilities {
        p0_error: p0_error.clamp(0.0, 1.0),
        p1_error: p1_error.clamp(0.0, 1.0),
        method: RiskMethod::Quadrature,
        tol,
    })
}

/// Risk of using `q_used` in place of the scenario's true prior, together
/// with the Bayes risk and the excess.
pub fn risk_report(scenario: &Scenario, q_used: f64) -> Result<RiskReport> {
    let at_used = error_probabilities(scenario.pair(), q_used)?;
    let at_true = error_probabilities(scenario.pair(), scenario.q())?;
    let q = scenario.q();
    let risk = q * at_used.p1_error + (1.0 - q) * at_used.p0_error;
    let bayes_risk = q * at_true.p1_error + (1.0 - q) * at_true.p0_error;
    Ok(RiskReport {
        q_used,
        p0_error: at_used.p0_error,
        p1_error: at_used.p1_error,
        risk,
        bayes_risk,
        excess: risk - bayes_risk,
        method: at_used.method,
        tol: at_used.tol + at_true.tol,
        degenerate: scenario.pair().is_degenerate(),
    })
}

/// Parametrized risk `q2 P1(q1) + (1-q2) P0(q1)`: the probability of error of
/// the detector thresholded at `q1` when the true prior is `q2`.
pub fn parametrized_risk(pair: &DensityPair, q1: f64, q2: f64) -> Result<f64> {
    check_prior(q2)?;
    let errs = error_probabilities(pair, q1)?;
    Ok(q2 * errs.p1_error + (1.0 - q2) * errs.p0_error)
}

fn check_prior(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid("q", format!("{q} (must be in (0, 1))")));
    }
    Ok(())
}
