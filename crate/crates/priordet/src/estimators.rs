//! Trimmed maximum-likelihood estimation of the prior probability, from
//! labeled data (clamped label mean) and from unlabeled mixture data
//! (1-D concave maximization of the mixture log-likelihood).

use serde::{Deserialize, Serialize};

use crate::density::{DensityPair, UnlabeledDataset};
use crate::numeric;
use crate::{Error, Result};

/// Which data the estimate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateMode {
    Labeled,
    Unlabeled,
}

/// A trimmed MLE of the prior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateResult {
    pub q_hat: f64,
    pub mode: EstimateMode,
    /// Whether the trim interval clamped the unconstrained maximizer.
    pub trimmed: bool,
    /// Whether the likelihood was flat (tie broken at the interval midpoint).
    pub degenerate: bool,
    /// Achieved tolerance on `q_hat` (0 for the closed-form labeled case).
    pub tol: f64,
    #[serde(skip)]
    pub iterations: usize,
}

/// Mixture log-likelihood value and its first two derivatives in `q`.
#[derive(Debug, Clone, Copy)]
pub struct LogLikProfile {
    pub value: f64,
    pub first_derivative: f64,
    pub second_derivative: f64,
}

/// Trimmed MLE from labels: the label mean clamped to `[theta, 1 - theta]`.
/// This equals the argmax of the binomial likelihood over the interval.
pub fn mle_labeled(labels: &[u8], theta: f64) -> Result<EstimateResult> {
    check_theta(theta)?;
    if labels.is_empty() {
        return Err(Error::EmptyInput("labels"));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::invalid("labels", "labels must be 0 or 1"));
    }
    let mean = labels.iter().map(|&y| y as f64).sum::<f64>() / labels.len() as f64;
    let q_hat = mean.clamp(theta, 1.0 - theta);
    Ok(EstimateResult {
        q_hat,
        mode: EstimateMode::Labeled,
        trimmed: mean < theta || mean > 1.0 - theta,
        degenerate: false,
        tol: 0.0,
        iterations: 0,
    })
}

/// Value and derivatives of `sum_i log(q p1(x_i) + (1-q) p0(x_i))` at `q`.
pub fn unlabeled_loglik(
    pair: &DensityPair,
    samples: &UnlabeledDataset,
    q: f64,
) -> Result<LogLikProfile> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid("q", format!("{q} (must be in (0, 1))")));
    }
    let prepared = prepare_samples(pair, samples)?;
    Ok(profile_at(&prepared, q))
}

struct PreparedSamples {
    /// Per-sample `(p0(x_i), p1(x_i))`.
    densities: Vec<(f64, f64)>,
    flat: bool,
}

fn prepare_samples(pair: &DensityPair, samples: &UnlabeledDataset) -> Result<PreparedSamples> {
    if samples.xs.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    let mut densities = Vec::with_capacity(samples.xs.len());
    let mut flat = true;
    for (index, &x) in samples.xs.iter().enumerate() {
        let p0 = pair.p0(x);
        let p1 = pair.p1(x);
        if p0 == 0.0 && p1 == 0.0 {
            return Err(Error::DegenerateSample { index, x });
        }
        flat &= p0 == p1;
        densities.push((p0, p1));
    }
    Ok(PreparedSamples { densities, flat })
}

fn profile_at(prepared: &PreparedSamples, q: f64) -> LogLikProfile {
    let mut value = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for &(p0, p1) in &prepared.densities {
        let f = q * p1 + (1.0 - q) * p0;
        value += f.ln();
        let ratio = (p1 - p0) / f;
        d1 += ratio;
        d2 -= ratio * ratio;
    }
    LogLikProfile {
        value,
        first_derivative: d1,
        second_derivative: d2,
    }
}

/// Trimmed MLE from unlabeled data: maximize the concave mixture
/// log-likelihood over `[theta, 1 - theta]` to tolerance `tol` on `q`.
/// Endpoint derivative signs decide clamping; otherwise bisection on the
/// first derivative, with a golden-section fallback if the derivative
/// vanishes on a flat stretch.
pub fn mle_unlabeled(
    pair: &DensityPair,
    samples: &UnlabeledDataset,
    theta: f64,
    tol: f64,
) -> Result<EstimateResult> {
    check_theta(theta)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("tol", format!("{tol} (must be > 0)")));
    }
    let prepared = prepare_samples(pair, samples)?;
    if prepared.flat {
        return Ok(EstimateResult {
            q_hat: 0.5,
            mode: EstimateMode::Unlabeled,
            trimmed: false,
            degenerate: true,
            tol: 0.0,
            iterations: 0,
        });
    }

    let (lo, hi) = (theta, 1.0 - theta);
    let d1 = |q: f64| profile_at(&prepared, q).first_derivative;
    let d_lo = d1(lo);
    if d_lo <= 0.0 {
        return Ok(clamped(lo, d_lo < 0.0));
    }
    let d_hi = d1(hi);
    if d_hi >= 0.0 {
        return Ok(clamped(hi, d_hi > 0.0));
    }

    let (mut a, mut b) = (lo, hi);
    let mut iterations = 0;
    while b - a > tol {
        iterations += 1;
        let mid = 0.5 * (a + b);
        let dm = d1(mid);
        if dm > 0.0 {
            a = mid;
        } else if dm < 0.0 {
            b = mid;
        } else {
            // Exact zero of the derivative: interior maximizer if strictly
            // concave; otherwise a flat stretch, resolved on the value.
            if profile_at(&prepared, mid).second_derivative < 0.0 {
                return Ok(interior(mid, 0.0, iterations));
            }
            let (x, _) = numeric::golden_section_max(
                |q| profile_at(&prepared, q).value,
                a,
                b,
                tol,
            );
            return Ok(interior(x, tol, iterations));
        }
    }
    Ok(interior(0.5 * (a + b), b - a, iterations))
}

fn clamped(q_hat: f64, trimmed: bool) -> EstimateResult {
    EstimateResult {
        q_hat,
        mode: EstimateMode::Unlabeled,
        trimmed,
        degenerate: false,
        tol: 0.0,
        iterations: 0,
    }
}

fn interior(q_hat: f64, tol: f64, iterations: usize) -> EstimateResult {
    EstimateResult {
        q_hat,
        mode: EstimateMode::Unlabeled,
        trimmed: false,
        degenerate: false,
        tol,
        iterations,
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 0.5) {
        return Err(Error::invalid(
            "theta",
            format!("{theta} (must be in (0, 1/2))"),
        ));
    }
    Ok(())
}
