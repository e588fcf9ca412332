//! Distances and divergences between the two class-conditional densities and
//! between mixture laws: total variation, squared Hellinger, chi-square,
//! Bernoulli KL, the labeled joint KL, mixture Fisher information, and the
//! Hellinger distance between prior-shifted mixtures.
//!
//! All KL values are in nats. Quadrature-backed computations are generic over
//! [`ClassConditionalPair`] so the same code serves the built-in families and
//! the Gaussian-mixture test corpus.

use serde::{Deserialize, Serialize};

use crate::density::{ClassConditionalPair, Domain, Hypothesis};
use crate::numeric::{self, integrate_split};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    Tv,
    HellingerSq,
    ChiSq,
    Kl,
}

/// A computed divergence with its evaluation method and achieved tolerance,
/// the JSON shape emitted by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivergenceValue {
    pub kind: DivergenceKind,
    pub value: f64,
    pub method: String,
    pub tol: f64,
}

const QUAD_TOL: f64 = 1e-10;

/// Total variation `V(p1, p0) = 1 - integral of min(p0, p1)`.
pub fn total_variation<P: ClassConditionalPair>(pair: &P) -> Result<f64> {
    Ok(total_variation_detail(pair)?.0)
}

fn total_variation_detail<P: ClassConditionalPair>(pair: &P) -> Result<(f64, f64)> {
    if pair.equal_densities() {
        return Ok((0.0, 0.0));
    }
    match pair.domain() {
        Domain::Atoms(atoms) => {
            let s: f64 = atoms
                .iter()
                .map(|&x| {
                    pair.density(Hypothesis::H0, x)
                        .min(pair.density(Hypothesis::H1, x))
                })
                .sum();
            Ok(((1.0 - s).clamp(0.0, 1.0), 0.0))
        }
        Domain::Continuous { lo, hi, cuts } => {
            // Split at density crossings too: min(p0, p1) has kinks there.
            let cuts = with_crossings(pair, lo, hi, cuts);
            let q = integrate_split(
                |x| {
                    pair.density(Hypothesis::H0, x)
                        .min(pair.density(Hypothesis::H1, x))
                },
                lo,
                hi,
                &cuts,
                QUAD_TOL,
            )?;
            Ok(((1.0 - q.value).clamp(0.0, 1.0), q.error))
        }
    }
}

/// Squared Hellinger distance `integral of (sqrt(p1) - sqrt(p0))^2`, in `[0, 2]`.
pub fn hellinger_sq<P: ClassConditionalPair>(pair: &P) -> Result<f64> {
    Ok(hellinger_sq_detail(pair)?.0)
}

fn hellinger_sq_detail<P: ClassConditionalPair>(pair: &P) -> Result<(f64, f64)> {
    if pair.equal_densities() {
        return Ok((0.0, 0.0));
    }
    let f = |x: f64| {
        let d = pair.density(Hypothesis::H1, x).sqrt() - pair.density(Hypothesis::H0, x).sqrt();
        d * d
    };
    match pair.domain() {
        Domain::Atoms(atoms) => Ok((atoms.iter().map(|&x| f(x)).sum::<f64>().min(2.0), 0.0)),
        Domain::Continuous { lo, hi, cuts } => {
            let q = integrate_split(f, lo, hi, &cuts, QUAD_TOL)?;
            Ok((q.value.clamp(0.0, 2.0), q.error))
        }
    }
}

/// Chi-square divergence of `p1` from `p0`:
/// `integral over {p0 p1 > 0} of p1^2/p0 - 1`, with a `+inf` sentinel when
/// `p1` carries mass where `p0` vanishes.
pub fn chi_sq<P: ClassConditionalPair>(pair: &P) -> Result<f64> {
    Ok(chi_sq_detail(pair)?.0)
}

fn chi_sq_detail<P: ClassConditionalPair>(pair: &P) -> Result<(f64, f64)> {
    if pair.equal_densities() {
        return Ok((0.0, 0.0));
    }
    match pair.domain() {
        Domain::Atoms(atoms) => {
            let mut sum = 0.0;
            for &x in &atoms {
                let p0 = pair.density(Hypothesis::H0, x);
                let p1 = pair.density(Hypothesis::H1, x);
                if p0 == 0.0 {
                    if p1 > 0.0 {
                        return Ok((f64::INFINITY, 0.0));
                    }
                    continue;
                }
                if p1 > 0.0 {
                    sum += p1 * p1 / p0;
                }
            }
            Ok(((sum - 1.0).max(0.0), 0.0))
        }
        Domain::Continuous { lo, hi, cuts } => {
            // Mass of p1 on {p0 = 0} means the divergence is infinite.
            for x in numeric::lin_spaced(lo, hi, 2048) {
                if pair.density(Hypothesis::H0, x) == 0.0 && pair.density(Hypothesis::H1, x) > 0.0
                {
                    return Ok((f64::INFINITY, 0.0));
                }
            }
            let q = integrate_split(
                |x| {
                    let p0 = pair.density(Hypothesis::H0, x);
                    let p1 = pair.density(Hypothesis::H1, x);
                    if p0 > 0.0 && p1 > 0.0 {
                        p1 * p1 / p0
                    } else {
                        0.0
                    }
                },
                lo,
                hi,
                &cuts,
                QUAD_TOL,
            )?;
            Ok(((q.value - 1.0).max(0.0), q.error))
        }
    }
}

/// KL divergence between `Bernoulli(a)` and `Bernoulli(b)` in nats, with the
/// conventions `0 log 0 = 0` and a `+inf` sentinel when `b` is 0 or 1 while
/// `a` differs.
pub fn bernoulli_kl(a: f64, b: f64) -> f64 {
    assert!((0.0..=1.0).contains(&a), "a = {a} outside [0, 1]");
    assert!((0.0..=1.0).contains(&b), "b = {b} outside [0, 1]");
    if a == b {
        return 0.0;
    }
    if b == 0.0 || b == 1.0 {
        return f64::INFINITY;
    }
    xlogy(a, a / b) + xlogy(1.0 - a, (1.0 - a) / (1.0 - b))
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Per-sample KL divergence between the joint laws of `(X, Y)` under priors
/// `qa` and `qb` with shared class-conditional densities. The joint KL
/// reduces to the Bernoulli KL of the priors.
pub fn labeled_joint_kl<P: ClassConditionalPair>(_pair: &P, qa: f64, qb: f64) -> Result<f64> {
    for (name, v) in [("qa", qa), ("qb", qb)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::invalid(name, format!("{v} (must be in (0, 1))")));
        }
    }
    Ok(bernoulli_kl(qa, qb))
}

/// Fisher information of the prior in the unlabeled mixture model:
/// `integral of (p1 - p0)^2 / (q p1 + (1-q) p0)`.
pub fn fisher_information_unlabeled<P: ClassConditionalPair>(pair: &P, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid("q", format!("{q} (must be in (0, 1))")));
    }
    if pair.equal_densities() {
        return Ok(0.0);
    }
    let f = |x: f64| {
        let p0 = pair.density(Hypothesis::H0, x);
        let p1 = pair.density(Hypothesis::H1, x);
        let mix = q * p1 + (1.0 - q) * p0;
        if mix == 0.0 {
            0.0
        } else {
            (p1 - p0) * (p1 - p0) / mix
        }
    };
    match pair.domain() {
        Domain::Atoms(atoms) => Ok(atoms.iter().map(|&x| f(x)).sum()),
        Domain::Continuous { lo, hi, cuts } => {
            Ok(integrate_split(f, lo, hi, &cuts, QUAD_TOL)?.value.max(0.0))
        }
    }
}

/// Squared Hellinger distance between the mixtures at priors `q` and `q + h`.
pub fn hellinger_shift_sq<P: ClassConditionalPair>(pair: &P, q: f64, h: f64) -> Result<f64> {
    for (name, v) in [("q", q), ("q + h", q + h)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::invalid(name, format!("{v} (must be in (0, 1))")));
        }
    }
    if h == 0.0 || pair.equal_densities() {
        return Ok(0.0);
    }
    let mix = |prior: f64, x: f64| {
        prior * pair.density(Hypothesis::H1, x) + (1.0 - prior) * pair.density(Hypothesis::H0, x)
    };
    let f = |x: f64| {
        let d = mix(q + h, x).sqrt() - mix(q, x).sqrt();
        d * d
    };
    match pair.domain() {
        Domain::Atoms(atoms) => Ok(atoms.iter().map(|&x| f(x)).sum()),
        Domain::Continuous { lo, hi, cuts } => Ok(integrate_split(f, lo, hi, &cuts, QUAD_TOL)?
            .value
            .clamp(0.0, 2.0)),
    }
}

/// Total variation between the mixtures at priors `q` and `q + h`; equals
/// `|h| V(p1, p0)` and is used to verify that identity.
pub fn mixture_shift_tv<P: ClassConditionalPair>(pair: &P, q: f64, h: f64) -> Result<f64> {
    for (name, v) in [("q", q), ("q + h", q + h)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::invalid(name, format!("{v} (must be in (0, 1))")));
        }
    }
    // |f(x, q+h) - f(x, q)| = |h| |p1 - p0| pointwise; integrate directly.
    let f = |x: f64| {
        (pair.density(Hypothesis::H1, x) - pair.density(Hypothesis::H0, x)).abs() * h.abs() / 2.0
    };
    match pair.domain() {
        Domain::Atoms(atoms) => Ok(atoms.iter().map(|&x| f(x)).sum()),
        Domain::Continuous { lo, hi, cuts } => {
            let cuts = with_crossings(pair, lo, hi, cuts);
            Ok(integrate_split(f, lo, hi, &cuts, QUAD_TOL)?.value)
        }
    }
}

/// Compute one divergence kind with reporting metadata for the CLI.
pub fn divergence_report<P: ClassConditionalPair>(
    pair: &P,
    kind: DivergenceKind,
) -> Result<DivergenceValue> {
    let exact = matches!(pair.domain(), Domain::Atoms(_));
    let (value, tol) = match kind {
        DivergenceKind::Tv => total_variation_detail(pair)?,
        DivergenceKind::HellingerSq => hellinger_sq_detail(pair)?,
        DivergenceKind::ChiSq => chi_sq_detail(pair)?,
        DivergenceKind::Kl => {
            return Err(Error::invalid(
                "kind",
                "kl is defined for Bernoulli parameters, not density pairs",
            ))
        }
    };
    Ok(DivergenceValue {
        kind,
        value,
        method: if exact { "exact-sum" } else { "quadrature" }.to_string(),
        tol,
    })
}

/// Add the sign-change points of `p1 - p0` to the quadrature cut list.
fn with_crossings<P: ClassConditionalPair>(
    pair: &P,
    lo: f64,
    hi: f64,
    mut cuts: Vec<f64>,
) -> Vec<f64> {
    let grid = crate::detector::scan_grid(lo, hi, &cuts);
    let gap_positive =
        |x: f64| pair.density(Hypothesis::H1, x) >= pair.density(Hypothesis::H0, x);
    cuts.extend(numeric::scan_transitions(gap_positive, &grid, 1e-12));
    cuts
}
