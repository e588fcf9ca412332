//! The two-hypothesis minimax construction: a shared piecewise polynomial
//! density pair with priors `q0 = 1/2` and `q1 = 1/2 + t^{kappa-1}` where
//! `t = n^{-1/(2 kappa - 2)}`, plus closed-form regression functions, the
//! symmetric-difference distance between the optimal decision regions, the
//! KL budget of the two joint sample laws, and the constants entering the
//! excess-risk floor `c' n^{-(1+alpha)/2}`.

use serde::{Deserialize, Serialize};

use crate::density::{DensityPair, Scenario};
use crate::detector::decision_boundaries;
use crate::divergences::labeled_joint_kl;
use crate::numeric;
use crate::{Error, Result};

/// Largest admissible `t`; the construction's small-`t` expansions degrade
/// beyond this, so smaller sample sizes are rejected.
const T_MAX: f64 = 0.2;
/// Upper admissibility bound on `q1` (trim convention `theta = 0.1`).
const Q1_MAX: f64 = 0.9;

/// A pair of joint laws sharing class-conditional densities and differing
/// only in the prior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoHypothesisInstance {
    pub pair: DensityPair,
    pub kappa: f64,
    pub c: f64,
    pub t: f64,
    pub n: usize,
    pub q0: f64,
    pub q1: f64,
    /// Margin exponent `1 / (kappa - 1)` of both hypotheses.
    pub alpha: f64,
}

/// Constants of the excess-risk floor.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LowerBoundConstants {
    pub c_eta: f64,
    pub c_alpha: f64,
    pub c_prime: f64,
    pub epsilon0: f64,
    pub tau_star: f64,
}

/// Build the instance at sample size `n`: `t = n^{-1/(2 kappa - 2)}`,
/// `q0 = 1/2`, `q1 = 1/2 + t^{kappa - 1}`. Errors when `n` is too small for
/// `t` to be admissible.
pub fn construct_two_hypotheses(kappa: f64, c: f64, n: usize) -> Result<TwoHypothesisInstance> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if kappa.is_nan() || kappa <= 1.0 {
        return Err(Error::invalid("kappa", format!("{kappa} (must be > 1)")));
    }
    let t = (n as f64).powf(-1.0 / (2.0 * kappa - 2.0));
    if t >= T_MAX {
        return Err(Error::Construction(format!(
            "n = {n} too small: t = {t:.4} is not << 1 (need t < {T_MAX})"
        )));
    }
    let q1 = 0.5 + t.powf(kappa - 1.0);
    if q1 >= Q1_MAX {
        return Err(Error::Construction(format!(
            "q1 = {q1:.4} leaves the admissible prior range (need q1 < {Q1_MAX})"
        )));
    }
    let pair = DensityPair::appendix_a(kappa, c, t)?;
    Ok(TwoHypothesisInstance {
        pair,
        kappa,
        c,
        t,
        n,
        q0: 0.5,
        q1,
        alpha: 1.0 / (kappa - 1.0),
    })
}

impl TwoHypothesisInstance {
    pub fn prior(&self, j: usize) -> f64 {
        match j {
            0 => self.q0,
            1 => self.q1,
            _ => panic!("hypothesis index must be 0 or 1"),
        }
    }

    /// The instance viewed as a scenario under hypothesis `j`.
    pub fn scenario(&self, j: usize, theta: f64) -> Result<Scenario> {
        Scenario::new(self.pair.clone(), self.prior(j), theta)
    }

    /// `tau* = (1 - c) t^{kappa - 1}`: the range over which the margin
    /// probability of hypothesis 0 follows an exact power law.
    pub fn tau_star(&self) -> f64 {
        (1.0 - self.c) * self.t.powf(self.kappa - 1.0)
    }

    /// A probe grid for the margin fit of hypothesis `j`, spanning 1.6
    /// decades inside the exact power-law regime.
    pub fn margin_grid(&self, j: usize) -> Vec<f64> {
        let c1 = self.pair.appendix_params().expect("appendix pair").c1;
        let tau_max = match j {
            // |eta_0 - 1/2| reaches c1 (1-t)^{kappa-1} on the right piece.
            0 => 0.9 * c1 * (1.0 - self.t).powf(self.kappa - 1.0),
            // |eta_1 - 1/2| reaches c t^{kappa-1} on the left piece.
            1 => 0.9 * self.c * self.t.powf(self.kappa - 1.0),
            _ => panic!("hypothesis index must be 0 or 1"),
        };
        numeric::log_spaced(tau_max / 10f64.powf(1.6), tau_max, 10)
    }
}

/// The closed-form regression functions of the construction, piecewise in
/// `x` on `[0, 1]`. Must agree with the density-derived `eta(x; q_j)`.
pub fn eta_closed_form(instance: &TwoHypothesisInstance, j: usize, x: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x), "x = {x} outside [0, 1]");
    let k = instance.kappa - 1.0;
    let t = instance.t;
    let c = instance.c;
    let c1 = instance.pair.appendix_params().expect("appendix pair").c1;
    let s = t.powf(k);
    match j {
        0 => {
            if x < t {
                let v = c * x.powf(k);
                (0.5 + v) * (1.0 - 2.0 * s) / (1.0 - 4.0 * v * s)
            } else {
                0.5 + c1 * (x - t).powf(k)
            }
        }
        1 => {
            if x < t {
                0.5 + c * x.powf(k)
            } else {
                let u = c1 * (x - t).powf(k);
                (1.0 + 2.0 * s) * (0.5 + u) / (1.0 + 4.0 * s * u)
            }
        }
        _ => panic!("hypothesis index must be 0 or 1"),
    }
}

/// Lebesgue measure of the symmetric difference of the two optimal decision
/// regions; equals `t` for this construction.
pub fn symmetric_difference(instance: &TwoHypothesisInstance) -> Result<f64> {
    let region0 = decision_boundaries(&instance.pair, instance.q0)?.decision_region(1);
    let region1 = decision_boundaries(&instance.pair, instance.q1)?.decision_region(1);
    Ok(interval_symmetric_difference(&region0, &region1))
}

/// Measure of the symmetric difference of two unions of disjoint intervals.
fn interval_symmetric_difference(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut edges: Vec<f64> = a
        .iter()
        .chain(b)
        .flat_map(|&(lo, hi)| [lo, hi])
        .collect();
    edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
    edges.dedup();
    let contains = |set: &[(f64, f64)], x: f64| set.iter().any(|&(lo, hi)| x >= lo && x < hi);
    let mut measure = 0.0;
    for w in edges.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        if contains(a, mid) != contains(b, mid) {
            measure += w[1] - w[0];
        }
    }
    measure
}

/// `(n * KL of one joint sample, 8 n t^{2 kappa - 2})`; the first never
/// exceeds the second.
pub fn kl_budget_check(instance: &TwoHypothesisInstance) -> (f64, f64) {
    let kl = instance.n as f64
        * labeled_joint_kl(&instance.pair, instance.q1, instance.q0)
            .expect("priors are interior");
    let budget = 8.0 * instance.n as f64 * instance.t.powf(2.0 * instance.kappa - 2.0);
    (kl, budget)
}

/// Assemble the floor constants from a margin bound `P <= C_eta tau^alpha`
/// valid for `tau <= tau*`:
/// `c_alpha = 2 C_eta^{-1/alpha} alpha (alpha+1)^{-1-1/alpha}`,
/// `epsilon0 = C_eta (alpha+1) tau*^alpha`, and
/// `c' = (1/4) e^{-8} c_alpha (1/2)^{(alpha+1)/alpha}`.
pub fn lower_bound_constants(alpha: f64, c_eta: f64, tau_star: f64) -> LowerBoundConstants {
    assert!(alpha > 0.0, "alpha must be positive");
    assert!(c_eta > 0.0, "c_eta must be positive");
    assert!(
        tau_star > 0.0 && tau_star <= 0.5,
        "tau_star must be in (0, 1/2]"
    );
    let c_alpha =
        2.0 * c_eta.powf(-1.0 / alpha) * alpha * (alpha + 1.0).powf(-1.0 - 1.0 / alpha);
    let epsilon0 = c_eta * (alpha + 1.0) * tau_star.powf(alpha);
    let c_prime = 0.25 * (-8.0f64).exp() * c_alpha * 0.5f64.powf((alpha + 1.0) / alpha);
    LowerBoundConstants {
        c_eta,
        c_alpha,
        c_prime,
        epsilon0,
        tau_star,
    }
}

/// The excess-risk floor `c' n^{-(1+alpha)/2}`.
pub fn minimax_floor(n: usize, alpha: f64, c_prime: f64) -> f64 {
    c_prime * (n as f64).powf(-(1.0 + alpha) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::eta;

    #[test]
    fn construction_parameters() {
        let inst = construct_two_hypotheses(2.0, 0.01, 100).unwrap();
        assert!((inst.t - 0.1).abs() < 1e-12);
        assert!((inst.q1 - 0.6).abs() < 1e-12);
        assert_eq!(inst.q0, 0.5);
        assert!((inst.alpha - 1.0).abs() < 1e-12);

        let inst = construct_two_hypotheses(3.0, 0.01, 10_000).unwrap();
        assert!((inst.t - 0.1).abs() < 1e-12);
        assert!((inst.q1 - 0.51).abs() < 1e-12);
        assert!((inst.alpha - 0.5).abs() < 1e-12);
    }

    #[test]
    fn construction_rejects_small_n() {
        assert!(matches!(
            construct_two_hypotheses(2.0, 0.01, 20),
            Err(Error::Construction(_))
        ));
        // kappa = 3 at n = 100 gives t = 0.316, above the admissible range.
        assert!(construct_two_hypotheses(3.0, 0.01, 100).is_err());
    }

    #[test]
    fn eta1_starts_at_one_half() {
        let inst = construct_two_hypotheses(2.0, 0.01, 100).unwrap();
        assert_eq!(eta_closed_form(&inst, 1, 0.0), 0.5);
    }

    #[test]
    fn closed_forms_match_density_derived_eta() {
        for (kappa, n) in [(2.0, 100), (3.0, 10_000)] {
            let inst = construct_two_hypotheses(kappa, 0.01, n).unwrap();
            for j in [0, 1] {
                let q = inst.prior(j);
                for x in numeric::lin_spaced(0.0, 1.0, 2000) {
                    let closed = eta_closed_form(&inst, j, x);
                    let derived = eta(&inst.pair, q, x).unwrap();
                    assert!(
                        (closed - derived).abs() < 1e-10,
                        "mismatch at x = {x}, j = {j}: {closed} vs {derived}"
                    );
                }
            }
        }
    }

    #[test]
    fn decision_regions_of_both_hypotheses() {
        let inst = construct_two_hypotheses(2.0, 0.01, 100).unwrap();
        // Hypothesis 0 decides 1 exactly on [t, 1]; hypothesis 1 everywhere.
        let b0 = decision_boundaries(&inst.pair, inst.q0).unwrap();
        assert_eq!(b0.labels, vec![0, 1]);
        assert!((b0.points[0] - inst.t).abs() < 1e-9);
        let b1 = decision_boundaries(&inst.pair, inst.q1).unwrap();
        assert!(b1.points.is_empty());
        assert_eq!(b1.labels, vec![1]);
        // eta_1 >= 1/2 pointwise; eta_0 crosses at t.
        for x in numeric::lin_spaced(0.0, 1.0, 2000) {
            assert!(eta_closed_form(&inst, 1, x) >= 0.5 - 1e-10);
        }
    }

    #[test]
    fn symmetric_difference_equals_t() {
        let inst = construct_two_hypotheses(2.0, 0.01, 100).unwrap();
        let d = symmetric_difference(&inst).unwrap();
        assert!((d - 0.1).abs() < 1e-9, "d_delta = {d}");

        // Same hypothesis twice: zero.
        let region = decision_boundaries(&inst.pair, inst.q0)
            .unwrap()
            .decision_region(1);
        assert_eq!(interval_symmetric_difference(&region, &region), 0.0);
    }

    #[test]
    fn symmetric_difference_matches_grid_counting() {
        let inst = construct_two_hypotheses(2.0, 0.01, 100).unwrap();
        let d = symmetric_difference(&inst).unwrap();
        let m = 1_000_000;
        let mut count = 0u64;
        for i in 0..m {
            let x = (i as f64 + 0.5) / m as f64;
            let in0 = eta(&inst.pair, inst.q0, x).unwrap() >= 0.5;
            let in1 = eta(&inst.pair, inst.q1, x).unwrap() >= 0.5;
            if in0 != in1 {
                count += 1;
            }
        }
        let grid_measure = count as f64 / m as f64;
        assert!((d - grid_measure).abs() < 2e-6);
    }

    #[test]
    fn margin_probability_matches_power_law_under_hypothesis_0() {
        // Under q0 the X-marginal is exactly uniform and the margin mass at
        // level tau <= tau* is (tau / c1)^{1/(kappa-1)}.
        let inst = construct_two_hypotheses(2.0, 0.01, 100).unwrap();
        let c1 = inst.pair.appendix_params().unwrap().c1;
        let scenario = inst.scenario(0, 0.1).unwrap();
        // The exact power law covers tau up to c1 (1-t)^{kappa-1}, where the
        // right piece is exhausted; beyond that (still below tau*) the mass
        // saturates at 1 - t because the left piece stays farther from 1/2.
        let cap = c1 * (1.0 - inst.t).powf(inst.kappa - 1.0);
        assert!(cap < inst.tau_star());
        for frac in [0.05, 0.2, 0.6, 0.95] {
            let tau = frac * cap;
            let expected = (tau / c1).powf(1.0 / (inst.kappa - 1.0));
            let got = crate::margin::margin_probability(&scenario, tau).unwrap();
            assert!(
                (got - expected).abs() < 1e-6,
                "tau = {tau}: probability {got} vs {expected}"
            );
        }
        let saturated = crate::margin::margin_probability(&scenario, inst.tau_star()).unwrap();
        assert!((saturated - (1.0 - inst.t)).abs() < 1e-6);
    }

    #[test]
    fn kl_budget_saturates_at_eight() {
        for (kappa, n) in [(2.0, 100), (2.0, 10_000), (3.0, 10_000)] {
            let inst = construct_two_hypotheses(kappa, 0.01, n).unwrap();
            let (kl, budget) = kl_budget_check(&inst);
            assert!(
                (budget - 8.0).abs() < 1e-9,
                "budget {budget} at t = n^(-1/(2k-2))"
            );
            assert!(kl <= budget, "kl {kl} exceeds budget {budget}");
            assert!(kl > 0.0);
        }
    }

    #[test]
    fn kl_vanishes_for_equal_priors() {
        let inst = construct_two_hypotheses(2.0, 0.01, 100).unwrap();
        let kl = labeled_joint_kl(&inst.pair, inst.q0, inst.q0).unwrap();
        assert_eq!(kl, 0.0);
    }

    #[test]
    fn kl_respects_quadratic_bound() {
        let inst = construct_two_hypotheses(2.0, 0.01, 100).unwrap();
        let kl = labeled_joint_kl(&inst.pair, inst.q1, inst.q0).unwrap();
        let gap = inst.q1 - inst.q0;
        assert!(kl <= 8.0 * gap * gap);
    }

    #[test]
    fn floor_constants_arithmetic() {
        let k = lower_bound_constants(1.0, 2.0, 0.09);
        assert!((k.c_alpha - 0.25).abs() < 1e-12);
        // (1/4) e^-8 * 0.25 * 0.25 = e^-8 / 64 ~ 5.2416e-6.
        let expected = (-8.0f64).exp() / 64.0;
        assert!((k.c_prime - expected).abs() < 1e-18);
        assert!((k.epsilon0 - 2.0 * 2.0 * 0.09).abs() < 1e-12);
    }

    #[test]
    fn epsilon0_dominates_half_t() {
        for (kappa, n) in [(2.0, 100), (2.0, 2_500), (3.0, 10_000)] {
            let inst = construct_two_hypotheses(kappa, 0.01, n).unwrap();
            let c1 = inst.pair.appendix_params().unwrap().c1;
            // Margin bound constant of hypothesis 0: P = (tau/c1)^alpha.
            let c_eta = c1.powf(-inst.alpha);
            let k = lower_bound_constants(inst.alpha, c_eta, inst.tau_star());
            assert!(
                k.epsilon0 >= inst.t / 2.0,
                "epsilon0 = {} below t/2 = {}",
                k.epsilon0,
                inst.t / 2.0
            );
        }
    }

    #[test]
    fn floor_shapes() {
        let c_prime = (-8.0f64).exp() / 64.0;
        let floor = minimax_floor(100, 1.0, c_prime);
        assert!((floor - c_prime / 100.0).abs() < 1e-20);
        // Monotone nonincreasing in n.
        let mut prev = f64::INFINITY;
        for n in [1, 10, 100, 1_000] {
            let f = minimax_floor(n, 0.5, 1.0);
            assert!(f <= prev);
            prev = f;
        }
        // alpha = 0 recovers the n^{-1/2} shape.
        let f = minimax_floor(400, 0.0, 1.0);
        assert!((f - 0.05).abs() < 1e-15);
    }
}
