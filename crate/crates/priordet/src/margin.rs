//! Margin-condition probing: the probability mass the X-marginal puts within
//! `t` of the decision level `eta = 1/2`, and a log-log fit of the margin
//! exponent `alpha` and constant `C0` from a grid of `t` values.

use serde::{Deserialize, Serialize};

use crate::density::{Domain, Scenario};
use crate::detector::{eta, scan_grid};
use crate::numeric::{self, integrate_split, linear_fit};
use crate::{Error, Result};

/// Margin probabilities over a `t`-grid and the fitted power law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginProfile {
    pub t_grid: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// Fitted exponent; `+inf` when a positive margin gap was detected.
    pub alpha_hat: f64,
    /// Fitted constant `exp(intercept)`; 0 in the infinite case.
    pub c0_hat: f64,
    pub r_squared: f64,
    pub infinite: bool,
    /// Largest probed `t` with zero probability (the gap estimate) in the
    /// infinite case; 0 otherwise.
    pub gap_c: f64,
}

const LEVEL_XTOL: f64 = 1e-10;

/// Probability under the X-marginal `q p1 + (1-q) p0` of the margin set
/// `{x : 0 < |eta(x; q) - 1/2| <= t}`.
pub fn margin_probability(scenario: &Scenario, t: f64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::invalid("t", format!("{t} (must be > 0)")));
    }
    let pair = scenario.pair();
    let q = scenario.q();
    if pair.is_degenerate() {
        // eta == q everywhere; the margin set is everything or nothing.
        let gap = (q - 0.5).abs();
        return Ok(if gap > 0.0 && gap <= t { 1.0 } else { 0.0 });
    }
    let in_margin = |x: f64| match eta(pair, q, x) {
        Ok(e) => {
            let gap = (e - 0.5).abs();
            gap > 0.0 && gap <= t
        }
        Err(_) => false,
    };
    match pair.domain() {
        Domain::Atoms(atoms) => {
            let mut mass = 0.0;
            for &x in &atoms {
                if in_margin(x) {
                    mass += q * pair.p1(x) + (1.0 - q) * pair.p0(x);
                }
            }
            Ok(mass)
        }
        Domain::Continuous { lo, hi, cuts } => {
            // Seed the scan with the decision boundaries: the margin set
            // clusters around {eta = 1/2} and can be thinner than a grid
            // cell, but it always contains a neighborhood of each boundary.
            let mut grid = scan_grid(lo, hi, &cuts);
            let boundaries = crate::detector::decision_boundaries(pair, q)?;
            grid.extend(boundaries.points.iter().copied());
            grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
            grid.dedup();
            let mut edges = vec![lo];
            edges.extend(numeric::scan_transitions(in_margin, &grid, LEVEL_XTOL));
            edges.push(hi);
            let marginal = |x: f64| q * pair.p1(x) + (1.0 - q) * pair.p0(x);
            let mut mass = 0.0;
            for w in edges.windows(2) {
                // Probe membership off-center: the interval midpoint can land
                // exactly on the measure-zero excluded level {eta = 1/2}.
                let probe = w[0] + 0.381_966_011_250_105 * (w[1] - w[0]);
                if in_margin(probe) {
                    mass += integrate_split(marginal, w[0], w[1], &cuts, 1e-10)?.value;
                }
            }
            Ok(mass.clamp(0.0, 1.0))
        }
    }
}

/// Default probe grid: 12 logarithmically spaced points in `[1e-3, 0.3]`.
pub fn default_t_grid() -> Vec<f64> {
    numeric::log_spaced(1e-3, 0.3, 12)
}

/// Number of leading zero probabilities required to declare a margin gap.
const INFINITE_MIN_ZEROS: usize = 3;

/// Least-squares fit of `log P` against `log t` over the grid. Detects the
/// flat-margin case (`alpha = +inf`) from a prefix of zero probabilities.
pub fn fit_margin_exponent(scenario: &Scenario, t_grid: &[f64]) -> Result<MarginProfile> {
    if t_grid.len() < 5 {
        return Err(Error::invalid("t_grid", "need at least 5 points"));
    }
    let mut sorted = t_grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted[0] <= 0.0 {
        return Err(Error::invalid("t_grid", "points must be positive"));
    }
    if sorted[sorted.len() - 1] / sorted[0] < 10f64.powf(1.5) {
        return Err(Error::invalid(
            "t_grid",
            "grid must span at least 1.5 decades",
        ));
    }

    let probabilities: Vec<f64> = sorted
        .iter()
        .map(|&t| margin_probability(scenario, t))
        .collect::<Result<_>>()?;

    let zeros = probabilities.iter().take_while(|&&p| p == 0.0).count();
    if probabilities[zeros..].contains(&0.0) {
        return Err(Error::Fit(
            "zero probabilities interleaved with positive ones".into(),
        ));
    }
    if zeros > 0 {
        if zeros < INFINITE_MIN_ZEROS {
            return Err(Error::Fit(format!(
                "only {zeros} leading zero probabilities; cannot classify the margin"
            )));
        }
        return Ok(MarginProfile {
            t_grid: sorted.clone(),
            gap_c: sorted[zeros - 1],
            probabilities,
            alpha_hat: f64::INFINITY,
            c0_hat: 0.0,
            r_squared: 0.0,
            infinite: true,
        });
    }

    if probabilities.iter().any(|&p| p >= 1.0) {
        return Err(Error::Fit(
            "margin probability saturated at 1 inside the grid".into(),
        ));
    }
    let xs: Vec<f64> = sorted.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = probabilities.iter().map(|p| p.ln()).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(MarginProfile {
        t_grid: sorted,
        probabilities,
        alpha_hat: fit.slope,
        c0_hat: fit.intercept.exp(),
        r_squared: fit.r_squared,
        infinite: false,
        gap_c: 0.0,
    })
}

impl MarginProfile {
    pub fn csv_header() -> &'static str {
        "t,probability"
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::csv_header());
        out.push('\n');
        for (t, p) in self.t_grid.iter().zip(&self.probabilities) {
            out.push_str(&format!("{t},{p}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensityPair;

    fn gaussian_scenario(q: f64, theta: f64) -> Scenario {
        Scenario::new(DensityPair::gaussian(0.0, 2.0, 1.0).unwrap(), q, theta).unwrap()
    }

    #[test]
    fn shrinking_sets_vanish() {
        let scenario = gaussian_scenario(0.5, 0.1);
        let p = margin_probability(&scenario, 1e-6).unwrap();
        assert!(p < 1e-3, "p = {p}");
    }

    #[test]
    fn monotone_in_t() {
        let scenario = gaussian_scenario(0.4, 0.1);
        let mut prev = 0.0;
        for &t in &default_t_grid() {
            let p = margin_probability(&scenario, t).unwrap();
            assert!(p >= prev - 1e-12, "not monotone at t = {t}");
            prev = p;
        }
    }

    #[test]
    fn matches_mc_oracle_at_t_tenth() {
        use crate::density::sample_unlabeled;
        let scenario = gaussian_scenario(0.5, 0.1);
        let exact = margin_probability(&scenario, 0.1).unwrap();

        let n = 1_000_000;
        let draws = sample_unlabeled(&scenario, n, 991).unwrap();
        let mut hits = 0u64;
        for &x in &draws.xs {
            let gap = (eta(scenario.pair(), 0.5, x).unwrap() - 0.5).abs();
            if gap > 0.0 && gap <= 0.1 {
                hits += 1;
            }
        }
        let mc = hits as f64 / n as f64;
        let se = (mc * (1.0 - mc) / n as f64).sqrt();
        assert!(
            (mc - exact).abs() < 3.0 * se,
            "mc {mc} vs exact {exact} (se {se})"
        );
    }

    #[test]
    fn exact_power_law_recovered() {
        // Synthetic check of the regression step alone: P = 2 t^{3/2}.
        let grid = numeric::log_spaced(1e-3, 0.1, 8);
        let xs: Vec<f64> = grid.iter().map(|t| t.ln()).collect();
        let ys: Vec<f64> = grid.iter().map(|t| (2.0 * t.powf(1.5)).ln()).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.intercept.exp() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_margin_exponent_near_one() {
        for q in [0.3, 0.5, 0.7] {
            let scenario = gaussian_scenario(q, 0.1);
            let profile = fit_margin_exponent(&scenario, &default_t_grid()).unwrap();
            assert!(!profile.infinite);
            assert!(
                (profile.alpha_hat - 1.0).abs() <= 0.15,
                "alpha_hat = {} at q = {q}",
                profile.alpha_hat
            );
        }
    }

    #[test]
    fn margin_constant_prior_dependence_for_gaussian_marginal() {
        // The margin set of an equal-variance Gaussian pair is a fixed-width
        // window around the decision boundary, and the boundary migrates into
        // the marginal's tails as q leaves 1/2. The fitted constant therefore
        // shrinks toward the trim edge while the exponent stays near 1; the
        // near-boundary marginal density 2 q p1(x*) quantifies the drop.
        let near_edge = gaussian_scenario(0.05, 0.01);
        let centered = gaussian_scenario(0.5, 0.01);
        let grid = default_t_grid();
        let edge_fit = fit_margin_exponent(&near_edge, &grid).unwrap();
        let center_fit = fit_margin_exponent(&centered, &grid).unwrap();
        assert!((edge_fit.alpha_hat - 1.0).abs() <= 0.15);
        assert!(edge_fit.c0_hat > 0.0 && edge_fit.c0_hat.is_finite());
        assert!(
            edge_fit.c0_hat < center_fit.c0_hat,
            "c0 at q=0.05: {}, at q=0.5: {}",
            edge_fit.c0_hat,
            center_fit.c0_hat
        );
    }

    #[test]
    fn discrete_pair_detected_as_infinite() {
        let scenario = Scenario::new(DensityPair::default_discrete(), 0.5, 0.1).unwrap();
        let profile = fit_margin_exponent(&scenario, &default_t_grid()).unwrap();
        assert!(profile.infinite);
        assert!(profile.alpha_hat.is_infinite());
        assert!(profile.gap_c > 0.0);
        // eta(0) = 0.3/1.1, eta(1) = 0.7/0.9: the gap is min distance to 1/2.
        let expected_gap = (0.3f64 / 1.1 - 0.5).abs();
        assert!(
            profile.gap_c <= expected_gap,
            "gap estimate {} exceeds the true gap {expected_gap}",
            profile.gap_c
        );
    }

    #[test]
    fn degenerate_pair_margin_mass() {
        let pair = DensityPair::gaussian(0.0, 0.0, 1.0).unwrap();
        let scenario = Scenario::new(pair, 0.45, 0.1).unwrap();
        // |q - 1/2| = 0.05: inside the set for t >= 0.05, empty below.
        assert_eq!(margin_probability(&scenario, 0.04).unwrap(), 0.0);
        assert_eq!(margin_probability(&scenario, 0.05).unwrap(), 1.0);
    }
}
