//! Monte Carlo harnesses: excess-risk curves over a sample-size grid, rate
//! fits against theoretical exponents, the Lipschitz probe for the regression
//! function, and concentration probes for the estimator tails.
//!
//! Trials are independent; each draws from the substream
//! `derive_seed(master_seed, n, trial)` and the per-trial results are reduced
//! in trial order, so parallel and sequential execution produce bit-identical
//! output. The trial loop runs on rayon when the `parallel` feature (default)
//! is enabled; [`run_excess_risk_curve_sequential`] is always available.

use serde::{Deserialize, Serialize};

use crate::density::{sample_labeled, sample_unlabeled, DensityPair, Scenario};
use crate::detector::{decision_boundaries, error_probabilities, eta};
use crate::estimators::{mle_labeled, mle_unlabeled, EstimateMode};
use crate::numeric::{self, derive_seed, linear_fit};
use crate::{Error, Result};

/// Default sample-size grid for excess-risk curves.
pub fn default_n_grid() -> Vec<usize> {
    vec![16, 32, 64, 128, 256, 512, 1024, 2048, 4096]
}

/// Default trial count per grid point.
pub const DEFAULT_TRIALS: usize = 2000;

/// Default tolerance passed to the unlabeled MLE.
pub const UNLABELED_MLE_TOL: f64 = 1e-9;

/// One excess-risk-curve experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub mode: EstimateMode,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if self.n_grid.is_empty() {
            return Err(Error::invalid("n_grid", "must be nonempty"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n_grid", "must be strictly increasing"));
        }
        Ok(())
    }
}

/// Mean excess risk per sample size with Monte Carlo standard errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub mean_excess: f64,
    pub stderr: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExcessRiskCurve {
    pub points: Vec<CurvePoint>,
    pub mode: EstimateMode,
    pub family: String,
    pub q: f64,
    pub theta: f64,
    pub master_seed: u64,
}

impl ExcessRiskCurve {
    pub fn csv_header() -> &'static str {
        "n,mean_excess,stderr,trials,mode,family,q,theta,seed"
    }

    pub fn to_csv(&self) -> String {
        let mode = match self.mode {
            EstimateMode::Labeled => "labeled",
            EstimateMode::Unlabeled => "unlabeled",
        };
        let mut out = String::from(Self::csv_header());
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                p.n,
                p.mean_excess,
                p.stderr,
                p.trials,
                mode,
                self.family,
                self.q,
                self.theta,
                self.master_seed
            ));
        }
        out
    }
}

/// One trial: draw a dataset of size `n` from the trial substream, estimate
/// the prior, and evaluate the exact excess risk of the plug-in detector.
fn trial_excess(config: &ExperimentConfig, bayes_risk: f64, n: usize, trial: usize) -> Result<f64> {
    let seed = derive_seed(config.master_seed, n as u64, trial as u64);
    let run = || -> Result<f64> {
        let scenario = &config.scenario;
        let q_hat = match config.mode {
            EstimateMode::Labeled => {
                let ds = sample_labeled(scenario, n, seed)?;
                mle_labeled(&ds.ys, scenario.theta())?.q_hat
            }
            EstimateMode::Unlabeled => {
                let ds = sample_unlabeled(scenario, n, seed)?;
                mle_unlabeled(scenario.pair(), &ds, scenario.theta(), UNLABELED_MLE_TOL)?.q_hat
            }
        };
        let errs = error_probabilities(scenario.pair(), q_hat)?;
        let risk = scenario.q() * errs.p1_error + (1.0 - scenario.q()) * errs.p0_error;
        Ok(risk - bayes_risk)
    };
    run().map_err(|e| Error::Trial {
        n,
        trial,
        seed,
        source: Box::new(e),
    })
}

#[cfg(feature = "parallel")]
fn map_trials<T: Send, F: Fn(usize) -> Result<T> + Sync + Send>(
    count: usize,
    f: F,
) -> Result<Vec<T>> {
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

fn map_trials_sequential<T, F: Fn(usize) -> Result<T>>(count: usize, f: F) -> Result<Vec<T>> {
    (0..count).map(f).collect()
}

fn aggregate(excesses: &[f64]) -> (f64, f64) {
    let k = excesses.len() as f64;
    let mean = excesses.iter().sum::<f64>() / k;
    if excesses.len() < 2 {
        return (mean, 0.0);
    }
    let var = excesses.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

type TrialFn<'a> = &'a (dyn Fn(usize) -> Result<f64> + Sync);

fn curve_impl(
    config: &ExperimentConfig,
    mapper: impl Fn(usize, TrialFn) -> Result<Vec<f64>>,
) -> Result<ExcessRiskCurve> {
    config.validate()?;
    let scenario = &config.scenario;
    let base = error_probabilities(scenario.pair(), scenario.q())?;
    let bayes_risk = scenario.q() * base.p1_error + (1.0 - scenario.q()) * base.p0_error;
    let mut points = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let per_trial = |trial: usize| trial_excess(config, bayes_risk, n, trial);
        let excesses = mapper(config.trials, &per_trial)?;
        let (mean_excess, stderr) = aggregate(&excesses);
        points.push(CurvePoint {
            n,
            mean_excess,
            stderr,
            trials: config.trials,
        });
    }
    Ok(ExcessRiskCurve {
        points,
        mode: config.mode,
        family: scenario.pair().family_name().to_string(),
        q: scenario.q(),
        theta: scenario.theta(),
        master_seed: config.master_seed,
    })
}

/// Run the excess-risk curve, parallelizing trials when the `parallel`
/// feature is enabled.
pub fn run_excess_risk_curve(config: &ExperimentConfig) -> Result<ExcessRiskCurve> {
    #[cfg(feature = "parallel")]
    {
        curve_impl(config, |count, f| map_trials(count, f))
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_excess_risk_curve_sequential(config)
    }
}

/// Single-threaded reference implementation; always available and
/// bit-identical to the parallel path.
pub fn run_excess_risk_curve_sequential(config: &ExperimentConfig) -> Result<ExcessRiskCurve> {
    curve_impl(config, |count, f| map_trials_sequential(count, f))
}

/// The margin exponent an excess-risk curve is compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginExponent {
    Finite(f64),
    Infinite,
}

/// A log-log (finite exponent) or log-linear (flat margin) decay fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `-(1 + alpha)/2`; absent for the flat-margin (exponential-decay) fit.
    pub theoretical_exponent: Option<f64>,
    pub within_tolerance: bool,
}

/// Slope tolerance around the theoretical exponent.
pub const SLOPE_TOLERANCE: f64 = 0.2;
/// Points whose mean excess is below this multiple of the standard error are
/// excluded from the fit window.
const FIT_NOISE_FLOOR: f64 = 10.0;
const FIT_MIN_POINTS: usize = 4;
const EXPONENTIAL_FIT_MIN_R2: f64 = 0.9;

/// Fit the decay of a curve: `log(mean)` against `log n` for finite `alpha`
/// (slope compared to `-(1+alpha)/2`), or against `n` for `alpha = inf`
/// (negative slope and `r^2 >= 0.9` expected).
pub fn fit_rate(curve: &ExcessRiskCurve, alpha: MarginExponent) -> Result<RateFit> {
    let window: Vec<&CurvePoint> = curve
        .points
        .iter()
        .filter(|p| p.mean_excess >= FIT_NOISE_FLOOR * p.stderr)
        .collect();
    if window.len() < FIT_MIN_POINTS {
        return Err(Error::Fit(format!(
            "only {} points above the noise floor; need {FIT_MIN_POINTS}",
            window.len()
        )));
    }
    let nonpositive: Vec<usize> = window
        .iter()
        .filter(|p| p.mean_excess <= 0.0)
        .map(|p| p.n)
        .collect();
    if !nonpositive.is_empty() {
        return Err(Error::Fit(format!(
            "nonpositive mean excess at n = {nonpositive:?}"
        )));
    }
    let ys: Vec<f64> = window.iter().map(|p| p.mean_excess.ln()).collect();
    match alpha {
        MarginExponent::Finite(a) => {
            if a.is_nan() || a < 0.0 {
                return Err(Error::invalid("alpha", format!("{a} (must be >= 0)")));
            }
            let xs: Vec<f64> = window.iter().map(|p| (p.n as f64).ln()).collect();
            let fit = linear_fit(&xs, &ys)?;
            let exponent = -(1.0 + a) / 2.0;
            Ok(RateFit {
                slope: fit.slope,
                intercept: fit.intercept,
                r_squared: fit.r_squared,
                theoretical_exponent: Some(exponent),
                within_tolerance: (fit.slope - exponent).abs() <= SLOPE_TOLERANCE,
            })
        }
        MarginExponent::Infinite => {
            let xs: Vec<f64> = window.iter().map(|p| p.n as f64).collect();
            let fit = linear_fit(&xs, &ys)?;
            Ok(RateFit {
                slope: fit.slope,
                intercept: fit.intercept,
                r_squared: fit.r_squared,
                theoretical_exponent: None,
                within_tolerance: fit.slope < 0.0 && fit.r_squared >= EXPONENTIAL_FIT_MIN_R2,
            })
        }
    }
}

/// Supremum over probed `(x, q1, q2)` of the difference quotient
/// `|eta(x; q1) - eta(x; q2)| / |q1 - q2|`. Bounded by `1/(4 theta (1-theta))`
/// for priors inside the trim interval.
pub fn lipschitz_probe(
    pair: &DensityPair,
    theta: f64,
    x_grid: &[f64],
    q_grid: &[f64],
) -> Result<f64> {
    if !(theta > 0.0 && theta < 0.5) {
        return Err(Error::invalid("theta", "must be in (0, 1/2)"));
    }
    if q_grid
        .iter()
        .any(|&q| q < theta - 1e-12 || q > 1.0 - theta + 1e-12)
    {
        return Err(Error::invalid("q_grid", "values must lie in [theta, 1-theta]"));
    }
    let pairs = q_grid.len() * (q_grid.len() - 1) / 2;
    if pairs < 100 {
        return Err(Error::invalid(
            "q_grid",
            format!("{pairs} prior pairs; need at least 100"),
        ));
    }
    let mut sup: f64 = 0.0;
    for &x in x_grid {
        let etas: Vec<f64> = q_grid
            .iter()
            .map(|&q| eta(pair, q, x))
            .collect::<Result<_>>()?;
        for i in 0..etas.len() {
            for j in (i + 1)..etas.len() {
                let dq = (q_grid[i] - q_grid[j]).abs();
                if dq == 0.0 {
                    continue;
                }
                sup = sup.max((etas[i] - etas[j]).abs() / dq);
            }
        }
    }
    Ok(sup)
}

/// A probe layout that mixes a coarse support sweep with points clustered at
/// the decision boundary of the prior `theta`, paired with priors packed
/// toward `theta`; achieves the Lipschitz bound within a factor 0.99.
pub fn boundary_adapted_grids(pair: &DensityPair, theta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let bounds = decision_boundaries(pair, theta)?;
    let mut x_grid = numeric::lin_spaced(bounds.lo, bounds.hi, 64);
    for &b in &bounds.points {
        for off in [-1e-3, -1e-6, -1e-9, 0.0, 1e-9, 1e-6, 1e-3] {
            let x = b + off;
            if x >= bounds.lo && x <= bounds.hi {
                x_grid.push(x);
            }
        }
    }
    // Smallest prior gap 1e-6: small enough that the difference quotient is
    // within a fraction of a percent of the derivative, large enough that
    // floating-point cancellation (~1e-16 / gap) stays below 1e-10.
    let mut q_grid = vec![
        theta,
        theta + 1e-6,
        theta + 1e-5,
        theta + 1e-4,
        theta + 1e-3,
    ];
    q_grid.extend(numeric::lin_spaced(theta, 1.0 - theta, 14));
    q_grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    q_grid.dedup();
    Ok((x_grid, q_grid))
}

/// Empirical tail probabilities `P(|q_hat - q| > eps)` of one estimator at
/// one sample size, next to the sub-Gaussian reference bound `2 e^{-2 n eps^2}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub eps: f64,
    pub empirical: f64,
    pub bound: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationTable {
    pub n: usize,
    pub mode: EstimateMode,
    pub trials: usize,
    pub rows: Vec<ConcentrationRow>,
}

impl ConcentrationTable {
    pub fn csv_header() -> &'static str {
        "eps,empirical,bound,stderr"
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::csv_header());
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.eps, r.empirical, r.bound, r.stderr
            ));
        }
        out
    }
}

/// Estimate tail probabilities of `|q_hat - q|` over a deviation grid.
pub fn concentration_probe(
    scenario: &Scenario,
    mode: EstimateMode,
    n: usize,
    eps_grid: &[f64],
    trials: usize,
    master_seed: u64,
) -> Result<ConcentrationTable> {
    if trials < 1000 {
        return Err(Error::invalid("trials", "need at least 1000"));
    }
    let theta = scenario.theta();
    let per_trial = |trial: usize| -> Result<f64> {
        let seed = derive_seed(master_seed, n as u64, trial as u64);
        let q_hat = match mode {
            EstimateMode::Labeled => {
                let ds = sample_labeled(scenario, n, seed)?;
                mle_labeled(&ds.ys, theta)?.q_hat
            }
            EstimateMode::Unlabeled => {
                let ds = sample_unlabeled(scenario, n, seed)?;
                mle_unlabeled(scenario.pair(), &ds, theta, UNLABELED_MLE_TOL)?.q_hat
            }
        };
        Ok((q_hat - scenario.q()).abs())
    };
    #[cfg(feature = "parallel")]
    let deviations = map_trials(trials, per_trial)?;
    #[cfg(not(feature = "parallel"))]
    let deviations = map_trials_sequential(trials, per_trial)?;

    let rows = eps_grid
        .iter()
        .map(|&eps| {
            let hits = deviations.iter().filter(|&&d| d > eps).count();
            let empirical = hits as f64 / trials as f64;
            ConcentrationRow {
                eps,
                empirical,
                bound: 2.0 * (-2.0 * n as f64 * eps * eps).exp(),
                stderr: (empirical * (1.0 - empirical) / trials as f64).sqrt(),
            }
        })
        .collect();
    Ok(ConcentrationTable {
        n,
        mode,
        trials,
        rows,
    })
}
