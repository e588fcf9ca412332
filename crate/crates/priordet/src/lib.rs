//! Binary hypothesis detectors built from known class-conditional densities
//! and estimated prior probabilities.
//!
//! The observation model is a pair of known densities `(p0, p1)` with an
//! unknown prior `q = P(Y = 1)`. The crate provides:
//!
//! - density families (Gaussian, discrete pmf, a piecewise polynomial family
//!   with a tunable margin exponent) and seeded sampling of labeled and
//!   unlabeled data ([`density`]),
//! - the plug-in likelihood-ratio detector and exact risk evaluation
//!   ([`detector`]),
//! - trimmed maximum-likelihood estimation of the prior from labels or from
//!   the unlabeled mixture ([`estimators`]),
//! - f-divergences and Fisher-information quantities ([`divergences`]),
//! - margin-condition probing and exponent fitting ([`margin`]),
//! - the two-hypothesis minimax construction and its constants
//!   ([`lowerbound`]),
//! - seeded Monte Carlo harnesses for excess-risk convergence curves, rate
//!   fits, Lipschitz probes and concentration probes ([`experiments`]).
//!
//! Monte Carlo trial loops run on rayon when the `parallel` feature (default)
//! is enabled; results are bit-identical to the sequential fallback because
//! every trial draws from its own deterministic substream and reductions run
//! in trial order.

pub mod density;
pub mod detector;
pub mod divergences;
pub mod estimators;
pub mod experiments;
pub mod fixtures;
pub mod lowerbound;
pub mod margin;
pub mod numeric;

pub use density::{
    sample_labeled, sample_unlabeled, ClassConditionalPair, DensityPair, Domain, Hypothesis,
    LabeledDataset, Scenario, UnlabeledDataset,
};
pub use detector::{risk_report, RiskReport};
pub use estimators::{mle_labeled, mle_unlabeled, EstimateResult};
pub use experiments::{run_excess_risk_curve, ExcessRiskCurve, ExperimentConfig};

/// Error type shared by every module in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("both densities vanish at x = {x}")]
    UndefinedPoint { x: f64 },

    #[error("likelihood ratio undefined at x = {x}: both densities are zero")]
    UndefinedRatio { x: f64 },

    #[error("sample {index} at x = {x} has zero density under both hypotheses")]
    DegenerateSample { index: usize, x: f64 },

    #[error("{context}: requested tolerance {requested:e}, achieved {achieved:e}")]
    Numeric {
        context: &'static str,
        requested: f64,
        achieved: f64,
    },

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("trial {trial} (n = {n}, seed = {seed}) failed: {source}")]
    Trial {
        n: usize,
        trial: usize,
        seed: u64,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
