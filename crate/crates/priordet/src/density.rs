//! Density-pair families, scenarios, and seeded sampling of labeled and
//! unlabeled data from the joint law of `(X, Y)`.
//!
//! Three concrete families are provided:
//!
//! - `gaussian`: two equal-variance normals `N(mean0, sigma)`, `N(mean1, sigma)`;
//! - `discrete`: two pmfs on a shared finite alphabet;
//! - `appendix_a`: a piecewise polynomial pair on `[0, 1]` with
//!   `p0 = 2 - p1`, parametrized by an exponent `kappa > 1`; the second-piece
//!   coefficient `c1` is solved from the normalization constraint at
//!   construction time. The margin exponent of the induced detection problem
//!   is `1 / (kappa - 1)`.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::numeric::{self, integrate, integrate_split};
use crate::{Error, Result};

/// Which class-conditional density to address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    H0,
    H1,
}

/// Integration/summation domain of a density pair.
#[derive(Debug, Clone)]
pub enum Domain {
    /// Continuous support `[lo, hi]` with interior discontinuity points that
    /// quadrature must split at.
    Continuous { lo: f64, hi: f64, cuts: Vec<f64> },
    /// Finite alphabet of atoms.
    Atoms(Vec<f64>),
}

/// Minimal density-pair interface shared by the built-in families and by test
/// fixtures (e.g. Gaussian mixtures). Divergence computations are generic
/// over this trait.
pub trait ClassConditionalPair {
    fn density(&self, hypothesis: Hypothesis, x: f64) -> f64;
    fn domain(&self) -> Domain;
    /// True when `p0` and `p1` are identical as functions.
    fn equal_densities(&self) -> bool {
        false
    }
}

/// Parameters of the equal-variance Gaussian pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianPairParams {
    pub mean0: f64,
    pub mean1: f64,
    pub sigma: f64,
}

/// Parameters of the discrete pmf pair on a shared alphabet.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscretePairParams {
    pub alphabet: Vec<f64>,
    pub weights0: Vec<f64>,
    pub weights1: Vec<f64>,
}

/// Parameters of the piecewise polynomial pair on `[0, 1]`.
/// `c1` is solved from normalization, not free.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AppendixAPairParams {
    pub kappa: f64,
    pub c: f64,
    pub t: f64,
    pub c1: f64,
}

#[derive(Debug, Clone)]
enum Family {
    Gaussian(GaussianPairParams),
    Discrete(DiscretePairParams),
    AppendixA(AppendixAPairParams),
}

/// An evaluatable, sampleable pair of class-conditional densities.
/// Serializes through its parameter description (`{"family", "params"}`);
/// deserialization re-validates and, for the appendix family, re-solves `c1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DensitySpec", into = "DensitySpec")]
pub struct DensityPair {
    family: Family,
    degenerate: bool,
    // Inverse-CDF sampling tables for the appendix_a family, built lazily.
    tables: OnceLock<CdfTables>,
}

const WEIGHT_SUM_TOL: f64 = 1e-12;
const NORMALIZATION_TOL: f64 = 1e-8;
/// Quadrature window for Gaussian tails; beyond 10 sigma the truncated mass
/// is below 1e-20.
const GAUSSIAN_SUPPORT_SIGMAS: f64 = 10.0;

impl DensityPair {
    /// Equal-variance Gaussian pair. `mean0 == mean1` is allowed and marks the
    /// pair as degenerate (`p0 == p1`).
    pub fn gaussian(mean0: f64, mean1: f64, sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::invalid("sigma", format!("{sigma} (must be > 0)")));
        }
        if !mean0.is_finite() || !mean1.is_finite() {
            return Err(Error::invalid("means", "must be finite"));
        }
        Ok(DensityPair {
            degenerate: mean0 == mean1,
            family: Family::Gaussian(GaussianPairParams {
                mean0,
                mean1,
                sigma,
            }),
            tables: OnceLock::new(),
        })
    }

    /// Discrete pmf pair on a shared alphabet. Weight vectors must be
    /// nonnegative and sum to 1 within 1e-12; alphabet points must be distinct.
    pub fn discrete(alphabet: Vec<f64>, weights0: Vec<f64>, weights1: Vec<f64>) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::EmptyInput("alphabet"));
        }
        if weights0.len() != alphabet.len() || weights1.len() != alphabet.len() {
            return Err(Error::invalid(
                "weights",
                "length must match the alphabet",
            ));
        }
        let mut sorted = alphabet.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("alphabet", "points must be distinct"));
        }
        for (name, w) in [("weights0", &weights0), ("weights1", &weights1)] {
            if w.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::invalid(name, "weights must be nonnegative"));
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(Error::invalid(name, format!("sums to {sum}, not 1")));
            }
        }
        Ok(DensityPair {
            degenerate: weights0 == weights1,
            family: Family::Discrete(DiscretePairParams {
                alphabet,
                weights0,
                weights1,
            }),
            tables: OnceLock::new(),
        })
    }

    /// Default discrete pair used for flat-margin (exponential-rate)
    /// experiments: alphabet `{0, 1}` with `w0 = (0.8, 0.2)`, `w1 = (0.3, 0.7)`.
    pub fn default_discrete() -> Self {
        DensityPair::discrete(vec![0.0, 1.0], vec![0.8, 0.2], vec![0.3, 0.7])
            .expect("default discrete pair is valid")
    }

    /// Build the piecewise polynomial pair on `[0, 1]`, solving the
    /// second-piece coefficient `c1` by bisection on the normalization
    /// equation for `p1`.
    pub fn appendix_a(kappa: f64, c: f64, t: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa <= 1.0 {
            return Err(Error::invalid("kappa", format!("{kappa} (must be > 1)")));
        }
        if !(c > 0.0 && c <= 0.25) {
            return Err(Error::invalid("c", format!("{c} (must be in (0, 0.25])")));
        }
        if !(t > 0.0 && t < 0.5) {
            return Err(Error::invalid("t", format!("{t} (must be in (0, 0.5))")));
        }

        // Mass of the first piece does not depend on c1; integrate it once.
        let left = integrate(|x| appendix_p1_left(kappa, c, t, x), 0.0, t, 1e-12)
            .map_err(|e| Error::Construction(format!("left-piece quadrature failed: {e}")))?;
        // g(c1) = total mass of p1 minus 1, evaluated by quadrature of the
        // second piece; monotone increasing in c1.
        let mass_gap = |c1: f64| -> f64 {
            let right = integrate(
                |x| 1.0 + 2.0 * c1 * (x - t).powf(kappa - 1.0),
                t,
                1.0,
                1e-10,
            )
            .map(|q| q.value)
            .expect("second-piece quadrature of a smooth bounded integrand");
            left.value + right - 1.0
        };
        let c1 = numeric::bisect_root(mass_gap, 0.0, 1.0, 1e-12).map_err(|e| {
            Error::Construction(format!(
                "c1 normalization root not bracketed (kappa = {kappa}, c = {c}, t = {t}): {e}"
            ))
        })?;

        let pair = DensityPair {
            family: Family::AppendixA(AppendixAPairParams { kappa, c, t, c1 }),
            degenerate: false,
            tables: OnceLock::new(),
        };

        let (r0, r1) = pair.normalization_residual()?;
        if r1 > NORMALIZATION_TOL || r0 > NORMALIZATION_TOL {
            return Err(Error::Construction(format!(
                "normalization residuals ({r0:e}, {r1:e}) exceed {NORMALIZATION_TOL:e}"
            )));
        }
        // Positivity of both densities on a fine probe grid.
        for x in numeric::lin_spaced(0.0, 1.0, 10_001) {
            let p1 = pair.p1(x);
            if !(p1 > 0.0 && p1 < 2.0) {
                return Err(Error::Construction(format!(
                    "p1({x}) = {p1} leaves (0, 2); parameters too extreme"
                )));
            }
        }
        Ok(pair)
    }

    pub fn family_name(&self) -> &'static str {
        match &self.family {
            Family::Gaussian(_) => "gaussian",
            Family::Discrete(_) => "discrete",
            Family::AppendixA(_) => "appendix_a",
        }
    }

    pub fn gaussian_params(&self) -> Option<&GaussianPairParams> {
        match &self.family {
            Family::Gaussian(p) => Some(p),
            _ => None,
        }
    }

    pub fn discrete_params(&self) -> Option<&DiscretePairParams> {
        match &self.family {
            Family::Discrete(p) => Some(p),
            _ => None,
        }
    }

    pub fn appendix_params(&self) -> Option<&AppendixAPairParams> {
        match &self.family {
            Family::AppendixA(p) => Some(p),
            _ => None,
        }
    }

    /// True when `p0` and `p1` are identical (equal Gaussian means or equal
    /// weight vectors).
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.family, Family::Discrete(_))
    }

    /// Density (or atom mass, for discrete pairs) of the requested hypothesis
    /// at `x`. Returns 0 outside the support and off the alphabet.
    pub fn evaluate(&self, hypothesis: Hypothesis, x: f64) -> f64 {
        match &self.family {
            Family::Gaussian(p) => {
                let mean = match hypothesis {
                    Hypothesis::H0 => p.mean0,
                    Hypothesis::H1 => p.mean1,
                };
                gaussian_pdf(x, mean, p.sigma)
            }
            Family::Discrete(p) => match p.alphabet.iter().position(|&a| a == x) {
                Some(j) => match hypothesis {
                    Hypothesis::H0 => p.weights0[j],
                    Hypothesis::H1 => p.weights1[j],
                },
                None => 0.0,
            },
            Family::AppendixA(p) => {
                if !(0.0..=1.0).contains(&x) {
                    return 0.0;
                }
                let p1 = appendix_p1(p, x);
                match hypothesis {
                    Hypothesis::H0 => 2.0 - p1,
                    Hypothesis::H1 => p1,
                }
            }
        }
    }

    pub fn p0(&self, x: f64) -> f64 {
        self.evaluate(Hypothesis::H0, x)
    }

    pub fn p1(&self, x: f64) -> f64 {
        self.evaluate(Hypothesis::H1, x)
    }

    /// Likelihood ratio `p1(x) / p0(x)`, with `+inf` when only `p0` vanishes.
    /// Both densities zero is an error.
    pub fn likelihood_ratio(&self, x: f64) -> Result<f64> {
        let p0 = self.p0(x);
        let p1 = self.p1(x);
        if p0 == 0.0 && p1 == 0.0 {
            return Err(Error::UndefinedRatio { x });
        }
        if p0 == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(p1 / p0)
    }

    pub fn domain(&self) -> Domain {
        match &self.family {
            Family::Gaussian(p) => {
                let lo = p.mean0.min(p.mean1) - GAUSSIAN_SUPPORT_SIGMAS * p.sigma;
                let hi = p.mean0.max(p.mean1) + GAUSSIAN_SUPPORT_SIGMAS * p.sigma;
                Domain::Continuous {
                    lo,
                    hi,
                    cuts: Vec::new(),
                }
            }
            Family::Discrete(p) => Domain::Atoms(p.alphabet.clone()),
            Family::AppendixA(p) => Domain::Continuous {
                lo: 0.0,
                hi: 1.0,
                cuts: vec![p.t],
            },
        }
    }

    /// `(|∫p0 - 1|, |∫p1 - 1|)` by adaptive quadrature (exact sums for
    /// discrete pairs).
    pub fn normalization_residual(&self) -> Result<(f64, f64)> {
        match &self.family {
            Family::Discrete(p) => {
                let s0: f64 = p.weights0.iter().sum();
                let s1: f64 = p.weights1.iter().sum();
                Ok(((s0 - 1.0).abs(), (s1 - 1.0).abs()))
            }
            _ => {
                let Domain::Continuous { lo, hi, cuts } = self.domain() else {
                    unreachable!("continuous families only")
                };
                let m0 = integrate_split(|x| self.p0(x), lo, hi, &cuts, 1e-11)?;
                let m1 = integrate_split(|x| self.p1(x), lo, hi, &cuts, 1e-11)?;
                Ok(((m0.value - 1.0).abs(), (m1.value - 1.0).abs()))
            }
        }
    }

    fn sample_x<R: Rng>(&self, hypothesis: Hypothesis, rng: &mut R) -> f64 {
        match &self.family {
            Family::Gaussian(p) => {
                let mean = match hypothesis {
                    Hypothesis::H0 => p.mean0,
                    Hypothesis::H1 => p.mean1,
                };
                Normal::new(mean, p.sigma)
                    .expect("validated sigma")
                    .sample(rng)
            }
            Family::Discrete(p) => {
                let weights = match hypothesis {
                    Hypothesis::H0 => &p.weights0,
                    Hypothesis::H1 => &p.weights1,
                };
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (j, &w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return p.alphabet[j];
                    }
                }
                *p.alphabet.last().expect("nonempty alphabet")
            }
            Family::AppendixA(p) => {
                let tables = self.tables.get_or_init(|| CdfTables::build(p));
                let table = match hypothesis {
                    Hypothesis::H0 => &tables.h0,
                    Hypothesis::H1 => &tables.h1,
                };
                table.inverse(rng.random())
            }
        }
    }
}

impl ClassConditionalPair for DensityPair {
    fn density(&self, hypothesis: Hypothesis, x: f64) -> f64 {
        self.evaluate(hypothesis, x)
    }

    fn domain(&self) -> Domain {
        DensityPair::domain(self)
    }

    fn equal_densities(&self) -> bool {
        self.degenerate
    }
}

fn gaussian_pdf(x: f64, mean: f64, sigma: f64) -> f64 {
    let z = (x - mean) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

fn appendix_p1_left(kappa: f64, c: f64, t: f64, x: f64) -> f64 {
    let s = t.powf(kappa - 1.0);
    let v = c * x.powf(kappa - 1.0);
    (1.0 + 2.0 * v) * (1.0 - 2.0 * s) / (1.0 - 4.0 * v * s)
}

fn appendix_p1(p: &AppendixAPairParams, x: f64) -> f64 {
    if x < p.t {
        appendix_p1_left(p.kappa, p.c, p.t, x)
    } else {
        1.0 + 2.0 * p.c1 * (x - p.t).powf(p.kappa - 1.0)
    }
}

/// Number of knots in the inverse-CDF sampling table.
const CDF_KNOTS: usize = 4096;
/// Bisection refinement width for numeric CDF inversion.
const CDF_INVERT_XTOL: f64 = 1e-10;

#[derive(Debug, Clone)]
struct CdfTable {
    xs: Vec<f64>,
    cum: Vec<f64>,
}

#[derive(Debug, Clone)]
struct CdfTables {
    h0: CdfTable,
    h1: CdfTable,
}

impl CdfTables {
    fn build(p: &AppendixAPairParams) -> Self {
        let mut xs = numeric::lin_spaced(0.0, 1.0, CDF_KNOTS);
        if !xs.contains(&p.t) {
            xs.push(p.t);
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        let h1 = CdfTable::build(&xs, |x| appendix_p1(p, x));
        let h0 = CdfTable::build(&xs, |x| 2.0 - appendix_p1(p, x));
        CdfTables { h0, h1 }
    }
}

impl CdfTable {
    fn build<F: Fn(f64) -> f64>(xs: &[f64], f: F) -> Self {
        let mut cum = Vec::with_capacity(xs.len());
        cum.push(0.0);
        let mut acc = 0.0;
        for pair in xs.windows(2) {
            // Composite Simpson inside one knot cell; the integrand is smooth
            // within cells because the density's only jump sits on a knot.
            let (a, b) = (pair[0], pair[1]);
            let h = (b - a) / 8.0;
            let mut cell = f(a) + f(b);
            for i in 1..8 {
                cell += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc += cell * h / 3.0;
            cum.push(acc);
        }
        CdfTable {
            xs: xs.to_vec(),
            cum,
        }
    }

    /// Inverse CDF of the table-normalized density at `u` in `[0, 1)`:
    /// binary search over knots, then bisection on the monotone linear
    /// interpolant within the bracketing cell.
    fn inverse(&self, u: f64) -> f64 {
        let total = *self.cum.last().expect("nonempty table");
        let target = u.clamp(0.0, 1.0) * total;
        let k = match self
            .cum
            .binary_search_by(|v| v.partial_cmp(&target).unwrap())
        {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        };
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let (c0, c1) = (self.cum[k], self.cum[k + 1]);
        if c1 <= c0 {
            return x0;
        }
        let interp = |x: f64| c0 + (c1 - c0) * (x - x0) / (x1 - x0);
        let (mut lo, mut hi) = (x0, x1);
        while hi - lo > CDF_INVERT_XTOL {
            let mid = 0.5 * (lo + hi);
            if interp(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// A density pair together with the true prior `q` and the trim bound `theta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ScenarioSpec", into = "ScenarioSpec")]
pub struct Scenario {
    pair: DensityPair,
    q: f64,
    theta: f64,
}

impl Scenario {
    /// `q` must lie in `[theta, 1 - theta]` with `theta` in `(0, 1/2)`.
    pub fn new(pair: DensityPair, q: f64, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 0.5) {
            return Err(Error::invalid(
                "theta",
                format!("{theta} (must be in (0, 1/2))"),
            ));
        }
        if !(q >= theta && q <= 1.0 - theta) {
            return Err(Error::invalid(
                "q",
                format!("{q} outside the trim interval [{theta}, {}]", 1.0 - theta),
            ));
        }
        Ok(Scenario { pair, q, theta })
    }

    pub fn pair(&self) -> &DensityPair {
        &self.pair
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// JSON wire form of a density pair: `{"family": ..., "params": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum DensitySpec {
    Gaussian(GaussianPairParams),
    Discrete(DiscretePairParams),
    AppendixA(AppendixASpec),
}

/// Wire form of the appendix_a parameters. `c1` is accepted on input for
/// round-trips but always re-derived (and cross-checked) from
/// `(kappa, c, t)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AppendixASpec {
    pub kappa: f64,
    pub c: f64,
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
}

impl From<DensityPair> for DensitySpec {
    fn from(pair: DensityPair) -> Self {
        match pair.family {
            Family::Gaussian(p) => DensitySpec::Gaussian(p),
            Family::Discrete(p) => DensitySpec::Discrete(p),
            Family::AppendixA(p) => DensitySpec::AppendixA(AppendixASpec {
                kappa: p.kappa,
                c: p.c,
                t: p.t,
                c1: Some(p.c1),
            }),
        }
    }
}

impl TryFrom<DensitySpec> for DensityPair {
    type Error = Error;

    fn try_from(spec: DensitySpec) -> Result<Self> {
        match spec {
            DensitySpec::Gaussian(p) => DensityPair::gaussian(p.mean0, p.mean1, p.sigma),
            DensitySpec::Discrete(p) => DensityPair::discrete(p.alphabet, p.weights0, p.weights1),
            DensitySpec::AppendixA(p) => {
                let pair = DensityPair::appendix_a(p.kappa, p.c, p.t)?;
                if let Some(c1) = p.c1 {
                    let solved = pair.appendix_params().expect("appendix pair").c1;
                    if (solved - c1).abs() > NORMALIZATION_TOL {
                        return Err(Error::invalid(
                            "c1",
                            format!("{c1} inconsistent with solved value {solved}"),
                        ));
                    }
                }
                Ok(pair)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioSpec {
    #[serde(flatten)]
    pair: DensitySpec,
    q: f64,
    theta: f64,
}

impl From<Scenario> for ScenarioSpec {
    fn from(s: Scenario) -> Self {
        ScenarioSpec {
            pair: s.pair.into(),
            q: s.q,
            theta: s.theta,
        }
    }
}

impl TryFrom<ScenarioSpec> for Scenario {
    type Error = Error;

    fn try_from(spec: ScenarioSpec) -> Result<Self> {
        Scenario::new(spec.pair.try_into()?, spec.q, spec.theta)
    }
}

/// Labeled observations `(x_i, y_i)` with the seed that generated them.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub xs: Vec<f64>,
    pub ys: Vec<u8>,
    pub seed: u64,
}

/// Unlabeled observations `x_i` with the seed that generated them.
#[derive(Debug, Clone)]
pub struct UnlabeledDataset {
    pub xs: Vec<f64>,
    pub seed: u64,
}

impl LabeledDataset {
    /// Drop the labels, keeping the draws.
    pub fn into_unlabeled(self) -> UnlabeledDataset {
        UnlabeledDataset {
            xs: self.xs,
            seed: self.seed,
        }
    }
}

/// Draw `n` i.i.d. pairs `(X, Y)` with `Y ~ Bernoulli(q)` and `X ~ p_Y`.
/// Bit-deterministic given the seed.
pub fn sample_labeled(scenario: &Scenario, n: usize, seed: u64) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let y = rng.random_bool(scenario.q);
        let hyp = if y { Hypothesis::H1 } else { Hypothesis::H0 };
        xs.push(scenario.pair.sample_x(hyp, &mut rng));
        ys.push(u8::from(y));
    }
    Ok(LabeledDataset { xs, ys, seed })
}

/// Draw `n` i.i.d. observations from the mixture `q p1 + (1-q) p0`.
/// Bit-deterministic given the seed.
pub fn sample_unlabeled(scenario: &Scenario, n: usize, seed: u64) -> Result<UnlabeledDataset> {
    Ok(sample_labeled(scenario, n, seed)?.into_unlabeled())
}
