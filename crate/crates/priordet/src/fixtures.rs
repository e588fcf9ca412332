//! Deterministic test corpus: seeded pairs of 2-3 component Gaussian
//! mixtures used by divergence inequality checks and benchmarks. Defined in
//! the library so that every test target probes the same pairs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::density::{ClassConditionalPair, Domain, Hypothesis};

/// A pair of Gaussian-mixture densities. Component tuples are
/// `(weight, mean, sigma)`; weights sum to 1.
#[derive(Debug, Clone)]
pub struct GaussianMixturePair {
    pub components0: Vec<(f64, f64, f64)>,
    pub components1: Vec<(f64, f64, f64)>,
}

fn mixture_pdf(components: &[(f64, f64, f64)], x: f64) -> f64 {
    components
        .iter()
        .map(|&(w, mean, sigma)| {
            let z = (x - mean) / sigma;
            w * (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        })
        .sum()
}

impl ClassConditionalPair for GaussianMixturePair {
    fn density(&self, hypothesis: Hypothesis, x: f64) -> f64 {
        match hypothesis {
            Hypothesis::H0 => mixture_pdf(&self.components0, x),
            Hypothesis::H1 => mixture_pdf(&self.components1, x),
        }
    }

    fn domain(&self) -> Domain {
        let all = self.components0.iter().chain(&self.components1);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(_, mean, sigma) in all {
            lo = lo.min(mean - 10.0 * sigma);
            hi = hi.max(mean + 10.0 * sigma);
        }
        Domain::Continuous {
            lo,
            hi,
            cuts: Vec::new(),
        }
    }
}

const CORPUS_SEED: u64 = 0x5EED_D1F5;
pub const CORPUS_SIZE: usize = 20;

fn random_weights<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.2).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn random_components<R: Rng>(rng: &mut R, heavier_tails: bool) -> Vec<(f64, f64, f64)> {
    let k = if rng.random::<f64>() < 0.5 { 2 } else { 3 };
    let weights = random_weights(rng, k);
    weights
        .into_iter()
        .map(|w| {
            let mean = rng.random::<f64>() * 2.0 - 1.0;
            // p0 gets slightly heavier tails than p1 so that p1^2/p0 stays
            // integrable and the chi-square divergence is finite.
            let sigma = if heavier_tails {
                1.0 + 0.3 * rng.random::<f64>()
            } else {
                1.0
            };
            (w, mean, sigma)
        })
        .collect()
}

/// The 20-pair divergence corpus; deterministic across runs.
pub fn divergence_pair_corpus() -> Vec<GaussianMixturePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    (0..CORPUS_SIZE)
        .map(|_| GaussianMixturePair {
            components0: random_components(&mut rng, true),
            components1: random_components(&mut rng, false),
        })
        .collect()
}

/// One prior per corpus pair, spread over `[0.15, 0.85]`; deterministic.
pub fn corpus_priors() -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED ^ 0xABCD);
    (0..CORPUS_SIZE)
        .map(|_| 0.15 + 0.7 * rng.random::<f64>())
        .collect()
}
