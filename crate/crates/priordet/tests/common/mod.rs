#![allow(dead_code)]

//! Statistical helpers shared by the integration suites: Kolmogorov-Smirnov
//! statistics and a paired one-sided sign test.

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    xb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        if xa[i] <= xb[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Critical value of the two-sample KS test at level 0.01.
pub fn ks_two_sample_critical_001(na: usize, nb: usize) -> f64 {
    // c(0.01) = sqrt(-ln(0.005)/2) = 1.6276.
    1.6276 * ((na + nb) as f64 / (na as f64 * nb as f64)).sqrt()
}

/// One-sample KS statistic against a reference CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> f64 {
    let mut xs = data.to_vec();
    xs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let c = cdf(x);
        d = d.max((c - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - c).abs());
    }
    d
}

/// Critical value of the one-sample KS test at level 0.01 (asymptotic).
pub fn ks_one_sample_critical_001(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// One-sided sign test z-score for "wins exceed losses" (ties dropped).
pub fn sign_test_z(wins: usize, losses: usize) -> f64 {
    let n = (wins + losses) as f64;
    (wins as f64 - 0.5 * n) / (0.25 * n).sqrt()
}

/// z threshold for one-sided p < 0.01.
pub const Z_001: f64 = 2.326;
