//! Goodness-of-fit and summary helpers shared by the experiments.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// One-sample Kolmogorov-Smirnov statistic sup |F_n(x) − F(x)|. Atoms in `F`
/// are handled by comparing left limits as well.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        // Ties: step the empirical CDF over the whole run at once.
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        let f_left = cdf(xs[i].next_down());
        let below = i as f64 / n;
        let above = (j + 1) as f64 / n;
        d = d.max((f_left - below).abs()).max((above - f).abs());
        i = j + 1;
    }
    d
}

/// Upper-tail probability of a chi-square statistic.
pub fn chi_square_sf(stat: f64, dof: f64) -> f64 {
    1.0 - ChiSquared::new(dof).expect("positive dof").cdf(stat)
}

/// Pearson chi-square for a two-cell (binomial) table.
pub fn binomial_chi_square(successes: u64, trials: u64, p: f64) -> f64 {
    let n = trials as f64;
    let expected = [n * p, n * (1.0 - p)];
    let observed = [successes as f64, (trials - successes) as f64];
    observed
        .iter()
        .zip(&expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Sample mean with its standard error (n − 1 denominator).
pub fn mean_stderr(xs: &[f64]) -> MeanEstimate {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    MeanEstimate {
        mean,
        stderr: (var / n as f64).sqrt(),
        n,
    }
}

/// Standard error of a binomial proportion.
pub fn proportion_stderr(p: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}
