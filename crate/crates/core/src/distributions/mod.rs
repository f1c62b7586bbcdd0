//! Seeded streams and the beta/Dirichlet/exponential sampling substrate,
//! plus the digamma function and the log-odds quadrature used by the
//! transience criteria.

pub mod quadrature;
mod rng;
mod special;

use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use rng::{make_stream, site_stream_id, RngStream};
pub use special::digamma;

/// Shape parameters of a non-degenerate beta law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    alpha: f64,
    beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta shapes must be finite and positive, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

/// A beta law, or the point mass at zero that stands in for a beta "law"
/// whose first shape is not positive (a colour whose initial mass is zero
/// never grows, so its limiting fraction is exactly 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaLaw {
    Beta(BetaParams),
    PointMassZero,
}

impl BetaLaw {
    /// Law of the limiting fraction of a colour with shape `alpha` against the
    /// rest with shape `beta`. `alpha <= 0` maps to the explicit point mass.
    pub fn limit_fraction(alpha: f64, beta: f64) -> Result<Self> {
        if alpha.is_nan() {
            return Err(Error::InvalidParameter("beta shape is NaN".into()));
        }
        if alpha <= 0.0 {
            if !(beta > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "second beta shape must be positive, got {beta}"
                )));
            }
            return Ok(BetaLaw::PointMassZero);
        }
        BetaParams::new(alpha, beta).map(BetaLaw::Beta)
    }

    pub fn params(&self) -> Option<BetaParams> {
        match self {
            BetaLaw::Beta(p) => Some(*p),
            BetaLaw::PointMassZero => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            BetaLaw::Beta(p) => p.mean(),
            BetaLaw::PointMassZero => 0.0,
        }
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        use statrs::distribution::{Beta, ContinuousCDF};
        match self {
            BetaLaw::PointMassZero => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            BetaLaw::Beta(p) => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    Beta::new(p.alpha, p.beta)
                        .expect("validated shapes")
                        .cdf(x)
                }
            }
        }
    }
}

impl From<BetaParams> for BetaLaw {
    fn from(p: BetaParams) -> Self {
        BetaLaw::Beta(p)
    }
}

/// Three Dirichlet shapes. A `None` component is identically zero (its
/// colour has no initial mass); at least one component must be present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    shapes: [Option<f64>; 3],
}

impl DirichletParams {
    /// All three shapes strictly positive.
    pub fn new(shapes: [f64; 3]) -> Result<Self> {
        for &s in &shapes {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "Dirichlet shapes must be finite and positive, got {shapes:?}"
                )));
            }
        }
        Ok(Self {
            shapes: shapes.map(Some),
        })
    }

    /// Shapes where non-positive entries become absent components.
    pub fn with_absent(shapes: [f64; 3]) -> Result<Self> {
        let mut out = [None; 3];
        for (slot, &s) in out.iter_mut().zip(&shapes) {
            if s.is_nan() || s.is_infinite() {
                return Err(Error::InvalidParameter(format!(
                    "Dirichlet shapes must be finite, got {shapes:?}"
                )));
            }
            if s > 0.0 {
                *slot = Some(s);
            }
        }
        if out.iter().all(Option::is_none) {
            return Err(Error::InvalidParameter(
                "Dirichlet needs at least one positive shape".into(),
            ));
        }
        Ok(Self { shapes: out })
    }

    pub fn shapes(&self) -> [Option<f64>; 3] {
        self.shapes
    }

    fn total(&self) -> f64 {
        self.shapes.iter().flatten().sum()
    }

    /// Beta marginal law of component `i` (aggregation property).
    pub fn marginal(&self, i: usize) -> BetaLaw {
        match self.shapes[i] {
            None => BetaLaw::PointMassZero,
            Some(s) => {
                let rest = self.total() - s;
                if rest > 0.0 {
                    BetaLaw::Beta(BetaParams { alpha: s, beta: rest })
                } else {
                    // The only present component: fraction is identically 1.
                    BetaLaw::Beta(BetaParams {
                        alpha: s,
                        beta: f64::MIN_POSITIVE,
                    })
                }
            }
        }
    }

    pub fn mean(&self) -> [f64; 3] {
        let t = self.total();
        self.shapes.map(|s| s.map_or(0.0, |s| s / t))
    }
}

fn sample_gamma(rng: &mut RngStream, shape: f64) -> f64 {
    Gamma::new(shape, 1.0)
        .expect("validated gamma shape")
        .sample(rng)
}

/// One beta draw as `X / (X + Y)` with independent gamma variables. The
/// point-mass law returns exactly 0.
pub fn sample_beta(rng: &mut RngStream, law: BetaLaw) -> f64 {
    let p = match law {
        BetaLaw::PointMassZero => return 0.0,
        BetaLaw::Beta(p) => p,
    };
    loop {
        let x = sample_gamma(rng, p.alpha);
        let y = sample_gamma(rng, p.beta);
        let s = x + y;
        // Both gammas can underflow for tiny shapes; redraw.
        if s > 0.0 {
            return x / s;
        }
    }
}

/// One Dirichlet draw from three gamma variables, renormalised so that the
/// components sum to 1 in floating point. Absent components are exactly 0.
pub fn sample_dirichlet(rng: &mut RngStream, params: &DirichletParams) -> [f64; 3] {
    loop {
        let g = params.shapes.map(|s| s.map_or(0.0, |s| sample_gamma(rng, s)));
        let total = g[0] + g[1] + g[2];
        if !(total > 0.0) {
            continue;
        }
        let mut x = g.map(|v| v / total);
        // The last present component takes the residue, so that summing in
        // index order gives exactly 1.
        let k = (0..3)
            .rev()
            .find(|&i| params.shapes[i].is_some())
            .expect("at least one component");
        let others: f64 = x[..k].iter().sum();
        x[k] = (1.0 - others).max(0.0);
        return x;
    }
}

/// Exponential holding time with the given total rate.
pub fn sample_exp(rng: &mut RngStream, rate: f64) -> f64 {
    Exp::new(rate).expect("positive rate").sample(rng)
}

/// E[log(p / (1 − p))] for p ~ Beta(α₁, α₂), by adaptive quadrature.
///
/// Substituting x/(1−x) = e^{2s} turns the expectation into
/// `2 ∫ s g(s) ds / ∫ g(s) ds` with `g(s) = e^{2α₁s} (1 + e^{2s})^{−(α₁+α₂)}`,
/// which is smooth and decays exponentially in both directions. Both
/// integrals are taken on the real line around the mode of `g`.
pub fn integrate_log_odds(p: BetaParams) -> Result<f64> {
    let (a1, a2) = (p.alpha, p.beta);
    let total = a1 + a2;
    let mode = 0.5 * (a1 / a2).ln();
    let width = (total / (4.0 * a1 * a2)).sqrt();
    let log_g = |s: f64| {
        let y = 2.0 * s;
        let softplus = y.max(0.0) + (-y.abs()).exp().ln_1p();
        2.0 * a1 * s - total * softplus
    };
    let peak = log_g(mode);
    let g = |s: f64| {
        let l = log_g(s) - peak;
        if l < -745.0 {
            0.0
        } else {
            l.exp()
        }
    };
    const TOL: f64 = 1e-13;
    const PANELS: usize = 4000;
    let mass = quadrature::integrate_real_line(g, mode, width, TOL, PANELS)?;
    let first = quadrature::integrate_real_line(|s| s * g(s), mode, width, TOL * width, PANELS)?;
    let value = 2.0 * first.value / mass.value;
    let bound = 2.0 * (first.error_bound + value.abs() * 0.5 * mass.error_bound) / mass.value;
    if bound > 1e-8 {
        return Err(Error::Quadrature {
            estimate: value,
            error_bound: bound,
        });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mean_of(draws: impl Iterator<Item = f64>) -> f64 {
        let v: Vec<f64> = draws.collect();
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn beta_uniform_mean() {
        let mut rng = make_stream(11, 0);
        let law = BetaLaw::Beta(BetaParams::new(1.0, 1.0).unwrap());
        let m = mean_of((0..100_000).map(|_| sample_beta(&mut rng, law)));
        assert_abs_diff_eq!(m, 0.5, epsilon = 0.01);
    }

    #[test]
    fn beta_symmetric_means() {
        for &a in &[0.5, 2.0] {
            let mut rng = make_stream(12, 0);
            let law = BetaLaw::Beta(BetaParams::new(a, a).unwrap());
            let m = mean_of((0..100_000).map(|_| sample_beta(&mut rng, law)));
            assert_abs_diff_eq!(m, 0.5, epsilon = 0.01);
        }
    }

    #[test]
    fn beta_asymmetric_mean_matches_density_moment() {
        // Oracle: first moment of the Beta(1.5, 0.5) density by quadrature.
        let (a, b) = (1.5_f64, 0.5_f64);
        let norm = quadrature::integrate(
            |x| if x > 0.0 && x < 1.0 { x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0) } else { 0.0 },
            0.0,
            1.0,
            1e-7,
            5000,
        )
        .unwrap()
        .value;
        let first = quadrature::integrate(
            |x| if x > 0.0 && x < 1.0 { x.powf(a) * (1.0 - x).powf(b - 1.0) } else { 0.0 },
            0.0,
            1.0,
            1e-7,
            5000,
        )
        .unwrap()
        .value;
        let oracle = first / norm;
        assert_abs_diff_eq!(oracle, 0.75, epsilon = 1e-4);

        let mut rng = make_stream(13, 0);
        let law = BetaLaw::Beta(BetaParams::new(a, b).unwrap());
        let m = mean_of((0..100_000).map(|_| sample_beta(&mut rng, law)));
        assert_abs_diff_eq!(m, oracle, epsilon = 0.01);
    }

    #[test]
    fn point_mass_returns_zero() {
        let mut rng = make_stream(1, 1);
        assert_eq!(sample_beta(&mut rng, BetaLaw::PointMassZero), 0.0);
        assert_eq!(BetaLaw::limit_fraction(0.0, 1.0).unwrap(), BetaLaw::PointMassZero);
        assert_eq!(BetaLaw::limit_fraction(-0.5, 1.0).unwrap(), BetaLaw::PointMassZero);
    }

    #[test]
    fn invalid_beta_rejected() {
        assert!(BetaParams::new(0.0, 1.0).is_err());
        assert!(BetaParams::new(1.0, -2.0).is_err());
        assert!(BetaParams::new(f64::NAN, 1.0).is_err());
        assert!(BetaLaw::limit_fraction(f64::NAN, 1.0).is_err());
        assert!(BetaLaw::limit_fraction(-1.0, 0.0).is_err());
    }

    #[test]
    fn dirichlet_on_simplex() {
        let mut rng = make_stream(5, 0);
        let p = DirichletParams::new([0.5, 0.5, 0.5]).unwrap();
        for _ in 0..100_000 {
            let x = sample_dirichlet(&mut rng, &p);
            assert!(x.iter().all(|&c| c >= 0.0));
            assert_eq!(x[0] + x[1] + x[2], 1.0, "{x:?}");
        }
    }

    #[test]
    fn dirichlet_symmetric_mean() {
        let mut rng = make_stream(6, 0);
        let p = DirichletParams::new([0.5, 0.5, 0.5]).unwrap();
        let m = mean_of((0..100_000).map(|_| sample_dirichlet(&mut rng, &p)[0]));
        assert_abs_diff_eq!(m, 1.0 / 3.0, epsilon = 0.01);
    }

    #[test]
    fn dirichlet_first_component_mean() {
        // (R0/2, 1/2, B0/2) with R0 = 1, B0 = 2.
        let mut rng = make_stream(7, 0);
        let p = DirichletParams::new([0.5, 0.5, 1.0]).unwrap();
        let m = mean_of((0..100_000).map(|_| sample_dirichlet(&mut rng, &p)[0]));
        assert_abs_diff_eq!(m, 0.25, epsilon = 0.01);
    }

    #[test]
    fn dirichlet_absent_component_is_zero() {
        let mut rng = make_stream(8, 0);
        let p = DirichletParams::with_absent([0.0, 0.5, 0.5]).unwrap();
        for _ in 0..1000 {
            let x = sample_dirichlet(&mut rng, &p);
            assert_eq!(x[0], 0.0);
            assert_eq!(x[0] + x[1] + x[2], 1.0);
        }
        assert_eq!(p.marginal(0), BetaLaw::PointMassZero);
        assert!(DirichletParams::with_absent([0.0, 0.0, -1.0]).is_err());
        assert!(DirichletParams::new([0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn log_odds_symmetric_is_zero() {
        for &a in &[0.3, 1.0, 4.5] {
            let v = integrate_log_odds(BetaParams::new(a, a).unwrap()).unwrap();
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn log_odds_beta_two_one() {
        let v = integrate_log_odds(BetaParams::new(2.0, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn log_odds_unit_weight_no_drift_positive() {
        // Beta((a+1)/2, (a+Δ)/2) with a = 1, Δ = 0.
        let v = integrate_log_odds(BetaParams::new(1.0, 0.5).unwrap()).unwrap();
        assert!(v > 0.0);
        assert_abs_diff_eq!(v, 2.0 * std::f64::consts::LN_2, epsilon = 1e-8);
    }

    #[test]
    fn log_odds_matches_digamma() {
        for &(a, b) in &[(0.05, 0.3), (0.5, 0.5), (1.5, 0.5), (3.0, 7.0), (40.0, 2.0)] {
            let q = integrate_log_odds(BetaParams::new(a, b).unwrap()).unwrap();
            let d = digamma(a).unwrap() - digamma(b).unwrap();
            assert!((q - d).abs() < 1e-7, "({a}, {b}): {q} vs {d}");
        }
    }

    #[test]
    fn digamma_difference_matches_integral_oracle() {
        // ψ(2) − ψ(1) = ∫₀¹ log(x/(1−x)) · 2x dx, computed directly.
        let oracle = quadrature::integrate(
            |x| if x > 0.0 && x < 1.0 { (x / (1.0 - x)).ln() * 2.0 * x } else { 0.0 },
            0.0,
            1.0,
            1e-11,
            5000,
        )
        .unwrap()
        .value;
        assert_abs_diff_eq!(oracle, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(digamma(2.0).unwrap() - digamma(1.0).unwrap(), oracle, epsilon = 1e-9);
        // E[log p], p ~ U(0,1): ∫₀¹ log x dx = −1.
        assert_abs_diff_eq!(digamma(1.0).unwrap() - digamma(2.0).unwrap(), -1.0, epsilon = 1e-14);
    }

    #[test]
    fn exp_holding_time_mean() {
        let mut rng = make_stream(4, 4);
        let m = mean_of((0..100_000).map(|_| sample_exp(&mut rng, 2.0)));
        assert_abs_diff_eq!(m, 0.5, epsilon = 0.01);
    }

    #[test]
    fn rerun_is_bit_identical() {
        let law = BetaLaw::Beta(BetaParams::new(0.7, 1.3).unwrap());
        let p = DirichletParams::new([0.5, 0.5, 1.5]).unwrap();
        let run = || {
            let mut rng = make_stream(99, 3);
            let b: Vec<u64> = (0..50).map(|_| sample_beta(&mut rng, law).to_bits()).collect();
            let d: Vec<u64> = (0..50)
                .flat_map(|_| sample_dirichlet(&mut rng, &p).map(f64::to_bits))
                .collect();
            (b, d)
        };
        assert_eq!(run(), run());
    }
}
