//! Birth-death chains in i.i.d. Beta environments: the transience and
//! return-time criteria, single-chain simulation, and the two-chain
//! difference recurrence experiment.

use std::collections::{BTreeMap, HashMap};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    digamma, integrate_log_odds, make_stream, sample_beta, site_stream_id, BetaLaw, BetaParams,
    RngStream,
};
use crate::error::{Error, Result};
use crate::stats::proportion_stderr;

const BD_STREAM_TAG: u16 = 0xbd;

/// Extended real used for expectations that may diverge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ExtReal {
    Finite(f64),
    PosInfinity,
}

impl ExtReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(*x),
            ExtReal::PosInfinity => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    TransientRight,
    TransientLeft,
    Recurrent,
}

/// Criteria for a chain whose right-jump probabilities are i.i.d. Beta(α₁, α₂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub alpha1: f64,
    pub alpha2: f64,
    /// E[log(p/(1−p))] = ψ(α₁) − ψ(α₂). Positive means transient to the right.
    pub log_odds_mean: f64,
    /// E[log((1−p)/p)], the opposite orientation; positive means drift toward
    /// the left.
    pub mu: f64,
    /// E[log(p/(1−p))] by direct quadrature, when it converged.
    pub log_odds_quadrature: Option<f64>,
    /// E[(1−p)/p].
    pub mean_inverse_odds: ExtReal,
    pub classification: Classification,
    /// Whether the expected return time of the reflected chain is finite,
    /// which holds exactly when α₁ > 1 + α₂.
    pub finite_mean_return: bool,
}

pub fn criterion(p: BetaParams) -> Result<CriterionResult> {
    let (a1, a2) = (p.alpha(), p.beta());
    let log_odds_mean = digamma(a1)? - digamma(a2)?;
    let classification = if a1 == a2 {
        Classification::Recurrent
    } else if log_odds_mean > 0.0 {
        Classification::TransientRight
    } else {
        Classification::TransientLeft
    };
    let mean_inverse_odds = if a1 > 1.0 {
        ExtReal::Finite(a2 / (a1 - 1.0))
    } else {
        ExtReal::PosInfinity
    };
    Ok(CriterionResult {
        alpha1: a1,
        alpha2: a2,
        log_odds_mean,
        mu: -log_odds_mean,
        log_odds_quadrature: integrate_log_odds(p).ok(),
        mean_inverse_odds,
        classification,
        finite_mean_return: a1 > 1.0 + a2,
    })
}

/// How the right-jump probability of an unpinned site is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SiteSampler {
    Iid { law: BetaLaw },
    Constant { p: f64 },
}

/// Lazily sampled birth-death environment `v ↦ p(v)` with exact overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct BDEnvironment {
    sampler: SiteSampler,
    seed: u64,
    overrides: BTreeMap<i64, f64>,
    cache: HashMap<i64, f64>,
}

impl BDEnvironment {
    pub fn iid(law: BetaLaw, seed: u64) -> Self {
        Self {
            sampler: SiteSampler::Iid { law },
            seed,
            overrides: BTreeMap::new(),
            cache: HashMap::new(),
        }
    }

    pub fn constant(p: f64) -> Result<Self> {
        check_probability(p)?;
        Ok(Self {
            sampler: SiteSampler::Constant { p },
            seed: 0,
            overrides: BTreeMap::new(),
            cache: HashMap::new(),
        })
    }

    /// Pin `p(v)` exactly, e.g. a reflecting boundary `p(0) = 1`.
    pub fn with_override(mut self, v: i64, p: f64) -> Result<Self> {
        check_probability(p)?;
        self.overrides.insert(v, p);
        Ok(self)
    }

    pub fn sampler(&self) -> SiteSampler {
        self.sampler
    }

    pub fn p(&mut self, v: i64) -> f64 {
        if let Some(&p) = self.overrides.get(&v) {
            return p;
        }
        match self.sampler {
            SiteSampler::Constant { p } => p,
            SiteSampler::Iid { law } => {
                let seed = self.seed;
                *self.cache.entry(v).or_insert_with(|| {
                    let mut rng = make_stream(seed, site_stream_id(BD_STREAM_TAG, v));
                    sample_beta(&mut rng, law)
                })
            }
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "jump probability must lie in [0, 1], got {p}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BdSummary {
    pub start: i64,
    pub final_position: i64,
    pub events: u64,
    pub returns: u64,
    pub first_return_event: Option<u64>,
    pub min_position: i64,
    pub max_position: i64,
}

/// Embedded jump chain of a birth-death walk: from `v`, step to `v+1` with
/// probability `p(v)`, otherwise to `v−1`.
pub fn simulate_bd(
    env: &mut BDEnvironment,
    start: i64,
    max_events: u64,
    rng: &mut RngStream,
) -> BdSummary {
    let mut x = start;
    let mut s = BdSummary {
        start,
        final_position: start,
        events: 0,
        returns: 0,
        first_return_event: None,
        min_position: start,
        max_position: start,
    };
    for e in 1..=max_events {
        x += if rng.bernoulli(env.p(x)) { 1 } else { -1 };
        s.min_position = s.min_position.min(x);
        s.max_position = s.max_position.max(x);
        if x == start {
            s.returns += 1;
            s.first_return_event.get_or_insert(e);
        }
    }
    s.events = max_events;
    s.final_position = x;
    s
}

/// Event count at which `Z^r − Z^l` first returns to 0, or `None` within
/// `max_events`. `Z^r` lives on ℤ₊ and steps right with probability
/// `right.p(i)`; `Z^l` lives on ℤ₋ and steps left from `−i` with
/// probability `left.p(i)`. The mover is uniform at each event.
pub fn first_difference_return(
    right: &mut BDEnvironment,
    left: &mut BDEnvironment,
    max_events: u64,
    rng: &mut RngStream,
) -> Option<u64> {
    // Distances from the origin of the two chains.
    let mut d = [0i64; 2];
    for e in 1..=max_events {
        let which = rng.index(2);
        let env = if which == 0 { &mut *right } else { &mut *left };
        d[which] += if rng.bernoulli(env.p(d[which])) { 1 } else { -1 };
        if d == [0, 0] {
            return Some(e);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub budget: u64,
    pub hit_fraction: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceCurve {
    pub p1: BetaParams,
    pub p2: BetaParams,
    pub trials: usize,
    pub seed: u64,
    pub points: Vec<CurvePoint>,
    /// Set when either chain lies outside the regime μ > 0.
    pub warning: Option<String>,
}

/// Environments and jump stream of one difference-recurrence trial. Each
/// trial draws fresh environments from its own stream.
fn trial_setup(p1: BetaParams, p2: BetaParams, seed: u64, trial: u64) -> (BDEnvironment, BDEnvironment, RngStream) {
    let mut rng = make_stream(seed, trial);
    let env_r = BDEnvironment::iid(p1.into(), rng.next_u64())
        .with_override(0, 1.0)
        .expect("valid override");
    let env_l = BDEnvironment::iid(p2.into(), rng.next_u64())
        .with_override(0, 1.0)
        .expect("valid override");
    (env_r, env_l, rng)
}

/// First-return event of trial `trial`, capped at `max_budget`.
pub fn difference_trial(p1: BetaParams, p2: BetaParams, max_budget: u64, seed: u64, trial: u64) -> Option<u64> {
    let (mut env_r, mut env_l, mut rng) = trial_setup(p1, p2, seed, trial);
    first_difference_return(&mut env_r, &mut env_l, max_budget, &mut rng)
}

/// Regime message when either chain fails μ > 0.
pub fn regime_warning(p1: BetaParams, p2: BetaParams) -> Result<Option<String>> {
    let mut bad = Vec::new();
    for (name, p) in [("p1", p1), ("p2", p2)] {
        let c = criterion(p)?;
        if c.mu <= 0.0 {
            bad.push(format!(
                "{name} = Beta({}, {}) has mu = {:.6} <= 0",
                p.alpha(),
                p.beta(),
                c.mu
            ));
        }
    }
    Ok((!bad.is_empty()).then(|| {
        format!(
            "outside the mu > 0 regime ({}); the recurrence statement does not cover this run",
            bad.join(", ")
        )
    }))
}

/// Build the hit-fraction curve from per-trial first-return events.
pub fn curve_from_returns(budgets: &[u64], returns: &[Option<u64>]) -> Vec<CurvePoint> {
    let n = returns.len();
    budgets
        .iter()
        .map(|&b| {
            let hits = returns.iter().filter(|r| r.is_some_and(|e| e <= b)).count();
            let f = hits as f64 / n as f64;
            CurvePoint {
                budget: b,
                hit_fraction: f,
                stderr: proportion_stderr(f, n),
            }
        })
        .collect()
}

pub fn validate_budgets(budgets: &[u64]) -> Result<()> {
    if budgets.is_empty() {
        return Err(Error::InvalidParameter("at least one budget is required".into()));
    }
    if budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!(
            "budgets must be strictly increasing, got {budgets:?}"
        )));
    }
    Ok(())
}

/// Fraction of trials in which `Z^r − Z^l` returns to 0 within each budget,
/// both chains reflected at the origin. Every trial runs once up to the
/// largest budget, so the curve is nondecreasing.
pub fn difference_recurrence(
    p1: BetaParams,
    p2: BetaParams,
    budgets: &[u64],
    trials: usize,
    seed: u64,
) -> Result<DifferenceCurve> {
    validate_budgets(budgets)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let warning = regime_warning(p1, p2)?;
    let max_budget = *budgets.last().expect("nonempty");
    let returns: Vec<_> = (0..trials as u64)
        .map(|t| difference_trial(p1, p2, max_budget, seed, t))
        .collect();
    Ok(DifferenceCurve {
        p1,
        p2,
        trials,
        seed,
        points: curve_from_returns(budgets, &returns),
        warning,
    })
}
