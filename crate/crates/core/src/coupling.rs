//! Coupled construction `lP ≤ l ≤ r ≤ rP`.
//!
//! `l` and `r` follow the magic-urn process. `lP` and `rP` are birth-death
//! chains in the per-site environment given by the limiting pure-blue and
//! pure-red fractions of each urn. Conditional on that environment the urn
//! draws at a site are i.i.d.: pure red with probability `q_r`, pure blue
//! with probability `p_l`, and otherwise a family member chosen in
//! proportion to the family's current composition. When `lP` shares a site
//! with `l` (or `rP` with `r`) the pair waits on one rate-1 clock and moves on
//! a single draw.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::direct::ModelParams;
use crate::distributions::{make_stream, sample_dirichlet, site_stream_id, BetaLaw, DirichletParams, RngStream};
use crate::error::{Error, Result};
use crate::stats::{binomial_chi_square, chi_square_sf};
use crate::urn::{pick, DrawOutcome, MagicUrn, Particle};
use crate::urn_process::{initial_masses, UrnField};

const ENV_STREAM_TAG: u16 = 0x0e;

/// Limiting fractions of one site's urn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteEnvironment {
    /// Limiting pure-red fraction; `rP` jumps left with this probability.
    pub q_r_polya: f64,
    /// Limiting magic-family fraction.
    pub family: f64,
    /// Limiting pure-blue fraction; `lP` jumps right with this probability.
    pub p_l_polya: f64,
}

impl SiteEnvironment {
    pub fn new(q_r_polya: f64, p_l_polya: f64) -> Result<Self> {
        let ok = (0.0..=1.0).contains(&q_r_polya)
            && (0.0..=1.0).contains(&p_l_polya)
            && q_r_polya + p_l_polya <= 1.0;
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "site environment needs q_r, p_l >= 0 with q_r + p_l <= 1, got ({q_r_polya}, {p_l_polya})"
            )));
        }
        Ok(Self {
            q_r_polya,
            family: 1.0 - q_r_polya - p_l_polya,
            p_l_polya,
        })
    }

    pub fn q_l_polya(&self) -> f64 {
        1.0 - self.p_l_polya
    }

    pub fn p_r_polya(&self) -> f64 {
        1.0 - self.q_r_polya
    }
}

/// Initial `(R₀, B₀)` of the urn at `v`.
fn site_masses(params: &ModelParams, v: i64) -> (f64, f64) {
    initial_masses(&params.a, &params.delta, params.l0, params.r0, v)
}

/// Dirichlet law (R₀/2, ½, B₀/2) of the limiting (pure red, family, pure
/// blue) fractions at `v`. A zero initial mass gives an absent component; a
/// negative one (only for `a < 1`) has no three-colour urn reading and is an
/// error.
pub fn site_dirichlet(params: &ModelParams, v: i64) -> Result<DirichletParams> {
    let (r0, b0) = site_masses(params, v);
    for (color, m) in [("pure red", r0), ("pure blue", b0)] {
        if m < 0.0 {
            return Err(Error::NegativeMass {
                site: v,
                a: params.a,
                color,
                mass: m,
            });
        }
    }
    DirichletParams::with_absent([r0 / 2.0, 0.5, b0 / 2.0])
}

/// Marginal law of `p_l_polya(v)`: Beta(B₀/2, (R₀+1)/2).
pub fn p_l_law(params: &ModelParams, v: i64) -> Result<BetaLaw> {
    let (r0, b0) = site_masses(params, v);
    BetaLaw::limit_fraction(b0 / 2.0, (r0 + 1.0) / 2.0)
}

/// Marginal law of `q_r_polya(v)`: Beta(R₀/2, (B₀+1)/2).
pub fn q_r_law(params: &ModelParams, v: i64) -> Result<BetaLaw> {
    let (r0, b0) = site_masses(params, v);
    BetaLaw::limit_fraction(r0 / 2.0, (b0 + 1.0) / 2.0)
}

/// One draw of the site environment at `v`.
pub fn sample_site_environment(
    params: &ModelParams,
    v: i64,
    rng: &mut RngStream,
) -> Result<SiteEnvironment> {
    let law = site_dirichlet(params, v)?;
    let [q_r, family, p_l] = sample_dirichlet(rng, &law);
    Ok(SiteEnvironment {
        q_r_polya: q_r,
        family,
        p_l_polya: p_l,
    })
}

/// Lazily sampled environment. Each site draws from its own stream derived
/// from the environment seed, so the environment does not depend on the
/// order in which sites are visited.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    params: ModelParams,
    seed: u64,
    sites: BTreeMap<i64, SiteEnvironment>,
}

impl Environment {
    pub fn new(params: &ModelParams, seed: u64) -> Self {
        Self {
            params: *params,
            seed,
            sites: BTreeMap::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&mut self, v: i64) -> Result<SiteEnvironment> {
        if let Some(env) = self.sites.get(&v) {
            return Ok(*env);
        }
        let mut rng = make_stream(self.seed, site_stream_id(ENV_STREAM_TAG, v));
        let env = sample_site_environment(&self.params, v, &mut rng)?;
        self.sites.insert(v, env);
        Ok(env)
    }

    /// Pin the environment at `v`.
    pub fn set(&mut self, v: i64, env: SiteEnvironment) {
        self.sites.insert(v, env);
    }

    pub fn sampled(&self) -> &BTreeMap<i64, SiteEnvironment> {
        &self.sites
    }
}

/// Clock groups of the coupled process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    /// `l`, together with `lP` when they share a site.
    Left { with_polya: bool },
    /// `r`, together with `rP` when they share a site.
    Right { with_polya: bool },
    FreeLeftPolya,
    FreeRightPolya,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledEvent {
    pub group: Group,
    pub outcome: Option<DrawOutcome>,
    /// Site the group moved from.
    pub site: i64,
    /// Positions `[lP, l, r, rP]` after the event.
    pub positions: [i64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub lp: i64,
    pub l: i64,
    pub r: i64,
    pub rp: i64,
    pub field: UrnField,
    pub env: Environment,
    pub events: u64,
}

impl CoupledState {
    /// Fresh state at `(l0, l0, r0, r0)` with the environment seeded by
    /// `env_seed`. The urn field follows the `a >= 1` policy unless
    /// `allow_sub_unit` is set.
    pub fn new(params: &ModelParams, env_seed: u64, allow_sub_unit: bool) -> Result<Self> {
        Self::with_environment(params, Environment::new(params, env_seed), allow_sub_unit)
    }

    pub fn with_environment(params: &ModelParams, env: Environment, allow_sub_unit: bool) -> Result<Self> {
        Ok(Self {
            lp: params.l0,
            l: params.l0,
            r: params.r0,
            rp: params.r0,
            field: UrnField::new(params, allow_sub_unit)?,
            env,
            events: 0,
        })
    }

    pub fn positions(&self) -> [i64; 4] {
        [self.lp, self.l, self.r, self.rp]
    }

    pub fn ordered(&self) -> bool {
        self.lp <= self.l && self.l <= self.r && self.r <= self.rp
    }

    fn dump(&self) -> String {
        format!(
            "after {} events: lP = {}, l = {}, r = {}, rP = {}; urns {:?}; environment {:?}",
            self.events,
            self.lp,
            self.l,
            self.r,
            self.rp,
            self.field.materialized_sites().collect::<Vec<_>>(),
            self.env.sampled()
        )
    }

    pub fn groups(&self) -> Vec<Group> {
        let left_pair = self.lp == self.l;
        let right_pair = self.rp == self.r;
        let mut groups = vec![
            Group::Left {
                with_polya: left_pair,
            },
            Group::Right {
                with_polya: right_pair,
            },
        ];
        if !left_pair {
            groups.push(Group::FreeLeftPolya);
        }
        if !right_pair {
            groups.push(Group::FreeRightPolya);
        }
        groups
    }
}

/// Urn draw conditional on the site environment: pure red, pure blue or the
/// family, then a family member in proportion to the family's composition.
fn conditioned_draw(
    urn: &MagicUrn,
    env: &SiteEnvironment,
    rng: &mut RngStream,
) -> DrawOutcome {
    let u = rng.uniform();
    if u < env.q_r_polya {
        return DrawOutcome::PureRed;
    }
    if u < env.q_r_polya + env.p_l_polya {
        return DrawOutcome::PureBlue;
    }
    let family = urn.family();
    let probs = [
        0.0,
        0.0,
        urn.fam_red / family,
        urn.fam_blue / family,
        1.0 / family,
    ];
    let outcome = pick(&probs, rng.uniform());
    debug_assert!(outcome.is_family());
    outcome
}

/// One event of the coupled process. The moving group is uniform over the
/// current clock groups.
pub fn coupled_step(state: &mut CoupledState, rng: &mut RngStream) -> Result<CoupledEvent> {
    if state.l == state.r {
        return Err(Error::Decoupled { site: state.l });
    }
    let groups = state.groups();
    let group = groups[rng.index(groups.len())];
    let mut outcome = None;
    let site;
    match group {
        Group::Left { with_polya } => {
            site = state.l;
            let env = state.env.get(site)?;
            let urn = state.field.urn_mut(site);
            let o = conditioned_draw(urn, &env, rng);
            urn.apply(o, Particle::Left);
            state.l += o.direction(Particle::Left).step();
            if with_polya {
                state.lp += if o == DrawOutcome::PureBlue { 1 } else { -1 };
            }
            outcome = Some(o);
        }
        Group::Right { with_polya } => {
            site = state.r;
            let env = state.env.get(site)?;
            let urn = state.field.urn_mut(site);
            let o = conditioned_draw(urn, &env, rng);
            urn.apply(o, Particle::Right);
            state.r += o.direction(Particle::Right).step();
            if with_polya {
                state.rp += if o == DrawOutcome::PureRed { -1 } else { 1 };
            }
            outcome = Some(o);
        }
        Group::FreeLeftPolya => {
            site = state.lp;
            let env = state.env.get(site)?;
            state.lp += if rng.bernoulli(env.p_l_polya) { 1 } else { -1 };
        }
        Group::FreeRightPolya => {
            site = state.rp;
            let env = state.env.get(site)?;
            state.rp += if rng.bernoulli(env.q_r_polya) { -1 } else { 1 };
        }
    }
    state.events += 1;
    if !state.ordered() {
        return Err(Error::SandwichViolation(state.dump()));
    }
    Ok(CoupledEvent {
        group,
        outcome,
        site,
        positions: state.positions(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSummary {
    pub violations: u64,
    /// Event count at which `l = r` first held, if within budget.
    pub tau1_event: Option<u64>,
    /// First event count with `rP = lP`, if any.
    pub polya_meeting_event: Option<u64>,
    #[serde(rename = "max_rP_minus_lP")]
    pub max_rp_minus_lp: i64,
    pub events_run: u64,
    /// Positions `[lP, l, r, rP]` at the end of the run.
    pub final_positions: [i64; 4],
    pub seed: u64,
    pub stream_id: u64,
    pub env_seed: u64,
    /// State dump for the first violation.
    pub violation: Option<String>,
    /// `rP − lP` after every event, when requested.
    pub gap_path: Option<Vec<i64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingOptions {
    pub record_gap_path: bool,
    pub record_events: bool,
    pub allow_sub_unit: bool,
}

/// Run the coupled process until `l = r` or `max_events` events.
pub fn run_coupling(
    params: &ModelParams,
    max_events: u64,
    env_seed: u64,
    rng: &mut RngStream,
    options: CouplingOptions,
) -> Result<(CouplingSummary, Vec<CoupledEvent>)> {
    params.validate()?;
    let mut state = CoupledState::new(params, env_seed, options.allow_sub_unit)?;
    run_from(&mut state, max_events, rng, options)
}

/// Run an existing coupled state (e.g. one with a pinned environment).
pub fn run_from(
    state: &mut CoupledState,
    max_events: u64,
    rng: &mut RngStream,
    options: CouplingOptions,
) -> Result<(CouplingSummary, Vec<CoupledEvent>)> {
    let mut events = Vec::new();
    let mut gap_path = options.record_gap_path.then(Vec::new);
    let mut summary = CouplingSummary {
        violations: 0,
        tau1_event: None,
        polya_meeting_event: None,
        max_rp_minus_lp: state.rp - state.lp,
        events_run: 0,
        final_positions: state.positions(),
        seed: rng.seed(),
        stream_id: rng.stream_id(),
        env_seed: state.env.seed(),
        violation: None,
        gap_path: None,
    };
    if state.l == state.r {
        summary.tau1_event = Some(state.events);
    }
    if state.lp == state.rp {
        summary.polya_meeting_event = Some(state.events);
    }
    while summary.tau1_event.is_none() && summary.events_run < max_events {
        match coupled_step(state, rng) {
            Ok(ev) => {
                if options.record_events {
                    events.push(ev);
                }
            }
            Err(Error::SandwichViolation(dump)) => {
                summary.violations += 1;
                summary.violation = Some(dump);
                summary.events_run += 1;
                break;
            }
            Err(e) => return Err(e),
        }
        summary.events_run += 1;
        let gap = state.rp - state.lp;
        summary.max_rp_minus_lp = summary.max_rp_minus_lp.max(gap);
        if let Some(path) = gap_path.as_mut() {
            path.push(gap);
        }
        if gap == 0 && summary.polya_meeting_event.is_none() {
            summary.polya_meeting_event = Some(state.events);
        }
        if state.l == state.r {
            summary.tau1_event = Some(state.events);
        }
    }
    summary.final_positions = state.positions();
    summary.gap_path = gap_path;
    Ok((summary, events))
}

/// Transition counts of one comparison walker at one site.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteCounts {
    /// Jumps in the tested direction (right for `lP`, left for `rP`).
    pub hits: u64,
    pub total: u64,
    /// The subset of the above taken on shared-clock (paired) steps.
    pub paired_hits: u64,
    pub paired_total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteTest {
    pub walker: String,
    pub site: i64,
    pub expected: f64,
    pub observed: f64,
    pub counts: SiteCounts,
    pub chi_square: Option<f64>,
    pub p_value: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalReport {
    pub env_seed: u64,
    pub trials: usize,
    pub significance: f64,
    /// Bonferroni-corrected per-site threshold.
    pub threshold: f64,
    pub tested: Vec<SiteTest>,
    /// Sites with too few visits for the chi-square approximation.
    pub insufficient: Vec<(String, i64, u64)>,
    pub passed: bool,
}

/// Tally the comparison walkers' moves from coupled-run event logs.
pub fn tally_polya_moves(
    runs: &[Vec<CoupledEvent>],
    start: [i64; 4],
) -> (BTreeMap<i64, SiteCounts>, BTreeMap<i64, SiteCounts>) {
    let mut left = BTreeMap::<i64, SiteCounts>::new();
    let mut right = BTreeMap::<i64, SiteCounts>::new();
    for events in runs {
        let mut prev = start;
        for ev in events {
            let [lp0, _, _, rp0] = prev;
            let [lp1, _, _, rp1] = ev.positions;
            if lp1 != lp0 {
                let paired = matches!(ev.group, Group::Left { with_polya: true });
                let c = left.entry(lp0).or_default();
                c.total += 1;
                c.hits += u64::from(lp1 > lp0);
                if paired {
                    c.paired_total += 1;
                    c.paired_hits += u64::from(lp1 > lp0);
                }
            }
            if rp1 != rp0 {
                let paired = matches!(ev.group, Group::Right { with_polya: true });
                let c = right.entry(rp0).or_default();
                c.total += 1;
                c.hits += u64::from(rp1 < rp0);
                if paired {
                    c.paired_total += 1;
                    c.paired_hits += u64::from(rp1 < rp0);
                }
            }
            prev = ev.positions;
        }
    }
    (left, right)
}

/// Conditional on one environment (seeded by `env_seed`), check that `lP`
/// and `rP` jump with the environment's probabilities at every visited
/// site: chi-square per site at `significance` with Bonferroni correction.
/// Sites whose expected cell counts fall below 5 are listed as insufficient;
/// degenerate sites (probability exactly 0) must show no hits at all.
pub fn marginal_check(
    params: &ModelParams,
    trials: usize,
    max_events: u64,
    env_seed: u64,
    seed: u64,
    significance: f64,
) -> Result<MarginalReport> {
    params.validate()?;
    let mut env = Environment::new(params, env_seed);
    let mut runs = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = make_stream(seed, t as u64);
        let mut state = CoupledState::with_environment(params, env.clone(), false)?;
        let opts = CouplingOptions {
            record_events: true,
            ..Default::default()
        };
        let (_, events) = run_from(&mut state, max_events, &mut rng, opts)?;
        // Keep every site sampled so far, so later trials see the same values.
        for (v, e) in state.env.sampled() {
            env.set(*v, *e);
        }
        runs.push(events);
    }
    let start = [params.l0, params.l0, params.r0, params.r0];
    let (left, right) = tally_polya_moves(&runs, start);

    let mut candidates = Vec::new();
    let mut insufficient = Vec::new();
    for (walker, counts) in [("lP", &left), ("rP", &right)] {
        for (&v, &c) in counts {
            let e = env.get(v)?;
            let p = if walker == "lP" { e.p_l_polya } else { e.q_r_polya };
            candidates.push((walker, v, p, c));
        }
    }
    let mut tested = Vec::new();
    let mut chi_tests = 0usize;
    for &(walker, v, p, c) in &candidates {
        let degenerate = p == 0.0 || p == 1.0;
        let n = c.total as f64;
        if !degenerate && (n * p < 5.0 || n * (1.0 - p) < 5.0) {
            insufficient.push((walker.to_string(), v, c.total));
            continue;
        }
        if !degenerate {
            chi_tests += 1;
        }
    }
    let threshold = significance / chi_tests.max(1) as f64;
    for (walker, v, p, c) in candidates {
        let n = c.total as f64;
        let observed = if c.total > 0 { c.hits as f64 / n } else { 0.0 };
        let degenerate = p == 0.0 || p == 1.0;
        if degenerate {
            let passed = if p == 0.0 { c.hits == 0 } else { c.hits == c.total };
            tested.push(SiteTest {
                walker: walker.to_string(),
                site: v,
                expected: p,
                observed,
                counts: c,
                chi_square: None,
                p_value: None,
                passed,
            });
            continue;
        }
        if n * p < 5.0 || n * (1.0 - p) < 5.0 {
            continue;
        }
        let stat = binomial_chi_square(c.hits, c.total, p);
        let pv = chi_square_sf(stat, 1.0);
        tested.push(SiteTest {
            walker: walker.to_string(),
            site: v,
            expected: p,
            observed,
            counts: c,
            chi_square: Some(stat),
            p_value: Some(pv),
            passed: pv >= threshold,
        });
    }
    if tested.is_empty() {
        return Err(Error::Insufficient(format!(
            "no site had enough visits to test ({} insufficient)",
            insufficient.len()
        )));
    }
    let passed = tested.iter().all(|t| t.passed);
    Ok(MarginalReport {
        env_seed,
        trials,
        significance,
        threshold,
        tested,
        insufficient,
        passed,
    })
}
