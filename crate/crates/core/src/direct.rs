//! Weight-based dynamics of linear edge-reinforced particles on ℤ.
//!
//! Each edge starts with weight `a` and gains 1 per traversal. A particle at
//! `v` jumps right with probability `(W[v,v+1] + Δ) / (W[v−1,v] + W[v,v+1] + Δ)`.
//! All particles carry independent rate-1 clocks, so the embedded jump chain
//! picks the mover uniformly.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::distributions::{sample_exp, RngStream};
use crate::error::{Error, Result};
use crate::mass::Mass;
use crate::stats::proportion_stderr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub delta: f64,
    pub l0: i64,
    pub r0: i64,
    pub max_events: u64,
    pub seed: u64,
}

impl ModelParams {
    pub fn new(a: f64, delta: f64, l0: i64, r0: i64) -> Result<Self> {
        let p = Self {
            a,
            delta,
            l0,
            r0,
            max_events: 0,
            seed: 0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_budget(mut self, max_events: u64) -> Self {
        self.max_events = max_events;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "initial weight a must be positive, got {}",
                self.a
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "drift delta must satisfy delta >= 0, got {}",
                self.delta
            )));
        }
        if self.l0 > self.r0 {
            return Err(Error::InvalidParameter(format!(
                "starting sites need l0 <= r0, got l0 = {}, r0 = {}",
                self.l0, self.r0
            )));
        }
        Ok(())
    }

    /// Drift strictly below 1, where the two particles are known to meet
    /// again and again.
    pub fn in_recurrence_regime(&self) -> bool {
        self.delta < 1.0
    }
}

/// Sparse edge weights, keyed by the left endpoint of the edge. Only the
/// traversal counts are stored; the weight is `a + count`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeightMap {
    traversals: HashMap<i64, u64>,
}

impl WeightMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of traversals of edge `[left, left + 1]`.
    pub fn traversals(&self, left: i64) -> u64 {
        self.traversals.get(&left).copied().unwrap_or(0)
    }

    pub fn weight(&self, left: i64, a: f64) -> f64 {
        a + self.traversals(left) as f64
    }

    pub fn weight_as<M: Mass>(&self, left: i64, a: &M) -> M {
        a.clone() + M::from_i64(self.traversals(left) as i64)
    }

    pub fn reinforce(&mut self, left: i64) {
        *self.traversals.entry(left).or_insert(0) += 1;
    }

    pub(crate) fn unreinforce(&mut self, left: i64) {
        if let Some(c) = self.traversals.get_mut(&left) {
            *c -= 1;
            if *c == 0 {
                self.traversals.remove(&left);
            }
        }
    }

    /// Total weight added so far, which equals the number of jumps.
    pub fn total_added(&self) -> u64 {
        self.traversals.values().sum()
    }

    pub fn touched_edges(&self) -> usize {
        self.traversals.len()
    }

    /// Probability of a jump from `v` to `v + 1`.
    pub fn right_probability<M: Mass>(&self, v: i64, a: &M, delta: &M) -> M {
        let left = self.weight_as(v - 1, a);
        let right = self.weight_as(v, a) + delta.clone();
        right.clone() / (left + right)
    }
}

/// Positions indexed by particle identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticleConfig {
    pub positions: Vec<i64>,
}

impl ParticleConfig {
    pub fn new(positions: Vec<i64>) -> Self {
        Self { positions }
    }

    /// `n` particles: the first at `l0`, the rest at `r0`. For two particles
    /// this is the usual `(l0, r0)` start.
    pub fn start(params: &ModelParams, n: usize) -> Self {
        let positions = (0..n)
            .map(|i| if i == 0 { params.l0 } else { params.r0 })
            .collect();
        Self { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn left(&self) -> i64 {
        *self.positions.iter().min().expect("at least one particle")
    }

    pub fn right(&self) -> i64 {
        *self.positions.iter().max().expect("at least one particle")
    }

    pub fn all_coincide(&self) -> bool {
        self.positions.windows(2).all(|w| w[0] == w[1])
    }
}

/// One jump of the embedded chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// 1-based event index.
    pub e: u64,
    /// Continuous time of the jump, when holding times are sampled.
    pub t: Option<f64>,
    /// Identity of the particle that moved.
    pub p: usize,
    pub from: i64,
    pub to: i64,
}

/// One event of the direct dynamics. The mover is uniform among the
/// particles, then jumps by the drifted weight rule; the traversed edge is
/// reinforced.
pub fn direct_step(
    weights: &mut WeightMap,
    config: &mut ParticleConfig,
    params: &ModelParams,
    rng: &mut RngStream,
) -> (usize, i64, i64) {
    let p = rng.index(config.len());
    let from = config.positions[p];
    let right = weights.right_probability(from, &params.a, &params.delta);
    let to = if rng.uniform() < right {
        weights.reinforce(from);
        from + 1
    } else {
        weights.reinforce(from - 1);
        from - 1
    };
    config.positions[p] = to;
    (p, from, to)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Keep every event in the record.
    pub record_events: bool,
    /// Attach Exp(n) holding times to the events.
    pub continuous_time: bool,
    /// Stop once this many meetings have been seen.
    pub stop_after_meetings: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub params: ModelParams,
    pub n_particles: usize,
    pub events_run: u64,
    pub events: Vec<Event>,
    /// Event counts at which all particles occupy one site (0 if they start
    /// together). Strictly increasing.
    pub meeting_times: Vec<u64>,
    pub final_positions: Vec<i64>,
    /// Continuous time at the end of the run, when sampled.
    pub final_time: Option<f64>,
}

/// Run the direct dynamics for up to `params.max_events` events.
pub fn run_direct(
    params: &ModelParams,
    n_particles: usize,
    rng: &mut RngStream,
    options: RunOptions,
) -> Result<TrajectoryRecord> {
    params.validate()?;
    if n_particles == 0 {
        return Err(Error::InvalidParameter("need at least one particle".into()));
    }
    let mut weights = WeightMap::new();
    let mut config = ParticleConfig::start(params, n_particles);
    let mut meeting_times = Vec::new();
    let mut events = Vec::new();
    let track_meetings = n_particles >= 2;
    if track_meetings && config.all_coincide() {
        meeting_times.push(0);
    }
    let mut clock = options.continuous_time.then_some(0.0);
    let stop = |m: &Vec<u64>| options.stop_after_meetings.is_some_and(|k| m.len() >= k);
    let mut e = 0;
    while e < params.max_events && !stop(&meeting_times) {
        if let Some(t) = clock.as_mut() {
            *t += sample_exp(rng, n_particles as f64);
        }
        let (p, from, to) = direct_step(&mut weights, &mut config, params, rng);
        e += 1;
        if options.record_events {
            events.push(Event {
                e,
                t: clock,
                p,
                from,
                to,
            });
        }
        if track_meetings && config.all_coincide() {
            meeting_times.push(e);
        }
    }
    Ok(TrajectoryRecord {
        params: *params,
        n_particles,
        events_run: e,
        events,
        meeting_times,
        final_positions: config.positions,
        final_time: clock,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetingFrequency {
    pub k: usize,
    pub count: usize,
    pub frequency: f64,
    pub stderr: f64,
    /// Mean of τ_k − τ_{k−1} (τ_0 = 0) over trials that reached τ_k.
    pub mean_gap: Option<f64>,
    pub median_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetingSummary {
    pub trials: usize,
    pub budget: u64,
    pub per_k: Vec<MeetingFrequency>,
}

impl MeetingSummary {
    pub fn frequency(&self, k: usize) -> f64 {
        self.per_k
            .iter()
            .find(|m| m.k == k)
            .map_or(0.0, |m| m.frequency)
    }
}

/// Per-k fractions of trials whose k-th meeting fell within the budget.
pub fn meeting_statistics(records: &[TrajectoryRecord]) -> Result<MeetingSummary> {
    let first = records
        .first()
        .ok_or_else(|| Error::Insufficient("no trajectory records".into()))?;
    for r in records {
        if r.params != first.params || r.n_particles != first.n_particles {
            return Err(Error::Mismatch(
                "meeting statistics need records from identical parameters".into(),
            ));
        }
    }
    let trials = records.len();
    let max_k = records.iter().map(|r| r.meeting_times.len()).max().unwrap_or(0);
    let per_k = (1..=max_k)
        .map(|k| {
            let mut gaps: Vec<u64> = records
                .iter()
                .filter(|r| r.meeting_times.len() >= k)
                .map(|r| {
                    let prev = if k >= 2 { r.meeting_times[k - 2] } else { 0 };
                    r.meeting_times[k - 1] - prev
                })
                .collect();
            gaps.sort_unstable();
            let count = gaps.len();
            let frequency = count as f64 / trials as f64;
            let mean_gap = (count > 0).then(|| gaps.iter().sum::<u64>() as f64 / count as f64);
            let median_gap = (count > 0).then(|| {
                if count % 2 == 1 {
                    gaps[count / 2] as f64
                } else {
                    0.5 * (gaps[count / 2 - 1] + gaps[count / 2]) as f64
                }
            });
            MeetingFrequency {
                k,
                count,
                frequency,
                stderr: proportion_stderr(frequency, trials),
                mean_gap,
                median_gap,
            }
        })
        .collect();
    Ok(MeetingSummary {
        trials,
        budget: first.params.max_events,
        per_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::make_stream;
    use approx::assert_abs_diff_eq;

    fn params(a: f64, delta: f64, l0: i64, r0: i64, events: u64) -> ModelParams {
        ModelParams::new(a, delta, l0, r0).unwrap().with_budget(events)
    }

    #[test]
    fn fresh_site_symmetric() {
        let w = WeightMap::new();
        assert_eq!(w.right_probability(5, &1.0, &0.0), 0.5);
    }

    #[test]
    fn fresh_site_with_drift() {
        let w = WeightMap::new();
        assert_abs_diff_eq!(w.right_probability(0, &1.0, &1.0), 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn two_particle_first_event_enumeration() {
        // l = 0, r = 2, fresh weights, a = 1, Δ = 0: the four (mover, direction)
        // outcomes each have probability 1/2 · 1/2.
        let w = WeightMap::new();
        let p_left_moves_right = 0.5 * w.right_probability(0, &1.0, &0.0);
        assert_eq!(p_left_moves_right, 0.25);

        let mut rng = make_stream(21, 0);
        let p = params(1.0, 0.0, 0, 2, 1);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| {
                let mut w = WeightMap::new();
                let mut c = ParticleConfig::start(&p, 2);
                direct_step(&mut w, &mut c, &p, &mut rng) == (0, 0, 1)
            })
            .count();
        assert_abs_diff_eq!(hits as f64 / n as f64, 0.25, epsilon = 0.005);
    }

    #[test]
    fn coincident_start_meets_at_zero() {
        let mut rng = make_stream(1, 0);
        let rec = run_direct(&params(1.0, 0.0, 3, 3, 10), 2, &mut rng, RunOptions::default()).unwrap();
        assert_eq!(rec.meeting_times.first(), Some(&0));
    }

    #[test]
    fn zero_budget_is_noop() {
        let mut rng = make_stream(1, 0);
        let opts = RunOptions {
            record_events: true,
            ..Default::default()
        };
        let rec = run_direct(&params(1.0, 0.0, 0, 0, 0), 1, &mut rng, opts).unwrap();
        assert!(rec.events.is_empty());
        assert_eq!(rec.events_run, 0);
        assert_eq!(rec.final_positions, vec![0]);
        assert!(rec.meeting_times.is_empty());
    }

    #[test]
    fn weight_sum_and_label_invariants() {
        let p = params(1.5, 0.3, -1, 4, 5000);
        let mut rng = make_stream(8, 2);
        let mut w = WeightMap::new();
        let mut c = ParticleConfig::start(&p, 2);
        for n in 1..=p.max_events {
            let (_, from, to) = direct_step(&mut w, &mut c, &p, &mut rng);
            assert_eq!((to - from).abs(), 1);
            assert_eq!(w.total_added(), n);
            assert!(c.left() <= c.right());
        }
    }

    #[test]
    fn events_are_consistent() {
        let p = params(1.0, 0.0, 0, 2, 2000);
        let mut rng = make_stream(5, 5);
        let opts = RunOptions {
            record_events: true,
            continuous_time: true,
            stop_after_meetings: None,
        };
        let rec = run_direct(&p, 2, &mut rng, opts).unwrap();
        let mut pos = vec![0i64, 2];
        let mut last_t = 0.0;
        for (i, ev) in rec.events.iter().enumerate() {
            assert_eq!(ev.e, i as u64 + 1);
            assert_eq!(pos[ev.p], ev.from);
            assert_eq!((ev.to - ev.from).abs(), 1);
            pos[ev.p] = ev.to;
            let t = ev.t.unwrap();
            assert!(t > last_t);
            last_t = t;
            if pos[0] == pos[1] {
                assert!(rec.meeting_times.contains(&ev.e));
            }
        }
        assert_eq!(pos, rec.final_positions);
        assert!(rec.meeting_times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn stop_after_first_meeting() {
        let p = params(1.0, 0.0, 0, 1, 100_000);
        let mut rng = make_stream(2, 0);
        let opts = RunOptions {
            stop_after_meetings: Some(1),
            ..Default::default()
        };
        let rec = run_direct(&p, 2, &mut rng, opts).unwrap();
        if let Some(&t) = rec.meeting_times.first() {
            assert_eq!(rec.events_run, t);
        }
    }

    #[test]
    fn heavy_weights_are_symmetric() {
        let p = params(1e6, 0.0, 0, 0, 1);
        let mut rng = make_stream(31, 0);
        let n = 100_000;
        let rights = (0..n)
            .filter(|_| {
                let mut w = WeightMap::new();
                let mut c = ParticleConfig::start(&p, 1);
                direct_step(&mut w, &mut c, &p, &mut rng).2 == 1
            })
            .count();
        assert_abs_diff_eq!(rights as f64 / n as f64, 0.5, epsilon = 0.005);
    }

    #[test]
    fn meeting_frequencies_nest() {
        let p = params(1.0, 0.0, 0, 2, 500);
        let records: Vec<_> = (0..200)
            .map(|i| {
                let mut rng = make_stream(3, i);
                run_direct(&p, 2, &mut rng, RunOptions::default()).unwrap()
            })
            .collect();
        let s = meeting_statistics(&records).unwrap();
        assert!(s.per_k.windows(2).all(|w| w[0].frequency >= w[1].frequency));
        assert!(s.frequency(1) > 0.0);
    }

    #[test]
    fn coincident_trials_meet_with_certainty() {
        let p = params(1.0, 0.0, 0, 0, 50);
        let records: Vec<_> = (0..20)
            .map(|i| run_direct(&p, 2, &mut make_stream(4, i), RunOptions::default()).unwrap())
            .collect();
        assert_eq!(meeting_statistics(&records).unwrap().frequency(1), 1.0);
    }

    #[test]
    fn mixed_parameters_rejected() {
        let a = run_direct(&params(1.0, 0.0, 0, 2, 10), 2, &mut make_stream(1, 0), RunOptions::default()).unwrap();
        let b = run_direct(&params(1.0, 0.5, 0, 2, 10), 2, &mut make_stream(1, 0), RunOptions::default()).unwrap();
        assert!(matches!(meeting_statistics(&[a, b]), Err(Error::Mismatch(_))));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(0.0, 0.0, 0, 1).is_err());
        assert!(ModelParams::new(1.0, -1.0, 0, 1).is_err());
        assert!(ModelParams::new(1.0, 0.0, 2, 1).is_err());
        assert!(!ModelParams::new(1.0, 1.5, 0, 1).unwrap().in_recurrence_regime());
    }
}
