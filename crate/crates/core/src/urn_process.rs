//! The two-particle process driven by per-site magic urns, valid up to the
//! first meeting time, and an exact enumerator that compares its trajectory
//! law against the direct weight dynamics.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::direct::{ModelParams, WeightMap};
use crate::distributions::RngStream;
use crate::error::{Error, Result};
use crate::mass::Mass;
use crate::urn::{pick, Direction, DrawOutcome, MagicUrn, Particle};

pub const MAX_HORIZON: usize = 8;

/// Initial `[red, blue]` masses (magic marble excluded) of the urn at `v`.
pub fn initial_masses<M: Mass>(a: &M, delta: &M, l0: i64, r0: i64, v: i64) -> (M, M) {
    let one = M::one();
    let a = a.clone();
    let d = delta.clone();
    if v < l0 {
        (a.clone() - one.clone(), one + a + d)
    } else if v == l0 {
        (a.clone() - one, a + d)
    } else if v < r0 {
        (a.clone(), a + d)
    } else if v == r0 {
        (a.clone(), a - one + d)
    } else {
        (a.clone() + one.clone(), a - one + d)
    }
}

/// Sparse site → urn table. A site's urn is materialised from the initial
/// configuration the first time a particle draws there.
#[derive(Debug, Clone, PartialEq)]
pub struct UrnField<M = f64> {
    a: M,
    delta: M,
    a_f64: f64,
    l0: i64,
    r0: i64,
    urns: BTreeMap<i64, MagicUrn<M>>,
}

impl<M: Mass> UrnField<M> {
    /// Fails for `a < 1` unless `allow_sub_unit` is set: the initial pure red
    /// mass `a − 1` is then negative.
    pub fn new(params: &ModelParams, allow_sub_unit: bool) -> Result<Self> {
        params.validate()?;
        if params.a < 1.0 && !allow_sub_unit {
            return Err(Error::SubUnitWeight { a: params.a });
        }
        Ok(Self {
            a: M::from_f64(params.a),
            delta: M::from_f64(params.delta),
            a_f64: params.a,
            l0: params.l0,
            r0: params.r0,
            urns: BTreeMap::new(),
        })
    }

    pub fn initial_urn(&self, v: i64) -> MagicUrn<M> {
        let (red, blue) = initial_masses(&self.a, &self.delta, self.l0, self.r0, v);
        MagicUrn::new(red, blue)
    }

    /// Current urn at `v` (the initial one if never drawn from).
    pub fn urn(&self, v: i64) -> MagicUrn<M> {
        self.urns
            .get(&v)
            .cloned()
            .unwrap_or_else(|| self.initial_urn(v))
    }

    pub fn urn_mut(&mut self, v: i64) -> &mut MagicUrn<M> {
        if !self.urns.contains_key(&v) {
            let fresh = self.initial_urn(v);
            self.urns.insert(v, fresh);
        }
        self.urns.get_mut(&v).expect("just inserted")
    }

    pub fn is_materialized(&self, v: i64) -> bool {
        self.urns.contains_key(&v)
    }

    pub fn materialized_sites(&self) -> impl Iterator<Item = (&i64, &MagicUrn<M>)> {
        self.urns.iter()
    }

    fn forget(&mut self, v: i64) {
        self.urns.remove(&v);
    }

    fn negative(&self, v: i64, e: crate::urn::NegativeMass) -> Error {
        Error::NegativeMass {
            site: v,
            a: self.a_f64,
            color: e.color,
            mass: e.mass,
        }
    }
}

/// Closed-form jump probabilities `(left, right)` for `present` at an urn
/// with red count `R` and blue count `B` (magic marble excluded):
/// left particle `((R+1)/(R+B+1), B/(R+B+1))`, right particle
/// `(R/(R+B+1), (B+1)/(R+B+1))`.
pub fn jump_rates<M: Mass>(urn: &MagicUrn<M>, present: Particle) -> (M, M) {
    let r = urn.red();
    let b = urn.blue();
    let total = r.clone() + b.clone() + M::one();
    match present {
        Particle::Left => ((r + M::one()) / total.clone(), b / total),
        Particle::Right => (r / total.clone(), (b + M::one()) / total),
    }
}

/// One event of the urn-driven process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrnEvent {
    pub mover: Particle,
    pub outcome: DrawOutcome,
    pub from: i64,
    pub to: i64,
}

/// Positions of the two particles plus the urn field that drives them.
#[derive(Debug, Clone, PartialEq)]
pub struct UrnProcess {
    pub field: UrnField,
    pub l: i64,
    pub r: i64,
}

impl UrnProcess {
    pub fn new(params: &ModelParams, allow_sub_unit: bool) -> Result<Self> {
        Ok(Self {
            field: UrnField::new(params, allow_sub_unit)?,
            l: params.l0,
            r: params.r0,
        })
    }

    pub fn decoupled(&self) -> bool {
        self.l == self.r
    }

    pub fn position(&self, p: Particle) -> i64 {
        match p {
            Particle::Left => self.l,
            Particle::Right => self.r,
        }
    }

    /// Move `mover` by one magic-urn draw at its site.
    pub fn step_particle(&mut self, mover: Particle, rng: &mut RngStream) -> Result<UrnEvent> {
        if self.decoupled() {
            return Err(Error::Decoupled { site: self.l });
        }
        let from = self.position(mover);
        let urn = self.field.urn_mut(from);
        let probs = urn
            .outcome_probabilities(mover)
            .map_err(|e| self.field.negative(from, e))?;
        let outcome = pick(&probs, rng.uniform());
        self.field.urn_mut(from).apply(outcome, mover);
        let to = from + outcome.direction(mover).step();
        match mover {
            Particle::Left => self.l = to,
            Particle::Right => self.r = to,
        }
        Ok(UrnEvent {
            mover,
            outcome,
            from,
            to,
        })
    }

    /// One event: the mover is uniform over the two particles.
    pub fn step(&mut self, rng: &mut RngStream) -> Result<UrnEvent> {
        if self.decoupled() {
            return Err(Error::Decoupled { site: self.l });
        }
        let mover = if rng.index(2) == 0 {
            Particle::Left
        } else {
            Particle::Right
        };
        self.step_particle(mover, rng)
    }
}

/// Which dynamics to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Direct,
    Urn,
}

pub type Trajectory = Vec<(Particle, Direction)>;

/// Exact law of the (mover, direction) sequence up to a horizon, with paths
/// stopped at the first meeting.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    pub model: Model,
    pub params: ModelParams,
    pub horizon: usize,
    pub probs: BTreeMap<Trajectory, BigRational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactEntry {
    pub traj: Vec<[i8; 2]>,
    pub prob_num: String,
    pub prob_den: String,
}

impl ExactDistribution {
    pub fn total(&self) -> BigRational {
        self.probs.values().fold(BigRational::zero(), |acc, p| acc + p)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, traj: &[(Particle, Direction)]) -> BigRational {
        self.probs.get(traj).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Entries in the export form: particle 0 = left, 1 = right; direction
    /// −1 = left, +1 = right; probability as an exact fraction.
    pub fn entries(&self) -> Vec<ExactEntry> {
        self.probs
            .iter()
            .map(|(traj, p)| ExactEntry {
                traj: traj
                    .iter()
                    .map(|(m, d)| [m.index() as i8, d.step() as i8])
                    .collect(),
                prob_num: p.numer().to_string(),
                prob_den: p.denom().to_string(),
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.entries()).expect("plain data")
    }
}

/// Upper bound on the number of (mover, direction) leaves at a horizon.
pub fn leaf_bound(horizon: usize) -> u128 {
    4u128.saturating_pow(horizon as u32)
}

/// Enumerate the exact trajectory law of `model` up to `horizon` events.
pub fn enumerate_exact(
    model: Model,
    params: &ModelParams,
    horizon: usize,
    allow_sub_unit: bool,
) -> Result<ExactDistribution> {
    params.validate()?;
    if horizon > MAX_HORIZON {
        return Err(Error::HorizonTooLarge {
            horizon,
            leaves: leaf_bound(horizon),
            max: MAX_HORIZON,
        });
    }
    let mut probs = BTreeMap::new();
    let mut path = Vec::with_capacity(horizon);
    let half = BigRational::new(1.into(), 2.into());
    match model {
        Model::Direct => {
            let a = <BigRational as Mass>::from_f64(params.a);
            let delta = <BigRational as Mass>::from_f64(params.delta);
            let mut walk = DirectWalk {
                a,
                delta,
                weights: WeightMap::new(),
                pos: [params.l0, params.r0],
                half,
            };
            walk.expand(BigRational::from_integer(1.into()), horizon, &mut path, &mut probs);
        }
        Model::Urn => {
            let mut walk = UrnWalk {
                field: UrnField::<BigRational>::new(params, allow_sub_unit)?,
                pos: [params.l0, params.r0],
                half,
            };
            walk.expand(BigRational::from_integer(1.into()), horizon, &mut path, &mut probs)?;
        }
    }
    Ok(ExactDistribution {
        model,
        params: *params,
        horizon,
        probs,
    })
}

fn record(probs: &mut BTreeMap<Trajectory, BigRational>, path: &Trajectory, p: BigRational) {
    let slot = probs.entry(path.clone()).or_insert_with(BigRational::zero);
    *slot += p;
}

const MOVERS: [Particle; 2] = [Particle::Left, Particle::Right];

struct DirectWalk {
    a: BigRational,
    delta: BigRational,
    weights: WeightMap,
    pos: [i64; 2],
    half: BigRational,
}

impl DirectWalk {
    fn expand(
        &mut self,
        mass: BigRational,
        depth: usize,
        path: &mut Trajectory,
        probs: &mut BTreeMap<Trajectory, BigRational>,
    ) {
        if depth == 0 || self.pos[0] == self.pos[1] {
            record(probs, path, mass);
            return;
        }
        for mover in MOVERS {
            let from = self.pos[mover.index()];
            let right = self.weights.right_probability(from, &self.a, &self.delta);
            let left = BigRational::from_integer(1.into()) - right.clone();
            for (dir, p) in [(Direction::Left, left), (Direction::Right, right)] {
                if p.is_zero() {
                    continue;
                }
                let edge = if dir == Direction::Right { from } else { from - 1 };
                self.weights.reinforce(edge);
                self.pos[mover.index()] = from + dir.step();
                path.push((mover, dir));
                self.expand(mass.clone() * &self.half * p, depth - 1, path, probs);
                path.pop();
                self.pos[mover.index()] = from;
                self.weights.unreinforce(edge);
            }
        }
    }
}

struct UrnWalk {
    field: UrnField<BigRational>,
    pos: [i64; 2],
    half: BigRational,
}

impl UrnWalk {
    fn expand(
        &mut self,
        mass: BigRational,
        depth: usize,
        path: &mut Trajectory,
        probs: &mut BTreeMap<Trajectory, BigRational>,
    ) -> Result<()> {
        if depth == 0 || self.pos[0] == self.pos[1] {
            record(probs, path, mass);
            return Ok(());
        }
        for mover in MOVERS {
            let from = self.pos[mover.index()];
            let fresh = !self.field.is_materialized(from);
            let outcome_probs = self
                .field
                .urn(from)
                .outcome_probabilities(mover)
                .map_err(|e| self.field.negative(from, e))?;
            for (outcome, p) in DrawOutcome::ALL.into_iter().zip(outcome_probs) {
                if p.is_zero() {
                    continue;
                }
                debug_assert!(p.is_positive());
                let dir = outcome.direction(mover);
                let before = self.field.urn(from);
                self.field.urn_mut(from).apply(outcome, mover);
                self.pos[mover.index()] = from + dir.step();
                path.push((mover, dir));
                self.expand(mass.clone() * &self.half * p, depth - 1, path, probs)?;
                path.pop();
                self.pos[mover.index()] = from;
                *self.field.urn_mut(from) = before;
            }
            if fresh {
                self.field.forget(from);
            }
        }
        Ok(())
    }
}

/// Total variation distance ½ Σ |p₁ − p₂| over the union of supports.
pub fn tv_distance(d1: &ExactDistribution, d2: &ExactDistribution) -> Result<BigRational> {
    if d1.horizon != d2.horizon {
        return Err(Error::Mismatch(format!(
            "horizons differ: {} vs {}",
            d1.horizon, d2.horizon
        )));
    }
    if d1.params.a != d2.params.a
        || d1.params.delta != d2.params.delta
        || d1.params.l0 != d2.params.l0
        || d1.params.r0 != d2.params.r0
    {
        return Err(Error::Mismatch("distributions come from different parameters".into()));
    }
    let mut sum = BigRational::zero();
    for (traj, p) in &d1.probs {
        sum += (p - d2.prob(traj)).abs();
    }
    for (traj, p) in &d2.probs {
        if !d1.probs.contains_key(traj) {
            sum += p.abs();
        }
    }
    Ok(sum / BigRational::from_integer(2.into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::make_stream;
    use approx::assert_abs_diff_eq;

    fn frac(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn params(a: f64, delta: f64, l0: i64, r0: i64) -> ModelParams {
        ModelParams::new(a, delta, l0, r0).unwrap()
    }

    #[test]
    fn initial_rows_unit_weight() {
        let f = UrnField::<f64>::new(&params(1.0, 0.0, 0, 2), false).unwrap();
        let rows: Vec<(f64, f64)> = (-2..=4)
            .map(|v| {
                let u = f.urn(v);
                (u.pure_red, u.pure_blue)
            })
            .collect();
        assert_eq!(
            rows,
            vec![(0.0, 2.0), (0.0, 2.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0), (2.0, 0.0), (2.0, 0.0)]
        );
        assert!(!f.is_materialized(0));
    }

    #[test]
    fn initial_row_at_r0_with_drift() {
        let f = UrnField::<f64>::new(&params(2.0, 0.5, 0, 3), false).unwrap();
        let u = f.urn(3);
        assert_eq!((u.pure_red, u.pure_blue), (2.0, 1.5));
        assert_eq!(u.fam_red + u.fam_blue, 0.0);
    }

    #[test]
    fn sub_unit_weight_needs_override() {
        let p = params(0.5, 0.0, 0, 2);
        assert!(matches!(UrnField::<f64>::new(&p, false), Err(Error::SubUnitWeight { .. })));
        assert!(UrnField::<f64>::new(&p, true).is_ok());
    }

    #[test]
    fn rate_examples() {
        let f = UrnField::<BigRational>::new(&params(1.0, 0.0, 0, 2), false).unwrap();
        let at_l0 = f.urn(0);
        assert_eq!(jump_rates(&at_l0, Particle::Left).0, frac(1, 2));
        let mid = f.urn(1);
        assert_eq!(jump_rates(&mid, Particle::Right).1, frac(2, 3));
        assert_eq!(jump_rates(&mid, Particle::Left).1, frac(1, 3));
        assert_eq!(mid.right_probability(Particle::Left).unwrap(), frac(1, 3));
    }

    #[test]
    fn step_after_meeting_is_an_error() {
        let mut proc = UrnProcess::new(&params(1.0, 0.0, 1, 1), false).unwrap();
        let mut rng = make_stream(0, 0);
        assert!(matches!(proc.step(&mut rng), Err(Error::Decoupled { site: 1 })));
    }

    #[test]
    fn simulated_step_frequencies() {
        let p = params(1.0, 0.0, 0, 2);
        let mut rng = make_stream(44, 0);
        let n = 100_000;
        let mut left_left = 0;
        for _ in 0..n {
            let mut proc = UrnProcess::new(&p, false).unwrap();
            let ev = proc.step_particle(Particle::Left, &mut rng).unwrap();
            if ev.to == -1 {
                left_left += 1;
            }
        }
        assert_abs_diff_eq!(left_left as f64 / n as f64, 0.5, epsilon = 0.005);
    }

    #[test]
    fn horizon_zero_is_unit_mass() {
        for model in [Model::Direct, Model::Urn] {
            let d = enumerate_exact(model, &params(1.0, 0.0, 0, 2), 0, false).unwrap();
            assert_eq!(d.len(), 1);
            assert_eq!(d.prob(&[]), frac(1, 1));
        }
    }

    #[test]
    fn horizon_one_left_moves_right() {
        let p = params(1.0, 0.0, 0, 2);
        for model in [Model::Direct, Model::Urn] {
            let d = enumerate_exact(model, &p, 1, false).unwrap();
            assert_eq!(d.prob(&[(Particle::Left, Direction::Right)]), frac(1, 4));
        }
    }

    #[test]
    fn horizon_four_models_agree() {
        let p = params(1.0, 0.0, 0, 2);
        let direct = enumerate_exact(Model::Direct, &p, 4, false).unwrap();
        let urn = enumerate_exact(Model::Urn, &p, 4, false).unwrap();
        assert_eq!(direct.total(), frac(1, 1));
        assert_eq!(urn.total(), frac(1, 1));
        assert!(tv_distance(&direct, &urn).unwrap().is_zero());
    }

    #[test]
    fn coincident_start_absorbs_immediately() {
        let d = enumerate_exact(Model::Direct, &params(1.0, 0.0, 0, 0), 3, false).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.prob(&[]), frac(1, 1));
    }

    #[test]
    fn large_horizon_rejected() {
        let err = enumerate_exact(Model::Direct, &params(1.0, 0.0, 0, 2), 20, false).unwrap_err();
        assert!(matches!(err, Error::HorizonTooLarge { horizon: 20, leaves, .. } if leaves == 1u128 << 40));
    }

    #[test]
    fn tv_of_self_and_disjoint() {
        let p = params(1.0, 0.0, 0, 2);
        let d = enumerate_exact(Model::Direct, &p, 2, false).unwrap();
        assert!(tv_distance(&d, &d).unwrap().is_zero());

        let mut a = d.clone();
        let mut b = d.clone();
        a.probs = BTreeMap::from([(vec![(Particle::Left, Direction::Left)], frac(1, 1))]);
        b.probs = BTreeMap::from([(vec![(Particle::Right, Direction::Left)], frac(1, 1))]);
        assert_eq!(tv_distance(&a, &b).unwrap(), frac(1, 1));

        let other = enumerate_exact(Model::Direct, &p, 3, false).unwrap();
        assert!(matches!(tv_distance(&d, &other), Err(Error::Mismatch(_))));
    }

    #[test]
    fn export_entries() {
        let d = enumerate_exact(Model::Urn, &params(1.0, 0.0, 0, 2), 1, false).unwrap();
        let entries = d.entries();
        assert_eq!(entries.len(), 4);
        let e = entries.iter().find(|e| e.traj == vec![[0, 1]]).unwrap();
        assert_eq!((e.prob_num.as_str(), e.prob_den.as_str()), ("1", "4"));
    }
}
