//! Classic Polya urns and the per-site magic-marble urn.
//!
//! A magic urn holds pure red and pure blue marbles, the red and blue marbles
//! of the magic family, and one unit-mass magic marble. The magic marble is
//! red while the left particle is at the site and blue while the right
//! particle is there; its colour is never stored, only evaluated at draw time.
//! Every draw adds two marbles of the drawn colour; marbles added because a
//! family member was drawn join the family.

use serde::{Deserialize, Serialize};

use crate::distributions::{BetaParams, DirichletParams, RngStream};
use crate::error::{Error, Result};
use crate::mass::Mass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Red,
    Blue,
}

/// Which of the two particles, ordered on the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Particle {
    Left,
    Right,
}

impl Particle {
    pub fn index(self) -> usize {
        match self {
            Particle::Left => 0,
            Particle::Right => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn step(self) -> i64 {
        match self {
            Direction::Left => -1,
            Direction::Right => 1,
        }
    }
}

/// Two-colour Polya urn with real masses and reinforcement `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyaUrn {
    pub red: f64,
    pub blue: f64,
    pub reinforcement: f64,
}

impl PolyaUrn {
    pub fn new(red: f64, blue: f64, reinforcement: f64) -> Result<Self> {
        let ok = red >= 0.0
            && blue >= 0.0
            && red.is_finite()
            && blue.is_finite()
            && reinforcement > 0.0
            && reinforcement.is_finite();
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "Polya urn needs nonnegative masses and positive reinforcement, got R={red}, B={blue}, D={reinforcement}"
            )));
        }
        Ok(Self {
            red,
            blue,
            reinforcement,
        })
    }

    pub fn total(&self) -> f64 {
        self.red + self.blue
    }

    /// Current red fraction ρ.
    pub fn red_fraction(&self) -> f64 {
        self.red / self.total()
    }

    /// Draw one marble, return it, and add `D` of its colour.
    pub fn draw(&mut self, rng: &mut RngStream) -> Result<Color> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("Polya urn is empty".into()));
        }
        let color = if rng.uniform() * total < self.red {
            self.red += self.reinforcement;
            Color::Red
        } else {
            self.blue += self.reinforcement;
            Color::Blue
        };
        Ok(color)
    }

    /// Limit law of the red fraction: Beta(R₀/D, B₀/D).
    pub fn limit_law(&self) -> Result<BetaParams> {
        BetaParams::new(self.red / self.reinforcement, self.blue / self.reinforcement)
    }
}

/// Exact probability that a Polya urn started at `(red, blue)` with
/// reinforcement `d` produces the colour sequence `seq`.
pub fn polya_sequence_probability<M: Mass>(red: M, blue: M, d: M, seq: &[Color]) -> M {
    let (mut r, mut b) = (red, blue);
    let mut p = M::one();
    for c in seq {
        let total = r.clone() + b.clone();
        match c {
            Color::Red => {
                p = p * r.clone() / total;
                r = r + d.clone();
            }
            Color::Blue => {
                p = p * b.clone() / total;
                b = b + d.clone();
            }
        }
    }
    p
}

/// The five marble classes a magic-urn draw can select.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawOutcome {
    PureRed,
    PureBlue,
    FamRed,
    FamBlue,
    Magic,
}

impl DrawOutcome {
    pub const ALL: [DrawOutcome; 5] = [
        DrawOutcome::PureRed,
        DrawOutcome::PureBlue,
        DrawOutcome::FamRed,
        DrawOutcome::FamBlue,
        DrawOutcome::Magic,
    ];

    /// Colour of the drawn marble given who is present.
    pub fn color(self, present: Particle) -> Color {
        match self {
            DrawOutcome::PureRed | DrawOutcome::FamRed => Color::Red,
            DrawOutcome::PureBlue | DrawOutcome::FamBlue => Color::Blue,
            DrawOutcome::Magic => match present {
                Particle::Left => Color::Red,
                Particle::Right => Color::Blue,
            },
        }
    }

    /// Red sends the particle left, blue sends it right.
    pub fn direction(self, present: Particle) -> Direction {
        match self.color(present) {
            Color::Red => Direction::Left,
            Color::Blue => Direction::Right,
        }
    }

    pub fn is_family(self) -> bool {
        matches!(
            self,
            DrawOutcome::FamRed | DrawOutcome::FamBlue | DrawOutcome::Magic
        )
    }
}

/// An effective colour mass went negative (possible only when `a < 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeMass {
    pub color: &'static str,
    pub mass: f64,
}

/// Magic-marble urn. The magic marble itself (unit mass) is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MagicUrn<M = f64> {
    pub pure_red: M,
    pub pure_blue: M,
    pub fam_red: M,
    pub fam_blue: M,
}

impl<M: Mass> MagicUrn<M> {
    /// Fresh urn: the given red and blue masses, an empty family apart from
    /// the magic marble.
    pub fn new(pure_red: M, pure_blue: M) -> Self {
        Self {
            pure_red,
            pure_blue,
            fam_red: M::zero(),
            fam_blue: M::zero(),
        }
    }

    /// Red marbles excluding the magic marble.
    pub fn red(&self) -> M {
        self.pure_red.clone() + self.fam_red.clone()
    }

    /// Blue marbles excluding the magic marble.
    pub fn blue(&self) -> M {
        self.pure_blue.clone() + self.fam_blue.clone()
    }

    /// Magic family mass: family reds, family blues and the magic marble.
    pub fn family(&self) -> M {
        self.fam_red.clone() + self.fam_blue.clone() + M::one()
    }

    /// Total mass drawn from, magic marble included.
    pub fn total(&self) -> M {
        self.red() + self.blue() + M::one()
    }

    /// Edge weights seen by the particle at the site: `(w[v−1,v], w[v,v+1])`.
    /// The right weight includes the drift.
    pub fn effective_edge_weights(&self, present: Particle) -> (M, M) {
        match present {
            Particle::Left => (self.red() + M::one(), self.blue()),
            Particle::Right => (self.red(), self.blue() + M::one()),
        }
    }

    /// Probabilities of the five outcomes for a draw with `present` at the
    /// site, in `DrawOutcome::ALL` order.
    ///
    /// The side (red or blue) is chosen in proportion to the effective masses;
    /// within the side, classes are chosen in proportion to their masses with
    /// negative pure masses counted as zero. With all masses nonnegative this
    /// is plain proportional selection over the five classes.
    pub fn outcome_probabilities(
        &self,
        present: Particle,
    ) -> std::result::Result<[M; 5], NegativeMass> {
        let (eff_red, eff_blue) = self.effective_edge_weights(present);
        let zero = M::zero();
        if eff_red < zero {
            return Err(NegativeMass {
                color: "red",
                mass: eff_red.to_f64(),
            });
        }
        if eff_blue < zero {
            return Err(NegativeMass {
                color: "blue",
                mass: eff_blue.to_f64(),
            });
        }
        let total = eff_red.clone() + eff_blue.clone();
        let magic_red = present == Particle::Left;
        let red_parts = [
            self.pure_red.clone().max_zero(),
            self.fam_red.clone(),
            if magic_red { M::one() } else { M::zero() },
        ];
        let blue_parts = [
            self.pure_blue.clone().max_zero(),
            self.fam_blue.clone(),
            if magic_red { M::zero() } else { M::one() },
        ];
        let split = |side: &M, parts: &[M; 3]| -> [M; 3] {
            let sum = parts[0].clone() + parts[1].clone() + parts[2].clone();
            if sum.is_zero() || side.is_zero() {
                return [M::zero(), M::zero(), M::zero()];
            }
            parts
                .clone()
                .map(|p| side.clone() * p / (sum.clone() * total.clone()))
        };
        let [pr, fr, mr] = split(&eff_red, &red_parts);
        let [pb, fb, mb] = split(&eff_blue, &blue_parts);
        Ok([pr, pb, fr, fb, mr + mb])
    }

    /// Probability that the draw sends the particle right.
    pub fn right_probability(&self, present: Particle) -> std::result::Result<M, NegativeMass> {
        let (eff_red, eff_blue) = self.effective_edge_weights(present);
        if eff_red < M::zero() {
            return Err(NegativeMass {
                color: "red",
                mass: eff_red.to_f64(),
            });
        }
        if eff_blue < M::zero() {
            return Err(NegativeMass {
                color: "blue",
                mass: eff_blue.to_f64(),
            });
        }
        let total = eff_red + eff_blue.clone();
        Ok(eff_blue / total)
    }

    /// Add two marbles for `outcome` drawn with `present` at the site.
    pub fn apply(&mut self, outcome: DrawOutcome, present: Particle) {
        let two = M::from_i64(2);
        let slot = match outcome {
            DrawOutcome::PureRed => &mut self.pure_red,
            DrawOutcome::PureBlue => &mut self.pure_blue,
            DrawOutcome::FamRed => &mut self.fam_red,
            DrawOutcome::FamBlue => &mut self.fam_blue,
            DrawOutcome::Magic => match present {
                Particle::Left => &mut self.fam_red,
                Particle::Right => &mut self.fam_blue,
            },
        };
        *slot = slot.clone() + two;
    }
}

impl MagicUrn<f64> {
    /// Draw a marble for the particle `present`, update the urn, and return
    /// the outcome with the direction the particle jumps.
    pub fn draw(
        &mut self,
        present: Particle,
        rng: &mut RngStream,
    ) -> std::result::Result<(DrawOutcome, Direction), NegativeMass> {
        let probs = self.outcome_probabilities(present)?;
        let outcome = pick(&probs, rng.uniform());
        self.apply(outcome, present);
        Ok((outcome, outcome.direction(present)))
    }

    /// Dirichlet law of the limiting (pure red, family, pure blue) fractions
    /// for an urn at time zero: (R₀/2, ½, B₀/2). A colour with nonpositive
    /// initial mass is an absent component.
    pub fn limit_params(&self) -> Result<DirichletParams> {
        DirichletParams::with_absent([self.pure_red / 2.0, 0.5, self.pure_blue / 2.0])
    }
}

/// Red fraction after `draws` draws of run `run`; each run uses its own
/// stream of `seed`.
pub fn polya_fraction(urn: &PolyaUrn, draws: usize, seed: u64, run: u64) -> Result<f64> {
    let mut u = *urn;
    let mut rng = crate::distributions::make_stream(seed, run);
    for _ in 0..draws {
        u.draw(&mut rng)?;
    }
    Ok(u.red_fraction())
}

/// (pure red, family, pure blue) fractions of a magic urn after `draws`
/// draws of run `run`. The particle present at each draw is chosen by a fair
/// coin; the three-colour limit does not depend on it.
pub fn magic_fractions(urn: &MagicUrn, draws: usize, seed: u64, run: u64) -> Result<[f64; 3]> {
    let mut u = urn.clone();
    let mut rng = crate::distributions::make_stream(seed, run);
    for _ in 0..draws {
        let present = if rng.bernoulli(0.5) { Particle::Left } else { Particle::Right };
        u.draw(present, &mut rng).map_err(|n| Error::InvalidParameter(format!(
            "magic urn has negative {} mass {}",
            n.color, n.mass
        )))?;
    }
    let t = u.total();
    Ok([u.pure_red / t, u.family() / t, u.pure_blue / t])
}

/// Inverse-CDF selection over the outcome probabilities. Zero-probability
/// outcomes are never returned.
pub(crate) fn pick(probs: &[f64; 5], u: f64) -> DrawOutcome {
    let mut acc = 0.0;
    let mut last = None;
    for (p, o) in probs.iter().zip(DrawOutcome::ALL) {
        if *p <= 0.0 {
            continue;
        }
        acc += p;
        last = Some(o);
        if u < acc {
            return o;
        }
    }
    last.expect("at least one outcome has positive probability")
}

/// Standalone form of [`MagicUrn::draw`] with site context for errors.
pub fn magic_draw(
    urn: &mut MagicUrn,
    present: Particle,
    rng: &mut RngStream,
    site: i64,
    a: f64,
) -> Result<(DrawOutcome, Direction)> {
    urn.draw(present, rng).map_err(|e| Error::NegativeMass {
        site,
        a,
        color: e.color,
        mass: e.mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::make_stream;
    use approx::assert_abs_diff_eq;
    use num_rational::BigRational;

    fn frac(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn polya_symmetric_first_draw() {
        let p = polya_sequence_probability(frac(1, 1), frac(1, 1), frac(1, 1), &[Color::Red]);
        assert_eq!(p, frac(1, 2));
    }

    #[test]
    fn polya_two_step_exchangeable() {
        let rb = polya_sequence_probability(frac(1, 1), frac(1, 1), frac(1, 1), &[Color::Red, Color::Blue]);
        let br = polya_sequence_probability(frac(1, 1), frac(1, 1), frac(1, 1), &[Color::Blue, Color::Red]);
        assert_eq!(rb, frac(1, 6));
        assert_eq!(rb, br);
    }

    #[test]
    fn polya_red_two_thirds() {
        let p = polya_sequence_probability(frac(2, 1), frac(1, 1), frac(2, 1), &[Color::Red]);
        assert_eq!(p, frac(2, 3));
    }

    #[test]
    fn polya_limit_law_params() {
        let cases = [((1.0, 1.0, 1.0), (1.0, 1.0)), ((2.0, 4.0, 2.0), (1.0, 2.0)), ((1.0, 1.0, 2.0), (0.5, 0.5))];
        for ((r, b, d), (alpha, beta)) in cases {
            let law = PolyaUrn::new(r, b, d).unwrap().limit_law().unwrap();
            assert_eq!((law.alpha(), law.beta()), (alpha, beta));
        }
    }

    #[test]
    fn polya_draw_adds_reinforcement() {
        let mut rng = make_stream(1, 0);
        let mut urn = PolyaUrn::new(1.0, 2.0, 0.5).unwrap();
        for n in 1..=50 {
            urn.draw(&mut rng).unwrap();
            assert_abs_diff_eq!(urn.total(), 3.0 + 0.5 * n as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn polya_empty_rejected() {
        let mut rng = make_stream(1, 0);
        let mut urn = PolyaUrn::new(0.0, 0.0, 1.0).unwrap();
        assert!(urn.draw(&mut rng).is_err());
        assert!(PolyaUrn::new(-1.0, 1.0, 1.0).is_err());
        assert!(PolyaUrn::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn magic_counts_red_for_left() {
        // a = 1, v = l0 urn: [0, 1] plus magic.
        let urn = MagicUrn::new(frac(0, 1), frac(1, 1));
        assert_eq!(urn.right_probability(Particle::Left).unwrap(), frac(1, 2));
    }

    #[test]
    fn magic_counts_blue_for_right() {
        let urn = MagicUrn::new(frac(1, 1), frac(1, 1));
        assert_eq!(urn.right_probability(Particle::Right).unwrap(), frac(2, 3));
    }

    #[test]
    fn magic_outcome_probabilities_are_proportional() {
        let mut urn = MagicUrn::new(frac(3, 1), frac(1, 2));
        urn.fam_red = frac(2, 1);
        urn.fam_blue = frac(4, 1);
        let total = urn.total();
        let probs = urn.outcome_probabilities(Particle::Right).unwrap();
        let expected = [frac(3, 1), frac(1, 2), frac(2, 1), frac(4, 1), frac(1, 1)].map(|m| m / total.clone());
        assert_eq!(probs, expected);
    }

    #[test]
    fn magic_drawn_with_right_adds_family_blue() {
        let mut urn = MagicUrn::new(1.0, 0.0);
        urn.apply(DrawOutcome::Magic, Particle::Right);
        assert_eq!(urn.fam_blue, 2.0);
        assert_eq!(urn.fam_red, 0.0);
        assert_eq!(DrawOutcome::Magic.direction(Particle::Right), Direction::Right);
        assert_eq!(DrawOutcome::Magic.direction(Particle::Left), Direction::Left);
    }

    #[test]
    fn effective_weights_initial_rows() {
        // a = 1, Δ = 0: [0, 1] at l0 with the left particle, [1, 0] at r0 with the right.
        assert_eq!(MagicUrn::new(0.0, 1.0).effective_edge_weights(Particle::Left), (1.0, 1.0));
        let mut at_r0 = MagicUrn::new(1.0, 0.0);
        assert_eq!(at_r0.effective_edge_weights(Particle::Right), (1.0, 1.0));
        // One magic draw with the right particle present: the right edge was
        // traversed outward and, on return, inward again.
        at_r0.apply(DrawOutcome::Magic, Particle::Right);
        assert_eq!(at_r0.effective_edge_weights(Particle::Right), (1.0, 3.0));
    }

    #[test]
    fn magic_draw_mass_bookkeeping() {
        let mut rng = make_stream(3, 0);
        let mut urn = MagicUrn::new(1.5, 2.5);
        let start = urn.total();
        for n in 1..=200u32 {
            let present = if n % 3 == 0 { Particle::Left } else { Particle::Right };
            urn.draw(present, &mut rng).unwrap();
            assert_eq!(urn.total(), start + 2.0 * n as f64);
            assert!(urn.pure_red <= urn.red() && urn.pure_blue <= urn.blue());
        }
    }

    #[test]
    fn magic_draw_frequencies() {
        let mut rng = make_stream(4, 0);
        let n = 100_000;
        let rights = (0..n)
            .filter(|_| {
                let mut urn = MagicUrn::new(1.0, 1.0);
                urn.draw(Particle::Right, &mut rng).unwrap().1 == Direction::Right
            })
            .count();
        assert_abs_diff_eq!(rights as f64 / n as f64, 2.0 / 3.0, epsilon = 0.005);
    }

    #[test]
    fn negative_effective_mass_is_an_error() {
        // a = 0.5 at v <= l0: pure red a − 1 = −0.5; with the right particle present
        // the red side has no magic marble to lift it.
        let mut urn = MagicUrn::new(-0.5, 1.5);
        let mut rng = make_stream(0, 0);
        assert!(urn.outcome_probabilities(Particle::Left).is_ok());
        let err = magic_draw(&mut urn, Particle::Right, &mut rng, -3, 0.5).unwrap_err();
        assert!(matches!(err, Error::NegativeMass { site: -3, color: "red", .. }));
    }

    #[test]
    fn limit_params_rows() {
        let p = MagicUrn::new(1.0, 1.0).limit_params().unwrap();
        assert_eq!(p.shapes(), [Some(0.5), Some(0.5), Some(0.5)]);
        let p = MagicUrn::new(2.0, 1.0).limit_params().unwrap();
        assert_eq!(p.shapes(), [Some(1.0), Some(0.5), Some(0.5)]);
        let p = MagicUrn::new(0.0, 2.0).limit_params().unwrap();
        assert_eq!(p.shapes(), [None, Some(0.5), Some(1.0)]);
    }

    #[test]
    fn pick_skips_zero_mass() {
        let probs = [0.0, 0.5, 0.0, 0.0, 0.5];
        assert_eq!(pick(&probs, 0.0), DrawOutcome::PureBlue);
        assert_eq!(pick(&probs, 0.75), DrawOutcome::Magic);
        assert_eq!(pick(&probs, 0.999_999_999_9), DrawOutcome::Magic);
    }
}
