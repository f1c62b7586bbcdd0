use std::collections::HashMap;

use reinforce_sim::distributions::{digamma, make_stream, sample_beta, BetaLaw, BetaParams};
use reinforce_sim::rwre::{
    criterion, difference_recurrence, first_difference_return, simulate_bd, BDEnvironment,
    Classification,
};
use reinforce_sim::stats::mean_stderr;

fn beta(a: f64, b: f64) -> BetaParams {
    BetaParams::new(a, b).unwrap()
}

#[test]
fn digamma_and_quadrature_agree_on_grid() {
    let shapes = [0.3, 0.5, 1.0, 2.5, 7.0];
    let mut n = 0;
    for &a in &shapes {
        for &b in &shapes[..4] {
            let c = criterion(beta(a, b)).unwrap();
            let q = c.log_odds_quadrature.expect("quadrature converged");
            assert!((q - c.log_odds_mean).abs() < 1e-7, "Beta({a}, {b}): {q} vs {}", c.log_odds_mean);
            n += 1;
        }
    }
    assert_eq!(n, 20);
}

#[test]
fn monte_carlo_log_odds() {
    let mut rng = make_stream(31, 0);
    for (a, b) in [(1.0, 0.5), (2.0, 3.0), (0.7, 0.7)] {
        let law = BetaLaw::from(beta(a, b));
        let xs: Vec<f64> = (0..100_000)
            .map(|_| {
                let p = sample_beta(&mut rng, law);
                ((1.0 - p) / p).ln()
            })
            .collect();
        let m = mean_stderr(&xs).mean;
        let mu = -(digamma(a).unwrap() - digamma(b).unwrap());
        assert!((m - mu).abs() < 0.01, "Beta({a}, {b}): {m} vs {mu}");
        assert_eq!(criterion(beta(a, b)).unwrap().mu, mu);
    }
}

#[test]
fn monte_carlo_mean_inverse_odds() {
    let mut rng = make_stream(32, 0);
    let law = BetaLaw::from(beta(2.5, 0.5));
    let xs: Vec<f64> = (0..100_000)
        .map(|_| {
            let p = sample_beta(&mut rng, law);
            (1.0 - p) / p
        })
        .collect();
    let m = mean_stderr(&xs).mean;
    let exact = criterion(beta(2.5, 0.5)).unwrap().mean_inverse_odds.finite().unwrap();
    assert_eq!(exact, 0.5 / 1.5);
    assert!((m / exact - 1.0).abs() < 0.02, "{m} vs {exact}");
}

fn mean_displacement(law: BetaParams, seed: u64) -> (f64, f64) {
    let xs: Vec<f64> = (0..1000u64)
        .map(|t| {
            let mut env = BDEnvironment::iid(law.into(), seed ^ (t << 20));
            let mut rng = make_stream(seed, t);
            simulate_bd(&mut env, 0, 10_000, &mut rng).final_position as f64
        })
        .collect();
    let m = mean_stderr(&xs);
    (m.mean, m.stderr)
}

#[test]
fn classification_matches_behaviour() {
    let (m, _) = mean_displacement(beta(1.0, 0.5), 1);
    assert_eq!(criterion(beta(1.0, 0.5)).unwrap().classification, Classification::TransientRight);
    assert!(m > 0.0, "mean displacement {m}");

    let (m, _) = mean_displacement(beta(0.5, 1.0), 2);
    assert_eq!(criterion(beta(0.5, 1.0)).unwrap().classification, Classification::TransientLeft);
    assert!(m < 0.0, "mean displacement {m}");

    let (m, se) = mean_displacement(beta(1.0, 1.0), 3);
    assert_eq!(criterion(beta(1.0, 1.0)).unwrap().classification, Classification::Recurrent);
    assert!(m.abs() < 3.0 * se, "mean displacement {m} ± {se}");
}

#[test]
fn edge_weight_environment_is_right_transient() {
    for a in [0.5, 1.0, 2.0, 5.0] {
        for d in [0.0, 0.25, 0.5, 0.75, 0.99] {
            let c = criterion(beta((a + 1.0) / 2.0, (a + d) / 2.0)).unwrap();
            assert_eq!(c.classification, Classification::TransientRight, "a = {a}, delta = {d}");
            assert!(!c.finite_mean_return);
        }
    }
}

#[test]
fn curve_has_error_bars_inside_unit_interval() {
    let p = beta(0.5, 1.5);
    let curve = difference_recurrence(p, p, &[2, 4, 8, 100, 1000], 1000, 17).unwrap();
    assert!(curve.warning.is_none());
    let first = curve.points[0];
    assert!(first.hit_fraction > 0.0 && first.hit_fraction < 1.0);
    assert!(first.stderr > 0.0);
    assert!(curve.points.windows(2).all(|w| w[0].hit_fraction <= w[1].hit_fraction));
}

/// Exact P(first return of Z^r − Z^l to 0 happens by event T) for fixed
/// environments, by forward propagation over the distances of both chains.
fn exact_difference_return(right: &mut BDEnvironment, left: &mut BDEnvironment, horizon: u64) -> Vec<f64> {
    let mut dist: HashMap<(i64, i64), f64> = HashMap::from([((0, 0), 1.0)]);
    let mut absorbed = 0.0;
    let mut curve = Vec::new();
    for _ in 0..horizon {
        let mut next: HashMap<(i64, i64), f64> = HashMap::new();
        for (&(x, y), &m) in &dist {
            let pr = right.p(x);
            let pl = left.p(y);
            for (state, w) in [
                ((x + 1, y), 0.5 * pr),
                ((x - 1, y), 0.5 * (1.0 - pr)),
                ((x, y + 1), 0.5 * pl),
                ((x, y - 1), 0.5 * (1.0 - pl)),
            ] {
                if w > 0.0 {
                    *next.entry(state).or_default() += m * w;
                }
            }
        }
        if let Some(m) = next.remove(&(0, 0)) {
            absorbed += m;
        }
        dist = next;
        curve.push(absorbed);
    }
    curve
}

/// With p1 ≡ 0 away from the reflecting origin, Z^r only shuttles between 0
/// and 1, and the curve reduces to a statement about Z^l alone.
#[test]
fn frozen_right_chain_reduction() {
    let frozen = || BDEnvironment::constant(0.0).unwrap().with_override(0, 1.0).unwrap();
    let left_env = || BDEnvironment::iid(beta(0.5, 1.5).into(), 77).with_override(0, 1.0).unwrap();
    let horizon = 40;
    let exact = exact_difference_return(&mut frozen(), &mut left_env(), horizon);

    let trials = 20_000u64;
    let mut right = frozen();
    let mut left = left_env();
    let returns: Vec<_> = (0..trials)
        .map(|t| first_difference_return(&mut right, &mut left, horizon, &mut make_stream(40, t)))
        .collect();
    for t in [2u64, 4, 10, 40] {
        let f = returns.iter().filter(|r| r.is_some_and(|e| e <= t)).count() as f64 / trials as f64;
        let p = exact[t as usize - 1];
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((f - p).abs() <= 4.0 * se + 1e-9, "T = {t}: {f} vs exact {p}");
    }

    // The left chain on its own: first-return law of simulate_bd against the
    // same propagation with the right chain removed.
    let mut single = [0.0; 20];
    let mut dist: HashMap<i64, f64> = HashMap::from([(0, 1.0)]);
    let mut env = left_env();
    let mut absorbed = 0.0;
    for slot in single.iter_mut() {
        let mut next: HashMap<i64, f64> = HashMap::new();
        for (&y, &m) in &dist {
            let p = env.p(y);
            *next.entry(y + 1).or_default() += m * p;
            *next.entry(y - 1).or_default() += m * (1.0 - p);
        }
        absorbed += next.remove(&0).unwrap_or(0.0);
        dist = next;
        *slot = absorbed;
    }
    let mut env = left_env();
    let firsts: Vec<_> = (0..trials)
        .map(|t| simulate_bd(&mut env, 0, 20, &mut make_stream(41, t)).first_return_event)
        .collect();
    for t in [2u64, 6, 20] {
        let f = firsts.iter().filter(|r| r.is_some_and(|e| e <= t)).count() as f64 / trials as f64;
        let p = single[t as usize - 1];
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((f - p).abs() <= 4.0 * se + 1e-9, "T = {t}: {f} vs exact {p}");
    }
}
