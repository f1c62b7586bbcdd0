use serde::{Deserialize, Serialize};
use serde_json::json;

use reinforce_sim::distributions::BetaParams;
use reinforce_sim::rwre::{criterion, CriterionResult};

use super::config::{metadata, resolve, Common};
use super::output::write_json;
use super::CliError;

/// Largest accepted gap between the digamma and quadrature values.
pub const AGREEMENT: f64 = 1e-7;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// Beta parameters `alpha1,alpha2`; repeatable.
    #[arg(long = "pair", value_parser = parse_pair)]
    #[serde(rename = "pairs", skip_serializing_if = "Vec::is_empty")]
    pairs: Vec<[f64; 2]>,
    /// Initial weights a for the edge-weight grid Beta((a+1)/2, (a+delta)/2).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    a_values: Vec<f64>,
    /// Drifts for the edge-weight grid.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    delta_values: Vec<f64>,
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<_> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok([
            a.parse().map_err(|e| format!("{a:?}: {e}"))?,
            b.parse().map_err(|e| format!("{b:?}: {e}"))?,
        ]),
        _ => Err(format!("expected alpha1,alpha2, got {s:?}")),
    }
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    pairs: Vec<[f64; 2]>,
    a_values: Vec<f64>,
    delta_values: Vec<f64>,
}

const DEFAULT_PAIRS: [[f64; 2]; 4] = [[1.0, 1.0], [1.5, 0.5], [1.0, 0.5], [0.5, 1.0]];
const DEFAULT_A: [f64; 4] = [0.5, 1.0, 2.0, 5.0];
const DEFAULT_DELTA: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 0.99];

impl Config {
    /// With nothing given, use the default pairs and edge-weight grid. Giving
    /// only one axis of the edge-weight grid fills the other with its default.
    fn complete(&mut self) {
        if self.pairs.is_empty() && self.a_values.is_empty() && self.delta_values.is_empty() {
            self.pairs = DEFAULT_PAIRS.to_vec();
        }
        if self.a_values.is_empty() != self.delta_values.is_empty() || self.pairs == DEFAULT_PAIRS {
            if self.a_values.is_empty() {
                self.a_values = DEFAULT_A.to_vec();
            }
            if self.delta_values.is_empty() {
                self.delta_values = DEFAULT_DELTA.to_vec();
            }
        }
    }
}

#[derive(Debug, Serialize)]
struct Entry {
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    result: CriterionResult,
    /// |digamma value − quadrature value|, when the quadrature converged.
    discrepancy: Option<f64>,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let mut r = resolve::<Config, _>(&args.common, &args)?;
    r.config.complete();
    let c = &r.config;
    let mut grid = Vec::new();
    for &[a1, a2] in &c.pairs {
        grid.push((None, None, BetaParams::new(a1, a2)?));
    }
    for &a in &c.a_values {
        for &d in &c.delta_values {
            if !(a > 0.0 && d >= 0.0) {
                return Err(CliError::Usage(format!(
                    "edge-weight grid needs a > 0 and delta >= 0, got a = {a}, delta = {d}"
                )));
            }
            grid.push((Some(a), Some(d), BetaParams::new((a + 1.0) / 2.0, (a + d) / 2.0)?));
        }
    }
    if grid.is_empty() {
        return Err(CliError::Usage("empty parameter grid".into()));
    }
    let mut entries = Vec::with_capacity(grid.len());
    let mut disagreements = Vec::new();
    for (a, delta, p) in grid {
        let result = criterion(p)?;
        let discrepancy = result.log_odds_quadrature.map(|q| (q - result.log_odds_mean).abs());
        match discrepancy {
            Some(d) if d >= AGREEMENT => disagreements.push(format!(
                "Beta({}, {}): |digamma - quadrature| = {d:e}",
                p.alpha(),
                p.beta()
            )),
            None => eprintln!(
                "warning: quadrature did not converge for Beta({}, {})",
                p.alpha(),
                p.beta()
            ),
            _ => {}
        }
        entries.push(Entry {
            a,
            delta,
            result,
            discrepancy,
        });
    }
    let meta = metadata("criterion", r.seed, c, json!({ "agreement_tolerance": AGREEMENT }));
    write_json(&r.out, "criterion.json", &json!({ "metadata": meta, "results": entries }))?;
    println!("criterion: {} parameter pairs evaluated", entries.len());
    if disagreements.is_empty() {
        Ok(())
    } else {
        Err(CliError::Falsified(disagreements.join("; ")))
    }
}
