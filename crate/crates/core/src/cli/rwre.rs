use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use reinforce_sim::distributions::BetaParams;
use reinforce_sim::rwre::{curve_from_returns, difference_trial, regime_warning, validate_budgets};

use super::config::{metadata, resolve, Common};
use super::output::write_csv;
use super::{with_workers, CliError};

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// Beta parameters `alpha1,alpha2` of the right chain's environment.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    p1: Option<Vec<f64>>,
    /// Beta parameters of the left chain's environment.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    p2: Option<Vec<f64>>,
    /// Comma-separated, strictly increasing event budgets.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    budgets: Option<Vec<u64>>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    p1: [f64; 2],
    p2: [f64; 2],
    budgets: Vec<u64>,
    trials: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            p1: [0.5, 1.5],
            p2: [0.5, 1.5],
            budgets: vec![100, 1000, 10_000],
            trials: 1000,
        }
    }
}

pub fn run(args: Args) -> Result<(), CliError> {
    let r = resolve::<Config, _>(&args.common, &args)?;
    let c = &r.config;
    let p1 = BetaParams::new(c.p1[0], c.p1[1])?;
    let p2 = BetaParams::new(c.p2[0], c.p2[1])?;
    validate_budgets(&c.budgets)?;
    if c.trials == 0 {
        return Err(CliError::Usage("trials must be positive".into()));
    }
    let warning = regime_warning(p1, p2)?;
    if let Some(w) = &warning {
        eprintln!("warning: {w}");
    }
    let max_budget = *c.budgets.last().expect("validated");
    let seed = r.seed;
    let returns = with_workers(r.workers, || {
        (0..c.trials as u64)
            .into_par_iter()
            .map(|t| difference_trial(p1, p2, max_budget, seed, t))
            .collect::<Vec<_>>()
    })?;
    let points = curve_from_returns(&c.budgets, &returns);
    let meta = metadata("rwre", seed, c, json!({ "warning": warning }));
    write_csv(&r.out, "curve.csv", &meta, &["budget", "hit_fraction", "stderr"], &points)?;
    for p in &points {
        println!(
            "rwre: budget {:>10}  hit fraction {:.4} +- {:.4}",
            p.budget, p.hit_fraction, p.stderr
        );
    }
    Ok(())
}
