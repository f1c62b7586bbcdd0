use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use reinforce_sim::distributions::BetaLaw;
use reinforce_sim::stats::{ks_statistic, mean_stderr};
use reinforce_sim::urn::{polya_fraction, PolyaUrn};

use super::config::{metadata, resolve, Common};
use super::output::write_json;
use super::{with_workers, CliError};

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// Initial red mass R0.
    #[arg(long)]
    red: Option<f64>,
    /// Initial blue mass B0.
    #[arg(long)]
    blue: Option<f64>,
    /// Reinforcement D added per draw.
    #[arg(long)]
    d: Option<f64>,
    /// Draws per run.
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    /// Exit 1 when the KS statistic reaches this value.
    #[arg(long)]
    ks_threshold: Option<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    red: f64,
    blue: f64,
    d: f64,
    draws: usize,
    runs: usize,
    ks_threshold: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            red: 1.0,
            blue: 1.0,
            d: 2.0,
            draws: 10_000,
            runs: 10_000,
            ks_threshold: 0.02,
        }
    }
}

pub fn run(args: Args) -> Result<(), CliError> {
    let r = resolve::<Config, _>(&args.common, &args)?;
    let c = &r.config;
    let urn = PolyaUrn::new(c.red, c.blue, c.d)?;
    let law = urn.limit_law()?;
    if c.runs == 0 {
        return Err(CliError::Usage("runs must be positive".into()));
    }
    let seed = r.seed;
    let fractions = with_workers(r.workers, || {
        (0..c.runs as u64)
            .into_par_iter()
            .map(|run| polya_fraction(&urn, c.draws, seed, run))
            .collect::<reinforce_sim::Result<Vec<_>>>()
    })??;
    let limit = BetaLaw::from(law);
    let ks = ks_statistic(&fractions, |x| limit.cdf(x));
    let mean = mean_stderr(&fractions);
    let passed = ks < c.ks_threshold;
    let meta = metadata("polya", seed, c, json!({}));
    write_json(
        &r.out,
        "polya.json",
        &json!({
            "metadata": meta,
            "limit_law": { "alpha": law.alpha(), "beta": law.beta() },
            "initial_fraction": urn.red_fraction(),
            "mean_fraction": mean,
            "ks": ks,
            "passed": passed,
        }),
    )?;
    println!(
        "polya: {} runs of {} draws, KS vs Beta({}, {}) = {ks:.5} ({})",
        c.runs,
        c.draws,
        law.alpha(),
        law.beta(),
        if passed { "pass" } else { "FAIL" }
    );
    if passed {
        Ok(())
    } else {
        Err(CliError::Falsified(format!(
            "KS statistic {ks} is not below {}",
            c.ks_threshold
        )))
    }
}
