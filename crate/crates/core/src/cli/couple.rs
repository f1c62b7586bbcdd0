use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use reinforce_sim::coupling::{marginal_check, run_coupling, CouplingOptions};
use reinforce_sim::direct::ModelParams;
use reinforce_sim::distributions::make_stream;

use super::config::{is_false, metadata, resolve, Common};
use super::output::{write_json, write_jsonl};
use super::simulate::regime_note;
use super::{with_workers, CliError};

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    l0: Option<i64>,
    #[arg(long)]
    r0: Option<i64>,
    /// Event budget per coupled run.
    #[arg(long)]
    events: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Test the comparison walkers against one fixed environment.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    marginal_check: bool,
    /// Runs used by the marginal test.
    #[arg(long)]
    marginal_trials: Option<usize>,
    /// Environment seed for the marginal test (defaults to the master seed).
    #[arg(long)]
    env_seed: Option<u64>,
    /// Family-wise significance of the marginal test.
    #[arg(long)]
    significance: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    allow_sub_unit_a: bool,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    a: f64,
    delta: f64,
    l0: i64,
    r0: i64,
    events: u64,
    trials: usize,
    marginal_check: bool,
    marginal_trials: usize,
    env_seed: Option<u64>,
    significance: f64,
    allow_sub_unit_a: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            a: 1.0,
            delta: 0.0,
            l0: 0,
            r0: 2,
            events: 10_000,
            trials: 1000,
            marginal_check: false,
            marginal_trials: 1000,
            env_seed: None,
            significance: 0.01,
            allow_sub_unit_a: false,
        }
    }
}

pub fn run(args: Args) -> Result<(), CliError> {
    let r = resolve::<Config, _>(&args.common, &args)?;
    let c = &r.config;
    let params = ModelParams::new(c.a, c.delta, c.l0, c.r0)?;
    if c.trials == 0 {
        return Err(CliError::Usage("trials must be positive".into()));
    }
    if !(c.significance > 0.0 && c.significance < 1.0) {
        return Err(CliError::Usage("significance must lie in (0, 1)".into()));
    }
    let regime = regime_note(&params);
    if !params.in_recurrence_regime() {
        eprintln!("warning: delta = {} is {regime}", c.delta);
    }
    let seed = r.seed;
    let options = CouplingOptions {
        allow_sub_unit: c.allow_sub_unit_a,
        ..Default::default()
    };
    // Each trial draws its own environment seed from its stream.
    let summaries = with_workers(r.workers, || {
        (0..c.trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = make_stream(seed, t);
                let env_seed = rng.next_u64();
                run_coupling(&params, c.events, env_seed, &mut rng, options).map(|(s, _)| s)
            })
            .collect::<reinforce_sim::Result<Vec<_>>>()
    })??;
    let violations: u64 = summaries.iter().map(|s| s.violations).sum();
    let hits = summaries.iter().filter(|s| s.tau1_event.is_some()).count();

    let meta = metadata("couple", seed, c, json!({ "regime": regime }));
    write_jsonl(&r.out, "couple.jsonl", &meta, &summaries)?;

    let mut marginal_passed = true;
    if c.marginal_check {
        let env_seed = c.env_seed.unwrap_or(seed);
        let report = marginal_check(&params, c.marginal_trials, c.events, env_seed, seed, c.significance)?;
        marginal_passed = report.passed;
        println!(
            "marginal check: {} site tests, {} sites with insufficient visits, {}",
            report.tested.len(),
            report.insufficient.len(),
            if report.passed { "pass" } else { "FAIL" }
        );
        write_json(&r.out, "marginal_check.json", &json!({ "metadata": meta, "report": report }))?;
    }
    println!(
        "couple: {} trials, {violations} violations, tau_1 within budget in {hits} ({regime})",
        c.trials
    );
    if violations > 0 {
        let first = summaries.iter().find_map(|s| s.violation.clone()).unwrap_or_default();
        return Err(CliError::Falsified(format!(
            "{violations} ordering violations; first: {first}"
        )));
    }
    if !marginal_passed {
        return Err(CliError::Falsified("marginal check rejected the environment law".into()));
    }
    Ok(())
}
