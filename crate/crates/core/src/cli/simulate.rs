use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use reinforce_sim::direct::{meeting_statistics, run_direct, ModelParams, RunOptions};
use reinforce_sim::distributions::make_stream;

use super::config::{is_false, metadata, resolve, Common};
use super::output::{write_csv, write_json, write_jsonl};
use super::{with_workers, CliError};

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// Number of particles.
    #[arg(long)]
    n: Option<usize>,
    /// Initial edge weight.
    #[arg(long)]
    a: Option<f64>,
    /// Rightward drift added to the right edge weight.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    l0: Option<i64>,
    #[arg(long)]
    r0: Option<i64>,
    /// Event budget per trial.
    #[arg(long)]
    events: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Stop each trial after this many meetings.
    #[arg(long)]
    max_meetings: Option<usize>,
    /// Also write every event to trajectories.jsonl.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    trajectories: bool,
    /// Attach exponential holding times to recorded events.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    continuous_time: bool,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    n: usize,
    a: f64,
    delta: f64,
    l0: i64,
    r0: i64,
    events: u64,
    trials: usize,
    max_meetings: Option<usize>,
    trajectories: bool,
    continuous_time: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n: 2,
            a: 1.0,
            delta: 0.0,
            l0: 0,
            r0: 2,
            events: 100_000,
            trials: 1000,
            max_meetings: None,
            trajectories: false,
            continuous_time: false,
        }
    }
}

pub fn regime_note(params: &ModelParams) -> &'static str {
    if params.in_recurrence_regime() {
        "inside the recurrence regime delta < 1"
    } else {
        "outside the recurrence regime delta < 1"
    }
}

pub fn run(args: Args) -> Result<(), CliError> {
    let r = resolve::<Config, _>(&args.common, &args)?;
    let c = &r.config;
    let params = ModelParams::new(c.a, c.delta, c.l0, c.r0)?
        .with_budget(c.events)
        .with_seed(r.seed);
    if c.n == 0 || c.trials == 0 {
        return Err(CliError::Usage("n and trials must be positive".into()));
    }
    let regime = regime_note(&params);
    if !params.in_recurrence_regime() {
        eprintln!("warning: delta = {} is {regime}", c.delta);
    }
    let options = RunOptions {
        record_events: c.trajectories,
        continuous_time: c.continuous_time,
        stop_after_meetings: c.max_meetings,
    };
    let seed = r.seed;
    let n = c.n;
    let records = with_workers(r.workers, || {
        (0..c.trials as u64)
            .into_par_iter()
            .map(|t| run_direct(&params, n, &mut make_stream(seed, t), options))
            .collect::<reinforce_sim::Result<Vec<_>>>()
    })??;
    let summary = meeting_statistics(&records)?;

    let meta = metadata("simulate", seed, c, json!({ "regime": regime }));
    #[derive(Serialize)]
    struct Row {
        k: usize,
        frequency: f64,
        stderr: f64,
        count: usize,
        mean_gap: Option<f64>,
        median_gap: Option<f64>,
    }
    let rows: Vec<_> = summary
        .per_k
        .iter()
        .map(|m| Row {
            k: m.k,
            frequency: m.frequency,
            stderr: m.stderr,
            count: m.count,
            mean_gap: m.mean_gap,
            median_gap: m.median_gap,
        })
        .collect();
    let header = ["k", "frequency", "stderr", "count", "mean_gap", "median_gap"];
    write_csv(&r.out, "meetings.csv", &meta, &header, &rows)?;
    write_json(&r.out, "meetings.json", &json!({ "metadata": meta, "summary": summary }))?;
    if c.trajectories {
        write_jsonl(&r.out, "trajectories.jsonl", &meta, &records)?;
    }
    let first = summary.frequency(1);
    println!(
        "simulate: {} trials, {} events each; P(tau_1 <= budget) = {first:.6} ({regime})",
        c.trials, c.events
    );
    Ok(())
}
