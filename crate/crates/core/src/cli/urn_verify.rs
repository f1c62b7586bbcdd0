use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::json;

use reinforce_sim::direct::ModelParams;
use reinforce_sim::urn_process::{enumerate_exact, leaf_bound, tv_distance, Model, MAX_HORIZON};

use super::config::{is_false, metadata, resolve, Common};
use super::output::write_json;
use super::CliError;

pub const TV_TOLERANCE: f64 = 1e-12;

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
    /// Number of jumps to enumerate (at most 8).
    #[arg(long)]
    horizon: Option<usize>,
    /// Permit a < 1; negative effective urn masses are then a hard error.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    allow_sub_unit_a: bool,
    /// Include both exact distributions in the report.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    dump: bool,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    a: f64,
    delta: f64,
    l0: i64,
    r0: i64,
    horizon: usize,
    allow_sub_unit_a: bool,
    dump: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            a: 1.0,
            delta: 0.0,
            l0: 0,
            r0: 2,
            horizon: 4,
            allow_sub_unit_a: false,
            dump: false,
        }
    }
}

pub fn run(args: Args) -> Result<(), CliError> {
    let r = resolve::<Config, _>(&args.common, &args)?;
    let c = &r.config;
    if c.horizon > MAX_HORIZON {
        return Err(CliError::Usage(format!(
            "horizon {} would enumerate up to {} leaves; the maximum horizon is {MAX_HORIZON}",
            c.horizon,
            leaf_bound(c.horizon)
        )));
    }
    let params = ModelParams::new(c.a, c.delta, c.l0, c.r0)?;
    let direct = enumerate_exact(Model::Direct, &params, c.horizon, c.allow_sub_unit_a)?;
    let urn = enumerate_exact(Model::Urn, &params, c.horizon, c.allow_sub_unit_a)?;
    let tv = tv_distance(&direct, &urn)?;
    let tv_f64 = tv.to_f64().unwrap_or(f64::INFINITY);
    let passed = tv_f64 < TV_TOLERANCE;

    let meta = metadata("urn-verify", r.seed, c, json!({}));
    let mut report = json!({
        "metadata": meta,
        "tv": tv_f64,
        "tv_exact": tv.to_string(),
        "tolerance": TV_TOLERANCE,
        "passed": passed,
        "support": { "direct": direct.len(), "urn": urn.len() },
        "total_mass": { "direct": direct.total().to_string(), "urn": urn.total().to_string() },
    });
    if c.dump {
        report["direct"] = direct.to_json();
        report["urn"] = urn.to_json();
    }
    write_json(&r.out, "urn_verify.json", &report)?;
    println!(
        "urn-verify: horizon {}, {} trajectories, TV = {tv_f64:e} ({})",
        c.horizon,
        direct.len(),
        if passed { "pass" } else { "FAIL" }
    );
    if passed {
        Ok(())
    } else {
        Err(CliError::Falsified(format!(
            "TV distance {tv} exceeds {TV_TOLERANCE:e}"
        )))
    }
}
