use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use super::CliError;

pub const SEED_ENV: &str = "REINFORCE_SIM_SEED";

/// Options shared by every subcommand. They steer where and how a run
/// executes, never what it computes, so only the seed enters the metadata.
#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// JSON config file; flags given on the command line override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed. Falls back to the config file, then REINFORCE_SIM_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for trial-level parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
}

pub struct Resolved<C> {
    pub config: C,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

fn read_file(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::Usage(format!(
            "config {} must be a JSON object",
            path.display()
        ))),
        Err(e) => Err(CliError::Usage(format!("invalid config {}: {e}", path.display()))),
    }
}

fn take<T: DeserializeOwned>(m: &mut Map<String, Value>, key: &str) -> Result<Option<T>, CliError> {
    match m.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v)
            .map(Some)
            .map_err(|e| CliError::Usage(format!("config key {key:?}: {e}"))),
    }
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got {s:?}"))),
        Err(_) => Ok(None),
    }
}

/// Overlay command-line flags on the config file and fill the remaining keys
/// with the command's defaults.
pub fn resolve<C, F>(common: &Common, flags: &F) -> Result<Resolved<C>, CliError>
where
    C: DeserializeOwned,
    F: Serialize,
{
    let mut file = match &common.config {
        Some(p) => read_file(p)?,
        None => Map::new(),
    };
    let file_seed: Option<u64> = take(&mut file, "seed")?;
    let file_out: Option<PathBuf> = take(&mut file, "out")?;
    let file_workers: Option<usize> = take(&mut file, "workers")?;

    let Value::Object(overrides) = serde_json::to_value(flags).expect("flags serialize") else {
        unreachable!("flag structs serialize to objects")
    };
    for (k, v) in overrides {
        if !v.is_null() {
            file.insert(k, v);
        }
    }
    let config = serde_json::from_value(Value::Object(file))
        .map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))?;

    let seed = match common.seed.or(file_seed) {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let workers = common.workers.or(file_workers);
    if workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    Ok(Resolved {
        config,
        seed,
        out: common.out.clone().or(file_out).unwrap_or_else(|| PathBuf::from(".")),
        workers,
    })
}

/// Metadata block embedded in every output file.
pub fn metadata<C: Serialize>(command: &str, seed: u64, config: &C, extra: Value) -> Value {
    let mut m = json!({
        "tool": "reinforce-sim",
        "version": env!("CARGO_PKG_VERSION"),
        "schema": 1,
        "command": command,
        "seed": seed,
        "config": config,
    });
    if let (Value::Object(m), Value::Object(extra)) = (&mut m, extra) {
        m.extend(extra);
    }
    m
}

pub fn is_false(b: &bool) -> bool {
    !*b
}
