use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use atris_sim::config::RunConfig;
use clap::Parser;
use toml::Value;

/// Run an AT-RIS study and write its CSV reports.
///
/// Values are taken from the defaults, then `--config`, then each `--set`,
/// then the dedicated flags.
#[derive(Debug, Parser)]
#[command(name = "atris-sim", version)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// angular, distance, power-alloc, scalability or single.
    #[arg(long, value_name = "NAME")]
    study: Option<String>,
    /// Comma-separated strategy list, e.g. D-FOC-U,ND-EIG-W.
    #[arg(long, value_name = "NAME[,NAME...]")]
    strategy: Option<String>,
    /// User distance from the surface center (angular and single studies).
    #[arg(long, value_name = "METERS")]
    d: Option<f64>,
    /// Angular separation between users (distance and single studies).
    #[arg(long = "delta-phi", value_name = "DEG", allow_negative_numbers = true)]
    delta_phi: Option<f64>,
    /// Number of users: single study size, or the only K of the scalability study.
    #[arg(long, value_name = "INT")]
    k: Option<usize>,
    /// Monte Carlo trials per K.
    #[arg(long, value_name = "INT")]
    trials: Option<usize>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override any configuration key, e.g. --set tris.rows=10.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print progress to stderr.
    #[arg(short, long)]
    verbose: bool,
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for s in &cli.set {
        cfg.apply_assignment(s)?;
    }
    let float = |v: f64| Value::Float(v);
    let int = |v: usize| Value::Integer(v as i64);
    if let Some(v) = &cli.study {
        cfg.set("study", &Value::String(v.clone()))?;
    }
    if let Some(v) = &cli.strategy {
        cfg.set("strategy", &Value::String(v.clone()))?;
    }
    if let Some(v) = cli.d {
        cfg.set("sweep.d", &float(v))?;
    }
    if let Some(v) = cli.delta_phi {
        cfg.set("sweep.delta_phi", &float(v))?;
        cfg.set("power_alloc.delta_phis", &Value::Array(vec![float(v)]))?;
    }
    if let Some(v) = cli.k {
        cfg.set("single.k", &int(v))?;
        cfg.set("mc.k_values", &Value::Array(vec![int(v)]))?;
    }
    if let Some(v) = cli.trials {
        cfg.set("mc.trials", &int(v))?;
    }
    if let Some(v) = cli.seed {
        cfg.params.seed = v;
    }
    if let Some(v) = &cli.out {
        cfg.out = v.clone();
    }
    cfg.verbose |= cli.verbose;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config(&cli).and_then(|cfg| {
        if cfg.verbose {
            eprintln!("study {} -> {}", cfg.study.name(), cfg.out.display());
        }
        atris_sim::execute(&cfg)
    });
    match result {
        Ok(summary) => {
            print!("{}", summary.table);
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
