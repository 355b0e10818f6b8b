//! Study execution and file emission.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use atris_core::experiments::{
    collect_rows, configure_with, evaluate, ring_users, run_angular_sweep, run_distance_sweep, run_power_allocation,
    scalability_trial, user_channel, FeederLink, ScalabilityRow, Scenario, StudyKind, StudyResult, StudyRow,
};
use atris_core::geometry::Vec3;
use atris_core::metrics::RateReport;
use atris_core::tris::Strategy;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::config::RunConfig;
use crate::output::{write_matrix_dump, write_scalability_csv, write_study_csv, write_surface_program};

pub const THREADS_ENV: &str = "ATRIS_SIM_THREADS";

/// Pool sized by `ATRIS_SIM_THREADS`, or by rayon's default when unset.
pub fn thread_pool() -> Result<ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|n| *n >= 1)
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

pub enum Outcome {
    Sweep(StudyResult),
    Scalability(Vec<ScalabilityRow>),
}

/// Result of one run.
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub table: String,
}

pub fn base_scenario(cfg: &RunConfig) -> Result<Scenario> {
    let placeholder = Vec3::new(0.0, cfg.d, 0.0);
    let strategy = cfg.strategies.first().copied().unwrap_or(Strategy::DFocU);
    Ok(cfg.params.scenario(vec![placeholder], strategy)?)
}

/// Runs the configured study without touching the file system.
pub fn compute(cfg: &RunConfig, pool: &ThreadPool) -> Result<Outcome> {
    if cfg.strategies.is_empty() {
        bail!("no strategies selected");
    }
    let base = base_scenario(cfg)?;
    let s = &cfg.strategies;
    Ok(match cfg.study {
        StudyKind::Angular => Outcome::Sweep(run_angular_sweep(&base, cfg.d, &cfg.delta_phis, s)?),
        StudyKind::Distance => Outcome::Sweep(run_distance_sweep(&base, &cfg.distances, cfg.delta_phi, s)?),
        StudyKind::PowerAlloc => Outcome::Sweep(run_power_allocation(
            &base,
            &cfg.distances,
            &cfg.power_alloc_delta_phis,
            s,
        )?),
        StudyKind::Single => {
            let scenario = base.with_users(ring_users(&base, cfg.d, cfg.delta_phi, cfg.k)?);
            let feeder = FeederLink::new(&scenario)?;
            let rows = s
                .iter()
                .map(|&st| {
                    Ok(StudyRow {
                        distance_m: cfg.d,
                        delta_phi_deg: cfg.delta_phi,
                        report: evaluate(st, &scenario, &feeder)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Outcome::Sweep(StudyResult {
                kind: StudyKind::Single,
                rows,
            })
        }
        StudyKind::Scalability => Outcome::Scalability(scalability(cfg, &base, pool)?),
    })
}

/// Trials run in parallel; results are collected in trial order, so the
/// output does not depend on the number of threads.
pub fn scalability(cfg: &RunConfig, base: &Scenario, pool: &ThreadPool) -> Result<Vec<ScalabilityRow>> {
    if cfg.trials == 0 {
        bail!("at least one trial is required");
    }
    let feeder = FeederLink::new(base)?;
    let mut rows = Vec::new();
    for &k in &cfg.k_values {
        if cfg.verbose {
            eprintln!("scalability: K = {k}, {} trials", cfg.trials);
        }
        let per_trial: Vec<Vec<RateReport>> = pool.install(|| {
            (0..cfg.trials)
                .into_par_iter()
                .map(|t| scalability_trial(base, &feeder, k, t, &cfg.mc, &cfg.strategies))
                .collect::<atris_core::Result<Vec<_>>>()
        })?;
        rows.extend(collect_rows(k, &cfg.strategies, &per_trial)?);
    }
    Ok(rows)
}

pub fn csv_path(out: &Path, study: StudyKind, strategy: Strategy) -> PathBuf {
    out.join(format!("{}_{}.csv", study.name(), strategy.name().to_ascii_lowercase()))
}

/// Runs the study and writes one CSV per strategy into `cfg.out`. On any
/// error, files written by this call are removed.
pub fn execute(cfg: &RunConfig) -> Result<RunSummary> {
    let pool = thread_pool()?;
    let outcome = compute(cfg, &pool)?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("cannot create {}", cfg.out.display()))?;
    let mut written = Vec::new();
    match emit(cfg, &outcome, &mut written) {
        Ok(table) => Ok(RunSummary { files: written, table }),
        Err(e) => {
            for f in &written {
                let _ = fs::remove_file(f);
            }
            Err(e)
        }
    }
}

fn create(path: &Path, written: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    written.push(path.to_path_buf());
    Ok(BufWriter::new(f))
}

fn emit(cfg: &RunConfig, outcome: &Outcome, written: &mut Vec<PathBuf>) -> Result<String> {
    let seed = cfg.params.seed;
    let mut table = String::new();
    match outcome {
        Outcome::Sweep(result) => {
            table.push_str(&format!(
                "{:<10} {:>6} {:>10} {:>10} {:>10}\n",
                "strategy", "rows", "min_sum", "max_sum", "mean_jain"
            ));
            for &st in &cfg.strategies {
                let rows: Vec<&StudyRow> = result.for_strategy(st).collect();
                let path = csv_path(&cfg.out, result.kind, st);
                write_study_csv(create(&path, written)?, result.kind, &rows, seed)
                    .with_context(|| format!("writing {}", path.display()))?;
                let sums = rows.iter().map(|r| r.report.sum_rate);
                let min = sums.clone().fold(f64::INFINITY, f64::min);
                let max = sums.fold(f64::NEG_INFINITY, f64::max);
                let jain = rows.iter().map(|r| r.report.jain.value).sum::<f64>() / rows.len().max(1) as f64;
                table.push_str(&format!(
                    "{:<10} {:>6} {:>10.4} {:>10.4} {:>10.4}\n",
                    st.name(),
                    rows.len(),
                    min,
                    max,
                    jain
                ));
            }
            if result.kind == StudyKind::Single {
                export_single(cfg, written)?;
            }
        }
        Outcome::Scalability(rows) => {
            table.push_str(&format!(
                "{:<10} {:>4} {:>12} {:>12} {:>10}\n",
                "strategy", "K", "mean_ue", "mean_sum", "mean_jain"
            ));
            for &st in &cfg.strategies {
                let mine: Vec<&ScalabilityRow> = rows.iter().filter(|r| r.strategy == st).collect();
                let path = csv_path(&cfg.out, StudyKind::Scalability, st);
                write_scalability_csv(create(&path, written)?, &mine, seed)
                    .with_context(|| format!("writing {}", path.display()))?;
                for r in mine {
                    table.push_str(&format!(
                        "{:<10} {:>4} {:>12.4} {:>12.4} {:>10.4}\n",
                        st.name(),
                        r.k,
                        r.mean_ue_rate,
                        r.mean_sum_rate,
                        r.mean_jain
                    ));
                }
            }
        }
    }
    Ok(table)
}

/// Surface programs of the diagonal strategies and channel dumps for the
/// single-point study.
fn export_single(cfg: &RunConfig, written: &mut Vec<PathBuf>) -> Result<()> {
    if !cfg.export_surface && !cfg.export_channels {
        return Ok(());
    }
    let base = base_scenario(cfg)?;
    let scenario = base.with_users(ring_users(&base, cfg.d, cfg.delta_phi, cfg.k)?);
    let feeder = FeederLink::new(&scenario)?;
    if cfg.export_surface {
        for &st in cfg.strategies.iter().filter(|s| s.is_diagonal()) {
            let configured = configure_with(st, &scenario, &feeder)?;
            let phases = configured.surface.phases().expect("diagonal strategy");
            let path = cfg
                .out
                .join(format!("single_{}.surface.txt", st.name().to_ascii_lowercase()));
            write_surface_program(create(&path, written)?, phases)?;
        }
    }
    if cfg.export_channels {
        let path = cfg.out.join("single_g.atrs");
        write_matrix_dump(create(&path, written)?, &feeder.g.entries)?;
        let path = cfg.out.join("single_h.atrs");
        write_matrix_dump(create(&path, written)?, &user_channel(&scenario)?.entries)?;
    }
    Ok(())
}
