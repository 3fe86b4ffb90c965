use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::ExperimentError;
use crate::exact::{avg_variable_kl, eliminate_marginals, grid_column_major_order, ExactError};
use crate::factor_graph::gen_potts_grid;
use crate::propagation::Propagator;
use crate::schedulers::{run, RunOptions, Schedule};

pub const BENCH_HEADER: [&str; 12] = [
    "seed",
    "n",
    "c",
    "schedule",
    "converged",
    "messages_computed",
    "messages_performed",
    "wasted",
    "sweeps_equivalent",
    "final_max_residual",
    "avg_kl",
    "wall_time_s",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub n: usize,
    pub c: f64,
    pub instances: usize,
    pub seed_base: u64,
    pub schedules: Vec<Schedule>,
    pub tolerance: f64,
    pub max_sweeps: u64,
    pub damping: f64,
    /// Worker threads; instances are independent.
    pub jobs: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let run = RunOptions::default();
        BenchConfig {
            n: 10,
            c: 5.0,
            instances: 20,
            seed_base: 0,
            schedules: Schedule::ALL.to_vec(),
            tolerance: run.tolerance,
            max_sweeps: run.max_sweeps,
            damping: run.damping,
            jobs: 1,
        }
    }
}

impl BenchConfig {
    pub fn run_options(&self, schedule: Schedule) -> RunOptions {
        RunOptions {
            tolerance: self.tolerance,
            max_sweeps: self.max_sweeps,
            damping: self.damping,
            schedule,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.instances == 0 {
            return Err(ExperimentError::InvalidConfig("instances must be >= 1".into()));
        }
        if self.n == 0 {
            return Err(ExperimentError::InvalidConfig("n must be >= 1".into()));
        }
        if self.schedules.is_empty() {
            return Err(ExperimentError::InvalidConfig("no schedules selected".into()));
        }
        if self.jobs == 0 {
            return Err(ExperimentError::InvalidConfig("jobs must be >= 1".into()));
        }
        if self.seed_base.checked_add(self.instances as u64 - 1).is_none() {
            return Err(ExperimentError::InvalidConfig("seed range overflows u64".into()));
        }
        self.run_options(Schedule::Rbp0l).validate()?;
        Ok(())
    }
}

/// One (instance, schedule) result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub seed: u64,
    pub n: usize,
    pub c: f64,
    pub schedule: Schedule,
    pub converged: bool,
    pub messages_computed: u64,
    pub messages_performed: u64,
    pub wasted: u64,
    pub sweeps_equivalent: f64,
    pub final_max_residual: f64,
    /// Mean per-variable `KL(exact || belief)` at the point the run stopped.
    /// Empty when exact marginals are out of reach for this grid size.
    pub avg_kl: Option<f64>,
    pub wall_time_s: f64,
}

/// Samples `cfg.instances` grids and runs every requested schedule on each.
///
/// Rows come back ordered by seed, then by the order of `cfg.schedules`,
/// however many jobs are used.
pub fn bench_schedules(cfg: &BenchConfig) -> Result<Vec<BenchRow>, ExperimentError> {
    cfg.validate()?;
    let seeds: Vec<u64> = (0..cfg.instances as u64).map(|k| cfg.seed_base + k).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
    let per_seed: Vec<Vec<BenchRow>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| bench_instance(cfg, seed))
            .collect::<Result<_, _>>()
    })?;
    Ok(per_seed.into_iter().flatten().collect())
}

fn bench_instance(cfg: &BenchConfig, seed: u64) -> Result<Vec<BenchRow>, ExperimentError> {
    let g = gen_potts_grid(cfg.n, cfg.c, seed)?;
    let exact = match eliminate_marginals(&g, &grid_column_major_order(cfg.n)) {
        Ok(exact) => Some(exact),
        Err(ExactError::WidthTooLarge { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let prop = Propagator::new(&g);
    cfg.schedules
        .iter()
        .map(|&schedule| {
            let outcome = run(&g, &cfg.run_options(schedule))?;
            let avg_kl = exact
                .as_ref()
                .map(|ex| avg_variable_kl(ex, &prop.variable_beliefs(&outcome.messages)))
                .transpose()?;
            let stats = &outcome.stats;
            Ok(BenchRow {
                seed,
                n: cfg.n,
                c: cfg.c,
                schedule,
                converged: stats.converged,
                messages_computed: stats.messages_computed,
                messages_performed: stats.messages_performed,
                wasted: stats.wasted,
                sweeps_equivalent: stats.sweeps_equivalent(),
                final_max_residual: stats.final_max_residual,
                avg_kl,
                wall_time_s: stats.wall_time.as_secs_f64(),
            })
        })
        .collect()
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(BENCH_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
