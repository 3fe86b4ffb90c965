use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use bpsched::exact::{eliminate_marginals, min_fill_order};
use bpsched::experiments::{
    bench_schedules, summarize, trace_metrics, write_bench_csv, write_trace_csv, BenchConfig, ExperimentError,
};
use bpsched::factor_graph::{gen_potts_grid, load_model, save_model};
use bpsched::schedulers::{run, SchedulerError};
use bpsched::{FactorGraph, GraphError, Propagator, RunOptions, Schedule};
use clap::{Args, CommandFactory, Parser, Subcommand};

/// Belief propagation on discrete factor graphs with dynamic schedules.
#[derive(Debug, Parser)]
#[command(name = "bpsched", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a random binary Potts grid and write it as a model file.
    GenGrid {
        /// Grid side length.
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Couplings and fields are drawn from [-c, c].
        #[arg(long, default_value_t = 5.0)]
        c: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one schedule on a model and print its statistics as key=value lines.
    Run {
        #[arg(long)]
        model: PathBuf,
        /// synchronous, round_robin, rbp1l or rbp0l.
        #[arg(long, default_value = "rbp0l")]
        schedule: Schedule,
        #[command(flatten)]
        run: RunArgs,
        /// Write variable beliefs (variable_id,state,probability) here.
        #[arg(long)]
        beliefs: Option<PathBuf>,
    },
    /// Compare schedules over a batch of random grids.
    Bench {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 5.0)]
        c: f64,
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        /// Comma-separated schedule names.
        #[arg(long, value_delimiter = ',', default_value = "synchronous,round_robin,rbp1l,rbp0l")]
        schedules: Vec<Schedule>,
        #[command(flatten)]
        run: RunArgs,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Per-update error metrics of an rbp0l run against its converged messages.
    Trace {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Exact marginals by variable elimination.
    Exact {
        #[arg(long)]
        model: PathBuf,
        /// Write marginals (variable_id,state,probability) here.
        #[arg(long)]
        csv: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Convergence threshold on the message residual.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Give up after this many updates per directed edge.
    #[arg(long, default_value_t = 1000)]
    max_sweeps: u64,
    /// Weight kept on the old message, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
}

impl RunArgs {
    fn options(&self, schedule: Schedule) -> RunOptions {
        RunOptions {
            tolerance: self.tol,
            max_sweeps: self.max_sweeps,
            damping: self.damping,
            schedule,
        }
    }
}

fn read_model(path: &Path) -> Result<FactorGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_model(&text).with_context(|| format!("parsing {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_marginals<'a>(path: &Path, marginals: impl Iterator<Item = &'a [f64]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["variable_id", "state", "probability"])?;
    for (i, probs) in marginals.enumerate() {
        for (state, p) in probs.iter().enumerate() {
            w.write_record([i.to_string(), state.to_string(), p.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::GenGrid { n, c, seed, out: path } => {
            let g = gen_potts_grid(n, c, seed)?;
            fs::write(&path, save_model(&g)).with_context(|| format!("writing {}", path.display()))?;
        }
        Command::Run {
            model,
            schedule,
            run: args,
            beliefs,
        } => {
            let g = read_model(&model)?;
            let mut outcome = run(&g, &args.options(schedule))?;
            outcome.stats.model = model.display().to_string();
            for (key, value) in outcome.stats.key_values() {
                writeln!(out, "{key}={value}")?;
            }
            if let Some(path) = beliefs {
                let beliefs = Propagator::new(&g).variable_beliefs(&outcome.messages);
                write_marginals(&path, beliefs.iter().map(|b| b.probabilities.as_slice()))?;
            }
        }
        Command::Bench {
            n,
            c,
            instances,
            seed_base,
            schedules,
            run: args,
            jobs,
            csv,
        } => {
            let cfg = BenchConfig {
                n,
                c,
                instances,
                seed_base,
                schedules,
                tolerance: args.tol,
                max_sweeps: args.max_sweeps,
                damping: args.damping,
                jobs,
            };
            let rows = bench_schedules(&cfg)?;
            write_bench_csv(&rows, create(&csv)?)?;
            write!(out, "{}", summarize(&rows)?)?;
        }
        Command::Trace { model, run: args, csv } => {
            let g = read_model(&model)?;
            let records = trace_metrics(&g, &args.options(Schedule::Rbp0l))?;
            write_trace_csv(&records, create(&csv)?)?;
            writeln!(out, "records={}", records.len())?;
        }
        Command::Exact { model, csv } => {
            let g = read_model(&model)?;
            let exact = eliminate_marginals(&g, &min_fill_order(&g))?;
            write_marginals(&csv, exact.marginals.iter().map(Vec::as_slice))?;
            writeln!(out, "log_z={}", exact.log_z)?;
        }
    }
    Ok(())
}

/// 2 for flag values rejected after parsing, 3 for a trace whose reference
/// run diverged, 1 for everything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    if let Some(err) = e.downcast_ref::<ExperimentError>() {
        return match err {
            ExperimentError::DidNotConverge { .. } => 3,
            ExperimentError::InvalidConfig(_) | ExperimentError::Scheduler(SchedulerError::InvalidOptions(_)) => 2,
            _ => 1,
        };
    }
    match e.downcast_ref::<SchedulerError>() {
        Some(SchedulerError::InvalidOptions(_)) => 2,
        _ if matches!(e.downcast_ref::<GraphError>(), Some(GraphError::InvalidGrid(_))) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() && !e.render().to_string().contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
