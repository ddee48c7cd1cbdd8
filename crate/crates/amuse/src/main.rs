use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use amuse::config::{config_hash, FileConfig};
use amuse::report::{load_runs, save_run, write_tables};
use amuse::tracefile::{load_trace, load_users, save_trace};
use amuse::sig6;
use amuse_core::optimizer::{solve_bruteforce, solve_lagrange, Choice, GroupKey, MmkpProblem, Schedule};
use amuse_core::ratectl::{simulate_flow, steady_state, ControllerConfig, FlowConfig, LinkModel, BYTES_PER_KBPS};
use amuse_core::sim::synthetic::{cohort, CohortSpec};
use amuse_core::sim::{run_trial, Algorithm};
use amuse_core::wifi::{fit_profile, initial_forecast, update_forecast};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "amuse", version, about = "Cost-aware WiFi offloading: forecasting, scheduling and trace replay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One-step-ahead WiFi forecasts over a trace, as `day,period,w,realized,accurate` CSV.
    Predict {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Training days; defaults to the config window.
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solves a knapsack problem given as JSON and prints the schedule as JSON.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_enum, default_value_t = Solver::Lagrange)]
        solver: Solver,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulates one rate-limited flow, as `time,throughput_kbps,adv_win_bytes` CSV.
    Ratectl {
        #[arg(long)]
        target_kbps: f64,
        #[arg(long, value_enum, default_value_t = Link::Ethernet)]
        link: Link,
        /// Seconds.
        #[arg(long, default_value_t = 30.0)]
        duration: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replays traces under one algorithm and stores the report in `--out`.
    Simulate {
        /// A trace CSV, or a directory with one CSV per user.
        #[arg(long)]
        trace: PathBuf,
        /// amuse, on-the-spot, delayed or all.
        #[arg(long)]
        algorithm: String,
        /// Let the scheduler also choose WiFi rates and deferral to WiFi.
        #[arg(long)]
        extension: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Longest wait of the delayed baseline.
        #[arg(long)]
        deadline: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compares the reports in a run directory and writes the result tables.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// Defaults to the input directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes a seeded synthetic cohort, one trace CSV per user.
    Generate {
        #[arg(long, default_value_t = 16)]
        users: usize,
        #[arg(long, default_value_t = 10)]
        days: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Places per user (3 to 5); drawn per user when absent.
        #[arg(long)]
        locations: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Lagrange,
    BruteForce,
}

#[derive(Clone, Copy, ValueEnum)]
enum Link {
    Ethernet,
    Wifi,
    Cellular,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Predict { trace, config, window, out } => predict(&trace, config.as_deref(), window, out.as_deref()),
        Command::Solve { problem, solver, out } => solve(&problem, solver, out.as_deref()),
        Command::Ratectl { target_kbps, link, duration, alpha, seed, out } => {
            ratectl(target_kbps, link, duration, alpha, seed, out.as_deref())
        }
        Command::Simulate { trace, algorithm, extension, seed, deadline, config, out } => {
            simulate(&trace, &algorithm, extension, seed, deadline, config.as_deref(), &out)
        }
        Command::Report { input, out } => {
            let reports = load_runs(&input)?;
            for path in write_tables(out.as_deref().unwrap_or(&input), &reports)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Generate { users, days, seed, locations, config, out } => {
            let format = load_config(config.as_deref())?.trace_format()?;
            let spec = CohortSpec { users, days, n: format.n, locations, seed };
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for u in cohort(&spec) {
                save_trace(&out.join(format!("{}.csv", u.user)), &u.days, &format)?;
            }
            eprintln!("wrote {users} traces to {}", out.display());
            Ok(())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    Ok(match path {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn predict(trace: &Path, config: Option<&Path>, window: Option<usize>, out: Option<&Path>) -> Result<()> {
    let file = load_config(config)?;
    let days = load_trace(trace, &file.trace_format()?)?;
    let window = window.unwrap_or(file.window);
    if window == 0 || days.len() <= window {
        bail!("{} has {} days; predicting needs more than the {window} training days", trace.display(), days.len());
    }
    let (mut profile, mut history) = fit_profile(&days[..window])?;
    let mut w = csv::Writer::from_writer(output(out)?);
    w.write_record(["day", "period", "w", "realized", "accurate"])?;
    let (mut hits, mut total) = (0usize, 0usize);
    for day in &days[window..] {
        for i in 0..day.n() {
            let forecast = if i == 0 {
                initial_forecast(&profile, &history)?
            } else {
                let prev2 = (i >= 2).then(|| &day.periods[i - 2].location);
                update_forecast(&profile, &history, i, prev2, &day.periods[i - 1].location)?
            };
            let p = forecast.get(i);
            let realized = day.periods[i].wifi_available;
            let accurate = (p > 0.5) == realized;
            hits += usize::from(accurate);
            total += 1;
            w.write_record([
                day.day_index.to_string(),
                i.to_string(),
                sig6(p),
                u8::from(realized).to_string(),
                u8::from(accurate).to_string(),
            ])?;
        }
        profile.add_day(day)?;
        history.add_day(day)?;
    }
    w.flush()?;
    eprintln!("accuracy {:.4} over {total} periods ({} days)", hits as f64 / total as f64, days.len() - window);
    Ok(())
}

#[derive(Serialize)]
struct Chosen {
    group: usize,
    item: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    key: Option<GroupKey>,
    #[serde(skip_serializing_if = "Option::is_none")]
    choice: Option<Choice>,
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    objective: f64,
    feasible: bool,
    row_ok: &'a [bool],
    loads: &'a [f64],
    slack: Vec<f64>,
    assignment: Vec<Chosen>,
    stats: &'a amuse_core::optimizer::SolveStats,
}

fn solve(path: &Path, solver: Solver, out: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut problem: MmkpProblem = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    problem.validate()?;
    let schedule: Schedule = match solver {
        Solver::Lagrange => solve_lagrange(&problem, None),
        Solver::BruteForce => match solve_bruteforce(&problem) {
            Ok(s) => s,
            Err(amuse_core::error::Error::Infeasible) => {
                eprintln!("no assignment satisfies every row; reporting the unconstrained optimum");
                problem.evaluate(problem.unconstrained_argmax(), Default::default())
            }
            Err(e) => return Err(e.into()),
        },
    };
    let assignment = schedule
        .assignment
        .iter()
        .enumerate()
        .map(|(g, &i)| Chosen { group: g, item: i, key: problem.groups[g].key, choice: problem.groups[g].items[i].choice })
        .collect();
    let report = SolveOutput {
        objective: schedule.objective,
        feasible: schedule.feasible,
        row_ok: &schedule.row_ok,
        loads: &schedule.loads,
        slack: schedule.slack(&problem),
        assignment,
        stats: &schedule.stats,
    };
    let mut w = output(out)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    Ok(())
}

fn ratectl(target_kbps: f64, link: Link, duration: f64, alpha: f64, seed: u64, out: Option<&Path>) -> Result<()> {
    let link = match link {
        Link::Ethernet => LinkModel::ethernet(),
        Link::Wifi => LinkModel::wifi(),
        Link::Cellular => LinkModel::cellular(),
    };
    let controller = ControllerConfig { alpha, ..ControllerConfig::default() };
    let flow = FlowConfig { duration, grace: 5f64.min(duration / 2.0), seed, ..FlowConfig::default() };
    let samples = simulate_flow(target_kbps * BYTES_PER_KBPS, &link, controller, &flow)?;
    let mut w = csv::Writer::from_writer(output(out)?);
    w.write_record(["time", "throughput_kbps", "adv_win_bytes"])?;
    for s in &samples {
        w.write_record([sig6(s.time), sig6(s.throughput / BYTES_PER_KBPS), sig6(s.adv_win)])?;
    }
    w.flush()?;
    if let Some((mean, sd)) = steady_state(&samples, (duration - 10.0).max(flow.grace)) {
        eprintln!("steady state {:.1} kbps (sd {:.1}) against target {target_kbps}", mean / BYTES_PER_KBPS, sd / BYTES_PER_KBPS);
    }
    Ok(())
}

fn simulate(
    trace: &Path,
    algorithm: &str,
    extension: bool,
    seed: Option<u64>,
    deadline: Option<usize>,
    config: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let algorithms: Vec<Algorithm> = if algorithm == "all" {
        Algorithm::ALL.to_vec()
    } else {
        vec![algorithm.parse().with_context(|| format!("--algorithm {algorithm}"))?]
    };
    let file = load_config(config)?;
    let mut sim = file.sim_config(extension)?;
    if let Some(s) = seed {
        sim.seed = s;
    }
    if let Some(d) = deadline {
        sim.deadline = d;
    }
    let users = load_users(trace, &file.trace_format()?)?;
    let hash = config_hash(&sim);
    for mut report in run_trial(&users, &sim, &algorithms)? {
        report.config_hash = Some(hash.clone());
        let path = save_run(out, &report)?;
        eprintln!(
            "{}: {} users, mean utility {:.4}, mean spend {:.4}, mean offloaded {:.4} -> {}",
            report.algorithm,
            report.users.len(),
            report.mean_utility(),
            report.mean_spend(),
            report.mean_offloaded(),
            path.display()
        );
    }
    Ok(())
}
