//! Command-line interface: `solve` runs the annealing pipeline and writes
//! reports; `oracle` exactly enumerates small instances.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::dist::all_pairs_shortest;
use crate::extend::{extend, without_virtual, ExtendedNetwork};
use crate::io::load_instance;
use crate::network::{problem_size, DemandSet, Instance};
use crate::oracle::enumerate;
use crate::prune::{build_candidates, CandidateTable, Pruning};
use crate::report::{
    build_report, report_json, trace_log, tree_dot, trees_csv, OracleSummary, ReportContext,
};
use crate::sa::{anneal_restarts, SaParams};

#[derive(Debug, Parser)]
#[command(
    name = "railflow",
    version,
    about = "Rail freight flow assignment with tree-shaped paths"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve an instance by simulated annealing and write reports.
    Solve(SolveArgs),
    /// Exactly enumerate every assignment of a small instance.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Network file with NODES and ARCS sections.
    network: PathBuf,
    /// Demands file: origin,destination,volume[,shadow_price].
    demands: PathBuf,
    /// Detour-ratio threshold for candidate pruning.
    #[arg(long, default_value_t = 1.4)]
    epsilon: f64,
    /// Penalty weight on capacity overloads.
    #[arg(long, default_value_t = 600.0)]
    lambda: f64,
    /// Disable the virtual elements that absorb infeasible flows.
    #[arg(long)]
    no_virtual: bool,
    /// Keep every successor able to reach the destination.
    #[arg(long)]
    no_prune: bool,
    /// Output directory; reports go to stdout when omitted.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Markov chain multiplier K (between 3 and 6).
    #[arg(long = "K", default_value_t = 4)]
    chain_multiplier: u32,
    /// Statistical cooling decrement parameter.
    #[arg(long = "delta", default_value_t = 0.1)]
    cooling_delta: f64,
    /// Geometric cooling factor.
    #[arg(long, default_value_t = 0.95)]
    alpha: f64,
    /// Chains cooled statistically before switching to geometric cooling.
    #[arg(long = "switch-iter", default_value_t = 30)]
    switch_iter: u32,
    /// Target acceptance ratio for the initial temperature.
    #[arg(long = "t0-accept", default_value_t = 0.9)]
    t0_accept: f64,
    /// Stop temperature (default: 1e-4 of the initial temperature).
    #[arg(long = "t-min")]
    t_min: Option<f64>,
    /// Stop after this many chains without an acceptance.
    #[arg(long = "stall-chains", default_value_t = 3)]
    stall_chains: u32,
    /// Random seed; restarts derive their streams from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent annealing restarts; the best solution wins.
    #[arg(long, default_value_t = 1)]
    restarts: u32,
    /// Certify the result against the exact oracle.
    #[arg(long)]
    oracle: bool,
    /// Largest assignment space the oracle will enumerate.
    #[arg(long = "oracle-cap", default_value_t = 10_000_000)]
    oracle_cap: u64,
    /// Destinations (labels) to emit DOT trees and a CSV for.
    #[arg(long, value_delimiter = ',')]
    trees: Option<Vec<String>>,
    /// Echo the chain trace to stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Largest assignment space to enumerate.
    #[arg(long = "oracle-cap", default_value_t = 10_000_000)]
    oracle_cap: u64,
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { 1 } else { 0 };
        }
    };
    match cli.command {
        Command::Solve(args) => solve_command(args),
        Command::Oracle(args) => oracle_command(args),
    }
}

struct Prepared {
    instance: Instance<f64>,
    ext: ExtendedNetwork<f64>,
    dist: crate::dist::DistanceTable<f64>,
    table: CandidateTable<f64>,
}

fn prepare(common: &CommonArgs) -> Result<Prepared, String> {
    if common.epsilon < 1.0 {
        return Err("--epsilon must be at least 1".into());
    }
    let instance =
        load_instance::<f64>(&common.network, &common.demands).map_err(|e| e.to_string())?;
    let demands = instance.demands.clone();
    let ext = if common.no_virtual {
        without_virtual(instance.net.clone())
    } else {
        extend(instance.net.clone(), &demands)
    };
    let dist = all_pairs_shortest(ext.net(), demands.destinations());
    if common.no_virtual {
        for demand in demands.all() {
            if !dist.dist(demand.origin, demand.destination).is_finite() {
                return Err(format!(
                    "demand {} -> {} cannot reach its destination and virtual arcs are disabled",
                    ext.net().label(demand.origin),
                    ext.net().label(demand.destination)
                ));
            }
        }
    }
    let mode = if common.no_prune {
        Pruning::Off
    } else {
        Pruning::DetourRatio(common.epsilon)
    };
    let table = build_candidates(&ext, &dist, mode);
    Ok(Prepared {
        instance,
        ext,
        dist,
        table,
    })
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<(), String> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| format!("{}: {e}", path.display()))
}

fn solve_command(args: SolveArgs) -> i32 {
    match try_solve(&args) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            1
        }
    }
}

fn try_solve(args: &SolveArgs) -> Result<i32, String> {
    let prepared = prepare(&args.common)?;
    let Prepared {
        instance,
        ext,
        dist,
        table,
    } = prepared;
    let demands: &DemandSet<f64> = &instance.demands;

    let params = SaParams::<f64> {
        lambda: args.common.lambda,
        epsilon: args.common.epsilon,
        chain_multiplier: args.chain_multiplier,
        cooling_delta: args.cooling_delta,
        alpha: args.alpha,
        switch_after: args.switch_iter,
        initial_acceptance: args.t0_accept,
        t_min: args.t_min,
        stall_chains: args.stall_chains,
        seed: args.seed,
        full_eval: false,
        record_decisions: false,
    };
    params.validate().map_err(|e| e.to_string())?;

    let started = Instant::now();
    let (outcome, restart_energies) =
        anneal_restarts(&ext, &table, demands, &dist, &params, args.restarts);
    let wall_time_ms = started.elapsed().as_millis() as u64;

    let oracle_summary = if args.oracle {
        let result = enumerate(&ext, &table, demands, params.lambda, args.oracle_cap)
            .map_err(|e| e.to_string())?;
        let solver_total = outcome.energy.total();
        let gap = if result.optimum.abs() > 0.0 {
            (solver_total - result.optimum) / result.optimum
        } else {
            solver_total - result.optimum
        };
        Some(OracleSummary {
            optimum: result.optimum,
            solver_total,
            gap,
            enumerated: result.enumerated,
            infeasible: result.infeasible,
            argmin_count: result.argmins.len(),
            matched: gap.abs() <= 1e-9,
        })
    } else {
        None
    };

    let size = problem_size(ext.net(), &table);
    let ctx = ReportContext {
        params: &params,
        restarts: args.restarts.max(1),
        restart_energies,
        trace: &outcome.trace,
        wall_time_ms,
        virtual_arcs: !args.common.no_virtual,
        oracle: oracle_summary,
    };
    let report = build_report(&ext, &table, demands, &size, &outcome.assignment, &ctx);

    if args.verbose {
        eprint!("{}", trace_log(&outcome.trace));
    }

    let json = report_json(&report);
    match &args.common.out {
        None => print!("{json}"),
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            write_file(dir, "report.json", &json)?;
            write_file(dir, "trace.log", &trace_log(&outcome.trace))?;
            if let Some(labels) = &args.trees {
                let trees_dir = dir.join("trees");
                std::fs::create_dir_all(&trees_dir)
                    .map_err(|e| format!("{}: {e}", trees_dir.display()))?;
                for dest in labels {
                    let dot = tree_dot(&report, dest).map_err(|e| e.to_string())?;
                    write_file(&trees_dir, &format!("{dest}.dot"), &dot)?;
                }
                let csv = trees_csv(&report, labels.iter().map(|s| s.as_str()))
                    .map_err(|e| e.to_string())?;
                write_file(dir, "trees.csv", &csv)?;
            }
        }
    }

    eprintln!(
        "total={:.6} transport={:.6} abandonment={:.6} penalty={:.6} chains={} wall_ms={}",
        report.objective.total,
        report.objective.transport_cost,
        report.objective.abandonment_cost,
        report.objective.penalty,
        report.sa.chains,
        wall_time_ms
    );

    Ok(if report.objective.penalty > 0.0 { 2 } else { 0 })
}

fn oracle_command(args: OracleArgs) -> i32 {
    match try_oracle(&args) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            1
        }
    }
}

fn try_oracle(args: &OracleArgs) -> Result<i32, String> {
    let prepared = prepare(&args.common)?;
    let result = enumerate(
        &prepared.ext,
        &prepared.table,
        &prepared.instance.demands,
        args.common.lambda,
        args.oracle_cap,
    )
    .map_err(|e| e.to_string())?;

    let json = serde_json::json!({
        "optimum": result.optimum,
        "transport_cost": result.optimum_breakdown.transport_cost,
        "abandonment_cost": result.optimum_breakdown.abandonment_cost,
        "penalty": result.optimum_breakdown.penalty,
        "lambda": result.optimum_breakdown.lambda,
        "enumerated": result.enumerated,
        "infeasible": result.infeasible,
        "argmin_count": result.argmins.len(),
    });
    let mut text = serde_json::to_string_pretty(&json).expect("oracle result serializes");
    text.push('\n');
    match &args.common.out {
        None => print!("{text}"),
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            write_file(dir, "oracle.json", &text)?;
        }
    }
    Ok(0)
}
