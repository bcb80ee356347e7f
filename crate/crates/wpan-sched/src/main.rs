//! Command line front end: single runs, full sweeps, exhaustive-search
//! comparisons and schedule rendering.

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use wpan_sched::config::SimConfig;
use wpan_sched::oracle::{brute_force_min_span, MAX_ORACLE_HOPS};
use wpan_sched::radio::Beamwidth;
use wpan_sched::scheduler::{
    conflict_matrix, convert_flows, render_gantt, schedule_hops, schedule_superframe, sort_hops,
    Hop, Policy,
};
use wpan_sched::sim::{
    records_json, replay_to_superframe, run_scenario, run_sweep, runs_csv, write_sweep_outputs,
    RunRecord, Scenario,
};
use wpan_sched::{Error, Result};

#[derive(Parser)]
#[command(name = "wpan-sched", version, about = "Directional 60 GHz TDMA scheduling simulator")]
struct Cli {
    /// Configuration file overriding the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and print its metrics.
    Run(RunArgs),
    /// Simulate the configured grid and write result tables.
    Sweep(SweepArgs),
    /// Compare every policy against the exhaustive minimum span.
    Oracle(ScenarioArgs),
    /// Draw a superframe chart or dump schedule and topology data.
    Render(RenderArgs),
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// Scenario seed for topology and flow sampling.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of flows to sample.
    #[arg(long, default_value_t = 10)]
    flows: usize,
    /// Beamwidth in degrees.
    #[arg(long, default_value_t = 45)]
    beamwidth: u32,
}

#[derive(clap::Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Policy to simulate; omit to compare all three.
    #[arg(long, value_enum)]
    policy: Option<Policy>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Output directory for the result tables.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct RenderArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value_t = Policy::EmhctE)]
    policy: Policy,
    /// What to print.
    #[arg(long, value_enum, default_value_t = What::Gantt)]
    what: What,
    /// Zero-based superframe to reconstruct.
    #[arg(long, default_value_t = 0)]
    superframe: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum What {
    Gantt,
    Schedule,
    Topology,
}

fn load_config(path: &Option<PathBuf>) -> Result<SimConfig> {
    match path {
        Some(p) => SimConfig::from_file(p),
        None => Ok(SimConfig::default()),
    }
}

fn scenario_from(args: &ScenarioArgs) -> Result<Scenario> {
    Ok(Scenario {
        seed: args.seed,
        flow_count: args.flows,
        beamwidth: Beamwidth::from_degrees(args.beamwidth)?,
    })
}

fn cmd_run(config: &Option<PathBuf>, args: &RunArgs) -> Result<()> {
    let cfg = load_config(config)?;
    let scenario = scenario_from(&args.scenario)?;
    let policies: Vec<Policy> = match args.policy {
        Some(p) => vec![p],
        None => Policy::ALL.to_vec(),
    };
    let records: Vec<RunRecord> = policies
        .into_iter()
        .map(|p| run_scenario(&cfg, scenario, p))
        .collect::<Result<_>>()?;
    match args.format {
        Format::Csv => print!("{}", runs_csv(&records)),
        Format::Json => println!("{}", records_json(&records)?),
    }
    Ok(())
}

fn cmd_sweep(config: &Option<PathBuf>, args: &SweepArgs) -> Result<()> {
    let cfg = load_config(config)?;
    let records = run_sweep(&cfg)?;
    let written = write_sweep_outputs(&cfg, &records, &args.out)?;
    println!("wrote {} runs to {}", records.len(), args.out.display());
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_oracle(config: &Option<PathBuf>, args: &ScenarioArgs) -> Result<()> {
    let cfg = load_config(config)?;
    let scenario = scenario_from(args)?;
    let (ctx, pending, state) = replay_to_superframe(&cfg, scenario, Policy::Mhct, 0)?;
    let routes = convert_flows(&ctx, &pending)?;
    let hops: Vec<Hop> = routes.iter().flat_map(|r| r.hops.iter().copied()).collect();
    if hops.len() > MAX_ORACLE_HOPS {
        return Err(Error::Domain(format!(
            "scenario expands to {} hops; the exhaustive search handles at most {MAX_ORACLE_HOPS} \
             (try fewer flows)",
            hops.len()
        )));
    }
    let sorted = sort_hops(&hops, &state);
    let matrix = conflict_matrix(&ctx, &sorted);
    let optimal = brute_force_min_span(&sorted, |i, j| matrix[i][j])?;
    println!("hops {}", sorted.len());
    println!("optimal {optimal}");
    for policy in Policy::ALL {
        let map = schedule_hops(policy, &sorted, cfg.maxslots, |i, j| matrix[i][j])?;
        println!("{policy} {}", map.consumed_slots);
    }
    Ok(())
}

fn cmd_render(config: &Option<PathBuf>, args: &RenderArgs) -> Result<()> {
    let cfg = load_config(config)?;
    let scenario = scenario_from(&args.scenario)?;
    let (ctx, pending, state) =
        replay_to_superframe(&cfg, scenario, args.policy, args.superframe)?;
    if args.what == What::Topology {
        print!("{}", wpan_sched::topology::format_topology(&ctx.topology));
        return Ok(());
    }
    if pending.is_empty() {
        println!("all flows delivered before superframe {}", args.superframe);
        return Ok(());
    }
    let out = schedule_superframe(&ctx, &pending, &state, args.policy, cfg.maxslots)?;
    match args.what {
        What::Gantt => print!("{}", render_gantt(&out.schedule)),
        What::Schedule => println!("{}", serde_json::to_string_pretty(&out.schedule)?),
        What::Topology => unreachable!("handled above"),
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(args) => cmd_run(&cli.config, args),
        Command::Sweep(args) => cmd_sweep(&cli.config, args),
        Command::Oracle(args) => cmd_oracle(&cli.config, args),
        Command::Render(args) => cmd_render(&cli.config, args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
