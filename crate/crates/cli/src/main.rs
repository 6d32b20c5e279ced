//! Command-line runner: single missions, paired strategy comparisons,
//! search-position dumps and scenario linting.
//!
//! Exit codes: 0 success, 1 usage error, 2 scenario or runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fetchsim_cli::{report, run_experiment, ExperimentSpec, ScanTimingReport};
use fetchsim_core::mission::{run_mission, MissionConfig};
use fetchsim_core::percept::PerceptionNoise;
use fetchsim_core::strategy::{generate_positions, manual_locations, ProbabilityTable, Strategy};
use fetchsim_core::tablegeom::{locations_to_csv, HeuristicParams};
use fetchsim_core::world::load_scenario;

#[derive(Parser)]
#[command(
    name = "fetchsim",
    about = "Deterministic fetch-and-carry object-search simulation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single mission and print the report.
    Run(RunArgs),
    /// Run a paired-strategy experiment and print the comparison table.
    Compare(CompareArgs),
    /// Dump generated search positions for rooms, CSV.
    GenPoses(GenPosesArgs),
    /// Lint a scenario file.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Manual,
    Semantic,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::Manual => Strategy::Manual,
            StrategyArg::Semantic => Strategy::Generated,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Md,
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    object: String,
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    concurrent_scan: bool,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    report: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Load a probability table (JSON) before the run.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Save the (possibly updated) probability table after the run.
    #[arg(long)]
    save_table: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Experiment file (JSON).
    experiment: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Md)]
    report: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenPosesArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Room to scan; all rooms when omitted.
    #[arg(long)]
    room: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Repeat the calculation this many times (seeds seed..seed+N).
    #[arg(long, default_value_t = 1)]
    repeat: u64,
    /// Dump the unfiltered candidates instead of the filtered positions.
    #[arg(long)]
    no_room_filter: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error path too.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::GenPoses(args) => cmd_gen_poses(args),
        Command::Validate(args) => cmd_validate(args),
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.scenario)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", args.scenario.display()))?;
    let world = load_scenario(&text)?;
    if world.object_by_name(&args.object).is_none() {
        anyhow::bail!("object `{}` is not in the scenario", args.object);
    }
    let mut config = MissionConfig::new(args.object.clone(), args.strategy.into());
    config.seed = args.seed;
    config.concurrent_scan = args.concurrent_scan;
    if let Some(noise) = &world_noise(&text)? {
        config.noise = noise.clone();
    }
    if let Some(durations) = world_durations(&text)? {
        config.durations = durations;
    }
    let mut table = match &args.table {
        Some(path) => {
            let json = std::fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
            ProbabilityTable::from_json(&json)?
        }
        None => ProbabilityTable::default(),
    };
    let annotations = if config.strategy == Strategy::Manual {
        manual_locations(&world)
    } else {
        Vec::new()
    };
    let report = run_mission(&config, &world, &annotations, &mut table)?;
    if let Some(path) = &args.save_table {
        std::fs::write(path, table.to_json())
            .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
    }
    let rendered = match args.report {
        ReportFormat::Json => report.to_json() + "\n",
        ReportFormat::Csv => {
            format!(
                "object,strategy,detected,duration,visited,total,grasped,user_informed\n{},{},{},{},{},{},{},{}\n",
                report.target_object,
                report.strategy,
                report.object_detected,
                fetchsim_core::mission::format_mmss(report.duration_s),
                report.positions_visited,
                report.positions_total,
                report.grasped,
                report.user_informed
            )
        }
        ReportFormat::Md => {
            format!(
                "| object | strategy | detected | duration | visited | total |\n|---|---|---|---|---|---|\n| {} | {} | {} | {} | {} | {} |\n\n{}\n",
                report.target_object,
                report.strategy,
                report.object_detected,
                fetchsim_core::mission::format_mmss(report.duration_s),
                report.positions_visited,
                report.positions_total,
                report.inform_message
            )
        }
    };
    emit(args.out.as_ref(), &rendered)
}

/// Scenario files may carry `noise` and `durations` blocks; the run command
/// honours them.
fn world_noise(scenario_text: &str) -> anyhow::Result<Option<PerceptionNoise>> {
    let value: serde_json::Value = serde_json::from_str(scenario_text)?;
    match value.get("noise") {
        Some(n) if !n.is_null() => Ok(Some(serde_json::from_value(n.clone())?)),
        _ => Ok(None),
    }
}

fn world_durations(scenario_text: &str) -> anyhow::Result<Option<fetchsim_core::nav::DurationModel>> {
    let value: serde_json::Value = serde_json::from_str(scenario_text)?;
    match value.get("durations") {
        Some(d) if !d.is_null() => Ok(Some(serde_json::from_value(d.clone())?)),
        _ => Ok(None),
    }
}

fn cmd_compare(args: CompareArgs) -> anyhow::Result<()> {
    let spec = ExperimentSpec::from_file(&args.experiment)?;
    let output = run_experiment(&spec)?;
    let rendered = match args.report {
        ReportFormat::Md => report::to_markdown(&output.table),
        ReportFormat::Csv => report::to_csv(&output.table),
        ReportFormat::Json => report::to_json(&output.table) + "\n",
    };
    emit(args.out.as_ref(), &rendered)
}

fn cmd_gen_poses(args: GenPosesArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.scenario)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", args.scenario.display()))?;
    let world = load_scenario(&text)?;
    let rooms: Vec<String> = match &args.room {
        Some(room) => {
            if world.room(room).is_none() {
                anyhow::bail!("room `{room}` is not in the scenario");
            }
            vec![room.clone()]
        }
        None => world.rooms.iter().map(|r| r.id.clone()).collect(),
    };
    let params = HeuristicParams::default();
    let mut out = String::from("run,");
    out.push_str(&locations_to_csv(&[])); // header line from the helper
    let header_len = out.len();
    for rep in 0..args.repeat {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed + rep);
        for room in &rooms {
            let gen = generate_positions(&world, room, &params, &PerceptionNoise::default(), &mut rng)?;
            let locations = if args.no_room_filter {
                &gen.candidates
            } else {
                &gen.accepted
            };
            for line in locations_to_csv(locations).lines().skip(1) {
                out.push_str(&format!("{rep},{line}\n"));
            }
        }
    }
    debug_assert!(out.len() >= header_len);
    emit(args.out.as_ref(), &out)
}

fn cmd_validate(args: ValidateArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.scenario)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", args.scenario.display()))?;
    let world = load_scenario(&text)?;
    // Annotations are validated on top of the loader's checks.
    let annotations = manual_locations(&world);
    if !annotations.is_empty() {
        fetchsim_core::strategy::build_agenda_manual(&world, &annotations)?;
    }
    let timing = ScanTimingReport::for_model(&fetchsim_core::nav::DurationModel::default());
    println!(
        "ok: {} rooms, {} furniture, {} objects, {} annotations; scan {}s sequential / {}s pipelined",
        world.rooms.len(),
        world.furniture.len(),
        world.objects.len(),
        world.annotations.len(),
        timing.sequential_s,
        timing.concurrent_s
    );
    Ok(())
}
