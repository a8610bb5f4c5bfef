use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use topowalk_cli::{CliError, Pipeline, RunConfig, Stage, Store};

#[derive(Parser)]
#[command(name = "topowalk", version, about = "Exploration, topological mapping and navigation workbench")]
struct Cli {
    /// key=value config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Any config key, e.g. `--set vpr.k=16`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    /// Supervision mode (`mode`).
    #[arg(long, global = true)]
    mode: Option<String>,
    /// step:turn, e.g. 0.25:10 (`locomotion`).
    #[arg(long, global = true)]
    locomotion: Option<String>,
    /// Episode seed (`seed`).
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Exploration budget in steps (`budget`).
    #[arg(long, global = true)]
    budget: Option<String>,
    /// Loop threshold or `auto` (`vpr.threshold`).
    #[arg(long, global = true)]
    threshold: Option<String>,
    /// Output directory (`out`).
    #[arg(long, global = true)]
    out: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    GenWorlds,
    GenDemos,
    Train,
    Explore,
    Map,
    Navigate,
    Eval,
    Render,
    BenchVpr,
    /// Several stages in order; all of them by default.
    Run {
        #[arg(long, value_delimiter = ',')]
        stages: Vec<String>,
    },
    /// Print the seed registry.
    Registry,
    /// Print the effective configuration.
    Config,
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut overrides = Vec::new();
    for s in &cli.sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{s}`")))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    let named = [
        ("mode", &cli.mode),
        ("locomotion", &cli.locomotion),
        ("seed", &cli.seed),
        ("budget", &cli.budget),
        ("vpr.threshold", &cli.threshold),
        ("out", &cli.out),
    ];
    for (k, v) in named {
        if let Some(v) = v {
            overrides.push((k.to_string(), v.clone()));
        }
    }
    RunConfig::parse(&text, &overrides)
}

fn stages_of(cmd: &Command) -> Result<Vec<Stage>, CliError> {
    Ok(match cmd {
        Command::GenWorlds => vec![Stage::GenWorlds],
        Command::GenDemos => vec![Stage::GenDemos],
        Command::Train => vec![Stage::Train],
        Command::Explore => vec![Stage::Explore],
        Command::Map => vec![Stage::Map],
        Command::Navigate => vec![Stage::Navigate],
        Command::Eval => vec![Stage::Eval],
        Command::Render => vec![Stage::Render],
        Command::BenchVpr => vec![Stage::BenchVpr],
        Command::Run { stages } if stages.is_empty() => Stage::ALL.to_vec(),
        Command::Run { stages } => stages.iter().map(|s| s.parse()).collect::<Result<_, _>>()?,
        Command::Registry | Command::Config => Vec::new(),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Config => {
            print!("{}", cfg.to_text());
            return Ok(());
        }
        Command::Registry => {
            for r in Store::new(&cfg.out).list_records()? {
                println!("{}\t{}\t{}\t{}\t{}", r.stage, r.artifact, r.world, r.seed, r.sha256);
            }
            return Ok(());
        }
        _ => {}
    }
    let stages = stages_of(&cli.command)?;
    let pipeline = Pipeline::new(cfg);
    for (stage, report) in pipeline.run(&stages)? {
        println!("[{stage}] {} artifacts", report.artifacts.len());
        for line in &report.lines {
            println!("[{stage}] {line}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
