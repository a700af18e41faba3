use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use depvac::experiments::{self, ExperimentConfig, Mode};
use depvac::Error;

#[derive(Parser, Debug)]
#[command(name = "depvac", version, about = "Dependent-vacation queue approximations for the layered machine-repair model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment file; required for `instance`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the CSV output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Master seed for simulation and subsampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of grid instances to run.
    #[arg(long, global = true)]
    subsample: Option<usize>,
    /// Simulation length in machine cycles.
    #[arg(long, global = true)]
    sim_cycles: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Approximate and simulate one layered instance.
    Instance,
    /// Run the parameter grid and report error bins.
    Testbed,
    /// Produce the sweep behind figure 3, 4, 5, 6 or 7.
    Figure { n: u32 },
}

fn build_config(cli: &Cli) -> depvac::Result<ExperimentConfig> {
    let mode = match cli.command {
        Command::Instance => Mode::Instance,
        Command::Testbed => Mode::Testbed,
        Command::Figure { n } => Mode::figure(n)?,
    };
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(mode),
    };
    cfg.mode = mode;
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    if let Some(seed) = cli.seed {
        cfg.budget.seed = seed;
        cfg.testbed.seed = seed;
    }
    if cli.subsample.is_some() {
        cfg.testbed.subsample = cli.subsample;
    }
    if let Some(c) = cli.sim_cycles {
        cfg.budget.cycles = c;
    }
    let origin = cli
        .config
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "command line".into());
    cfg.validate().map_err(|e| match e {
        Error::Config { path, message } => Error::Config {
            path: format!("{origin}: {path}"),
            message,
        },
        other => Error::Config {
            path: origin,
            message: other.to_string(),
        },
    })?;
    Ok(cfg)
}

fn run(cli: &Cli) -> depvac::Result<()> {
    let cfg = build_config(cli)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    for table in experiments::run(&cfg)? {
        let path = table.write_to(&out)?;
        println!("wrote {} ({} rows)", path.display(), table.rows.len());
        if cfg.mode == Mode::Instance || table.name == "testbed_bins" {
            print!("{}", table.to_csv()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. } => 2,
                Error::Unstable { .. } => 3,
                _ => 1,
            })
        }
    }
}
