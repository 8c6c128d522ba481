use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dwlab::commands::{self, RunContext};
use dwlab::{outcome_code, report, CliError, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "dwlab", version, about = "Diffusion-wave asymptotics of the damped p-system")]
struct Cli {
    /// TOML configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding the config. The JSON config mirror
    /// keeps the configured value so artifacts do not depend on it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sampling (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Seed override for the sampled kernel checks.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the diffusion wave.
    Profile,
    /// Solve the correction and measure residual rates.
    Correct,
    /// Run the PDE and the solver integrity checks.
    Simulate {
        /// Continue an unfinished run from its last snapshot.
        #[arg(long)]
        resume: bool,
    },
    /// Decay norms and fitted exponents from stored snapshots.
    Analyze,
    /// Approximate Green function bounds.
    KernelCheck,
    /// Reconstruct the perturbation from the Duhamel formula.
    Duhamel,
    /// Collate stored results.
    Report,
    /// Every stage, a digest of all artifacts and the report.
    All,
    /// Print the effective configuration as TOML.
    ShowConfig,
    /// List configuration violations.
    Validate,
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    match cli.command {
        Command::ShowConfig => {
            print!("{}", config.to_toml());
            return Ok(0);
        }
        Command::Validate => {
            let v = config.validate();
            for e in &v {
                println!("{e}");
            }
            return Ok(if v.is_empty() { 0 } else { 2 });
        }
        Command::Report => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.dir));
            let r = report::write_report(&out)?;
            print!("{}", report::render(&r));
            return Ok(if r.failed > 0 { 1 } else { 0 });
        }
        _ => {}
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.dir));
    let ctx = RunContext::new(config, out, cli.threads)?;
    let criteria = match cli.command {
        Command::Profile => commands::profile(&ctx)?,
        Command::Correct => commands::correct(&ctx)?,
        Command::Simulate { resume } => commands::simulate(&ctx, resume)?,
        Command::Analyze => commands::analyze(&ctx)?,
        Command::KernelCheck => commands::kernel_check(&ctx)?,
        Command::Duhamel => commands::duhamel(&ctx)?,
        Command::All => commands::all(&ctx)?,
        Command::Report | Command::ShowConfig | Command::Validate => unreachable!(),
    };
    for c in &criteria {
        println!("criterion {}: {:?} ({})", c.id, c.status, c.title);
    }
    Ok(outcome_code(&criteria))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
