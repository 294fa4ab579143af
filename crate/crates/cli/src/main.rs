use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use svpkit_cli::{exit_code, parse_ladder, run, Command, RunOptions, ToleranceProfile, EXIT_ERROR};

#[derive(Parser, Debug)]
#[command(
    name = "svpkit",
    version,
    about = "Stochastic viability checks and simulations on manifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    tolerance_profile: Option<Profile>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Profile {
    Analytic,
    Fd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Pointwise drift, tangency and jump conditions on sampled manifold points.
    Check(Common),
    /// Monte Carlo ensemble with distance bands and sample trajectories.
    Simulate(Common),
    /// Generator inequality for the squared distance on a ladder of tube radii.
    Supersolution(Common),
    /// Strong-error slope against the closed-form solution.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// `a..b` for 2^a..=2^b steps, or a comma-separated list of step counts.
        #[arg(long)]
        ladder: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Check(c) => (Ok(Command::Check), c),
        Cmd::Simulate(c) => (Ok(Command::Simulate), c),
        Cmd::Supersolution(c) => (Ok(Command::Supersolution), c),
        Cmd::Convergence { common, ladder } => {
            let ladder = ladder.as_deref().map(parse_ladder).transpose();
            (ladder.map(|ladder| Command::Convergence { ladder }), common)
        }
    };
    let command = match command {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    }
    let opts = RunOptions {
        scenario: common.scenario,
        out: common.out,
        seed: common.seed,
        profile: common.tolerance_profile.map(|p| match p {
            Profile::Analytic => ToleranceProfile::Analytic,
            Profile::Fd => ToleranceProfile::Fd,
        }),
    };
    let result = run(&command, &opts);
    match &result {
        Ok(outcome) => print!("{}", outcome.summary),
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
