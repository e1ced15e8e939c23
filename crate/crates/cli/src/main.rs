use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gftlqr_cli::commands::{
    cmd_baseline, cmd_robustness, cmd_simulate, cmd_surface, cmd_train, ControllerChoice,
    CONTROLLER_FILE,
};
use gftlqr_cli::{init_threads, CliError, Context, RunConfig, ScenarioSelection};

#[derive(Parser)]
#[command(name = "gftlqr", version, about = "Fuzzy-tree scheduled LQR for a two-link arm")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every stochastic step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Case selection: full88, desk8, or comma-separated ids.
    #[arg(long, global = true)]
    cases: Option<String>,
    /// Overwrite existing outputs that are otherwise protected.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize per-case static LQR weights and cache them.
    Baseline,
    /// Train the fuzzy tree against the cached baselines.
    Train {
        #[arg(long)]
        baselines: Option<PathBuf>,
    },
    /// Simulate one case and write its trajectory.
    Simulate {
        /// Controller file, or `baseline` for the cached static LQR.
        #[arg(long)]
        controller: String,
        #[arg(long = "case")]
        case_id: u32,
        #[arg(long)]
        baselines: Option<PathBuf>,
    },
    /// Sample one FIS of a controller on a grid.
    Surface {
        #[arg(long)]
        controller: PathBuf,
        /// bid1, bid2, q1, q2, q3 or q4.
        #[arg(long)]
        fis: String,
        #[arg(long, default_value_t = 41)]
        grid: usize,
    },
    /// Monte Carlo robustness comparison under parameter uncertainty.
    Robustness {
        #[arg(long)]
        controller: Option<PathBuf>,
        #[arg(long)]
        baselines: Option<PathBuf>,
        #[arg(long)]
        n_per_case: Option<usize>,
        #[arg(long)]
        width: Option<f64>,
    },
}

fn build_context(common: &Common) -> Result<Context, CliError> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed = common.seed.unwrap_or(config.seed);
    config = config.with_seed(seed);
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    if let Some(cases) = &common.cases {
        config.scenarios = ScenarioSelection::parse(cases)?;
    }
    Context::new(config, Box::new(std::io::stdout()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let mut ctx = build_context(&cli.common)?;
    match cli.command {
        Command::Baseline => {
            cmd_baseline(&mut ctx, cli.common.force)?;
        }
        Command::Train { baselines } => {
            cmd_train(&mut ctx, baselines.as_deref())?;
        }
        Command::Simulate {
            controller,
            case_id,
            baselines,
        } => {
            let choice = ControllerChoice::parse(&controller);
            cmd_simulate(&mut ctx, &choice, case_id, baselines.as_deref())?;
        }
        Command::Surface {
            controller,
            fis,
            grid,
        } => {
            cmd_surface(&mut ctx, &controller, &fis, grid)?;
        }
        Command::Robustness {
            controller,
            baselines,
            n_per_case,
            width,
        } => {
            if let Some(n) = n_per_case {
                ctx.config.robustness.n_per_case = n;
            }
            if let Some(w) = width {
                ctx.config.robustness.width = w;
            }
            ctx.config.validate()?;
            let controller = controller.unwrap_or_else(|| ctx.out(CONTROLLER_FILE));
            cmd_robustness(&mut ctx, &controller, baselines.as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
