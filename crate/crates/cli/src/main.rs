mod complete;
mod figures;
mod plot;
mod run;
mod trapdoor;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lcu_core::recovery::Method;

use run::{CliError, CliResult, Sink};

/// Alternative LCU circuit: verification, figure data, trapdoor and
/// completion experiments.
#[derive(Parser, Debug)]
#[command(name = "lcu", version)]
struct Cli {
    /// JSON config; keys left out take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path prefix; stdout when absent.
    #[arg(long, global = true)]
    out: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a circuit config against every identity; exit 1 on failure.
    Verify,
    /// Success probabilities versus coefficient ratio.
    Fig2,
    /// Completion error versus observed fraction.
    Fig3,
    /// Completion error versus noise level.
    Fig4,
    #[command(subcommand)]
    Trapdoor(TrapdoorCmd),
    /// Complete a partially observed output matrix.
    Complete {
        #[arg(value_enum)]
        method: MethodArg,
    },
    /// Print a matplotlib script for a figure.
    PlotScript {
        #[arg(value_enum)]
        figure: plot::Figure,
    },
}

#[derive(Subcommand, Debug)]
enum TrapdoorCmd {
    /// Draw a secret key.
    Keygen,
    /// Evaluate the keyed circuit on the configured input state.
    Eval {
        #[arg(long)]
        key: PathBuf,
        /// Dump complex amplitudes instead of measured magnitudes.
        #[arg(long)]
        amplitudes: bool,
    },
    /// Recover D_w psi from an amplitude dump with the key.
    Invert {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Try to recover the weights without the key.
    Attack {
        #[arg(long)]
        input: PathBuf,
        /// Compare against this key's weights.
        #[arg(long)]
        key: Option<PathBuf>,
    },
    /// Same-key round trips and key independence of V squared.
    DemoInvolution,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum MethodArg {
    Svp,
    Als,
    Factorized,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Svp => Method::Svp,
            MethodArg::Als => Method::Als,
            MethodArg::Factorized => Method::Factorized,
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let config = cli.config.as_deref();
    let seed = cli.seed;
    let sink = Sink::new(cli.out);
    match cli.command {
        Command::Verify => {
            if !verify::run(config, seed, &sink)? {
                return Err(CliError::Failed("verification failed".into()));
            }
            Ok(())
        }
        Command::Fig2 => figures::fig2(config, seed, &sink),
        Command::Fig3 => figures::sweep_figure("fig3", figures::FigureConfig::fig3(), config, seed, &sink),
        Command::Fig4 => figures::sweep_figure("fig4", figures::FigureConfig::fig4(), config, seed, &sink),
        Command::Trapdoor(t) => match t {
            TrapdoorCmd::Keygen => trapdoor::keygen_cmd(config, seed, &sink),
            TrapdoorCmd::Eval { key, amplitudes } => trapdoor::eval_cmd(config, seed, &key, amplitudes, &sink),
            TrapdoorCmd::Invert { key, input } => trapdoor::invert_cmd(config, seed, &key, &input, &sink),
            TrapdoorCmd::Attack { input, key } => {
                trapdoor::attack_cmd(config, seed, &input, key.as_deref().map(Path::new), &sink)
            }
            TrapdoorCmd::DemoInvolution => trapdoor::involution_cmd(config, seed, &sink),
        },
        Command::Complete { method } => complete::run(method.into(), config, seed, &sink),
        Command::PlotScript { figure } => {
            let name = format!("plot-script {figure:?}").to_lowercase();
            let prov = run::Provenance::new(&name, &name);
            sink.write("", "py", &(prov.csv_header() + &plot::script(figure)))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
