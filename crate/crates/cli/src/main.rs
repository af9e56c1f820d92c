mod bundle;
mod commands;
mod error;
mod io;
mod svg;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::*;
use error::{CliError, CliResult};

/// Principal periodic components of curve samples.
#[derive(Debug, Parser)]
#[command(name = "ppc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate curves from one of the simulation schemes
    Simulate(SimulateArgs),
    /// Fit curves in a Fourier basis and start a result bundle
    Smooth(SmoothArgs),
    /// Functional principal components of a smoothed bundle
    Fpca(FpcaArgs),
    /// VARIMAX rotation of the leading components
    Varimax(VarimaxArgs),
    /// Rotate the leading components toward the periodic subspace
    Ppc(PpcArgs),
    /// Split the curves into nearly periodic, aperiodic and remainder parts
    Decompose(DecomposeArgs),
    /// Bootstrap test of an exactly periodic leading component
    Test(TestArgs),
    /// L2 change of the leading PPC and VARIMAX components across M
    Stability(StabilityArgs),
    /// Tidy CSV (and optional SVG) of a bundle quantity
    Plotdata(PlotArgs),
}

fn run(command: &Command) -> CliResult<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Smooth(a) => smooth_cmd(a),
        Command::Fpca(a) => fpca_cmd(a),
        Command::Varimax(a) => varimax_cmd(a),
        Command::Ppc(a) => ppc_cmd(a),
        Command::Decompose(a) => decompose_cmd(a),
        Command::Test(a) => test_cmd(a),
        Command::Stability(a) => stability_cmd(a),
        Command::Plotdata(a) => plotdata_cmd(a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = e.print();
            std::process::exit(2);
        }
        Err(e) => {
            let err = CliError::usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            std::process::exit(err.exit_code());
        }
    };
    if let Err(err) = run(&cli.command) {
        eprintln!("{}", err.to_json());
        std::process::exit(err.exit_code());
    }
}
