use std::process::ExitCode;

use clap::Parser;
use qutrit_floquet_cli::cli::{Cli, Command};
use qutrit_floquet_cli::{commands, reproduce};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Evolve(args) => commands::evolve_cmd(args),
        Command::MpsEvolve(args) => commands::mps_evolve_cmd(args),
        Command::Sweep(args) => commands::sweep_cmd(args),
        Command::CompileCheck(args) => commands::compile_check_cmd(args),
        Command::PredictNt(args) => commands::predict_nt_cmd(args),
        Command::Reproduce(args) => reproduce::reproduce(args.figure, &args.out, args.full).map(|dir| {
            eprintln!("wrote {}", dir.display());
        }),
        Command::Ops { command } => commands::ops_cmd(command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
