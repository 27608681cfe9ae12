use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vnslab::cli_io::{diag_command, parse_config, profile_command, resume_command, run_command, write_atomic};
use vnslab::selftest::{report_text, run_selftest};
use vnslab::{Error, Result};

#[derive(Parser)]
#[command(name = "vnslab", version, about = "Vlasov-Navier-Stokes laboratory on the periodic torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation from a key = value configuration file.
    Run {
        /// Configuration file; every key is optional.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Continue a run from its checkpoint.
    Resume {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// New final time; defaults to the one in the checkpointed configuration.
        #[arg(long)]
        t_final: Option<f64>,
    },
    /// Summarize the diagnostics series of a run.
    Diag {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the asymptotic spatial profile of a run.
    Profile {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the acceptance criteria on the reference configuration.
    Selftest {
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<vnslab::cli_io::RunConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))?,
        None => String::new(),
    };
    parse_config(&text)
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Run { config, out } => {
            let outcome = run_command(&load_config(config.as_deref())?, &out)?;
            println!("reached t = {} after {} steps; output in {}", outcome.state.t, outcome.state.step, out.display());
        }
        Command::Resume { run_dir, out, t_final } => {
            let outcome = resume_command(&run_dir, &out, t_final)?;
            println!("resumed to t = {}; output in {}", outcome.state.t, out.display());
        }
        Command::Diag { run_dir, out } => print!("{}", diag_command(&run_dir, &out)?.to_text()),
        Command::Profile { run_dir, out } => print!("{}", profile_command(&run_dir, &out)?.to_text()),
        Command::Selftest { out } => {
            std::fs::create_dir_all(&out)?;
            let reports = run_selftest(|r| println!("{}", r.line()));
            write_atomic(&out.join("selftest.txt"), report_text(&reports).as_bytes())?;
            return Ok(reports.iter().all(|r| r.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
