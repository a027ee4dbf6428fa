use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qslq::config::Overrides;

#[derive(Parser)]
#[command(name = "qslq", version, about = "Quantum speed-limit verification for qubit Liouvillian dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    config: PathBuf,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    tolerance: Option<f64>,
    /// Output file; defaults to output.path in the config, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            t_max: self.t_max,
            steps: self.steps,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Propagate and tabulate measures against closed forms.
    Evolve(Common),
    /// Evaluate the requested bounds and report validity.
    Verify(Common),
    /// Run verify once per parameter override.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// key=v1,v2,... (repeatable; combinations are taken in order).
        #[arg(long = "set", required = true)]
        sets: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { qslq::EXIT_CONFIG } else { qslq::EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Evolve(c) => qslq::evolve(&c.config, &c.overrides(), c.out.clone()),
        Command::Verify(c) => qslq::verify(&c.config, &c.overrides(), c.out.clone()),
        Command::Sweep { common, sets } => qslq::sweep(&common.config, &common.overrides(), sets, common.out.clone()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("qslq: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
