use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use locint_cli::{execute, Command, INPUT_ERROR};

/// Checks and disintegrates operators on locally Hilbert spaces.
#[derive(Parser)]
#[command(name = "locint", version)]
struct Cli {
    /// Tolerance overrides layered over the ones in the input.
    #[arg(long, global = true)]
    tol_file: Option<PathBuf>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Checks every section of the description.
    Validate {
        /// System description (JSON).
        file: PathBuf,
    },
    /// Places an operator in the diagonalizable / decomposable / locally bounded hierarchy.
    Classify {
        file: PathBuf,
        #[arg(long)]
        op: String,
    },
    /// Dumps a basis of the commutant of the diagonalizable operators at one level.
    Commutant {
        file: PathBuf,
        /// 1-based level.
        #[arg(long)]
        level: usize,
    },
    /// Compares the decomposable algebra with the commutant of the diagonalizables, level by level.
    Theorem33 { file: PathBuf },
    /// Disintegrates an abelian presentation.
    Disintegrate {
        file: PathBuf,
        #[arg(long)]
        algebra: String,
        /// Also write the result object here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &PathBuf) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, file, out) = match cli.command {
        Sub::Validate { file } => (Command::Validate, file, None),
        Sub::Classify { file, op } => (Command::Classify { op }, file, None),
        Sub::Commutant { file, level } => (Command::Commutant { level }, file, None),
        Sub::Theorem33 { file } => (Command::Theorem33, file, None),
        Sub::Disintegrate { file, algebra, out } => (Command::Disintegrate { algebra }, file, out),
    };
    let fail = |msg: String| {
        eprintln!("error: {msg}");
        ExitCode::from(INPUT_ERROR as u8)
    };
    let input = match read(&file) {
        Ok(b) => b,
        Err(e) => return fail(e),
    };
    let tol = match cli.tol_file.as_ref().map(read).transpose() {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let outcome = match execute(&command, &input, tol.as_deref()) {
        Ok(o) => o,
        Err(e) => return fail(e.to_string()),
    };
    if let (Some(path), Some(artifact)) = (out, &outcome.artifact) {
        let text = serde_json::to_string_pretty(artifact).expect("artifact serializes");
        if let Err(e) = std::fs::write(&path, text + "\n") {
            return fail(format!("{}: {e}", path.display()));
        }
    }
    println!("{}", outcome.report.to_json());
    ExitCode::from(outcome.report.exit_code() as u8)
}
