use std::process::ExitCode;

use clap::Parser;

use triags_cli::{execute, Cli, EXIT_INPUT};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("TRIAGS_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().expect("thread pool is set once");
            }
            _ => {
                eprintln!("error: TRIAGS_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(EXIT_INPUT as u8);
            }
        }
    }
    match execute(&cli) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
