use std::process::ExitCode;

use clap::Parser;
use eos_cli::{configure_threads, effective_config, run, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads()
        .and_then(|_| effective_config(&cli))
        .and_then(|cfg| run(&cfg));
    match result {
        Ok(out) => {
            if !cli.quiet {
                println!("{}", out.summary);
                for f in &out.files {
                    println!("wrote {}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::FAILURE
}
