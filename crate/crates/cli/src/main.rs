use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use nested_tom::cli::{run, Cli};
use nested_tom::CliError;

fn fail(e: &CliError) -> ExitCode {
    let report = e.report();
    match serde_json::to_string(&report) {
        Ok(json) => eprintln!("{json}"),
        Err(_) => eprintln!("{e}"),
    }
    ExitCode::from(report.exit_status as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&e.into()),
    };
    if let Some(n) = std::env::var("NESTED_TOM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(&CliError::Usage(format!("NESTED_TOM_THREADS: {e}")));
        }
    }
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
