mod args;
mod config;
mod plot;
mod run;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use run::Failure;

fn main() {
    let raw: Vec<String> = std::env::args().collect();
    let code = match execute(raw) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}", f.record());
            f.exit_code()
        }
    };
    std::process::exit(code);
}

fn execute(raw: Vec<String>) -> Result<(), Failure> {
    let argv = config::expand(raw).map_err(Failure::Invalid)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => return Err(Failure::Invalid(e.render().to_string().trim().to_string())),
    };
    let global = cli.global.clone();
    run::with_pool(global.threads, move || run::run(cli.command, &global))?
}
