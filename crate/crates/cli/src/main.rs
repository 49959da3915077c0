use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use kmax_cli::args::Cli;
use kmax_cli::report::emit;

fn run(cli: Cli) -> anyhow::Result<()> {
    kmax_cli::init_threads()?;
    let (text, out) = kmax_cli::execute(&cli)?;
    emit(&text, out.as_deref())?;
    Ok(())
}

fn fail(msg: &str) -> ExitCode {
    eprintln!("kmax: error: {}", msg.replace('\n', " "));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            e.exit()
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or_default();
            return fail(first.trim_start_matches("error: "));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&format!("{e:#}")),
    }
}
