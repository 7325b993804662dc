use clap::error::ErrorKind;
use clap::Parser;
use tvfcgcg_cli::{configure_threads, execute, Cli, EXIT_CONFIG, EXIT_SOLVER};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = configure_threads().and_then(|()| execute(&cli.command));
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(if e.is_input_error() {
                EXIT_CONFIG
            } else {
                EXIT_SOLVER
            });
        }
    }
}
