use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = match hrl_cli::parse_args(std::env::args_os()) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match hrl_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = hrl_cli::error_report(&e);
            eprintln!("{}", serde_json::to_string(&report).unwrap_or_else(|_| report.message.clone()));
            ExitCode::FAILURE
        }
    }
}
