use clap::Parser;

fn main() -> std::process::ExitCode {
    let cli = rayvr::cli::Cli::parse();
    match rayvr::cli::run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::FAILURE
        }
    }
}
