use std::process::ExitCode;

fn main() -> ExitCode {
    carbonpath::cli::init_logging();
    let stdout = std::io::stdout();
    let code = carbonpath::cli::run(std::env::args_os(), &mut stdout.lock(), &mut std::io::stderr());
    ExitCode::from(code)
}
