use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("CSIKIT_LOG")).init();
    match csikit_cli::run(std::env::args()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("csikit: {err:#}");
            ExitCode::FAILURE
        }
    }
}
